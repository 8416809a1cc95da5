//! SVG overlays: ground-truth polylines in one stroke class, predicted edges
//! in another, predicted vertices as circles.

use crate::env::CurbGraph;
use crate::synth::GroundTruth;
use std::fmt::Write;

/// Render an overlay of the ground truth and/or a predicted graph. SVG x is
/// the column, y the row.
pub fn render_svg(
    gt: Option<&GroundTruth>,
    graph: Option<&CurbGraph>,
    height: usize,
    width: usize,
) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" width="{w2}" height="{h2}">"#,
        w2 = width * 4,
        h2 = height * 4,
    );
    svg.push_str(concat!(
        "<style>\n",
        ".bg { fill: #181818; }\n",
        ".gt { stroke: #19d2e8; stroke-width: 0.6; fill: none; }\n",
        ".pred { stroke: #f08c00; stroke-width: 0.6; fill: none; }\n",
        ".vertex { fill: #ffd43b; stroke: none; }\n",
        ".vertex-stop { fill: #ff6b6b; stroke: none; }\n",
        "</style>\n",
    ));
    let _ = writeln!(
        svg,
        r#"<rect class="bg" x="0" y="0" width="{width}" height="{height}"/>"#
    );
    if let Some(gt) = gt {
        for inst in &gt.instances {
            let points: String = inst
                .line
                .points()
                .iter()
                .map(|p| format!("{:.2},{:.2}", p.col, p.row))
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(svg, r#"<polyline class="gt" points="{points}"/>"#);
        }
    }
    if let Some(graph) = graph {
        for &(a, b) in &graph.edges {
            let (pa, pb) = (graph.vertices[a].point, graph.vertices[b].point);
            let _ = writeln!(
                svg,
                r#"<line class="pred" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
                pa.col, pa.row, pb.col, pb.row
            );
        }
        for v in &graph.vertices {
            let class = if v.stop { "vertex-stop" } else { "vertex" };
            let _ = writeln!(
                svg,
                r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="0.7"/>"#,
                v.point.col, v.point.row
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
