//! Naive segmentation baseline: threshold, skeletonize, prune short
//! components, and emit one predicted instance per skeleton chain. The
//! comparison anchor for the connectivity score: every gap in the
//! segmentation fragments an instance.

use crate::candidates::CandidateConfig;
use crate::env::CurbGraph;
use crate::geom::{skeleton_segments, skeletonize};
use crate::{Point, Raster};
use std::collections::BTreeMap;

/// Build a graph directly from the soft segmentation: binarize at
/// `seg_threshold`, skeletonize, drop connected components with total arc
/// length under `min_skel_len`, and emit each remaining degree-<=2 chain as
/// one instance (pixels ordered from the lexicographically smaller endpoint).
pub fn naive_graph(seg: &Raster, cfg: &CandidateConfig) -> CurbGraph {
    let binary = seg.map(|v| if v >= cfg.seg_threshold { 1.0 } else { 0.0 });
    let mut graph = CurbGraph::default();
    if binary.count_fg() == 0 {
        return graph;
    }
    let skel = skeletonize(&binary);
    let segments = skeleton_segments(&skel, 0.0);
    if segments.is_empty() {
        return graph;
    }

    // Union-find over chains that share pixels, to measure component length.
    let mut parent: Vec<usize> = (0..segments.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    let mut owner: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for (i, seg) in segments.iter().enumerate() {
        for &p in &seg.pixels {
            if let Some(&j) = owner.get(&p) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            } else {
                owner.insert(p, i);
            }
        }
    }
    let mut component_len: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..segments.len() {
        let root = find(&mut parent, i);
        *component_len.entry(root).or_default() += segments[i].length;
    }

    for (i, seg) in segments.iter().enumerate() {
        let root = find(&mut parent, i);
        if component_len[&root] < cfg.min_skel_len {
            continue;
        }
        let chain: Vec<Point> = seg.pixels.iter().map(|&p| Point::from(p)).collect();
        graph.push_chain(&chain);
    }
    graph
}
