//! The expert: binds a growing episode to a ground-truth instance, walks it at
//! fixed arc increments, and produces dynamic training labels for arbitrary
//! agent predictions.
//!
//! A dynamic label is the instance sample nearest to the agent's prediction,
//! restricted to samples that lie ahead of the expert's current arc position
//! (by at least `delta_min`, at most `delta_max`) and inside the observation
//! window. Labels therefore always advance, which rules out label loops.

use crate::policy::{scale_offset, PolicyOutput};
use crate::synth::GroundTruth;
use crate::Point;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no ground-truth instance (nearest at {nearest:.1} px) within {radius} px of ({row:.1}, {col:.1})")]
    Unbindable {
        row: f64,
        col: f64,
        nearest: f64,
        radius: f64,
    },
    #[error("ground truth has no instances")]
    EmptyGroundTruth,
}

/// Expert parameters, in pixels of the current image scale.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Minimum arc advance of a label per step.
    pub delta_min: f64,
    /// Maximum arc advance of a label per step.
    pub delta_max: f64,
    /// Arc step of the expert policy itself.
    pub delta_exp: f64,
    /// Stop labeling kicks in when the prediction strays farther than this
    /// from the bound instance.
    pub stray_stop: f64,
    /// Candidates farther than this from every instance are unbindable.
    pub bind_radius: f64,
}

impl OracleConfig {
    /// Defaults for a crop size `d`: labels advance by [3, d/2] px, the
    /// expert walks d/4 px per step.
    pub fn for_crop(d: usize, stray_stop: f64) -> Self {
        Self {
            delta_min: 3.0,
            delta_max: d as f64 / 2.0,
            delta_exp: d as f64 / 4.0,
            stray_stop,
            bind_radius: 20.0,
        }
    }
}

/// Episode-local binding of the expert to one instance: the instance id and
/// the expert's arc position along it. The arc position never decreases.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceBinding {
    pub instance_id: usize,
    pub arc_pos: f64,
    pub started_at: f64,
}

/// Dynamic label for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelResult {
    /// Coordinate target; on the bound instance. When the label stops the
    /// episode this is the point the agent should have ended at.
    pub coord_label: Point,
    pub stop_label: bool,
    pub new_arc_pos: f64,
    /// Distance from the prediction to `coord_label`.
    pub stray_dist: f64,
}

/// Bind a start point to the instance whose nearest sample is closest
/// (ties: lowest id). Fails when the nearest instance is farther than
/// `bind_radius`; such candidates are skipped and count as false positives.
pub fn bind_instance(
    gt: &GroundTruth,
    q: Point,
    cfg: &OracleConfig,
) -> Result<InstanceBinding, OracleError> {
    if gt.instances.is_empty() {
        return Err(OracleError::EmptyGroundTruth);
    }
    let mut best: Option<(f64, usize, f64)> = None; // (dist, id, arc)
    for inst in &gt.instances {
        let hit = inst.line.nearest_point(q);
        let better = match best {
            None => true,
            Some((d, _, _)) => hit.dist < d,
        };
        if better {
            best = Some((hit.dist, inst.id, hit.arc));
        }
    }
    let (dist, id, arc) = best.unwrap();
    if dist > cfg.bind_radius {
        return Err(OracleError::Unbindable {
            row: q.row,
            col: q.col,
            nearest: dist,
            radius: cfg.bind_radius,
        });
    }
    Ok(InstanceBinding {
        instance_id: id,
        arc_pos: arc,
        started_at: arc,
    })
}

fn in_window(p: Point, center: Point, d: usize) -> bool {
    let (cr, cc) = center.round();
    let half = (d / 2) as i64;
    let (r0, c0) = ((cr - half) as f64, (cc - half) as f64);
    let (r1, c1) = ((cr + half - 1) as f64, (cc + half - 1) as f64);
    p.row >= r0 && p.row <= r1 && p.col >= c0 && p.col <= c1
}

/// Compute the dynamic label for prediction `pred`, observed from a `d` x `d`
/// window centered at `crop_center`.
///
/// Stop is labeled when (a) no admissible sample exists in the window,
/// (b) the instance end is reached, or (c) the prediction strays farther than
/// `stray_stop` from the whole instance. End-of-instance takes precedence, so
/// overshooting past the end is supervised as "stop here", not "you strayed".
pub fn dynamic_label(
    b: &InstanceBinding,
    gt: &GroundTruth,
    pred: Point,
    crop_center: Point,
    d: usize,
    cfg: &OracleConfig,
) -> LabelResult {
    let line = &gt.instances[b.instance_id].line;
    let total = line.total_len();

    if b.arc_pos + cfg.delta_min >= total {
        // End of instance.
        let coord_label = line.last();
        return LabelResult {
            coord_label,
            stop_label: true,
            new_arc_pos: b.arc_pos,
            stray_dist: pred.dist(&coord_label),
        };
    }

    let lo = b.arc_pos + cfg.delta_min;
    let hi = (b.arc_pos + cfg.delta_max).min(total);
    let mut best: Option<(f64, usize)> = None;
    let points = line.points();
    let cum = line.cum_len();
    let start = cum.partition_point(|&a| a < lo);
    let end = cum.partition_point(|&a| a <= hi);
    for i in start..end {
        if !in_window(points[i], crop_center, d) {
            continue;
        }
        let d2 = pred.dist_sq(&points[i]);
        match best {
            Some((bd, _)) if d2 >= bd => {}
            _ => best = Some((d2, i)),
        }
    }

    let strayed = line.nearest_point(pred).dist > cfg.stray_stop;
    match best {
        None => {
            // Window holds no admissible sample; supervise a stop toward the
            // next expected point.
            let (coord_label, _) = line.sample_at_arc(lo);
            LabelResult {
                coord_label,
                stop_label: true,
                new_arc_pos: b.arc_pos,
                stray_dist: pred.dist(&coord_label),
            }
        }
        Some((_, i)) => {
            let coord_label = points[i];
            LabelResult {
                coord_label,
                stop_label: strayed,
                new_arc_pos: if strayed { b.arc_pos } else { cum[i] },
                stray_dist: pred.dist(&coord_label),
            }
        }
    }
}

/// The expert's own action from `obs_center`: move `delta_exp` px along the
/// instance (clamped to its end) and raise the stop flag once the next label
/// could not advance.
pub fn expert_action(
    b: &InstanceBinding,
    gt: &GroundTruth,
    obs_center: Point,
    d: usize,
    cfg: &OracleConfig,
) -> PolicyOutput {
    let line = &gt.instances[b.instance_id].line;
    let total = line.total_len();
    let (target, _) = line.sample_at_arc((b.arc_pos + cfg.delta_exp).min(total));
    let delta = scale_offset(
        (target.row - obs_center.row, target.col - obs_center.col),
        d,
    );
    let stop_prob = if b.arc_pos + cfg.delta_min >= total {
        1.0
    } else {
        0.0
    };
    PolicyOutput { delta, stop_prob }
}

/// Advance the expert's arc position to the sample `delta_exp` ahead,
/// mirroring what [`expert_action`] targeted.
pub fn advance_expert(b: &mut InstanceBinding, gt: &GroundTruth, cfg: &OracleConfig) {
    let line = &gt.instances[b.instance_id].line;
    let total = line.total_len();
    let (_, arc) = line.sample_at_arc((b.arc_pos + cfg.delta_exp).min(total));
    b.arc_pos = b.arc_pos.max(arc);
}
