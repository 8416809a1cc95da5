//! Initial-vertex candidates for inference: endpoints of segmentation
//! skeleton segments, local maxima of the initial-vertex heatmap, and the
//! probability-guided merge of the two sets.

use crate::geom::{local_maxima, skeleton_segments, skeletonize};
use crate::{Point, Raster};

/// Candidate thresholds. All values are qualitative knobs; the defaults are
/// tuned for desk-scale scenes.
#[derive(Debug, Clone)]
pub struct CandidateConfig {
    /// Binarization threshold applied to the soft segmentation.
    pub seg_threshold: f64,
    /// Skeleton chains shorter than this are ignored.
    pub min_skel_len: f64,
    /// Chebyshev radius of heatmap non-maximum suppression.
    pub nms_radius: usize,
    /// Heatmap maxima below this probability are not added.
    pub p_add: f64,
    /// Skeleton candidates with heatmap probability below this are dropped.
    pub p_keep: f64,
    /// Merged candidates are kept pairwise at least this far apart.
    pub merge_radius: f64,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        Self {
            seg_threshold: 0.5,
            min_skel_len: 15.0,
            nms_radius: 5,
            p_add: 0.7,
            p_keep: 0.3,
            merge_radius: 10.0,
        }
    }
}

/// Candidate start points with their heatmap probabilities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub points: Vec<Point>,
    pub scores: Vec<f64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn push(&mut self, p: Point, score: f64) {
        self.points.push(p);
        self.scores.push(score);
    }
}

fn sample(h: &Raster, p: Point) -> f64 {
    let (r, c) = p.round();
    if h.in_bounds(r, c) {
        h.get(0, r as usize, c as usize)
    } else {
        0.0
    }
}

/// One candidate per sufficiently long skeleton chain of the binarized
/// segmentation: the chain endpoint with the higher heatmap probability
/// (lexicographically smaller endpoint when no heatmap is supplied or the
/// probabilities tie).
pub fn candidates_from_segmentation(
    seg: &Raster,
    heat: Option<&Raster>,
    cfg: &CandidateConfig,
) -> CandidateSet {
    let binary = seg.map(|v| if v >= cfg.seg_threshold { 1.0 } else { 0.0 });
    let mut out = CandidateSet::default();
    if binary.count_fg() == 0 {
        return out;
    }
    let skel = skeletonize(&binary);
    for segment in skeleton_segments(&skel, cfg.min_skel_len) {
        let (a, b) = segment.endpoints;
        let (pa, pb) = (Point::from(a), Point::from(b));
        let chosen = match heat {
            Some(h) => {
                let (sa, sb) = (sample(h, pa), sample(h, pb));
                if sb > sa {
                    (pb, sb)
                } else {
                    (pa, sa)
                }
            }
            None => (pa, 1.0),
        };
        out.push(chosen.0, chosen.1);
    }
    out
}

/// Heatmap maxima above `p_add`, suppressed within `nms_radius`.
pub fn candidates_from_heatmap(heat: &Raster, cfg: &CandidateConfig) -> CandidateSet {
    let mut out = CandidateSet::default();
    for p in local_maxima(heat, cfg.nms_radius, cfg.p_add) {
        out.push(p, sample(heat, p));
    }
    out
}

/// Merge skeleton candidates `q` with heatmap candidates `qp`: drop `q`
/// members whose heatmap probability is below `p_keep`, take the union, and
/// greedily deduplicate by descending probability with `merge_radius`
/// spacing. The result is independent of the input ordering.
pub fn merge_candidates(
    q: &CandidateSet,
    qp: &CandidateSet,
    heat: &Raster,
    cfg: &CandidateConfig,
) -> CandidateSet {
    let mut pool: Vec<(Point, f64)> = Vec::new();
    for (p, _) in q.points.iter().zip(&q.scores) {
        let prob = sample(heat, *p);
        if prob >= cfg.p_keep {
            pool.push((*p, prob));
        }
    }
    for p in &qp.points {
        pool.push((*p, sample(heat, *p)));
    }
    // Canonical order: descending probability, then (row, col).
    pool.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(a.0.row.total_cmp(&b.0.row))
            .then(a.0.col.total_cmp(&b.0.col))
    });
    let mut out = CandidateSet::default();
    for (p, score) in pool {
        let clash = out
            .points
            .iter()
            .any(|kept| kept.dist(&p) < cfg.merge_radius);
        if !clash {
            out.push(p, score);
        }
    }
    out
}

/// The full inference-time pipeline: segmentation endpoints and heatmap
/// maxima, merged.
pub fn infer_candidates(seg: &Raster, heat: &Raster, cfg: &CandidateConfig) -> CandidateSet {
    let q = candidates_from_segmentation(seg, Some(heat), cfg);
    let qp = candidates_from_heatmap(heat, cfg);
    merge_candidates(&q, &qp, heat, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_layout, render_scene, SynthConfig};

    fn noiseless() -> SynthConfig {
        SynthConfig {
            dropout_p: 0.0,
            blob_rate: 0.0,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn clean_straight_curb_yields_one_endpoint_candidate() {
        let synth = SynthConfig {
            n_instances_min: 1,
            n_instances_max: 1,
            straight: true,
            ..noiseless()
        };
        let gt = generate_layout(41, &synth).unwrap();
        let scene = render_scene(&gt, 41, &synth).unwrap();
        let cfg = CandidateConfig::default();
        let set = candidates_from_segmentation(&scene.seg_soft, Some(&scene.heatmap), &cfg);
        assert_eq!(set.len(), 1);
        let line = &gt.instances[0].line;
        let d_first = set.points[0].dist(&line.first());
        let d_last = set.points[0].dist(&line.last());
        assert!(
            d_first.min(d_last) <= 2.0,
            "candidate {:.2}/{:.2} px from the endpoints",
            d_first,
            d_last
        );
        // The heatmap favors the designated initial end.
        assert!(d_first <= d_last);
    }

    #[test]
    fn empty_segmentation_yields_nothing() {
        let cfg = CandidateConfig::default();
        let zero = crate::Raster::zeros(64, 64, 1);
        assert!(candidates_from_segmentation(&zero, None, &cfg).is_empty());
    }

    #[test]
    fn short_specks_are_filtered() {
        let cfg = CandidateConfig::default();
        let mut seg = crate::Raster::zeros(64, 64, 1);
        // A 5 px speck, well under min_skel_len = 15.
        for c in 30..35 {
            seg.set(0, 20, c, 1.0);
        }
        assert!(candidates_from_segmentation(&seg, None, &cfg).is_empty());
    }

    #[test]
    fn heatmap_maxima_near_init_ends() {
        let synth = SynthConfig {
            n_instances_min: 3,
            n_instances_max: 3,
            ..noiseless()
        };
        let gt = generate_layout(43, &synth).unwrap();
        let scene = render_scene(&gt, 43, &synth).unwrap();
        let cfg = CandidateConfig::default();
        let set = candidates_from_heatmap(&scene.heatmap, &cfg);
        assert_eq!(set.len(), 3);
        for inst in &gt.instances {
            let near = set
                .points
                .iter()
                .map(|p| p.dist(&inst.init_end()))
                .fold(f64::INFINITY, f64::min);
            assert!(near <= 1.0, "nearest candidate {near:.2} px from init end");
        }
        assert!(set.scores.iter().all(|&s| s >= cfg.p_add));
    }

    #[test]
    fn uniform_low_heatmap_yields_nothing() {
        let cfg = CandidateConfig::default();
        let low = crate::Raster::zeros(64, 64, 1).map(|_| 0.1);
        assert!(candidates_from_heatmap(&low, &cfg).is_empty());
    }

    #[test]
    fn threshold_edge_peak_is_kept() {
        let cfg = CandidateConfig::default();
        let mut h = crate::Raster::zeros(64, 64, 1);
        h.set(0, 30, 30, 0.71);
        let set = candidates_from_heatmap(&h, &cfg);
        assert_eq!(set.len(), 1);
        assert_eq!(set.points[0].round(), (30, 30));
    }

    #[test]
    fn merge_drops_low_probability_and_deduplicates() {
        let cfg = CandidateConfig::default();
        let mut heat = crate::Raster::zeros(64, 64, 1);
        heat.set(0, 10, 10, 0.1); // low-probability skeleton candidate
        heat.set(0, 30, 30, 0.9);
        heat.set(0, 30, 34, 0.8); // 4 px from the stronger one
        heat.set(0, 50, 50, 0.6);
        let q = CandidateSet {
            points: vec![
                Point::new(10.0, 10.0),
                Point::new(30.0, 34.0),
                Point::new(50.0, 50.0),
            ],
            scores: vec![0.1, 0.8, 0.6],
        };
        let qp = CandidateSet {
            points: vec![Point::new(30.0, 30.0)],
            scores: vec![0.9],
        };
        let merged = merge_candidates(&q, &qp, &heat, &cfg);
        // (10,10) dropped (below p_keep); (30,34) deduplicated against the
        // stronger (30,30); (50,50) and (30,30) survive.
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.points[0].round(), (30, 30));
        assert_eq!(merged.points[1].round(), (50, 50));
        // Order-invariance: permuting the points within each set changes
        // nothing (the merge sorts canonically before deduplicating).
        let q_rev = CandidateSet {
            points: q.points.iter().rev().copied().collect(),
            scores: q.scores.iter().rev().copied().collect(),
        };
        let shuffled = merge_candidates(&q_rev, &qp, &heat, &cfg);
        assert_eq!(merged, shuffled);
    }

    #[test]
    fn disjoint_sets_union_is_preserved() {
        let cfg = CandidateConfig::default();
        let mut heat = crate::Raster::zeros(64, 64, 1);
        heat.set(0, 10, 10, 0.9);
        heat.set(0, 40, 40, 0.8);
        let q = CandidateSet {
            points: vec![Point::new(10.0, 10.0)],
            scores: vec![0.9],
        };
        let qp = CandidateSet {
            points: vec![Point::new(40.0, 40.0)],
            scores: vec![0.8],
        };
        let merged = merge_candidates(&q, &qp, &heat, &cfg);
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn merged_candidates_cover_init_ends_on_noiseless_scenes() {
        let synth = noiseless();
        for seed in [51u64, 52, 53] {
            let gt = generate_layout(seed, &synth).unwrap();
            let scene = render_scene(&gt, seed, &synth).unwrap();
            let cfg = CandidateConfig::default();
            let merged = infer_candidates(&scene.seg_soft, &scene.heatmap, &cfg);
            // One candidate within 3 px of every initial vertex.
            for inst in &gt.instances {
                let near = merged
                    .points
                    .iter()
                    .map(|p| p.dist(&inst.init_end()))
                    .fold(f64::INFINITY, f64::min);
                assert!(near <= 3.0, "seed {seed}: init end missed by {near:.2} px");
            }
            // No candidate is far from every instance.
            for p in &merged.points {
                let near = gt
                    .instances
                    .iter()
                    .map(|inst| inst.line.nearest_point(*p).dist)
                    .fold(f64::INFINITY, f64::min);
                assert!(near <= 20.0, "stray candidate {near:.2} px off");
            }
            // Pairwise spacing invariant.
            for (i, a) in merged.points.iter().enumerate() {
                for b in &merged.points[i + 1..] {
                    assert!(a.dist(b) >= cfg.merge_radius);
                }
            }
        }
    }
}
