//! Evaluation: threshold-relaxed pixel precision/recall/F1 and the
//! connectivity score over matched instances.
//!
//! Precision at threshold tau is the fraction of predicted pixels strictly
//! within tau of the ground-truth pixel set; recall mirrors it. The
//! connectivity score weights each ground-truth instance by its pixel mass
//! and divides by the number of predicted fragments matched to it, so
//! fragmented predictions score low even when pixel accuracy is high.

use crate::env::CurbGraph;
use crate::geom::distance_transform;
use crate::synth::GroundTruth;
use crate::{Pixel, Raster};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("ground-truth pixel set is empty")]
    EmptyGroundTruth,
}

/// Deduplicated integer pixel sets of the predicted and ground-truth graphs.
#[derive(Debug, Clone)]
pub struct PixelSets {
    pub pred: Vec<Pixel>,
    pub gt: Vec<Pixel>,
}

/// Per-instance connectivity bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceConnectivity {
    pub gt_id: usize,
    pub pixel_count: usize,
    /// Pixel-mass share of this instance.
    pub alpha: f64,
    /// Number of predicted fragments matched to this instance.
    pub matched: usize,
    /// alpha / matched, or 0 when unmatched.
    pub k: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub taus: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub cc: f64,
    pub per_instance: Vec<InstanceConnectivity>,
}

pub const DEFAULT_TAUS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];

/// Exact distance from each query pixel to the nearest member of `set`,
/// computed over a shared grid with one distance transform.
fn distances_to(queries: &[Pixel], set: &[Pixel]) -> Vec<f64> {
    if set.is_empty() {
        return vec![f64::INFINITY; queries.len()];
    }
    let max_r = queries
        .iter()
        .chain(set)
        .map(|p| p.0)
        .max()
        .unwrap_or(0)
        .max(0) as usize;
    let max_c = queries
        .iter()
        .chain(set)
        .map(|p| p.1)
        .max()
        .unwrap_or(0)
        .max(0) as usize;
    let mut mask = Raster::zeros(max_r + 1, max_c + 1, 1);
    for &(r, c) in set {
        mask.set(0, r as usize, c as usize, 1.0);
    }
    let dt = distance_transform(&mask).expect("set is non-empty");
    queries
        .iter()
        .map(|&(r, c)| dt.get(0, r as usize, c as usize))
        .collect()
}

/// Precision, recall and F1 at threshold `tau` (strict `< tau`). An empty
/// prediction scores zero on all three.
pub fn pixel_prf(ps: &PixelSets, tau: f64) -> Result<(f64, f64, f64), MetricsError> {
    if ps.gt.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    if ps.pred.is_empty() {
        return Ok((0.0, 0.0, 0.0));
    }
    let d_pred = distances_to(&ps.pred, &ps.gt);
    let d_gt = distances_to(&ps.gt, &ps.pred);
    Ok(prf_from_distances(&d_pred, &d_gt, tau))
}

fn prf_from_distances(d_pred: &[f64], d_gt: &[f64], tau: f64) -> (f64, f64, f64) {
    let p = d_pred.iter().filter(|&&d| d < tau).count() as f64 / d_pred.len() as f64;
    let r = d_gt.iter().filter(|&&d| d < tau).count() as f64 / d_gt.len() as f64;
    let f1 = if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f1)
}

/// Vote each predicted instance to the ground-truth instance minimizing the
/// mean nearest-pixel distance (ties: lowest id). Returns the vote count per
/// ground-truth instance; empty predicted instances are ignored.
pub fn match_instances(pred_instances: &[Vec<Pixel>], gt_instances: &[Vec<Pixel>]) -> Vec<usize> {
    let mut m = vec![0usize; gt_instances.len()];
    for pred in pred_instances {
        if pred.is_empty() {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for (j, gt) in gt_instances.iter().enumerate() {
            if gt.is_empty() {
                continue;
            }
            let mean = mean_nearest_distance(pred, gt);
            match best {
                Some((bd, _)) if mean >= bd => {}
                _ => best = Some((mean, j)),
            }
        }
        if let Some((_, j)) = best {
            m[j] += 1;
        }
    }
    m
}

fn mean_nearest_distance(from: &[Pixel], to: &[Pixel]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|&(r, c)| {
            to.iter()
                .map(|&(gr, gc)| {
                    let (dr, dc) = (gr - r, gc - c);
                    ((dr * dr + dc * dc) as f64).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / from.len() as f64
}

/// Connectivity score: sum over ground-truth instances of alpha_i / m_i,
/// where alpha_i is the instance's pixel-mass share and m_i the number of
/// predicted fragments matched to it (zero contribution when unmatched).
pub fn connectivity(
    pred_instances: &[Vec<Pixel>],
    gt: &GroundTruth,
) -> Result<(f64, Vec<InstanceConnectivity>), MetricsError> {
    if gt.instances.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let gt_pixels: Vec<Vec<Pixel>> = gt.instances.iter().map(|inst| inst.pixels()).collect();
    let m = match_instances(pred_instances, &gt_pixels);
    let total: usize = gt_pixels.iter().map(|p| p.len()).sum();
    let mut table = Vec::with_capacity(gt_pixels.len());
    let mut cc = 0.0;
    for (i, pixels) in gt_pixels.iter().enumerate() {
        let alpha = pixels.len() as f64 / total as f64;
        let k = if m[i] != 0 { alpha / m[i] as f64 } else { 0.0 };
        cc += k;
        table.push(InstanceConnectivity {
            gt_id: gt.instances[i].id,
            pixel_count: pixels.len(),
            alpha,
            matched: m[i],
            k,
        });
    }
    Ok((cc, table))
}

/// Full evaluation of a predicted graph against the ground truth.
pub fn evaluate(
    pred: &CurbGraph,
    gt: &GroundTruth,
    taus: &[f64],
) -> Result<MetricReport, MetricsError> {
    if gt.instances.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let gt_pixels: Vec<Pixel> = {
        let mut all: Vec<Pixel> = gt.instances.iter().flat_map(|i| i.pixels()).collect();
        all.sort_unstable();
        all.dedup();
        all
    };
    let pred_pixels = pred.pixels();
    let (mut precision, mut recall, mut f1) = (Vec::new(), Vec::new(), Vec::new());
    if pred_pixels.is_empty() {
        for _ in taus {
            precision.push(0.0);
            recall.push(0.0);
            f1.push(0.0);
        }
    } else {
        let d_pred = distances_to(&pred_pixels, &gt_pixels);
        let d_gt = distances_to(&gt_pixels, &pred_pixels);
        for &tau in taus {
            let (p, r, f) = prf_from_distances(&d_pred, &d_gt, tau);
            precision.push(p);
            recall.push(r);
            f1.push(f);
        }
    }
    let pred_instances: Vec<Vec<Pixel>> = (0..pred.instances.len())
        .map(|i| pred.instance_pixels(i))
        .collect();
    let (cc, per_instance) = connectivity(&pred_instances, gt)?;
    Ok(MetricReport {
        taus: taus.to_vec(),
        precision,
        recall,
        f1,
        cc,
        per_instance,
    })
}

impl std::fmt::Display for MetricReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:>8} {:>9} {:>9} {:>9}", "tau", "precision", "recall", "f1")?;
        for (i, tau) in self.taus.iter().enumerate() {
            writeln!(
                f,
                "{:>8.1} {:>9.3} {:>9.3} {:>9.3}",
                tau, self.precision[i], self.recall[i], self.f1[i]
            )?;
        }
        writeln!(f, "CC: {:.3}", self.cc)?;
        for row in &self.per_instance {
            writeln!(
                f,
                "  instance {:>3}: pixels {:>5}, alpha {:.3}, fragments {}, K {:.3}",
                row.gt_id, row.pixel_count, row.alpha, row.matched, row.k
            )?;
        }
        Ok(())
    }
}
