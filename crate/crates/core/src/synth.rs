//! Deterministic synthetic scenes: ground-truth curb polylines plus the
//! rasters a perception stack would hand to the agent (clean curb response,
//! corrupted segmentation, background texture, initial-vertex heatmap).
//!
//! Feature channels are derived from the ground truth with a controllable
//! corruption knob instead of being learned, so the growing/training machinery
//! can be exercised at any noise level.

use crate::geom::{densify_polyline, distance_transform, rasterize_segment, GeomError};
use crate::{DensePolyline, Point, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("could not place instance {index} after {retries} retries")]
    PlacementFailed { index: usize, retries: usize },
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Scene-generation parameters. Defaults are desk scale: 128x128 images with
/// 2-4 instances that an episode can traverse in milliseconds.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    pub n_instances_min: usize,
    pub n_instances_max: usize,
    /// Minimum pairwise distance between instances, in pixels.
    pub clearance: f64,
    /// Keep-out margin from the raster border for generated polylines.
    pub margin: f64,
    pub min_instance_len: f64,
    pub max_instance_len: f64,
    /// Raw step length of the random walk before densification.
    pub step_len: f64,
    /// Maximum heading change per walk step, radians.
    pub max_turn: f64,
    /// Straight-line mode: instances run border to border.
    pub straight: bool,
    /// Width of the clean curb response, exp(-d^2 / (2 sigma_f^2)).
    pub sigma_f: f64,
    /// Std of the Gaussian bump marking each initial vertex.
    pub heat_sigma: f64,
    /// Probability that an arc window of the segmentation is blanked out.
    pub dropout_p: f64,
    /// Expected false-positive blobs per kilo-pixel.
    pub blob_rate: f64,
    /// Arc length of one dropout window along the curb, in pixels.
    pub drop_window: f64,
    /// Radius around the curb centerline cleared by a dropout window.
    pub drop_radius: f64,
    pub blob_sigma: f64,
    pub max_retries: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            height: 128,
            width: 128,
            n_instances_min: 2,
            n_instances_max: 4,
            clearance: 9.0,
            margin: 6.0,
            min_instance_len: 60.0,
            max_instance_len: 170.0,
            step_len: 9.0,
            max_turn: 0.45,
            straight: false,
            sigma_f: 1.5,
            heat_sigma: 3.0,
            dropout_p: 0.15,
            blob_rate: 0.5,
            drop_window: 4.0,
            drop_radius: 4.0,
            blob_sigma: 1.5,
            max_retries: 200,
        }
    }
}

/// One ground-truth curb: a densified polyline whose first point is the
/// designated initial vertex (the generator orients lines so the first point
/// is the one nearer the image border).
#[derive(Debug, Clone, PartialEq)]
pub struct CurbInstance {
    pub id: usize,
    pub line: DensePolyline,
}

impl CurbInstance {
    pub fn init_end(&self) -> Point {
        self.line.first()
    }

    /// Integer pixels covered by the instance at one-pixel width.
    pub fn pixels(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for pair in self.line.points().windows(2) {
            for p in rasterize_segment(pair[0], pair[1]) {
                if out.last() != Some(&p) {
                    out.push(p);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// The expert's world model: every curb instance of one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub height: usize,
    pub width: usize,
    pub instances: Vec<CurbInstance>,
}

/// Rendered scene: feature channels, the soft segmentation stand-in, the
/// initial-vertex heatmap, and the ground truth they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBundle {
    /// 3 channels: clean curb response, corrupted response, background noise.
    pub features: Raster,
    /// Copy of feature channel 1, the map segmentation consumers see.
    pub seg_soft: Raster,
    pub heatmap: Raster,
    pub gt: GroundTruth,
}

fn border_dist(p: Point, h: usize, w: usize) -> f64 {
    p.row
        .min(p.col)
        .min((h - 1) as f64 - p.row)
        .min((w - 1) as f64 - p.col)
}

/// Generate `cfg.n_instances_{min,max}` non-crossing smooth polylines,
/// densified at 1 px. Deterministic per seed.
pub fn generate_layout(seed: u64, cfg: &SynthConfig) -> Result<GroundTruth, SynthError> {
    if cfg.height < 64 || cfg.width < 64 {
        return Err(SynthError::BadConfig("image side must be >= 64".into()));
    }
    if cfg.n_instances_min < 1 || cfg.n_instances_max < cfg.n_instances_min {
        return Err(SynthError::BadConfig("bad instance count range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(cfg.n_instances_min..=cfg.n_instances_max);
    let mut instances: Vec<CurbInstance> = Vec::with_capacity(n);
    for index in 0..n {
        let mut placed = false;
        for _ in 0..cfg.max_retries {
            let raw = if cfg.straight {
                sample_straight(&mut rng, cfg)
            } else {
                sample_walk(&mut rng, cfg, &instances)
            };
            let Some(raw) = raw else { continue };
            let mut line = densify_polyline(&raw, 1.0)?;
            if line.total_len() < cfg.min_instance_len {
                continue;
            }
            if !clearance_ok(&line, &instances, cfg.clearance) {
                continue;
            }
            if border_dist(line.last(), cfg.height, cfg.width)
                < border_dist(line.first(), cfg.height, cfg.width)
            {
                line = line.reversed();
            }
            instances.push(CurbInstance { id: index, line });
            placed = true;
            break;
        }
        if !placed {
            // A crowded layout may not fit the drawn count; settle for fewer
            // as long as the configured minimum is met.
            if instances.len() >= cfg.n_instances_min {
                break;
            }
            return Err(SynthError::PlacementFailed {
                index,
                retries: cfg.max_retries,
            });
        }
    }
    Ok(GroundTruth {
        height: cfg.height,
        width: cfg.width,
        instances,
    })
}

fn clearance_ok(line: &DensePolyline, existing: &[CurbInstance], clearance: f64) -> bool {
    for inst in existing {
        for p in line.points() {
            if inst.line.nearest_point(*p).dist < clearance {
                return false;
            }
        }
    }
    true
}

fn sample_walk(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    existing: &[CurbInstance],
) -> Option<Vec<Point>> {
    let (lo_r, hi_r) = (cfg.margin, (cfg.height - 1) as f64 - cfg.margin);
    let (lo_c, hi_c) = (cfg.margin, (cfg.width - 1) as f64 - cfg.margin);
    let mut cur = Point::new(rng.gen_range(lo_r..hi_r), rng.gen_range(lo_c..hi_c));
    let mut heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let target_len = rng.gen_range(cfg.min_instance_len..=cfg.max_instance_len);
    // Conservative margin so densified samples between raw points stay clear.
    let walk_clearance =
        (cfg.clearance * cfg.clearance + 0.25 * cfg.step_len * cfg.step_len).sqrt();
    let mut raw = vec![cur];
    let mut total = 0.0;
    while total < target_len {
        heading += rng.gen_range(-cfg.max_turn..=cfg.max_turn);
        let next = cur.offset(cfg.step_len * heading.cos(), cfg.step_len * heading.sin());
        if next.row < lo_r || next.row > hi_r || next.col < lo_c || next.col > hi_c {
            break;
        }
        if existing
            .iter()
            .any(|inst| inst.line.nearest_point(next).dist < walk_clearance)
        {
            break;
        }
        // No self-approach: stay clear of everything before the last two raw
        // points so the densified line never comes within ~2 px of itself.
        if raw.len() > 2
            && raw[..raw.len() - 2]
                .iter()
                .any(|p| p.dist(&next) < 2.0 + cfg.step_len)
        {
            break;
        }
        raw.push(next);
        total += cfg.step_len;
        cur = next;
    }
    if raw.len() >= 2 {
        Some(raw)
    } else {
        None
    }
}

fn sample_straight(rng: &mut ChaCha8Rng, cfg: &SynthConfig) -> Option<Vec<Point>> {
    let (h, w) = ((cfg.height - 1) as f64, (cfg.width - 1) as f64);
    let vertical = rng.gen_bool(0.5);
    let (a, b) = if vertical {
        (
            Point::new(0.0, rng.gen_range(1.0..w - 1.0)),
            Point::new(h, rng.gen_range(1.0..w - 1.0)),
        )
    } else {
        (
            Point::new(rng.gen_range(1.0..h - 1.0), 0.0),
            Point::new(rng.gen_range(1.0..h - 1.0), w),
        )
    };
    Some(vec![a, b])
}

/// Render feature rasters, the soft segmentation and the initial-vertex
/// heatmap for a layout. Deterministic per seed.
pub fn render_scene(
    gt: &GroundTruth,
    seed: u64,
    cfg: &SynthConfig,
) -> Result<SceneBundle, SynthError> {
    let (h, w) = (gt.height, gt.width);
    let mut mask = Raster::zeros(h, w, 1);
    for inst in &gt.instances {
        for (r, c) in inst.pixels() {
            if mask.in_bounds(r, c) {
                mask.set(0, r as usize, c as usize, 1.0);
            }
        }
    }
    let dist = distance_transform(&mask)?;
    let denom = 2.0 * cfg.sigma_f * cfg.sigma_f;
    let clean = dist.map(|d| (-d * d / denom).exp());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corrupt_seed: u64 = rng.gen();
    let noise_seed: u64 = rng.gen();
    let corrupted = corrupt_segmentation(&clean, corrupt_seed, cfg.dropout_p, cfg.blob_rate, cfg);
    let texture = value_noise(noise_seed, h, w);

    let mut heatmap = Raster::zeros(h, w, 1);
    let heat_denom = 2.0 * cfg.heat_sigma * cfg.heat_sigma;
    for inst in &gt.instances {
        let (cr, cc) = inst.init_end().round();
        let reach = (4.0 * cfg.heat_sigma).ceil() as i64;
        for r in (cr - reach).max(0)..=(cr + reach).min(h as i64 - 1) {
            for c in (cc - reach).max(0)..=(cc + reach).min(w as i64 - 1) {
                let d2 = ((r - cr) * (r - cr) + (c - cc) * (c - cc)) as f64;
                let v = heatmap.get(0, r as usize, c as usize) + (-d2 / heat_denom).exp();
                heatmap.set(0, r as usize, c as usize, v.min(1.0));
            }
        }
    }

    let features = Raster::stack(&[&clean, &corrupted, &texture]);
    Ok(SceneBundle {
        seg_soft: corrupted,
        features,
        heatmap,
        gt: gt.clone(),
    })
}

/// Blank out arc windows of the foreground tube (probability `dropout_p` per
/// window) and add false-positive blobs (`blob_rate` expected per kilo-pixel,
/// Poisson-sampled). Pixels are assigned to the window of their nearest
/// centerline pixel, so the blanked fraction of curb pixels tracks
/// `dropout_p` directly.
pub fn corrupt_segmentation(
    clean: &Raster,
    seed: u64,
    dropout_p: f64,
    blob_rate: f64,
    cfg: &SynthConfig,
) -> Raster {
    let mut out = clean.clone();
    let (h, w) = (clean.height(), clean.width());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if dropout_p > 0.0 {
        let binary = clean.map(|v| if v >= 0.5 { 1.0 } else { 0.0 });
        if binary.count_fg() > 0 {
            let skel = crate::geom::skeletonize(&binary);
            let segments = crate::geom::skeleton_segments(&skel, 0.0);
            // (pixel, dropped?) for every centerline pixel.
            let mut labeled: Vec<((i64, i64), bool)> = Vec::new();
            for seg in &segments {
                let mut arc = 0.0;
                let mut window = 0usize;
                let mut dropped = rng.gen_bool(dropout_p);
                let mut prev: Option<(i64, i64)> = None;
                for &p in &seg.pixels {
                    if let Some(q) = prev {
                        let (dr, dc) = (p.0 - q.0, p.1 - q.1);
                        arc += ((dr * dr + dc * dc) as f64).sqrt();
                    }
                    let win = (arc / cfg.drop_window).floor() as usize;
                    if win != window {
                        window = win;
                        dropped = rng.gen_bool(dropout_p);
                    }
                    labeled.push((p, dropped));
                    prev = Some(p);
                }
            }
            // Zero every pixel whose nearest centerline pixel sits in a
            // dropped window.
            let reach = cfg.drop_radius.ceil() as i64;
            let r2 = cfg.drop_radius * cfg.drop_radius;
            for r in 0..h as i64 {
                for c in 0..w as i64 {
                    let mut best = f64::INFINITY;
                    let mut best_drop = false;
                    for &((sr, sc), drop) in &labeled {
                        if (sr - r).abs() > reach || (sc - c).abs() > reach {
                            continue;
                        }
                        let d2 = ((sr - r) * (sr - r) + (sc - c) * (sc - c)) as f64;
                        if d2 < best {
                            best = d2;
                            best_drop = drop;
                        }
                    }
                    if best <= r2 && best_drop {
                        out.set(0, r as usize, c as usize, 0.0);
                    }
                }
            }
        }
    }

    if blob_rate > 0.0 {
        let lambda = blob_rate * (h * w) as f64 / 1000.0;
        let count = Poisson::new(lambda).map_or(0, |p| p.sample(&mut rng) as usize);
        let denom = 2.0 * cfg.blob_sigma * cfg.blob_sigma;
        let reach = (3.0 * cfg.blob_sigma).ceil() as i64;
        for _ in 0..count {
            let br = rng.gen_range(0..h) as i64;
            let bc = rng.gen_range(0..w) as i64;
            for r in (br - reach).max(0)..=(br + reach).min(h as i64 - 1) {
                for c in (bc - reach).max(0)..=(bc + reach).min(w as i64 - 1) {
                    let d2 = ((r - br) * (r - br) + (c - bc) * (c - bc)) as f64;
                    let v = (-d2 / denom).exp();
                    if v > out.get(0, r as usize, c as usize) {
                        out.set(0, r as usize, c as usize, v);
                    }
                }
            }
        }
    }

    out.map(|v| v.clamp(0.0, 1.0))
}

/// Smooth deterministic background texture in [0, 1].
fn value_noise(seed: u64, h: usize, w: usize) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Raster::zeros(h, w, 1);
    for v in r.data_mut() {
        *v = rng.gen::<f64>();
    }
    for _ in 0..2 {
        r = box_blur(&r);
    }
    let (lo, hi) = r
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = (hi - lo).max(1e-12);
    r.map(|v| (v - lo) / span)
}

fn box_blur(r: &Raster) -> Raster {
    let (h, w) = (r.height(), r.width());
    let mut out = Raster::zeros(h, w, 1);
    for row in 0..h as i64 {
        for col in 0..w as i64 {
            let mut acc = 0.0;
            let mut n = 0.0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    if r.in_bounds(row + dr, col + dc) {
                        acc += r.get(0, (row + dr) as usize, (col + dc) as usize);
                        n += 1.0;
                    }
                }
            }
            out.set(0, row as usize, col as usize, acc / n);
        }
    }
    out
}
