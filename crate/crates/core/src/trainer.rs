//! The training schedule: per image, one restricted exploration followed by
//! `n_free` free explorations, aggregating every emitted sample into the
//! dataset and training after each exploration.
//!
//! The dataset persists across images as a bounded reservoir that stays a
//! uniform sample of everything collected so far, so early samples keep
//! getting trained on; resetting it per image is available by turning
//! `cross_image_aggregation` off. The `searn_mode` ablation replaces the
//! dataset with only the latest exploration's samples instead of
//! aggregating, and `skip_restricted` / `skip_free` drop the corresponding
//! phases.

use crate::candidates::{infer_candidates, CandidateConfig};
use crate::env::{run_image, CurbGraph, EnvConfig, EnvError, Mode, TrainingSample};
use crate::metrics::{evaluate, MetricsError};
use crate::policy::{MlpConfig, MlpPolicy, Policy, PolicyError};
use crate::synth::{GroundTruth, SceneBundle};
use crate::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged on image {image}")]
    Diverged { image: usize },
    #[error("no training scenes")]
    NoScenes,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Schedule and architecture parameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub env: EnvConfig,
    pub candidates: CandidateConfig,
    pub taus: Vec<f64>,
    /// Pooled grid side of the policy's patch encoder.
    pub pool: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub use_history: bool,
    /// Free explorations per image.
    pub n_free: usize,
    pub epochs_per_train: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Train only on the latest exploration's samples.
    pub searn_mode: bool,
    pub skip_restricted: bool,
    pub skip_free: bool,
    /// Keep the dataset across images instead of resetting per image.
    pub cross_image_aggregation: bool,
    /// Std of the Gaussian noise on ground-truth initial vertices used as
    /// training-time start candidates.
    pub candidate_sigma: f64,
    /// Upper bound on the negative/positive stop-class weight; without it a
    /// few early stop samples can dominate the stop head.
    pub stop_weight_cap: f64,
    /// Reservoir capacity of the aggregated dataset.
    pub max_dataset: usize,
    /// Samples drawn per training call; one pass covers at most this many.
    pub train_budget: usize,
    /// Evaluate on the held-out split every this many images.
    pub eval_every: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn for_image(height: usize, width: usize) -> Self {
        // Like the snap threshold, the start-candidate noise is a full-scale
        // quantity (3 px at 1000 px) and scales with the image side; it must
        // stay well under the stray-stop distance or episode starts would be
        // labeled as strays.
        let side = height.max(width);
        let candidate_sigma = (3.0 * side as f64 / 1000.0).max(0.5);
        Self {
            env: EnvConfig::for_image(height, width),
            candidates: CandidateConfig::default(),
            taus: crate::metrics::DEFAULT_TAUS.to_vec(),
            pool: 8,
            hidden1: 64,
            hidden2: 48,
            use_history: true,
            n_free: 5,
            epochs_per_train: 1,
            batch_size: 32,
            lr: 0.02,
            searn_mode: false,
            skip_restricted: false,
            skip_free: false,
            cross_image_aggregation: true,
            candidate_sigma,
            stop_weight_cap: 10.0,
            max_dataset: 8000,
            train_budget: 1024,
            eval_every: 50,
            seed: 0,
        }
    }
}

/// Aggregated training samples, held as a bounded reservoir: once the
/// capacity is reached, each arriving sample replaces a uniformly random
/// slot with probability capacity/seen, keeping the pool a uniform sample of
/// the whole history.
#[derive(Debug, Default)]
pub struct Dataset {
    samples: Vec<TrainingSample>,
    seen: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total samples ever offered, including evicted ones.
    pub fn seen(&self) -> usize {
        self.seen
    }

    pub fn clear(&mut self) {
        self.samples.clear();
        self.seen = 0;
    }

    pub fn extend(&mut self, samples: Vec<TrainingSample>, cap: usize, rng: &mut ChaCha8Rng) {
        for s in samples {
            self.seen += 1;
            if self.samples.len() < cap {
                self.samples.push(s);
            } else {
                let j = rng.gen_range(0..self.seen);
                if j < cap {
                    self.samples[j] = s;
                }
            }
        }
    }

    pub fn replace(&mut self, samples: Vec<TrainingSample>) {
        self.seen = samples.len();
        self.samples = samples;
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }
}

/// One structured log line.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    /// Effective configuration echo; feeding these keys back reproduces the
    /// run.
    Config { config: BTreeMap<String, String> },
    Train {
        image: usize,
        phase: String,
        dataset: usize,
        samples_new: usize,
        skipped: usize,
        coord_l1: f64,
        stop_bce: f64,
    },
    Eval {
        image: usize,
        f1: Vec<f64>,
        cc: f64,
    },
}

#[derive(Debug, Default)]
pub struct RunLog {
    pub records: Vec<LogRecord>,
}

impl RunLog {
    pub fn push(&mut self, record: LogRecord) {
        self.records.push(record);
    }

    /// One JSON document per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("log record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Ground-truth initial vertices with Gaussian noise, clipped in-image; the
/// training-time substitute for detected candidates.
pub fn noisy_gt_candidates(gt: &GroundTruth, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<Point> {
    gt.instances
        .iter()
        .map(|inst| {
            let p = inst.init_end();
            let dr: f64 = rng.sample(StandardNormal);
            let dc: f64 = rng.sample(StandardNormal);
            p.offset(sigma * dr, sigma * dc)
                .clamp_to(gt.height, gt.width)
        })
        .collect()
}

/// Inference: derive candidates from the scene's segmentation and heatmap,
/// then grow the graph in test mode.
pub fn infer_graph(
    policy: &mut dyn Policy,
    scene: &SceneBundle,
    env: &EnvConfig,
    cands: &CandidateConfig,
) -> Result<CurbGraph, EnvError> {
    let candidates = infer_candidates(&scene.seg_soft, &scene.heatmap, cands);
    let result = run_image(
        &scene.features,
        None,
        policy,
        &candidates.points,
        Mode::Test,
        env,
    )?;
    Ok(result.graph)
}

/// Mean metrics of test-mode inference over a scene set.
#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub taus: Vec<f64>,
    pub mean_f1: Vec<f64>,
    pub mean_cc: f64,
}

impl EvalSummary {
    pub fn f1_at(&self, tau: f64) -> f64 {
        self.taus
            .iter()
            .position(|&t| t == tau)
            .map(|i| self.mean_f1[i])
            .expect("tau present in the configured list")
    }
}

/// Evaluate a frozen policy snapshot on a scene set.
pub fn evaluate_on_scenes(
    policy: &MlpPolicy,
    scenes: &[SceneBundle],
    cfg: &TrainConfig,
) -> Result<EvalSummary, TrainError> {
    let mut snapshot = policy.clone();
    let mut mean_f1 = vec![0.0; cfg.taus.len()];
    let mut mean_cc = 0.0;
    for scene in scenes {
        let graph = infer_graph(&mut snapshot, scene, &cfg.env, &cfg.candidates)?;
        let report = evaluate(&graph, &scene.gt, &cfg.taus)?;
        for (acc, f1) in mean_f1.iter_mut().zip(&report.f1) {
            *acc += f1;
        }
        mean_cc += report.cc;
    }
    let n = scenes.len().max(1) as f64;
    for acc in mean_f1.iter_mut() {
        *acc /= n;
    }
    Ok(EvalSummary {
        taus: cfg.taus.clone(),
        mean_f1,
        mean_cc: mean_cc / n,
    })
}

/// One pass per epoch over a seeded shuffle of the dataset (bounded by the
/// training budget), with the stop-class weight recomputed from the current
/// label balance.
fn train_on_dataset(
    policy: &mut MlpPolicy,
    dataset: &Dataset,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64), PolicyError> {
    if dataset.is_empty() {
        return Ok((0.0, 0.0));
    }
    let samples = dataset.samples();
    let positives = samples.iter().filter(|s| s.stop_label).count();
    let negatives = samples.len() - positives;
    let stop_weight = if positives == 0 {
        1.0
    } else {
        (negatives as f64 / positives as f64).clamp(1.0, cfg.stop_weight_cap)
    };
    let per_pass = samples.len().min(cfg.train_budget.max(cfg.batch_size));
    let mut coord_sum = 0.0;
    let mut bce_sum = 0.0;
    let mut batches = 0.0;
    for _ in 0..cfg.epochs_per_train {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        // Fisher-Yates with the run's seeded generator.
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut batch: Vec<&TrainingSample> = Vec::with_capacity(cfg.batch_size);
        for chunk in order[..per_pass].chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| &samples[i]));
            let report = policy.train_batch_refs(&batch, cfg.lr, stop_weight)?;
            coord_sum += report.coord_l1;
            bce_sum += report.stop_bce;
            batches += 1.0;
        }
    }
    Ok((coord_sum / batches, bce_sum / batches))
}

/// The per-image schedule: reset the dataset, run the restricted exploration
/// (unless ablated), then the free explorations, training after each phase.
pub fn train_on_image(
    scene: &SceneBundle,
    policy: &mut MlpPolicy,
    dataset: &mut Dataset,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    image: usize,
    log: &mut RunLog,
) -> Result<(), TrainError> {
    if !cfg.cross_image_aggregation {
        dataset.clear();
    }
    let mut phases: Vec<(Mode, String)> = Vec::new();
    if !cfg.skip_restricted {
        phases.push((Mode::Restricted, "restricted".into()));
    }
    if !cfg.skip_free {
        for i in 1..=cfg.n_free {
            phases.push((Mode::Free, format!("free{i}")));
        }
    }
    for (mode, phase) in phases {
        let starts = noisy_gt_candidates(&scene.gt, cfg.candidate_sigma, rng);
        let result = run_image(
            &scene.features,
            Some(&scene.gt),
            policy,
            &starts,
            mode,
            &cfg.env,
        )?;
        let samples_new = result.samples.len();
        let skipped = result.skipped.len();
        if cfg.searn_mode {
            dataset.replace(result.samples);
        } else {
            dataset.extend(result.samples, cfg.max_dataset, rng);
        }
        let (coord_l1, stop_bce) = train_on_dataset(policy, dataset, cfg, rng)
            .map_err(|_| TrainError::Diverged { image })?;
        log.push(LogRecord::Train {
            image,
            phase,
            dataset: dataset.len(),
            samples_new,
            skipped,
            coord_l1,
            stop_bce,
        });
    }
    Ok(())
}

/// Train a fresh policy over the scene stream, evaluating on the held-out
/// split every `eval_every` images and once at the end. Deterministic in
/// (seed, config, scene order).
pub fn train_run(
    scenes: &[SceneBundle],
    heldout: &[SceneBundle],
    cfg: &TrainConfig,
) -> Result<(MlpPolicy, RunLog), TrainError> {
    let first = scenes.first().ok_or(TrainError::NoScenes)?;
    let mlp_cfg = MlpConfig {
        d: cfg.env.d,
        channels: first.features.channels() + 1,
        pool: cfg.pool,
        hidden1: cfg.hidden1,
        hidden2: cfg.hidden2,
        use_history: cfg.use_history,
        seed: cfg.seed,
    };
    let mut policy = MlpPolicy::new(mlp_cfg);
    let mut dataset = Dataset::default();
    let mut log = RunLog::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    for (image, scene) in scenes.iter().enumerate() {
        train_on_image(scene, &mut policy, &mut dataset, cfg, &mut rng, image, &mut log)?;
        if !heldout.is_empty() && (image + 1) % cfg.eval_every == 0 {
            let summary = evaluate_on_scenes(&policy, heldout, cfg)?;
            log.push(LogRecord::Eval {
                image,
                f1: summary.mean_f1.clone(),
                cc: summary.mean_cc,
            });
        }
    }
    if !heldout.is_empty() {
        let summary = evaluate_on_scenes(&policy, heldout, cfg)?;
        log.push(LogRecord::Eval {
            image: scenes.len(),
            f1: summary.mean_f1.clone(),
            cc: summary.mean_cc,
        });
    }
    Ok((policy, log))
}
