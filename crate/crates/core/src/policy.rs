//! The agent: a pluggable decision interface plus a trainable two-head
//! function approximator.
//!
//! The trainable policy average-pools the observation patch, concatenates the
//! normalized current/previous vertex coordinates, runs two tanh hidden
//! layers, and ends in a tanh coordinate head (displacement in [-1,1]^2) and a
//! sigmoid stop head. Gradients are hand-derived and checked against central
//! finite differences in the tests.

use crate::env::Observation;
use crate::oracle::{advance_expert, bind_instance, expert_action, InstanceBinding, OracleConfig};
use crate::synth::GroundTruth;
use crate::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("training diverged: non-finite loss")]
    Diverged,
    #[error("empty training batch")]
    EmptyBatch,
    #[error("crop size must be positive")]
    BadCropSize,
    #[error("checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One decision: a scaled displacement in [-1,1]^2 and a stop probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOutput {
    pub delta: (f64, f64),
    pub stop_prob: f64,
}

/// Scale a pixel offset into [-1,1]^2 for a crop of size `d` (2*offset/d),
/// clamping out-of-range components.
pub fn scale_offset(pixel_offset: (f64, f64), d: usize) -> (f64, f64) {
    assert!(d > 0, "crop size must be positive");
    let s = 2.0 / d as f64;
    (
        (pixel_offset.0 * s).clamp(-1.0, 1.0),
        (pixel_offset.1 * s).clamp(-1.0, 1.0),
    )
}

/// Inverse of [`scale_offset`] for in-range values.
pub fn unscale_offset(scaled: (f64, f64), d: usize) -> (f64, f64) {
    let s = d as f64 / 2.0;
    (scaled.0 * s, scaled.1 * s)
}

/// Decision function driving the growing environment. Implementations may
/// keep per-episode state; `begin_episode` announces each new start vertex.
pub trait Policy {
    fn begin_episode(&mut self, _start: Point) {}
    fn predict(&mut self, obs: &Observation) -> PolicyOutput;
}

/// Losses of one training step (values before the update).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    /// Mean absolute coordinate error, scaled units.
    pub coord_l1: f64,
    /// Weighted binary cross-entropy of the stop head.
    pub stop_bce: f64,
    pub total: f64,
}

/// Architecture of the trainable policy.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    /// Observation patch side.
    pub d: usize,
    /// Observation patch channels (feature channels + history).
    pub channels: usize,
    /// Side of the average-pooled grid per channel; must divide `d`.
    pub pool: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    /// When false the normalized vertex coordinates are zeroed out of the
    /// input, removing the agent's knowledge of its absolute position.
    pub use_history: bool,
    pub seed: u64,
}

impl MlpConfig {
    pub fn input_dim(&self) -> usize {
        self.channels * self.pool * self.pool + 4
    }
}

/// Trainable two-head policy.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPolicy {
    cfg: MlpConfig,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w_coord: Vec<f64>,
    b_coord: Vec<f64>,
    w_stop: Vec<f64>,
    b_stop: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// log(1 + e^z) without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct ForwardPass {
    x: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    delta: (f64, f64),
    z_stop: f64,
}

impl MlpPolicy {
    pub fn new(cfg: MlpConfig) -> Self {
        assert!(
            cfg.pool > 0 && cfg.d % cfg.pool == 0,
            "pool must divide the crop size"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut layer = |fan_in: usize, n: usize| -> Vec<f64> {
            let a = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.gen_range(-a..a)).collect()
        };
        let input = cfg.input_dim();
        let (h1, h2) = (cfg.hidden1, cfg.hidden2);
        let w1 = layer(input, h1 * input);
        let b1 = layer(input, h1);
        let w2 = layer(h1, h2 * h1);
        let b2 = layer(h1, h2);
        let w_coord = layer(h2, 2 * h2);
        let b_coord = layer(h2, 2);
        let w_stop = layer(h2, h2);
        let b_stop = layer(h2, 1);
        Self {
            cfg,
            w1,
            b1,
            w2,
            b2,
            w_coord,
            b_coord,
            w_stop,
            b_stop,
        }
    }

    pub fn config(&self) -> &MlpConfig {
        &self.cfg
    }

    /// Average-pooled patch channels followed by the four normalized vertex
    /// coordinates (zeroed under the no-history ablation).
    fn input_vec(&self, obs: &Observation) -> Vec<f64> {
        let d = self.cfg.d;
        let p = self.cfg.pool;
        assert_eq!(obs.patch.height(), d, "patch side mismatch");
        assert_eq!(obs.patch.width(), d, "patch side mismatch");
        assert_eq!(obs.patch.channels(), self.cfg.channels, "channel mismatch");
        let cell = d / p;
        let norm = 1.0 / (cell * cell) as f64;
        let mut x = Vec::with_capacity(self.cfg.input_dim());
        for ch in 0..self.cfg.channels {
            for pi in 0..p {
                for pj in 0..p {
                    let mut acc = 0.0;
                    for i in pi * cell..(pi + 1) * cell {
                        for j in pj * cell..(pj + 1) * cell {
                            acc += obs.patch.get(ch, i, j);
                        }
                    }
                    x.push(acc * norm);
                }
            }
        }
        if self.cfg.use_history {
            x.push(obs.cur_norm.row);
            x.push(obs.cur_norm.col);
            x.push(obs.prev_norm.row);
            x.push(obs.prev_norm.col);
        } else {
            x.extend_from_slice(&[0.0; 4]);
        }
        x
    }

    fn forward(&self, obs: &Observation) -> ForwardPass {
        let x = self.input_vec(obs);
        let input = x.len();
        let mut h1 = vec![0.0; self.cfg.hidden1];
        for (i, h) in h1.iter_mut().enumerate() {
            let mut z = self.b1[i];
            for (j, &xv) in x.iter().enumerate() {
                z += self.w1[i * input + j] * xv;
            }
            *h = z.tanh();
        }
        let mut h2 = vec![0.0; self.cfg.hidden2];
        for (i, h) in h2.iter_mut().enumerate() {
            let mut z = self.b2[i];
            for (j, &hv) in h1.iter().enumerate() {
                z += self.w2[i * self.cfg.hidden1 + j] * hv;
            }
            *h = z.tanh();
        }
        let head = |w: &[f64], b: f64| -> f64 {
            let mut z = b;
            for (j, &hv) in h2.iter().enumerate() {
                z += w[j] * hv;
            }
            z
        };
        let n2 = self.cfg.hidden2;
        let delta = (
            head(&self.w_coord[..n2], self.b_coord[0]).tanh(),
            head(&self.w_coord[n2..], self.b_coord[1]).tanh(),
        );
        let z_stop = head(&self.w_stop, self.b_stop[0]);
        ForwardPass {
            x,
            h1,
            h2,
            delta,
            z_stop,
        }
    }

    pub fn predict(&self, obs: &Observation) -> PolicyOutput {
        let f = self.forward(obs);
        PolicyOutput {
            delta: f.delta,
            stop_prob: sigmoid(f.z_stop),
        }
    }

    /// Losses of a batch under the current parameters (no update).
    pub fn batch_loss(&self, batch: &[crate::env::TrainingSample], stop_weight: f64) -> LossReport {
        let n = batch.len() as f64;
        let mut coord_l1 = 0.0;
        let mut stop_bce = 0.0;
        for sample in batch {
            let f = self.forward(&sample.obs);
            coord_l1 += (f.delta.0 - sample.coord_label.0).abs()
                + (f.delta.1 - sample.coord_label.1).abs();
            let y = if sample.stop_label { 1.0 } else { 0.0 };
            let w = if sample.stop_label { stop_weight } else { 1.0 };
            stop_bce += w * (log1p_exp(f.z_stop) - y * f.z_stop);
        }
        coord_l1 /= 2.0 * n;
        stop_bce /= n;
        LossReport {
            coord_l1,
            stop_bce,
            total: coord_l1 + stop_bce,
        }
    }

    /// One stochastic-gradient step on the batch (L1 coordinate loss plus
    /// weighted stop cross-entropy, exact gradients). Returns the losses
    /// measured before the update.
    pub fn train_batch(
        &mut self,
        batch: &[crate::env::TrainingSample],
        lr: f64,
        stop_weight: f64,
    ) -> Result<LossReport, PolicyError> {
        let refs: Vec<&crate::env::TrainingSample> = batch.iter().collect();
        self.train_batch_refs(&refs, lr, stop_weight)
    }

    /// [`MlpPolicy::train_batch`] over borrowed samples (no patch copies).
    pub fn train_batch_refs(
        &mut self,
        batch: &[&crate::env::TrainingSample],
        lr: f64,
        stop_weight: f64,
    ) -> Result<LossReport, PolicyError> {
        if batch.is_empty() {
            return Err(PolicyError::EmptyBatch);
        }
        let n = batch.len() as f64;
        let input = self.cfg.input_dim();
        let (n1, n2) = (self.cfg.hidden1, self.cfg.hidden2);
        let mut g = Gradients::zeros(self);
        let mut coord_l1 = 0.0;
        let mut stop_bce = 0.0;
        for sample in batch {
            let f = self.forward(&sample.obs);
            let y = if sample.stop_label { 1.0 } else { 0.0 };
            let w = if sample.stop_label { stop_weight } else { 1.0 };
            coord_l1 += (f.delta.0 - sample.coord_label.0).abs()
                + (f.delta.1 - sample.coord_label.1).abs();
            stop_bce += w * (log1p_exp(f.z_stop) - y * f.z_stop);

            // Output-side gradients.
            let g_delta = (
                sign(f.delta.0 - sample.coord_label.0) / (2.0 * n),
                sign(f.delta.1 - sample.coord_label.1) / (2.0 * n),
            );
            let g_zc = (
                g_delta.0 * (1.0 - f.delta.0 * f.delta.0),
                g_delta.1 * (1.0 - f.delta.1 * f.delta.1),
            );
            let g_zs = w * (sigmoid(f.z_stop) - y) / n;

            // Heads.
            let mut g_h2 = vec![0.0; n2];
            for j in 0..n2 {
                g.w_coord[j] += g_zc.0 * f.h2[j];
                g.w_coord[n2 + j] += g_zc.1 * f.h2[j];
                g.w_stop[j] += g_zs * f.h2[j];
                g_h2[j] = g_zc.0 * self.w_coord[j]
                    + g_zc.1 * self.w_coord[n2 + j]
                    + g_zs * self.w_stop[j];
            }
            g.b_coord[0] += g_zc.0;
            g.b_coord[1] += g_zc.1;
            g.b_stop[0] += g_zs;

            // Hidden layer 2.
            let mut g_h1 = vec![0.0; n1];
            for i in 0..n2 {
                let gz = g_h2[i] * (1.0 - f.h2[i] * f.h2[i]);
                g.b2[i] += gz;
                for j in 0..n1 {
                    g.w2[i * n1 + j] += gz * f.h1[j];
                    g_h1[j] += gz * self.w2[i * n1 + j];
                }
            }

            // Hidden layer 1.
            for i in 0..n1 {
                let gz = g_h1[i] * (1.0 - f.h1[i] * f.h1[i]);
                g.b1[i] += gz;
                for j in 0..input {
                    g.w1[i * input + j] += gz * f.x[j];
                }
            }
        }
        coord_l1 /= 2.0 * n;
        stop_bce /= n;
        let total = coord_l1 + stop_bce;
        if !total.is_finite() {
            return Err(PolicyError::Diverged);
        }
        g.apply(self, lr);
        Ok(LossReport {
            coord_l1,
            stop_bce,
            total,
        })
    }

    /// All parameters in declaration order (the checkpoint order).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for part in self.param_parts() {
            out.extend_from_slice(part);
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for part in self.param_parts_mut() {
            part.copy_from_slice(&flat[offset..offset + part.len()]);
            offset += part.len();
        }
        assert_eq!(offset, flat.len(), "parameter count mismatch");
    }

    fn param_parts(&self) -> [&[f64]; 8] {
        [
            &self.w1,
            &self.b1,
            &self.w2,
            &self.b2,
            &self.w_coord,
            &self.b_coord,
            &self.w_stop,
            &self.b_stop,
        ]
    }

    fn param_parts_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w_coord,
            &mut self.b_coord,
            &mut self.w_stop,
            &mut self.b_stop,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.param_parts().iter().map(|p| p.len()).sum()
    }

    /// Zero both output heads; useful as a neutral starting point
    /// (delta (0,0), stop probability 0.5).
    pub fn zero_heads(&mut self) {
        for v in self
            .w_coord
            .iter_mut()
            .chain(self.b_coord.iter_mut())
            .chain(self.w_stop.iter_mut())
            .chain(self.b_stop.iter_mut())
        {
            *v = 0.0;
        }
    }

    const MAGIC: &'static [u8; 6] = b"ICPOL1";

    /// Write the checkpoint: magic, architecture sizes as u32 little-endian,
    /// then every parameter as f64 little-endian in declaration order.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), PolicyError> {
        w.write_all(Self::MAGIC)?;
        let dims: [u32; 8] = [
            self.cfg.d as u32,
            self.cfg.channels as u32,
            self.cfg.pool as u32,
            self.cfg.hidden1 as u32,
            self.cfg.hidden2 as u32,
            self.cfg.use_history as u32,
            (self.cfg.seed & 0xffff_ffff) as u32,
            (self.cfg.seed >> 32) as u32,
        ];
        for d in dims {
            w.write_all(&d.to_le_bytes())?;
        }
        for part in self.param_parts() {
            for v in part {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self, PolicyError> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)
            .map_err(|_| PolicyError::Format("truncated magic".into()))?;
        if &magic != Self::MAGIC {
            return Err(PolicyError::Format(format!(
                "bad magic {:?}, expected {:?}",
                magic,
                Self::MAGIC
            )));
        }
        let mut dims = [0u32; 8];
        for d in dims.iter_mut() {
            let mut buf = [0u8; 4];
            r.read_exact(&mut buf)
                .map_err(|_| PolicyError::Format("truncated header".into()))?;
            *d = u32::from_le_bytes(buf);
        }
        let cfg = MlpConfig {
            d: dims[0] as usize,
            channels: dims[1] as usize,
            pool: dims[2] as usize,
            hidden1: dims[3] as usize,
            hidden2: dims[4] as usize,
            use_history: dims[5] != 0,
            seed: dims[6] as u64 | ((dims[7] as u64) << 32),
        };
        if cfg.pool == 0 || cfg.d == 0 || cfg.d % cfg.pool != 0 {
            return Err(PolicyError::Format("inconsistent dimensions".into()));
        }
        let mut policy = MlpPolicy::new(cfg);
        let count = policy.param_count();
        let mut flat = vec![0.0f64; count];
        for (i, v) in flat.iter_mut().enumerate() {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)
                .map_err(|_| PolicyError::Format(format!("truncated at parameter {i} of {count}")))?;
            *v = f64::from_le_bytes(buf);
        }
        if !flat.iter().all(|v| v.is_finite()) {
            return Err(PolicyError::Format("non-finite parameter".into()));
        }
        policy.set_params_flat(&flat);
        Ok(policy)
    }

    pub fn save_file<P: AsRef<Path>>(&self, path: P) -> Result<(), PolicyError> {
        let mut buf = Vec::new();
        self.save(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load_file<P: AsRef<Path>>(path: P) -> Result<Self, PolicyError> {
        let data = std::fs::read(path)?;
        Self::load(&data[..])
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

struct Gradients {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w_coord: Vec<f64>,
    b_coord: Vec<f64>,
    w_stop: Vec<f64>,
    b_stop: Vec<f64>,
}

impl Gradients {
    fn zeros(p: &MlpPolicy) -> Self {
        Self {
            w1: vec![0.0; p.w1.len()],
            b1: vec![0.0; p.b1.len()],
            w2: vec![0.0; p.w2.len()],
            b2: vec![0.0; p.b2.len()],
            w_coord: vec![0.0; p.w_coord.len()],
            b_coord: vec![0.0; p.b_coord.len()],
            w_stop: vec![0.0; p.w_stop.len()],
            b_stop: vec![0.0; p.b_stop.len()],
        }
    }

    fn apply(&self, p: &mut MlpPolicy, lr: f64) {
        let pairs: [(&[f64], &mut [f64]); 8] = [
            (&self.w1, &mut p.w1),
            (&self.b1, &mut p.b1),
            (&self.w2, &mut p.w2),
            (&self.b2, &mut p.b2),
            (&self.w_coord, &mut p.w_coord),
            (&self.b_coord, &mut p.b_coord),
            (&self.w_stop, &mut p.w_stop),
            (&self.b_stop, &mut p.b_stop),
        ];
        for (g, target) in pairs {
            for (t, gv) in target.iter_mut().zip(g) {
                *t -= lr * gv;
            }
        }
    }
}

impl Policy for MlpPolicy {
    fn predict(&mut self, obs: &Observation) -> PolicyOutput {
        MlpPolicy::predict(self, obs)
    }
}

/// The expert: tracks its own binding to the ground truth and walks the bound
/// instance at fixed arc increments.
pub struct ExpertPolicy<'a> {
    gt: &'a GroundTruth,
    cfg: OracleConfig,
    d: usize,
    binding: Option<InstanceBinding>,
}

impl<'a> ExpertPolicy<'a> {
    pub fn new(gt: &'a GroundTruth, cfg: OracleConfig, d: usize) -> Self {
        Self {
            gt,
            cfg,
            d,
            binding: None,
        }
    }
}

impl Policy for ExpertPolicy<'_> {
    fn begin_episode(&mut self, start: Point) {
        self.binding = bind_instance(self.gt, start, &self.cfg).ok();
    }

    fn predict(&mut self, obs: &Observation) -> PolicyOutput {
        match &mut self.binding {
            None => PolicyOutput {
                delta: (0.0, 0.0),
                stop_prob: 1.0,
            },
            Some(b) => {
                let out = expert_action(b, self.gt, obs.cur, self.d, &self.cfg);
                advance_expert(b, self.gt, &self.cfg);
                out
            }
        }
    }
}

/// Expert with Gaussian displacement noise (scaled units) and random stop
/// decision flips; deterministic per seed.
pub struct NoisyExpertPolicy<'a> {
    inner: ExpertPolicy<'a>,
    sigma: f64,
    p_flip: f64,
    rng: ChaCha8Rng,
}

impl<'a> NoisyExpertPolicy<'a> {
    pub fn new(
        gt: &'a GroundTruth,
        cfg: OracleConfig,
        d: usize,
        sigma: f64,
        p_flip: f64,
        seed: u64,
    ) -> Self {
        Self {
            inner: ExpertPolicy::new(gt, cfg, d),
            sigma,
            p_flip,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for NoisyExpertPolicy<'_> {
    fn begin_episode(&mut self, start: Point) {
        self.inner.begin_episode(start);
    }

    fn predict(&mut self, obs: &Observation) -> PolicyOutput {
        let out = self.inner.predict(obs);
        let n0: f64 = self.rng.sample(StandardNormal);
        let n1: f64 = self.rng.sample(StandardNormal);
        let flip = self.rng.gen::<f64>() < self.p_flip;
        let delta = (
            (out.delta.0 + self.sigma * n0).clamp(-1.0, 1.0),
            (out.delta.1 + self.sigma * n1).clamp(-1.0, 1.0),
        );
        let stop_prob = if flip {
            1.0 - out.stop_prob
        } else {
            out.stop_prob
        };
        PolicyOutput { delta, stop_prob }
    }
}

/// Uniformly random policy; a probe for environment invariants.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn predict(&mut self, _obs: &Observation) -> PolicyOutput {
        PolicyOutput {
            delta: (
                self.rng.gen_range(-1.0..=1.0),
                self.rng.gen_range(-1.0..=1.0),
            ),
            stop_prob: self.rng.gen(),
        }
    }
}
