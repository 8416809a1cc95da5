//! The graph-growing environment: maintains the shared history map, produces
//! local observations, commits vertices under the mode-specific update
//! policy, and emits training samples labeled by the expert oracle.
//!
//! Modes:
//! * `Test` – commit the predicted vertex; stop on the stop head, the image
//!   border, or the step budget. No samples.
//! * `Restricted` – label every prediction; predictions straying beyond the
//!   snap threshold are replaced by their label before committal, keeping the
//!   trajectory near the ground truth. The episode ends on the expert's stop.
//! * `Free` – commit raw predictions so the learner visits its own error
//!   states; the episode ends on the agent's stop, a hard stray kill, or the
//!   step budget.

use crate::geom::{rasterize_segment, GeomError};
use crate::oracle::{bind_instance, dynamic_label, OracleConfig, OracleError};
use crate::policy::{scale_offset, unscale_offset, Policy, PolicyOutput};
use crate::synth::GroundTruth;
use crate::{Point, Raster};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode skipped: {0}")]
    EpisodeSkip(#[from] OracleError),
    #[error("mode {0:?} requires ground truth")]
    MissingGroundTruth(Mode),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Test,
    Restricted,
    Free,
}

/// Environment parameters, resolved to the current image scale.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    /// Observation crop side (even, >= 8).
    pub d: usize,
    /// Hard step budget per episode.
    pub max_steps: usize,
    /// Restricted-mode snap threshold (full-scale 15 px, scaled).
    pub snap: f64,
    /// Free-mode hard kill distance (full-scale 30 px, scaled).
    pub kill_stray: f64,
    /// Stop-head decision threshold.
    pub stop_threshold: f64,
    /// A vertex within this distance of the raster boundary ends a test
    /// episode.
    pub border_margin: f64,
    /// Free-mode episodes end once the expert has labeled stop for this many
    /// consecutive steps. A handful of stop-state samples per episode is
    /// plenty; letting the agent mill at an instance end floods the dataset
    /// with near-duplicates.
    pub stop_patience: usize,
    /// The agent's own stop decision is ignored during the first steps of a
    /// free episode, so a miscalibrated stop head cannot starve exploration.
    pub min_free_steps: usize,
    pub oracle: OracleConfig,
}

impl EnvConfig {
    /// Defaults for an `height` x `width` image: crop side/4 (capped at 64),
    /// thresholds kept proportional to the full 1000 px scale with small
    /// floors, step budget 4(H+W)/delta_exp.
    pub fn for_image(height: usize, width: usize) -> Self {
        let side = height.max(width);
        let d = (side / 4).clamp(8, 64) & !1;
        let snap = (15.0 * side as f64 / 1000.0).max(2.0);
        let delta_exp = d as f64 / 4.0;
        // The stray-stop distance keeps the full-scale angle tolerance: at
        // 1000 px the 15 px threshold is ~0.9 expert steps, so the floor is
        // tied to the step length rather than to the snap floor.
        let stray_stop = snap.max(0.75 * delta_exp);
        let kill_stray = (30.0 * side as f64 / 1000.0).max(2.0 * stray_stop);
        let mut oracle = OracleConfig::for_crop(d, stray_stop);
        let max_steps = (4.0 * (height + width) as f64 / oracle.delta_exp).ceil() as usize;
        oracle.delta_exp = delta_exp;
        Self {
            d,
            max_steps,
            snap,
            kill_stray,
            stop_threshold: 0.5,
            border_margin: 1.0,
            stop_patience: 5,
            min_free_steps: 8,
            oracle,
        }
    }
}

/// What the policy sees at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// d x d patch: feature channels with the history map appended.
    pub patch: Raster,
    pub cur: Point,
    pub prev: Point,
    /// Coordinates divided by (H-1, W-1).
    pub cur_norm: Point,
    pub prev_norm: Point,
}

/// One supervised pair emitted by a training-mode step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub obs: Observation,
    /// Scaled offset from the current vertex to the dynamic label.
    pub coord_label: (f64, f64),
    pub stop_label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphVertex {
    pub id: usize,
    pub point: Point,
    pub stop: bool,
}

/// Output graph: vertices, edges between consecutive chain vertices, and one
/// ordered vertex-id chain per episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurbGraph {
    pub vertices: Vec<GraphVertex>,
    pub edges: Vec<(usize, usize)>,
    pub instances: Vec<Vec<usize>>,
}

impl CurbGraph {
    /// Append one episode chain: sequential vertex ids, consecutive edges,
    /// stop flag on the final vertex.
    pub fn push_chain(&mut self, chain: &[Point]) {
        let base = self.vertices.len();
        let mut ids = Vec::with_capacity(chain.len());
        for (k, p) in chain.iter().enumerate() {
            let id = base + k;
            self.vertices.push(GraphVertex {
                id,
                point: *p,
                stop: k + 1 == chain.len(),
            });
            if k > 0 {
                self.edges.push((id - 1, id));
            }
            ids.push(id);
        }
        self.instances.push(ids);
    }

    /// Rasterized pixels of one instance chain, sorted and deduplicated.
    pub fn instance_pixels(&self, idx: usize) -> Vec<(i64, i64)> {
        let chain = &self.instances[idx];
        let mut out = Vec::new();
        if chain.len() == 1 {
            out.push(self.vertices[chain[0]].point.round());
        }
        for pair in chain.windows(2) {
            out.extend(rasterize_segment(
                self.vertices[pair[0]].point,
                self.vertices[pair[1]].point,
            ));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Union of all instance pixels.
    pub fn pixels(&self) -> Vec<(i64, i64)> {
        let mut out: Vec<(i64, i64)> = (0..self.instances.len())
            .flat_map(|i| self.instance_pixels(i))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// State of one growing episode. The history raster is shared across the
/// episodes of one image and only ever gains pixels.
pub struct EnvState<'a> {
    features: &'a Raster,
    gt: Option<&'a GroundTruth>,
    history: &'a mut Raster,
    cfg: &'a EnvConfig,
    mode: Mode,
    cur: Point,
    prev: Point,
    binding: Option<crate::oracle::InstanceBinding>,
    steps: usize,
    done: bool,
    expert_stop_streak: usize,
    chain: Vec<Point>,
}

impl<'a> EnvState<'a> {
    /// Start an episode at `q`. The history raster carries over from earlier
    /// episodes on the same image; `q`'s pixel is marked into it. Training
    /// modes bind `q` to its ground-truth instance and fail with an
    /// episode-skip error when no instance is within the bind radius.
    pub fn reset(
        features: &'a Raster,
        gt: Option<&'a GroundTruth>,
        history: &'a mut Raster,
        q: Point,
        mode: Mode,
        cfg: &'a EnvConfig,
    ) -> Result<Self, EnvError> {
        assert!(
            q.in_image(features.height(), features.width()),
            "start vertex out of image"
        );
        let binding = match mode {
            Mode::Test => None,
            Mode::Restricted | Mode::Free => {
                let gt = gt.ok_or(EnvError::MissingGroundTruth(mode))?;
                Some(bind_instance(gt, q, &cfg.oracle)?)
            }
        };
        let (r, c) = q.round();
        if history.in_bounds(r, c) {
            history.set(0, r as usize, c as usize, 1.0);
        }
        Ok(Self {
            features,
            gt,
            history,
            cfg,
            mode,
            cur: q,
            prev: q,
            binding,
            steps: 0,
            done: false,
            expert_stop_streak: 0,
            chain: vec![q],
        })
    }

    pub fn cur(&self) -> Point {
        self.cur
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn done(&self) -> bool {
        self.done
    }

    pub fn chain(&self) -> &[Point] {
        &self.chain
    }

    /// Crop the feature/history stack around the current vertex.
    pub fn observe(&self) -> Observation {
        assert!(!self.done, "observe on a finished episode");
        let d = self.cfg.d;
        let mut patch = Raster::zeros(d, d, self.features.channels() + 1);
        crate::geom::raster::crop_into(self.features, self.cur, d, &mut patch, 0);
        crate::geom::raster::crop_into(
            self.history,
            self.cur,
            d,
            &mut patch,
            self.features.channels(),
        );
        let h = (self.features.height() - 1) as f64;
        let w = (self.features.width() - 1) as f64;
        Observation {
            patch,
            cur: self.cur,
            prev: self.prev,
            cur_norm: Point::new(self.cur.row / h, self.cur.col / w),
            prev_norm: Point::new(self.prev.row / h, self.prev.col / w),
        }
    }

    fn near_border(&self, p: Point) -> bool {
        let m = self.cfg.border_margin;
        p.row <= m
            || p.col <= m
            || p.row >= (self.features.height() - 1) as f64 - m
            || p.col >= (self.features.width() - 1) as f64 - m
    }

    /// Append a vertex, draw the connecting segment into the history map and
    /// advance (prev, cur). Committing the current vertex again is a no-op.
    fn commit(&mut self, p: Point) {
        if p == self.cur {
            return;
        }
        for (r, c) in rasterize_segment(self.cur, p) {
            if self.history.in_bounds(r, c) {
                self.history.set(0, r as usize, c as usize, 1.0);
            }
        }
        self.chain.push(p);
        self.prev = self.cur;
        self.cur = p;
    }

    /// Advance one step under the mode's update policy. Returns the training
    /// sample (training modes only) and whether the episode is finished.
    pub fn step(&mut self, out: &PolicyOutput) -> (Option<TrainingSample>, bool) {
        assert!(!self.done, "step on a finished episode");
        let d = self.cfg.d;
        let (dr, dc) = unscale_offset(
            (out.delta.0.clamp(-1.0, 1.0), out.delta.1.clamp(-1.0, 1.0)),
            d,
        );
        let pred = self
            .cur
            .offset(dr, dc)
            .clamp_to(self.features.height(), self.features.width());
        let cur_old = self.cur;
        self.steps += 1;
        let out_of_time = self.steps >= self.cfg.max_steps;

        let (sample, done) = match self.mode {
            Mode::Test => {
                self.commit(pred);
                let stop = out.stop_prob > self.cfg.stop_threshold;
                (None, stop || out_of_time || self.near_border(pred))
            }
            Mode::Restricted | Mode::Free => {
                let obs = self.observe();
                let gt = self.gt.expect("training mode has ground truth");
                let binding = self.binding.as_mut().expect("training mode has binding");
                let lr = dynamic_label(binding, gt, pred, cur_old, d, &self.cfg.oracle);
                binding.arc_pos = lr.new_arc_pos;
                let sample = TrainingSample {
                    obs,
                    coord_label: scale_offset(
                        (
                            lr.coord_label.row - cur_old.row,
                            lr.coord_label.col - cur_old.col,
                        ),
                        d,
                    ),
                    stop_label: lr.stop_label,
                };
                let done = if self.mode == Mode::Restricted {
                    // Snap strayed predictions onto their label.
                    if lr.stray_dist < self.cfg.snap {
                        self.commit(pred);
                    } else {
                        self.commit(lr.coord_label);
                    }
                    lr.stop_label || out_of_time
                } else {
                    self.commit(pred);
                    self.expert_stop_streak = if lr.stop_label {
                        self.expert_stop_streak + 1
                    } else {
                        0
                    };
                    (self.steps >= self.cfg.min_free_steps
                        && out.stop_prob > self.cfg.stop_threshold)
                        || (lr.stop_label && lr.stray_dist > self.cfg.kill_stray)
                        || self.expert_stop_streak >= self.cfg.stop_patience
                        || out_of_time
                };
                (Some(sample), done)
            }
        };
        self.done = done;
        (sample, done)
    }
}

/// Result of running every episode of one image.
#[derive(Debug, Default)]
pub struct RunImageResult {
    pub graph: CurbGraph,
    pub samples: Vec<TrainingSample>,
    /// Candidates that could not be bound to any instance.
    pub skipped: Vec<Point>,
}

/// Run one episode per start candidate, sharing the history map across
/// episodes, and assemble the resulting graph (one chain per non-skipped
/// episode) plus every emitted sample in order.
pub fn run_image(
    features: &Raster,
    gt: Option<&GroundTruth>,
    policy: &mut dyn Policy,
    candidates: &[Point],
    mode: Mode,
    cfg: &EnvConfig,
) -> Result<RunImageResult, EnvError> {
    let mut history = Raster::zeros(features.height(), features.width(), 1);
    let mut result = RunImageResult::default();
    for &q in candidates {
        let mut env = match EnvState::reset(features, gt, &mut history, q, mode, cfg) {
            Ok(env) => env,
            Err(EnvError::EpisodeSkip(_)) => {
                result.skipped.push(q);
                continue;
            }
            Err(e) => return Err(e),
        };
        policy.begin_episode(q);
        loop {
            let obs = env.observe();
            let out = policy.predict(&obs);
            let (sample, done) = env.step(&out);
            result.samples.extend(sample);
            if done {
                break;
            }
        }
        result.graph.push_chain(env.chain());
    }
    Ok(result)
}
