//! Configuration and file formats: flat key=value config, the binary raster
//! container, 8-bit PGM export, and the JSON graph documents.
//!
//! Raster container: magic `ICRB1`, then height/width/channels as u32
//! little-endian, then channel-planar row-major f32 little-endian samples.
//! Round-trips are bit-exact.

use crate::candidates::CandidateConfig;
use crate::env::{CurbGraph, EnvConfig, GraphVertex};
use crate::geom::densify_polyline;
use crate::oracle::OracleConfig;
use crate::synth::{CurbInstance, GroundTruth, SceneBundle, SynthConfig};
use crate::trainer::TrainConfig;
use crate::{Point, Raster};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("validation: {0}")]
    Validation(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Raster container
// ---------------------------------------------------------------------------

const RASTER_MAGIC: &[u8; 5] = b"ICRB1";

pub fn write_raster<W: Write>(r: &Raster, mut w: W) -> Result<(), IoError> {
    w.write_all(RASTER_MAGIC)?;
    for dim in [r.height() as u32, r.width() as u32, r.channels() as u32] {
        w.write_all(&dim.to_le_bytes())?;
    }
    for &v in r.data() {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_raster<R: Read>(mut r: R) -> Result<Raster, IoError> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(|_| IoError::Format {
        offset: 0,
        message: "truncated magic".into(),
    })?;
    if &magic != RASTER_MAGIC {
        return Err(IoError::Format {
            offset: 0,
            message: format!("bad magic {magic:?}, expected {RASTER_MAGIC:?}"),
        });
    }
    let mut dims = [0u32; 3];
    for (i, d) in dims.iter_mut().enumerate() {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf).map_err(|_| IoError::Format {
            offset: 5 + 4 * i,
            message: "truncated dimension header".into(),
        })?;
        *d = u32::from_le_bytes(buf);
    }
    let (h, w, c) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
    let count = h
        .checked_mul(w)
        .and_then(|hw| hw.checked_mul(c))
        .ok_or_else(|| IoError::Format {
            offset: 5,
            message: "dimension overflow".into(),
        })?;
    let mut data = Vec::with_capacity(count);
    for i in 0..count {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf).map_err(|_| IoError::Format {
            offset: 17 + 4 * i,
            message: format!("truncated at sample {i} of {count}"),
        })?;
        data.push(f32::from_le_bytes(buf) as f64);
    }
    Raster::from_data(h, w, c, data).map_err(|e| IoError::Validation(e.to_string()))
}

pub fn write_raster_file<P: AsRef<Path>>(r: &Raster, path: P) -> Result<(), IoError> {
    let mut buf = Vec::new();
    write_raster(r, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_raster_file<P: AsRef<Path>>(path: P) -> Result<Raster, IoError> {
    let data = std::fs::read(path)?;
    read_raster(&data[..])
}

/// Export one channel as an 8-bit binary PGM (values scaled by 255, clamped).
pub fn write_pgm<W: Write>(r: &Raster, channel: usize, mut w: W) -> Result<(), IoError> {
    writeln!(w, "P5\n{} {}\n255", r.width(), r.height())?;
    for row in 0..r.height() {
        for col in 0..r.width() {
            let v = (r.get(channel, row, col) * 255.0).round().clamp(0.0, 255.0) as u8;
            w.write_all(&[v])?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Graph documents
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GtFile {
    height: usize,
    width: usize,
    instances: Vec<Vec<[f64; 2]>>,
}

pub fn gt_to_json(gt: &GroundTruth) -> Result<String, IoError> {
    let file = GtFile {
        height: gt.height,
        width: gt.width,
        instances: gt
            .instances
            .iter()
            .map(|inst| inst.line.points().iter().map(|p| [p.row, p.col]).collect())
            .collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn gt_from_json(text: &str) -> Result<GroundTruth, IoError> {
    let file: GtFile = serde_json::from_str(text)?;
    let mut instances = Vec::with_capacity(file.instances.len());
    for (id, raw) in file.instances.iter().enumerate() {
        for (k, p) in raw.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(IoError::Validation(format!(
                    "instance {id} point {k} has non-finite coordinates"
                )));
            }
        }
        let points: Vec<Point> = raw.iter().map(|p| Point::new(p[0], p[1])).collect();
        // The slack keeps reloading idempotent when stored samples sit within
        // float noise of exactly 1 px apart.
        let line = densify_polyline(&points, 1.0 + 1e-9)
            .map_err(|e| IoError::Validation(format!("instance {id}: {e}")))?;
        instances.push(CurbInstance { id, line });
    }
    Ok(GroundTruth {
        height: file.height,
        width: file.width,
        instances,
    })
}

#[derive(Serialize, Deserialize)]
struct GraphVertexFile {
    id: usize,
    row: f64,
    col: f64,
    stop: bool,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<GraphVertexFile>,
    edges: Vec<[usize; 2]>,
    instances: Vec<Vec<usize>>,
}

pub fn graph_to_json(graph: &CurbGraph) -> Result<String, IoError> {
    let file = GraphFile {
        vertices: graph
            .vertices
            .iter()
            .map(|v| GraphVertexFile {
                id: v.id,
                row: v.point.row,
                col: v.point.col,
                stop: v.stop,
            })
            .collect(),
        edges: graph.edges.iter().map(|&(a, b)| [a, b]).collect(),
        instances: graph.instances.clone(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn graph_from_json(text: &str) -> Result<CurbGraph, IoError> {
    let file: GraphFile = serde_json::from_str(text)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut index_of = BTreeMap::new();
    for (i, v) in file.vertices.iter().enumerate() {
        if !v.row.is_finite() || !v.col.is_finite() {
            return Err(IoError::Validation(format!(
                "vertex {} has non-finite coordinates",
                v.id
            )));
        }
        if !seen.insert(v.id) {
            return Err(IoError::Validation(format!("duplicate vertex id {}", v.id)));
        }
        index_of.insert(v.id, i);
    }
    let lookup = |id: usize, what: &str| -> Result<usize, IoError> {
        index_of
            .get(&id)
            .copied()
            .ok_or_else(|| IoError::Validation(format!("{what} references missing vertex id {id}")))
    };
    let mut graph = CurbGraph {
        vertices: file
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| GraphVertex {
                id: i,
                point: Point::new(v.row, v.col),
                stop: v.stop,
            })
            .collect(),
        ..CurbGraph::default()
    };
    for &[a, b] in &file.edges {
        graph.edges.push((lookup(a, "edge")?, lookup(b, "edge")?));
    }
    for chain in &file.instances {
        let mut ids = Vec::with_capacity(chain.len());
        for &id in chain {
            ids.push(lookup(id, "instance chain")?);
        }
        graph.instances.push(ids);
    }
    Ok(graph)
}

// ---------------------------------------------------------------------------
// Scene bundles on disk
// ---------------------------------------------------------------------------

/// Write one scene as a directory: features.icrb, heatmap.icrb, gt.json.
/// The soft segmentation is feature channel 1 and is reconstructed on load.
pub fn save_scene<P: AsRef<Path>>(scene: &SceneBundle, dir: P) -> Result<(), IoError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_raster_file(&scene.features, dir.join("features.icrb"))?;
    write_raster_file(&scene.heatmap, dir.join("heatmap.icrb"))?;
    std::fs::write(dir.join("gt.json"), gt_to_json(&scene.gt)?)?;
    Ok(())
}

pub fn load_scene<P: AsRef<Path>>(dir: P) -> Result<SceneBundle, IoError> {
    let dir = dir.as_ref();
    let features = read_raster_file(dir.join("features.icrb"))?;
    let heatmap = read_raster_file(dir.join("heatmap.icrb"))?;
    let gt = gt_from_json(&std::fs::read_to_string(dir.join("gt.json"))?)?;
    if features.channels() < 2 {
        return Err(IoError::Validation(
            "feature raster needs at least 2 channels".into(),
        ));
    }
    let seg_soft = features.channel(1);
    Ok(SceneBundle {
        features,
        seg_soft,
        heatmap,
        gt,
    })
}

// ---------------------------------------------------------------------------
// Flat key=value configuration
// ---------------------------------------------------------------------------

macro_rules! config_fields {
    ($($key:ident : $ty:ty = $default:expr),+ $(,)?) => {
        /// Every tunable of the pipeline as a flat key=value file. Unknown
        /// keys are rejected; command-line overrides reuse [`AppConfig::set`].
        #[derive(Debug, Clone, PartialEq)]
        pub struct AppConfig {
            $(pub $key: $ty),+
        }

        impl Default for AppConfig {
            fn default() -> Self {
                Self { $($key: $default),+ }
            }
        }

        impl AppConfig {
            /// Apply one key=value override.
            pub fn set(&mut self, key: &str, value: &str) -> Result<(), IoError> {
                match key {
                    $(stringify!($key) => {
                        self.$key = parse_value(key, value)?;
                        Ok(())
                    })+
                    _ => Err(IoError::Config(format!("unknown key `{key}`"))),
                }
            }

            /// The effective configuration as key=value pairs; feeding them
            /// back through [`AppConfig::parse`] reproduces this config.
            pub fn echo(&self) -> BTreeMap<String, String> {
                let mut map = BTreeMap::new();
                $(map.insert(stringify!($key).to_string(), format_value(&self.$key));)+
                map
            }
        }
    };
}

trait ConfigValue: Sized {
    fn parse_cfg(s: &str) -> Option<Self>;
    fn format_cfg(&self) -> String;
}

impl ConfigValue for usize {
    fn parse_cfg(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn format_cfg(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for u64 {
    fn parse_cfg(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn format_cfg(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for f64 {
    fn parse_cfg(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn format_cfg(&self) -> String {
        format!("{self}")
    }
}

impl ConfigValue for bool {
    fn parse_cfg(s: &str) -> Option<Self> {
        match s {
            "true" | "1" | "yes" => Some(true),
            "false" | "0" | "no" => Some(false),
            _ => None,
        }
    }
    fn format_cfg(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for Vec<f64> {
    fn parse_cfg(s: &str) -> Option<Self> {
        s.split(',')
            .map(|part| part.trim().parse().ok())
            .collect::<Option<Vec<f64>>>()
            .filter(|v| !v.is_empty())
    }
    fn format_cfg(&self) -> String {
        self.iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn parse_value<T: ConfigValue>(key: &str, value: &str) -> Result<T, IoError> {
    T::parse_cfg(value.trim())
        .ok_or_else(|| IoError::Config(format!("bad value `{value}` for key `{key}`")))
}

fn format_value<T: ConfigValue>(v: &T) -> String {
    v.format_cfg()
}

config_fields! {
    // scene generation
    height: usize = 128,
    width: usize = 128,
    n_instances_min: usize = 2,
    n_instances_max: usize = 4,
    clearance: f64 = 9.0,
    margin: f64 = 6.0,
    min_instance_len: f64 = 60.0,
    max_instance_len: f64 = 170.0,
    step_len: f64 = 9.0,
    max_turn: f64 = 0.45,
    straight: bool = false,
    sigma_f: f64 = 1.5,
    heat_sigma: f64 = 3.0,
    dropout_p: f64 = 0.15,
    blob_rate: f64 = 0.5,
    drop_window: f64 = 4.0,
    drop_radius: f64 = 4.0,
    blob_sigma: f64 = 1.5,
    max_retries: usize = 200,
    // environment (0 = derive from the image size)
    d: usize = 0,
    max_steps: usize = 0,
    snap_full_scale: f64 = 15.0,
    kill_stray_full_scale: f64 = 30.0,
    stop_threshold: f64 = 0.5,
    border_margin: f64 = 1.0,
    stop_patience: usize = 5,
    min_free_steps: usize = 8,
    // expert oracle (0 = derive from d)
    delta_min: f64 = 3.0,
    delta_exp: f64 = 0.0,
    delta_max: f64 = 0.0,
    bind_radius: f64 = 20.0,
    // policy architecture
    pool: usize = 8,
    hidden1: usize = 64,
    hidden2: usize = 48,
    use_history: bool = true,
    // training schedule
    n_free: usize = 5,
    epochs_per_train: usize = 1,
    batch_size: usize = 32,
    lr: f64 = 0.02,
    searn_mode: bool = false,
    skip_restricted: bool = false,
    skip_free: bool = false,
    cross_image_aggregation: bool = true,
    candidate_sigma_full_scale: f64 = 3.0,
    stop_weight_cap: f64 = 10.0,
    max_dataset: usize = 8000,
    train_budget: usize = 1024,
    eval_every: usize = 50,
    eval_count: usize = 10,
    seed: u64 = 0,
    // candidates
    seg_threshold: f64 = 0.5,
    min_skel_len: f64 = 15.0,
    nms_radius: usize = 5,
    p_add: f64 = 0.7,
    p_keep: f64 = 0.3,
    merge_radius: f64 = 10.0,
    // metrics
    taus: Vec<f64> = vec![1.0, 2.0, 5.0, 10.0],
}

impl AppConfig {
    /// Parse a config file: one key=value per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let mut cfg = Self::default();
        cfg.apply(text)?;
        Ok(cfg)
    }

    /// Apply key=value lines on top of the current values.
    pub fn apply(&mut self, text: &str) -> Result<(), IoError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                IoError::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load_file<P: AsRef<Path>>(path: P) -> Result<Self, IoError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The effective config as a parseable key=value document.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.echo() {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    fn side(&self) -> usize {
        self.height.max(self.width)
    }

    fn resolved_d(&self) -> usize {
        if self.d == 0 {
            (self.side() / 4).clamp(8, 64) & !1
        } else {
            self.d
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            height: self.height,
            width: self.width,
            n_instances_min: self.n_instances_min,
            n_instances_max: self.n_instances_max,
            clearance: self.clearance,
            margin: self.margin,
            min_instance_len: self.min_instance_len,
            max_instance_len: self.max_instance_len,
            step_len: self.step_len,
            max_turn: self.max_turn,
            straight: self.straight,
            sigma_f: self.sigma_f,
            heat_sigma: self.heat_sigma,
            dropout_p: self.dropout_p,
            blob_rate: self.blob_rate,
            drop_window: self.drop_window,
            drop_radius: self.drop_radius,
            blob_sigma: self.blob_sigma,
            max_retries: self.max_retries,
        }
    }

    pub fn env_config(&self) -> Result<EnvConfig, IoError> {
        let d = self.resolved_d();
        if d < 8 || d % 2 != 0 {
            return Err(IoError::Config(format!(
                "crop size d must be even and >= 8, got {d}"
            )));
        }
        if self.pool == 0 || d % self.pool != 0 {
            return Err(IoError::Config(format!(
                "pool ({}) must divide the crop size ({d})",
                self.pool
            )));
        }
        let side = self.side() as f64;
        let snap = (self.snap_full_scale * side / 1000.0).max(2.0);
        let delta_exp = if self.delta_exp == 0.0 {
            d as f64 / 4.0
        } else {
            self.delta_exp
        };
        // Keep the full-scale angle tolerance: the stray-stop floor follows
        // the expert step length, and the hard kill stays at twice it.
        let stray_stop = snap.max(0.75 * delta_exp);
        let kill_stray = (self.kill_stray_full_scale * side / 1000.0).max(2.0 * stray_stop);
        let delta_max = if self.delta_max == 0.0 {
            d as f64 / 2.0
        } else {
            self.delta_max
        };
        let max_steps = if self.max_steps == 0 {
            (4.0 * (self.height + self.width) as f64 / delta_exp).ceil() as usize
        } else {
            self.max_steps
        };
        Ok(EnvConfig {
            d,
            max_steps,
            snap,
            kill_stray,
            stop_threshold: self.stop_threshold,
            border_margin: self.border_margin,
            stop_patience: self.stop_patience,
            min_free_steps: self.min_free_steps,
            oracle: OracleConfig {
                delta_min: self.delta_min,
                delta_max,
                delta_exp,
                stray_stop,
                bind_radius: self.bind_radius,
            },
        })
    }

    pub fn candidate_config(&self) -> CandidateConfig {
        CandidateConfig {
            seg_threshold: self.seg_threshold,
            min_skel_len: self.min_skel_len,
            nms_radius: self.nms_radius,
            p_add: self.p_add,
            p_keep: self.p_keep,
            merge_radius: self.merge_radius,
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig, IoError> {
        let side = self.side() as f64;
        Ok(TrainConfig {
            env: self.env_config()?,
            candidates: self.candidate_config(),
            taus: self.taus.clone(),
            pool: self.pool,
            hidden1: self.hidden1,
            hidden2: self.hidden2,
            use_history: self.use_history,
            n_free: self.n_free,
            epochs_per_train: self.epochs_per_train.max(1),
            batch_size: self.batch_size.max(1),
            lr: self.lr,
            searn_mode: self.searn_mode,
            skip_restricted: self.skip_restricted,
            skip_free: self.skip_free,
            cross_image_aggregation: self.cross_image_aggregation,
            candidate_sigma: (self.candidate_sigma_full_scale * side / 1000.0).max(0.5),
            stop_weight_cap: self.stop_weight_cap,
            max_dataset: self.max_dataset,
            train_budget: self.train_budget,
            eval_every: self.eval_every.max(1),
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn raster_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut r = Raster::zeros(7, 5, 3);
        for v in r.data_mut() {
            *v = rng.gen::<f32>() as f64;
        }
        let mut buf = Vec::new();
        write_raster(&r, &mut buf).unwrap();
        let back = read_raster(&buf[..]).unwrap();
        let mut buf2 = Vec::new();
        write_raster(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2, "file-level round trip is bit-exact");
        assert_eq!(r.data(), back.data(), "f32-valued data survives exactly");
    }

    #[test]
    fn raster_file_length_arithmetic() {
        let r = Raster::from_data(2, 2, 1, vec![0.0, 0.5, 1.0, 0.25]).unwrap();
        let mut buf = Vec::new();
        write_raster(&r, &mut buf).unwrap();
        assert_eq!(buf.len(), 5 + 12 + 16);
    }

    #[test]
    fn raster_errors_carry_byte_offsets() {
        let err = read_raster(&b"XXXXX"[..]).unwrap_err();
        assert!(matches!(err, IoError::Format { offset: 0, .. }));
        let r = Raster::zeros(4, 4, 1);
        let mut buf = Vec::new();
        write_raster(&r, &mut buf).unwrap();
        buf.truncate(buf.len() - 2);
        let err = read_raster(&buf[..]).unwrap_err();
        match err {
            IoError::Format { offset, .. } => assert!(offset > 5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn pgm_export_of_ones_is_all_255() {
        let r = Raster::from_data(3, 4, 1, vec![1.0; 12]).unwrap();
        let mut buf = Vec::new();
        write_pgm(&r, 0, &mut buf).unwrap();
        let header_end = buf.iter().filter(|&&b| b == b'\n').count();
        assert!(header_end >= 3);
        let body = &buf[buf.len() - 12..];
        assert!(body.iter().all(|&b| b == 255));
    }

    #[test]
    fn gt_json_round_trip() {
        let cfg = SynthConfig::default();
        let gt = crate::synth::generate_layout(5, &cfg).unwrap();
        let text = gt_to_json(&gt).unwrap();
        let back = gt_from_json(&text).unwrap();
        assert_eq!(gt, back);
    }

    #[test]
    fn graph_json_round_trip_and_empty_document() {
        let mut g = CurbGraph::default();
        g.push_chain(&[
            Point::new(1.25, 2.5),
            Point::new(3.733333333333, 4.1),
            Point::new(5.0, 6.0),
        ]);
        g.push_chain(&[Point::new(9.0, 9.0)]);
        let text = graph_to_json(&g).unwrap();
        let back = graph_from_json(&text).unwrap();
        assert_eq!(g, back);

        let empty = graph_to_json(&CurbGraph::default()).unwrap();
        assert_eq!(empty, r#"{"vertices":[],"edges":[],"instances":[]}"#);
        assert_eq!(graph_from_json(&empty).unwrap(), CurbGraph::default());
    }

    #[test]
    fn graph_json_rejects_dangling_and_non_finite() {
        let bad_edge = r#"{"vertices":[{"id":0,"row":1.0,"col":2.0,"stop":false}],
                           "edges":[[0,7]],"instances":[]}"#;
        let err = graph_from_json(bad_edge).unwrap_err();
        assert!(err.to_string().contains('7'), "{err}");

        let bad_coord = r#"{"vertices":[{"id":3,"row":null,"col":2.0,"stop":false}],
                            "edges":[],"instances":[]}"#;
        assert!(graph_from_json(bad_coord).is_err());
    }

    #[test]
    fn scene_save_load_round_trip() {
        let dir = std::env::temp_dir().join(format!("curbtrace-scene-{}", std::process::id()));
        let cfg = SynthConfig::default();
        let gt = crate::synth::generate_layout(3, &cfg).unwrap();
        let scene = crate::synth::render_scene(&gt, 3, &cfg).unwrap();
        save_scene(&scene, &dir).unwrap();
        let back = load_scene(&dir).unwrap();
        assert_eq!(back.gt, scene.gt);
        assert_eq!(back.features.channels(), 3);
        assert_eq!(back.seg_soft.data(), back.features.channel(1).data());
        // Values survive as f32.
        for (a, b) in scene.features.data().iter().zip(back.features.data()) {
            assert_eq!(*a as f32, *b as f32);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn config_parses_applies_and_echoes() {
        let text = "# comment\nheight=256\nwidth = 256 # inline\nlr=0.01\ntaus=1,2.5,7\nuse_history=false\n";
        let cfg = AppConfig::parse(text).unwrap();
        assert_eq!(cfg.height, 256);
        assert_eq!(cfg.lr, 0.01);
        assert_eq!(cfg.taus, vec![1.0, 2.5, 7.0]);
        assert!(!cfg.use_history);
        // Echo feeds back to an identical config.
        let echoed = AppConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, echoed);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        assert!(AppConfig::parse("no_such_key=1\n").is_err());
        assert!(AppConfig::parse("height=abc\n").is_err());
        assert!(AppConfig::parse("height\n").is_err());
    }

    #[test]
    fn config_resolves_scaled_thresholds() {
        let cfg = AppConfig::default();
        let env = cfg.env_config().unwrap();
        assert_eq!(env.d, 32);
        assert_eq!(env.snap, 2.0);
        assert_eq!(env.oracle.stray_stop, 6.0);
        assert_eq!(env.kill_stray, 12.0);
        let mut big = AppConfig::default();
        big.set("height", "1000").unwrap();
        big.set("width", "1000").unwrap();
        let env = big.env_config().unwrap();
        assert_eq!(env.d, 64);
        assert_eq!(env.snap, 15.0);
        assert_eq!(env.oracle.stray_stop, 15.0);
        assert_eq!(env.kill_stray, 30.0);
        // Odd or tiny crop sizes are config errors.
        let mut bad = AppConfig::default();
        bad.set("d", "7").unwrap();
        assert!(bad.env_config().is_err());
        bad.set("d", "6").unwrap();
        assert!(bad.env_config().is_err());
    }
}
