//! Command-line pipeline: synthesize scenes, train the agent, run inference,
//! evaluate graphs, run the naive baseline, and render SVG overlays.
//!
//! Exit codes: 0 success, 1 usage, 2 data/format, 3 training diverged.

use clap::{Args, Parser, Subcommand};
use curbtrace_core::baseline::naive_graph;
use curbtrace_core::io::{
    gt_from_json, graph_from_json, graph_to_json, load_scene, save_scene, AppConfig,
};
use curbtrace_core::metrics::evaluate;
use curbtrace_core::policy::MlpPolicy;
use curbtrace_core::render::render_svg;
use curbtrace_core::synth::{generate_layout, render_scene};
use curbtrace_core::trainer::{infer_graph, train_run, LogRecord, TrainError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "curbtrace", version, about = "Grow polyline curb graphs over raster maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file (flat key=value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, e.g. --set lr=0.01 (repeatable; applied after the
    /// file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<AppConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => AppConfig::load_file(path).map_err(CliError::data)?,
            None => AppConfig::default(),
        };
        for pair in &self.set {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| CliError::data(format!("--set expects KEY=VALUE, got `{pair}`")))?;
            cfg.set(key.trim(), value.trim()).map_err(CliError::data)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate scene bundles on disk.
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; one subdirectory per scene.
        #[arg(long)]
        out: PathBuf,
        /// Number of scenes.
        #[arg(long)]
        count: usize,
        /// Base seed; scene k uses seed + k.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a policy over a scene directory.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory of scene bundles (as written by `synth`).
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint output path.
        #[arg(long)]
        out: PathBuf,
        /// Run log output path (defaults to <out>.log.jsonl).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Ablation switch.
        #[arg(long, value_parser = ["no-history", "no-restricted", "no-free", "searn"])]
        ablate: Option<String>,
    },
    /// Grow a graph over one scene with a trained policy.
    Infer {
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint path.
        #[arg(long)]
        ckpt: PathBuf,
        /// Scene directory.
        #[arg(long)]
        scene: PathBuf,
        /// Output graph JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a predicted graph against ground truth.
    Eval {
        /// Predicted graph JSON.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth JSON (a gt.json or a scene directory).
        #[arg(long)]
        gt: PathBuf,
        /// Comma-separated thresholds.
        #[arg(long, value_delimiter = ',')]
        tau: Vec<f64>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Threshold + skeletonize baseline over one scene.
    Baseline {
        #[command(flatten)]
        config: ConfigArgs,
        /// Scene directory.
        #[arg(long)]
        scene: PathBuf,
        /// Output graph JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an SVG overlay of a scene and an optional graph.
    Render {
        /// Scene directory.
        #[arg(long)]
        scene: PathBuf,
        /// Predicted graph JSON.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn data<E: std::fmt::Display>(e: E) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }

    fn diverged<E: std::fmt::Display>(e: E) -> Self {
        Self {
            code: 3,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth {
            config,
            out,
            count,
            seed,
        } => {
            let mut cfg = config.resolve()?;
            if let Some(seed) = seed {
                cfg.set("seed", &seed.to_string()).map_err(CliError::data)?;
            }
            let synth = cfg.synth_config();
            let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
            for k in 0..count {
                let layout_seed: u64 = master.gen();
                let render_seed: u64 = master.gen();
                let gt = generate_layout(layout_seed, &synth).map_err(CliError::data)?;
                let scene = render_scene(&gt, render_seed, &synth).map_err(CliError::data)?;
                let dir = out.join(format!("scene_{k:05}"));
                save_scene(&scene, &dir).map_err(CliError::data)?;
            }
            // Echo the effective config next to the scenes.
            std::fs::write(out.join("synth.config"), cfg.to_text()).map_err(CliError::data)?;
            println!("wrote {count} scenes to {}", out.display());
            Ok(())
        }
        Command::Train {
            config,
            data,
            out,
            log,
            ablate,
        } => {
            let mut cfg = config.resolve()?;
            match ablate.as_deref() {
                Some("no-history") => cfg.set("use_history", "false").map_err(CliError::data)?,
                Some("no-restricted") => {
                    cfg.set("skip_restricted", "true").map_err(CliError::data)?
                }
                Some("no-free") => cfg.set("skip_free", "true").map_err(CliError::data)?,
                Some("searn") => cfg.set("searn_mode", "true").map_err(CliError::data)?,
                _ => {}
            }
            let train_cfg = cfg.train_config().map_err(CliError::data)?;
            let scenes = load_scene_dir(&data)?;
            if scenes.is_empty() {
                return Err(CliError::data(format!(
                    "no scene directories under {}",
                    data.display()
                )));
            }
            let eval_count = cfg.eval_count.min(scenes.len().saturating_sub(1));
            let split = scenes.len() - eval_count;
            let (train_scenes, heldout) = scenes.split_at(split);
            let (policy, mut run_log) = train_run(train_scenes, heldout, &train_cfg)
                .map_err(|e| match e {
                    TrainError::Diverged { .. } => CliError::diverged(e),
                    other => CliError::data(other),
                })?;
            run_log.records.insert(
                0,
                LogRecord::Config {
                    config: cfg.echo(),
                },
            );
            policy.save_file(&out).map_err(CliError::data)?;
            let log_path = log.unwrap_or_else(|| {
                let mut p = out.clone();
                p.set_extension("log.jsonl");
                p
            });
            std::fs::write(&log_path, run_log.to_jsonl()).map_err(CliError::data)?;
            println!(
                "trained on {} scenes ({} held out); checkpoint {} log {}",
                split,
                eval_count,
                out.display(),
                log_path.display()
            );
            Ok(())
        }
        Command::Infer {
            config,
            ckpt,
            scene,
            out,
        } => {
            let cfg = config.resolve()?;
            let env = cfg.env_config().map_err(CliError::data)?;
            let cands = cfg.candidate_config();
            let mut policy = MlpPolicy::load_file(&ckpt).map_err(CliError::data)?;
            let bundle = load_scene(&scene).map_err(CliError::data)?;
            let graph =
                infer_graph(&mut policy, &bundle, &env, &cands).map_err(CliError::data)?;
            std::fs::write(&out, graph_to_json(&graph).map_err(CliError::data)?)
                .map_err(CliError::data)?;
            println!(
                "grew {} vertices in {} chains -> {}",
                graph.vertices.len(),
                graph.instances.len(),
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            pred,
            gt,
            tau,
            json,
        } => {
            let graph = graph_from_json(&std::fs::read_to_string(&pred).map_err(CliError::data)?)
                .map_err(CliError::data)?;
            let gt_path = if gt.is_dir() { gt.join("gt.json") } else { gt };
            let truth = gt_from_json(&std::fs::read_to_string(&gt_path).map_err(CliError::data)?)
                .map_err(CliError::data)?;
            let taus = if tau.is_empty() {
                curbtrace_core::metrics::DEFAULT_TAUS.to_vec()
            } else {
                tau
            };
            let report = evaluate(&graph, &truth, &taus).map_err(CliError::data)?;
            print!("{report}");
            if let Some(path) = json {
                std::fs::write(&path, serde_json::to_string_pretty(&report).map_err(CliError::data)?)
                    .map_err(CliError::data)?;
            }
            Ok(())
        }
        Command::Baseline { config, scene, out } => {
            let cfg = config.resolve()?;
            let bundle = load_scene(&scene).map_err(CliError::data)?;
            let graph = naive_graph(&bundle.seg_soft, &cfg.candidate_config());
            std::fs::write(&out, graph_to_json(&graph).map_err(CliError::data)?)
                .map_err(CliError::data)?;
            println!(
                "baseline extracted {} chains -> {}",
                graph.instances.len(),
                out.display()
            );
            Ok(())
        }
        Command::Render { scene, graph, out } => {
            let bundle = load_scene(&scene).map_err(CliError::data)?;
            let parsed = match graph {
                Some(path) => Some(
                    graph_from_json(&std::fs::read_to_string(&path).map_err(CliError::data)?)
                        .map_err(CliError::data)?,
                ),
                None => None,
            };
            let svg = render_svg(
                Some(&bundle.gt),
                parsed.as_ref(),
                bundle.gt.height,
                bundle.gt.width,
            );
            std::fs::write(&out, svg).map_err(CliError::data)?;
            println!("rendered {}", out.display());
            Ok(())
        }
    }
}

/// Scene subdirectories of `dir`, sorted by name for a stable order.
fn load_scene_dir(dir: &Path) -> Result<Vec<curbtrace_core::synth::SceneBundle>, CliError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(CliError::data)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir() && p.join("features.icrb").exists())
        .collect();
    entries.sort();
    entries
        .into_iter()
        .map(|p| load_scene(&p).map_err(CliError::data))
        .collect()
}
