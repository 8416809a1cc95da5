//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured values and asserting the stated tolerance and time budget.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use curbtrace_core::candidates::CandidateConfig;
use curbtrace_core::env::{run_image, EnvConfig, Mode};
use curbtrace_core::geom::{densify_polyline, distance_transform};
use curbtrace_core::metrics::{connectivity, evaluate, pixel_prf, PixelSets, DEFAULT_TAUS};
use curbtrace_core::oracle::{dynamic_label, InstanceBinding, OracleConfig};
use curbtrace_core::policy::{ExpertPolicy, MlpConfig, MlpPolicy, RandomPolicy};
use curbtrace_core::synth::{generate_layout, render_scene, CurbInstance, GroundTruth, SceneBundle, SynthConfig};
use curbtrace_core::trainer::{evaluate_on_scenes, infer_graph, train_run, TrainConfig};
use curbtrace_core::{Point, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn make_scenes(base_seed: u64, count: usize, cfg: &SynthConfig) -> Vec<SceneBundle> {
    let mut master = ChaCha8Rng::seed_from_u64(base_seed);
    (0..count)
        .map(|_| {
            let layout_seed: u64 = master.gen();
            let render_seed: u64 = master.gen();
            let gt = generate_layout(layout_seed, cfg).expect("layout");
            render_scene(&gt, render_seed, cfg).expect("render")
        })
        .collect()
}

fn noiseless() -> SynthConfig {
    SynthConfig {
        dropout_p: 0.0,
        blob_rate: 0.0,
        ..SynthConfig::default()
    }
}

fn budget(name: &str, start: Instant, limit_s: f64) {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < limit_s,
        "{name} exceeded its {limit_s} s budget: {elapsed:.1} s"
    );
}

/// Criterion 1: expert-policy test-mode rollouts on 50 noiseless scenes reach
/// F1(tau=2) >= 0.99 and CC >= 0.99 within 30 s.
#[test]
fn criterion_1_expert_fidelity() {
    let start = Instant::now();
    let scenes = make_scenes(1000, 50, &noiseless());
    let env = EnvConfig::for_image(128, 128);
    let cands = CandidateConfig::default();
    let mut f1_sum = 0.0;
    let mut cc_sum = 0.0;
    for scene in &scenes {
        let mut expert = ExpertPolicy::new(&scene.gt, env.oracle.clone(), env.d);
        let graph = infer_graph(&mut expert, scene, &env, &cands).expect("rollout");
        let report = evaluate(&graph, &scene.gt, &DEFAULT_TAUS).expect("evaluate");
        f1_sum += report.f1[1];
        cc_sum += report.cc;
    }
    let (f1, cc) = (f1_sum / 50.0, cc_sum / 50.0);
    budget("criterion 1", start, 30.0);
    assert!(f1 >= 0.99, "expert F1(tau=2) = {f1:.4}");
    assert!(cc >= 0.99, "expert CC = {cc:.4}");
    println!(
        "criterion 1 PASS: expert fidelity F1(tau=2)={f1:.4} CC={cc:.4} ({:.1} s)",
        start.elapsed().as_secs_f64()
    );
}

/// Criterion 2: dynamic_label, nearest_point, pixel_prf and
/// distance_transform match independent brute-force oracles on >= 1000
/// randomized instances each, within 60 s.
#[test]
fn criterion_2_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2000);

    // nearest_point vs exhaustive scan.
    for _ in 0..1000 {
        let raw: Vec<Point> = (0..rng.gen_range(2..8))
            .map(|_| Point::new(rng.gen_range(0.0..80.0), rng.gen_range(0.0..80.0)))
            .collect();
        let Ok(dp) = densify_polyline(&raw, 1.0) else {
            continue;
        };
        let q = Point::new(rng.gen_range(-10.0..90.0), rng.gen_range(-10.0..90.0));
        let hit = dp.nearest_point(q);
        let mut best = (f64::INFINITY, f64::INFINITY);
        for (i, p) in dp.points().iter().enumerate() {
            let d = q.dist(p);
            if d < best.0 {
                best = (d, dp.cum_len()[i]);
            }
        }
        assert_eq!(hit.dist, best.0);
        assert_eq!(hit.arc, best.1);
    }

    // dynamic_label vs brute-force argmin over admissible samples.
    let ocfg = OracleConfig::for_crop(32, 2.0);
    for _ in 0..1000 {
        let raw: Vec<Point> = (0..rng.gen_range(2..6))
            .map(|_| Point::new(rng.gen_range(5.0..120.0), rng.gen_range(5.0..120.0)))
            .collect();
        let Ok(line) = densify_polyline(&raw, 1.0) else {
            continue;
        };
        let gt = GroundTruth {
            height: 128,
            width: 128,
            instances: vec![CurbInstance { id: 0, line }],
        };
        let line = &gt.instances[0].line;
        let arc_pos = rng.gen_range(0.0..line.total_len());
        let binding = InstanceBinding {
            instance_id: 0,
            arc_pos,
            started_at: arc_pos,
        };
        let (center, _) = line.sample_at_arc(arc_pos);
        let pred = center.offset(rng.gen_range(-16.0..16.0), rng.gen_range(-16.0..16.0));
        let lr = dynamic_label(&binding, &gt, pred, center, 32, &ocfg);

        let in_window = |p: Point| {
            let (cr, cc) = center.round();
            p.row >= (cr - 16) as f64
                && p.row <= (cr + 15) as f64
                && p.col >= (cc - 16) as f64
                && p.col <= (cc + 15) as f64
        };
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in line.points().iter().enumerate() {
            let arc = line.cum_len()[i];
            if arc < arc_pos + ocfg.delta_min || arc > arc_pos + ocfg.delta_max || !in_window(*p) {
                continue;
            }
            let d = pred.dist(p);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        if arc_pos + ocfg.delta_min >= line.total_len() {
            assert!(lr.stop_label);
            assert_eq!(lr.coord_label, line.last());
        } else {
            match best {
                None => assert!(lr.stop_label),
                Some((d, i)) => {
                    assert_eq!(lr.coord_label, line.points()[i]);
                    assert_eq!(lr.stray_dist, d);
                    let strayed = line.nearest_point(pred).dist > ocfg.stray_stop;
                    assert_eq!(lr.stop_label, strayed);
                }
            }
        }
    }

    // pixel_prf vs O(|pred| |gt|) brute force with integer squared distances.
    for _ in 0..1000 {
        let mut pred = Vec::new();
        let mut gt = Vec::new();
        for r in 0..16i64 {
            for c in 0..16i64 {
                if rng.gen_bool(0.08) {
                    pred.push((r, c));
                }
                if rng.gen_bool(0.08) {
                    gt.push((r, c));
                }
            }
        }
        if gt.is_empty() {
            gt.push((rng.gen_range(0..16), rng.gen_range(0..16)));
        }
        let tau = [1.0, 2.0, 5.0, 10.0][rng.gen_range(0..4)];
        let ps = PixelSets {
            pred: pred.clone(),
            gt: gt.clone(),
        };
        let (p, r, _) = pixel_prf(&ps, tau).unwrap();
        let nearest = |a: (i64, i64), set: &[(i64, i64)]| {
            set.iter()
                .map(|&(br, bc)| (((br - a.0).pow(2) + (bc - a.1).pow(2)) as f64).sqrt())
                .fold(f64::INFINITY, f64::min)
        };
        let brute_p = if pred.is_empty() {
            0.0
        } else {
            pred.iter().filter(|&&a| nearest(a, &gt) < tau).count() as f64 / pred.len() as f64
        };
        let brute_r = if pred.is_empty() {
            0.0
        } else {
            gt.iter().filter(|&&a| nearest(a, &pred) < tau).count() as f64 / gt.len() as f64
        };
        assert_eq!(p, brute_p);
        assert_eq!(r, brute_r);
    }

    // distance_transform vs brute-force nearest-pixel search.
    for _ in 0..1000 {
        let h = rng.gen_range(1..=16);
        let w = rng.gen_range(1..=16);
        let mut mask = Raster::zeros(h, w, 1);
        let mut any = false;
        for r in 0..h {
            for c in 0..w {
                if rng.gen_bool(0.15) {
                    mask.set(0, r, c, 1.0);
                    any = true;
                }
            }
        }
        if !any {
            mask.set(0, rng.gen_range(0..h), rng.gen_range(0..w), 1.0);
        }
        let dt = distance_transform(&mask).unwrap();
        for r in 0..h {
            for c in 0..w {
                let mut best = f64::INFINITY;
                for fr in 0..h {
                    for fc in 0..w {
                        if mask.fg(fr, fc) {
                            let d2 = ((fr as i64 - r as i64).pow(2)
                                + (fc as i64 - c as i64).pow(2))
                                as f64;
                            best = best.min(d2);
                        }
                    }
                }
                assert_eq!(dt.get(0, r, c), best.sqrt());
            }
        }
    }

    budget("criterion 2", start, 60.0);
    println!(
        "criterion 2 PASS: 4 x 1000 randomized oracle equivalences ({:.1} s)",
        start.elapsed().as_secs_f64()
    );
}

/// Criterion 3: analytic gradients match central finite differences with
/// relative error < 1e-4 on 20 random mini-batches within 30 s.
#[test]
fn criterion_3_gradient_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3000);
    let mut worst: f64 = 0.0;
    for batch_idx in 0..20 {
        let cfg = MlpConfig {
            d: 16,
            channels: 3,
            pool: 4,
            hidden1: 10,
            hidden2: 8,
            use_history: true,
            seed: 100 + batch_idx,
        };
        let policy = MlpPolicy::new(cfg.clone());
        let batch: Vec<curbtrace_core::env::TrainingSample> = (0..6)
            .map(|_| {
                let mut patch = Raster::zeros(cfg.d, cfg.d, cfg.channels);
                for v in patch.data_mut() {
                    *v = rng.gen();
                }
                curbtrace_core::env::TrainingSample {
                    obs: curbtrace_core::env::Observation {
                        patch,
                        cur: Point::new(rng.gen_range(0.0..127.0), rng.gen_range(0.0..127.0)),
                        prev: Point::new(rng.gen_range(0.0..127.0), rng.gen_range(0.0..127.0)),
                        cur_norm: Point::new(rng.gen(), rng.gen()),
                        prev_norm: Point::new(rng.gen(), rng.gen()),
                    },
                    coord_label: (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    stop_label: rng.gen_bool(0.25),
                }
            })
            .collect();
        let stop_weight = rng.gen_range(1.0..5.0);

        // Analytic gradient recovered from a unit-lr step.
        let p0 = policy.params_flat();
        let mut stepped = policy.clone();
        stepped.train_batch(&batch, 1.0, stop_weight).unwrap();
        let p1 = stepped.params_flat();
        let analytic: Vec<f64> = p0.iter().zip(&p1).map(|(a, b)| a - b).collect();

        let eps = 1e-4;
        for i in (0..p0.len()).step_by(11) {
            let probe = |delta: f64| {
                let mut flat = p0.clone();
                flat[i] += delta;
                let mut p = policy.clone();
                p.set_params_flat(&flat);
                p.batch_loss(&batch, stop_weight).total
            };
            let numeric = (probe(eps) - probe(-eps)) / (2.0 * eps);
            let a = analytic[i];
            let denom = a.abs().max(numeric.abs());
            if (a - numeric).abs() >= 1e-7 {
                let rel = (a - numeric).abs() / denom;
                worst = worst.max(rel);
                assert!(
                    rel < 1e-4,
                    "batch {batch_idx} param {i}: analytic {a}, numeric {numeric}, rel {rel}"
                );
            }
        }
    }
    budget("criterion 3", start, 30.0);
    println!(
        "criterion 3 PASS: finite-difference gradient check, worst rel err {worst:.2e} ({:.1} s)",
        start.elapsed().as_secs_f64()
    );
}

/// Criterion 4: training on 200 scenes improves held-out F1(tau=2) by at
/// least 0.3 absolute over the initialized policy, within 15 minutes.
#[test]
fn criterion_4_learning_signal() {
    let start = Instant::now();
    let synth = SynthConfig::default();
    let train = make_scenes(4000, 200, &synth);
    let heldout = make_scenes(9000, 20, &synth);
    let cfg = TrainConfig {
        seed: 7,
        eval_every: 1000,
        ..TrainConfig::for_image(128, 128)
    };

    let init = MlpPolicy::new(MlpConfig {
        d: cfg.env.d,
        channels: train[0].features.channels() + 1,
        pool: cfg.pool,
        hidden1: cfg.hidden1,
        hidden2: cfg.hidden2,
        use_history: cfg.use_history,
        seed: cfg.seed,
    });
    let before = evaluate_on_scenes(&init, &heldout, &cfg).expect("eval init");

    let (policy, _) = train_run(&train, &[], &cfg).expect("train");
    let after = evaluate_on_scenes(&policy, &heldout, &cfg).expect("eval trained");

    let (f0, f1) = (before.f1_at(2.0), after.f1_at(2.0));
    budget("criterion 4", start, 900.0);
    assert!(
        f1 - f0 >= 0.3,
        "held-out F1(tau=2) improvement {f0:.3} -> {f1:.3} (delta {:.3})",
        f1 - f0
    );
    println!(
        "criterion 4 PASS: held-out F1(tau=2) {f0:.3} -> {f1:.3} (+{:.3}), CC {:.3} ({:.1} s)",
        f1 - f0,
        after.mean_cc,
        start.elapsed().as_secs_f64()
    );
}

/// Criterion 5: over 3 seeds, mean held-out CC of full training beats the
/// no-free-exploration variant, and mean F1(tau=2) beats the no-history
/// variant; within 45 minutes.
#[test]
fn criterion_5_ablation_directionality() {
    let start = Instant::now();
    let synth = SynthConfig::default();
    let train = make_scenes(5000, 150, &synth);
    let heldout = make_scenes(9500, 15, &synth);

    let run = |seed: u64, mutate: &dyn Fn(&mut TrainConfig)| {
        let mut cfg = TrainConfig {
            seed,
            eval_every: 1000,
            ..TrainConfig::for_image(128, 128)
        };
        mutate(&mut cfg);
        let (policy, _) = train_run(&train, &[], &cfg).expect("train");
        evaluate_on_scenes(&policy, &heldout, &cfg).expect("eval")
    };

    let seeds = [11u64, 12, 13];
    let mut full_cc = 0.0;
    let mut full_f1 = 0.0;
    let mut nofree_cc = 0.0;
    let mut nohist_f1 = 0.0;
    for &seed in &seeds {
        let full = run(seed, &|_| {});
        full_cc += full.mean_cc;
        full_f1 += full.f1_at(2.0);
        nofree_cc += run(seed, &|c| c.skip_free = true).mean_cc;
        nohist_f1 += run(seed, &|c| c.use_history = false).f1_at(2.0);
    }
    let n = seeds.len() as f64;
    let (full_cc, full_f1, nofree_cc, nohist_f1) =
        (full_cc / n, full_f1 / n, nofree_cc / n, nohist_f1 / n);
    budget("criterion 5", start, 2700.0);
    assert!(
        full_cc > nofree_cc,
        "CC: full {full_cc:.3} vs no-free {nofree_cc:.3}"
    );
    assert!(
        full_f1 > nohist_f1,
        "F1(tau=2): full {full_f1:.3} vs no-history {nohist_f1:.3}"
    );
    println!(
        "criterion 5 PASS: CC full {full_cc:.3} > no-free {nofree_cc:.3}; F1(tau=2) full {full_f1:.3} > no-history {nohist_f1:.3} ({:.1} s)",
        start.elapsed().as_secs_f64()
    );
}

/// Criterion 6: metric law checks within 10 s.
#[test]
fn criterion_6_metric_laws() {
    let start = Instant::now();

    // Weighted connectivity fixture: masses 30/70, fragments 2/1.
    let mk_line = |row: f64, len: f64| {
        densify_polyline(&[Point::new(row, 0.0), Point::new(row, len - 1.0)], 1.0).unwrap()
    };
    let gt = GroundTruth {
        height: 64,
        width: 80,
        instances: vec![
            CurbInstance { id: 0, line: mk_line(10.0, 30.0) },
            CurbInstance { id: 1, line: mk_line(40.0, 70.0) },
        ],
    };
    let fragments: Vec<Vec<(i64, i64)>> = vec![
        (0..12).map(|c| (10, c)).collect(),
        (18..30).map(|c| (10, c)).collect(),
        (0..70).map(|c| (40, c)).collect(),
    ];
    let (cc, _) = connectivity(&fragments, &gt).unwrap();
    assert_eq!(cc, 30.0 / 100.0 / 2.0 + 70.0 / 100.0 / 1.0);
    assert!((cc - 0.85).abs() < 1e-12, "CC fixture: {cc}");

    // F1 monotone in tau on 100 random graphs.
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    for _ in 0..100 {
        let gt_px: Vec<(i64, i64)> = (0..rng.gen_range(5..60))
            .map(|_| (rng.gen_range(0..32), rng.gen_range(0..32)))
            .collect();
        let pred_px: Vec<(i64, i64)> = (0..rng.gen_range(0..60))
            .map(|_| (rng.gen_range(0..32), rng.gen_range(0..32)))
            .collect();
        let mut gt_px = gt_px;
        gt_px.sort_unstable();
        gt_px.dedup();
        let ps = PixelSets {
            pred: pred_px,
            gt: gt_px,
        };
        let mut prev = (0.0, 0.0, 0.0);
        for tau in [1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 16.0] {
            let cur = pixel_prf(&ps, tau).unwrap();
            assert!(cur.0 >= prev.0 && cur.1 >= prev.1 && cur.2 >= prev.2);
            prev = cur;
        }
    }

    // Perfect prediction scores 1 everywhere; empty prediction scores 0.
    let pixels: Vec<(i64, i64)> = gt.instances.iter().flat_map(|i| i.pixels()).collect();
    let ps = PixelSets {
        pred: pixels.clone(),
        gt: pixels,
    };
    for tau in DEFAULT_TAUS {
        assert_eq!(pixel_prf(&ps, tau).unwrap(), (1.0, 1.0, 1.0));
    }
    let perfect: Vec<Vec<(i64, i64)>> = gt.instances.iter().map(|i| i.pixels()).collect();
    let (cc, _) = connectivity(&perfect, &gt).unwrap();
    assert_eq!(cc, 1.0);
    let empty = PixelSets {
        pred: vec![],
        gt: vec![(0, 0)],
    };
    for tau in DEFAULT_TAUS {
        assert_eq!(pixel_prf(&empty, tau).unwrap(), (0.0, 0.0, 0.0));
    }
    let (cc, _) = connectivity(&[], &gt).unwrap();
    assert_eq!(cc, 0.0);

    budget("criterion 6", start, 10.0);
    println!(
        "criterion 6 PASS: CC fixture exact, F1 monotone, perfect/empty laws ({:.1} s)",
        start.elapsed().as_secs_f64()
    );
}

/// Criterion 7: 500 restricted-mode steps under a random policy keep every
/// committed vertex within the scaled snap threshold of the bound instance;
/// within 10 s.
#[test]
fn criterion_7_restricted_containment() {
    let start = Instant::now();
    let synth = noiseless();
    let env = EnvConfig::for_image(128, 128);
    let mut policy = RandomPolicy::new(77);
    let mut steps = 0usize;
    let mut vertices = 0usize;
    let mut seed = 0u64;
    while steps < 500 {
        seed += 1;
        let gt = generate_layout(7000 + seed, &synth).expect("layout");
        let scene = render_scene(&gt, 7000 + seed, &synth).expect("render");
        let starts: Vec<Point> = gt.instances.iter().map(|i| i.init_end()).collect();
        let result = run_image(
            &scene.features,
            Some(&gt),
            &mut policy,
            &starts,
            Mode::Restricted,
            &env,
        )
        .expect("run");
        steps += result.samples.len();
        for (chain_idx, chain) in result.graph.instances.iter().enumerate() {
            let _ = chain_idx;
            for &vid in chain {
                let p = result.graph.vertices[vid].point;
                let d = gt
                    .instances
                    .iter()
                    .map(|inst| inst.line.nearest_point(p).dist)
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    d <= env.snap + 1e-9,
                    "committed vertex {d:.2} px from every instance (snap {})",
                    env.snap
                );
                vertices += 1;
            }
        }
    }
    budget("criterion 7", start, 10.0);
    println!(
        "criterion 7 PASS: {steps} restricted steps, {vertices} vertices within snap {} ({:.1} s)",
        env.snap,
        start.elapsed().as_secs_f64()
    );
}

/// Criterion 8: on 50 dropout-corrupted scenes (p = 0.3) the naive baseline's
/// CC trails the expert rollout's CC by at least 0.1 on average; within 2
/// minutes.
#[test]
fn criterion_8_baseline_connectivity_gap() {
    let start = Instant::now();
    let synth = SynthConfig {
        dropout_p: 0.3,
        blob_rate: 0.0,
        ..SynthConfig::default()
    };
    let scenes = make_scenes(8000, 50, &synth);
    let env = EnvConfig::for_image(128, 128);
    let cands = CandidateConfig::default();
    let mut naive_cc = 0.0;
    let mut expert_cc = 0.0;
    for scene in &scenes {
        let naive = curbtrace_core::baseline::naive_graph(&scene.seg_soft, &cands);
        naive_cc += evaluate(&naive, &scene.gt, &DEFAULT_TAUS).expect("naive eval").cc;
        let mut expert = ExpertPolicy::new(&scene.gt, env.oracle.clone(), env.d);
        let starts: Vec<Point> = scene.gt.instances.iter().map(|i| i.init_end()).collect();
        let rollout = run_image(
            &scene.features,
            Some(&scene.gt),
            &mut expert,
            &starts,
            Mode::Test,
            &env,
        )
        .expect("rollout");
        expert_cc += evaluate(&rollout.graph, &scene.gt, &DEFAULT_TAUS)
            .expect("expert eval")
            .cc;
    }
    let (naive_cc, expert_cc) = (naive_cc / 50.0, expert_cc / 50.0);
    budget("criterion 8", start, 120.0);
    assert!(
        expert_cc - naive_cc >= 0.1,
        "CC gap: expert {expert_cc:.3} vs naive {naive_cc:.3}"
    );
    println!(
        "criterion 8 PASS: CC expert {expert_cc:.3} vs naive {naive_cc:.3} (gap {:.3}) ({:.1} s)",
        expert_cc - naive_cc,
        start.elapsed().as_secs_f64()
    );
}

/// Criterion 9: determinism and formats - byte-identical checkpoints and
/// graphs across repeated seeded runs, bit-exact raster round-trips; within
/// 30 s.
#[test]
fn criterion_9_determinism_and_formats() {
    let start = Instant::now();
    let synth = SynthConfig::default();
    let train = make_scenes(9100, 6, &synth);
    let cfg = TrainConfig {
        seed: 21,
        n_free: 2,
        eval_every: 1000,
        ..TrainConfig::for_image(128, 128)
    };

    // Byte-identical checkpoints.
    let (a, _) = train_run(&train, &[], &cfg).expect("run a");
    let (b, _) = train_run(&train, &[], &cfg).expect("run b");
    let mut buf_a = Vec::new();
    let mut buf_b = Vec::new();
    a.save(&mut buf_a).unwrap();
    b.save(&mut buf_b).unwrap();
    assert_eq!(buf_a, buf_b, "checkpoints differ across identical runs");

    // Identical inference graphs.
    let scene = &train[0];
    let g1 = infer_graph(&mut a.clone(), scene, &cfg.env, &cfg.candidates).unwrap();
    let g2 = infer_graph(&mut b.clone(), scene, &cfg.env, &cfg.candidates).unwrap();
    let j1 = curbtrace_core::io::graph_to_json(&g1).unwrap();
    let j2 = curbtrace_core::io::graph_to_json(&g2).unwrap();
    assert_eq!(j1, j2, "inference graphs differ");

    // Bit-exact raster round-trip.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut raster = Raster::zeros(33, 21, 3);
    for v in raster.data_mut() {
        *v = rng.gen::<f32>() as f64;
    }
    let mut bytes = Vec::new();
    curbtrace_core::io::write_raster(&raster, &mut bytes).unwrap();
    let back = curbtrace_core::io::read_raster(&bytes[..]).unwrap();
    let mut bytes2 = Vec::new();
    curbtrace_core::io::write_raster(&back, &mut bytes2).unwrap();
    assert_eq!(bytes, bytes2, "raster round-trip not bit-exact");
    assert_eq!(raster.data(), back.data());

    // Scene generation determinism.
    let again = make_scenes(9100, 6, &synth);
    assert_eq!(train, again, "scene generation not deterministic");

    budget("criterion 9", start, 30.0);
    println!(
        "criterion 9 PASS: byte-identical checkpoints and graphs, bit-exact rasters ({:.1} s)",
        start.elapsed().as_secs_f64()
    );
}
