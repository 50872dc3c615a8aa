//! Acceptance checks, one pass/fail line each. Run with
//! `cargo test -p nilm-core --test acceptance`.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nilm_core::dataset::{build_splits, extract_activations, synthetic_corpus, ActivationParams, BuildParams, CorpusParams, NormStats};
use nilm_core::evaluation::{
    evaluate_activations, roc_auc, rolling_window_predict, RollingConfig, WindowModel,
};
use nilm_core::nn::{
    build_architecture, build_architecture_with, count_params, mse, Activation, Algorithm, ArchitectureDims,
    ArchitectureKind, Checkpoint, Gradients, LayerParams, LayerSpec, Network, NetworkSpec, Optimizer,
    OptimizerConfig, Tensor,
};
use nilm_core::seed::{rng_from, standard_normal};
use nilm_core::series::{Appliance, Channel, MultivariateSeries, PowerSeries, CANONICAL_PERIOD_S, POWER_CHANNEL};
use nilm_core::training::{
    default_grid, grid_search, run_configs, select_best_model, GridParams, ModelVariant, RunRecord, RunStatus,
    SelectionTable,
};
use nilm_core::waveform::{
    compute_feature_vector, form_factor, forest_predict, fundamental_phase_shift, mutual_information_ranking,
    train_forest, FeatureMode, ForestParams,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng as _;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------- 1

fn architecture_golden() -> Check {
    let start = Instant::now();
    let expected = [
        (ArchitectureKind::Autoencoder, 1_294_585),
        (ArchitectureKind::Rectangles, 28_061_795),
        (ArchitectureKind::HfAutoencoder, 1_294_649),
        (ArchitectureKind::HfRectangles, 28_061_923),
        (ArchitectureKind::BigAutoencoder, 1_533_494),
    ];
    let mut shapes = Vec::new();
    for (kind, total) in expected {
        let spec = build_architecture(kind, 130, kind.input_channels()).map_err(|e| e.to_string())?;
        let n = count_params(&spec).map_err(|e| e.to_string())?;
        ensure!(n == total, "{kind}: {n} parameters, expected {total}");
        let s: Vec<String> = spec
            .shapes()
            .map_err(|e| e.to_string())?
            .iter()
            .map(|s| {
                let dims: Vec<String> = s.dims().iter().map(usize::to_string).collect();
                format!("(None, {})", dims.join(", "))
            })
            .collect();
        shapes.push((kind, s));
    }
    let has = |kind: ArchitectureKind, shape: &str| {
        shapes.iter().any(|(k, s)| *k == kind && s.iter().any(|x| x == shape))
    };
    for (kind, shape) in [
        (ArchitectureKind::Autoencoder, "(None, 127, 8)"),
        (ArchitectureKind::Autoencoder, "(None, 1016)"),
        (ArchitectureKind::Autoencoder, "(None, 128)"),
        (ArchitectureKind::Autoencoder, "(None, 130, 1)"),
        (ArchitectureKind::Rectangles, "(None, 1984)"),
        (ArchitectureKind::Rectangles, "(None, 3)"),
        (ArchitectureKind::HfAutoencoder, "(None, 130, 3)"),
        (ArchitectureKind::BigAutoencoder, "(None, 992)"),
    ] {
        ensure!(has(kind, shape), "{kind} has no {shape} layer");
    }
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(1), "took {t:?}");
    Ok(format!("5 totals exact, shapes match, {t:.1?}"))
}

// ---------------------------------------------------------------- 2

fn set_param(net: &mut Network<f64>, layer: usize, index: usize, value: f64) {
    *net.params_mut()[layer].iter_mut().nth(index).unwrap() = value;
}

/// Worst relative error of backprop against central differences; probes
/// that flip a ReLU (no derivative there) are counted and skipped.
fn gradient_check(kind: ArchitectureKind, seed: u64) -> (f64, usize, usize) {
    let spec = build_architecture_with(kind, 16, kind.input_channels(), &ArchitectureDims::tiny()).unwrap();
    let c = kind.input_channels();
    let mut net = Network::<f64>::new(spec, seed).unwrap();
    let mut rng = rng_from(seed.wrapping_add(77));
    for p in net.params_mut() {
        for b in &mut p.bias {
            *b = 0.1 * standard_normal(&mut rng);
        }
    }
    let x = Tensor::new(vec![3, 16, c], (0..3 * 16 * c).map(|_| standard_normal(&mut rng)).collect()).unwrap();
    let dims = net.forward(&x).unwrap().shape().to_vec();
    let n: usize = dims.iter().product();
    let t = Tensor::new(dims, (0..n).map(|_| standard_normal(&mut rng)).collect()).unwrap();
    let (_, grads) = net.loss_and_gradients(&x, &t).unwrap();

    // With the ReLU pattern fixed the loss is quadratic in any single
    // parameter, so the central difference is exact up to rounding and a
    // wide step keeps rounding small next to tiny gradients.
    let h = 1e-3;
    let (mut worst, mut skipped, mut checked) = (0.0f64, 0, 0);
    let probe = |net: &Network<f64>| {
        let (o, tr) = net.forward_traced(&x).unwrap();
        (mse(o.data(), t.data()), tr.relu_pattern())
    };
    for l in 0..net.params().len() {
        for i in 0..net.params()[l].len() {
            let orig = *net.params()[l].iter().nth(i).unwrap();
            set_param(&mut net, l, i, orig + h);
            let (lp, pp) = probe(&net);
            set_param(&mut net, l, i, orig - h);
            let (lm, pm) = probe(&net);
            set_param(&mut net, l, i, orig);
            if pp != pm {
                skipped += 1;
                continue;
            }
            let fd = (lp - lm) / (2.0 * h);
            let an = *grads.layers[l].iter().nth(i).unwrap();
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-7);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    (worst, skipped, checked)
}

fn gradient_correctness() -> Check {
    let start = Instant::now();
    let (mut worst, mut skipped, mut checked) = (0.0f64, 0, 0);
    for seed in [11, 4242, 90_001] {
        for kind in ArchitectureKind::ALL {
            let (w, s, c) = gradient_check(kind, seed);
            ensure!(w < 1e-4, "{kind} seed {seed}: relative error {w:e}");
            worst = worst.max(w);
            skipped += s;
            checked += c;
        }
    }
    ensure!(skipped * 100 <= checked, "{skipped} of {checked} probes crossed a kink");
    let t = start.elapsed();
    ensure!(t < Duration::from_secs(60), "took {t:?}");
    Ok(format!("{checked} parameters, max rel err {worst:.1e}, {t:.1?}"))
}

// ---------------------------------------------------------------- 3

fn scalar_net(w: f64) -> Network<f64> {
    let spec = NetworkSpec {
        kind: ArchitectureKind::Rectangles,
        window: 1,
        channels: 1,
        layers: vec![
            LayerSpec::Flatten,
            LayerSpec::Dense {
                units: 1,
                activation: Activation::Linear,
            },
        ],
    };
    let params = vec![
        LayerParams::default(),
        LayerParams {
            weight: vec![w],
            bias: vec![0.0],
        },
    ];
    Network::from_params(spec, params).unwrap()
}

fn scalar_grad(g: f64) -> Gradients<f64> {
    Gradients {
        layers: vec![
            LayerParams::default(),
            LayerParams {
                weight: vec![g],
                bias: vec![0.0],
            },
        ],
    }
}

/// Weight after one step from 1.0.
fn first_step(alg: Algorithm, lr: f64, g: f64) -> f64 {
    let mut net = scalar_net(1.0);
    let mut opt = Optimizer::new(OptimizerConfig::new(alg, lr), &net).unwrap();
    opt.step(&mut net, &scalar_grad(g)).unwrap();
    net.params()[1].weight[0]
}

fn optimizer_correctness() -> Check {
    for g in [2.5, -0.003, 700.0, -1e5] {
        let w = first_step(Algorithm::Adam, 0.001, g);
        ensure!((w - (1.0 - 0.001 * g.signum())).abs() < 1e-8, "Adam step lands on {w} for g = {g}");
        let w = first_step(Algorithm::Adamax, 0.002, g);
        ensure!(w == 1.0 - 0.002 * g.signum(), "Adamax step lands on {w} for g = {g}");
    }
    // f(θ) = (θ − 3)², θ* = 3
    let target = 3.0;
    let mut net = scalar_net(2.5);
    let mut opt = Optimizer::new(OptimizerConfig::new(Algorithm::Adam, 0.01), &net).unwrap();
    for _ in 0..200 {
        let theta = net.params()[1].weight[0];
        opt.step(&mut net, &scalar_grad(2.0 * (theta - target))).unwrap();
    }
    let err = (net.params()[1].weight[0] - target).abs();
    ensure!(err < 1e-3, "|θ − θ*| = {err:e} after 200 Adam steps");
    Ok(format!("first steps exact, quadratic |θ − θ*| = {err:.1e}"))
}

// ---------------------------------------------------------------- 4

fn waveform_features() -> Check {
    let (fs, f0) = (14_000.0, 50.0);
    let n = 2800;
    let sine = |amp: f64, phase: f64| -> Vec<f64> {
        (0..n).map(|k| amp * (2.0 * PI * f0 * k as f64 / fs + phase).sin()).collect()
    };
    let v = sine(325.0, 0.0);
    let ff = form_factor(&sine(10.0, 0.0)).map_err(|e| e.to_string())?;
    let ff_err = (ff - PI / (2.0 * 2f64.sqrt())).abs();
    ensure!(ff_err < 1e-3, "form factor {ff}");
    // lagging a quarter period
    let lag = (fs / f0 / 4.0) as usize;
    let i: Vec<f64> = (0..n)
        .map(|k| 10.0 * (2.0 * PI * f0 * (k as f64 - lag as f64) / fs).sin())
        .collect();
    let ph = fundamental_phase_shift(&i, &v, f0, fs).map_err(|e| e.to_string())?;
    ensure!((ph + PI / 2.0).abs() < 1e-3, "phase shift {ph}");
    let fv = compute_feature_vector(&sine(10.0, 0.0), &v, f0, fs, FeatureMode::Steady).map_err(|e| e.to_string())?;
    let pf = fv.get("power_factor").ok_or("no power_factor feature")?;
    ensure!((pf - 1.0).abs() < 1e-3, "power factor {pf}");
    Ok(format!("form factor {ff:.5}, phase {ph:.5} rad, power factor {pf:.5}"))
}

// ---------------------------------------------------------------- 5

fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (sp, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        for (sn, _) in scores.iter().zip(labels).filter(|(_, &l)| !l) {
            pairs += 1.0;
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn auc_oracle() -> Check {
    let mut rng = rng_from(5);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.gen_range(2..=500);
        let ties = case % 2 == 0;
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = labels
            .iter()
            .map(|&l| {
                let s = standard_normal(&mut rng) + if l { 0.7 } else { 0.0 };
                if ties {
                    (s * 2.0).round()
                } else {
                    s
                }
            })
            .collect();
        let auc = roc_auc(&scores, &labels).map_err(|e| e.to_string())?.auc;
        let oracle = pairwise_auc(&scores, &labels);
        worst = worst.max((auc - oracle).abs());
        ensure!((auc - oracle).abs() < 1e-12, "case {case}: {auc} vs {oracle}");
    }
    Ok(format!("100 instances, max |diff| {worst:.1e}"))
}

// ---------------------------------------------------------------- 6

fn rolling_estimator() -> Check {
    let w = 32;
    let ckpt = Checkpoint {
        network: Network::<f32>::new(build_architecture(ArchitectureKind::Autoencoder, w, 1).unwrap(), 8).unwrap(),
        norm: NormStats {
            sigma_input: vec![400.0],
            max_target: 2500.0,
        },
        seed: 8,
    };
    let mut rng = rng_from(6);
    let mut x = Vec::with_capacity(600);
    for k in 0..600 {
        let on = (k / 40) % 3 == 1;
        x.push(150.0 + if on { 2000.0 } else { 0.0 } + 20.0 * standard_normal(&mut rng));
    }
    let series = MultivariateSeries::new(
        0.0,
        CANONICAL_PERIOD_S,
        vec![Channel {
            name: POWER_CHANNEL.into(),
            values: x.clone(),
        }],
    )
    .unwrap();
    let cfg = RollingConfig {
        window: w,
        mean_activation_len: 5.0,
    };
    let pred = rolling_window_predict(&ckpt, &series, &cfg).map_err(|e| e.to_string())?;

    // naive: every timestamp re-predicts each covering window on its own
    let factor = w as f64 / (w as f64 - 10.0);
    let mut worst = 0.0f64;
    for t in 0..x.len() {
        let lo = t.saturating_sub(w - 1);
        let hi = t.min(x.len() - w);
        let mut sum = 0.0;
        for o in lo..=hi {
            let out = ckpt.predict(&[x[o..o + w].to_vec()]).unwrap();
            sum += out[0].rasterize(w)[t - o];
        }
        let naive = sum / (hi - lo + 1) as f64 * factor;
        worst = worst.max((naive - pred.values[t]).abs());
    }
    ensure!(worst < 1e-6, "max deviation {worst:e} W");
    let c = RollingConfig {
        window: 130,
        mean_activation_len: 15.0,
    }
    .correction();
    ensure!(c == 1.3, "correction at (130, 15) is {c}");
    Ok(format!("600 samples, max deviation {worst:.1e} W, factor(130, 15) = {c}"))
}

// ---------------------------------------------------------------- 7

/// Reference: bridge short off gaps in the on/off mask first, then keep the
/// maximal on-runs whose duration is within bounds.
fn reference_activations(x: &[f64], p: &ActivationParams, period: f64) -> Vec<(usize, usize)> {
    let mut on: Vec<bool> = x.iter().map(|&v| v > p.on_power_threshold).collect();
    let first = on.iter().position(|&b| b);
    let last = on.iter().rposition(|&b| b);
    if let (Some(first), Some(last)) = (first, last) {
        let mut k = first;
        while k <= last {
            if on[k] {
                k += 1;
                continue;
            }
            let gap_end = (k..=last).find(|&j| on[j]).unwrap();
            if (gap_end - k) as f64 * period <= p.min_off {
                on[k..gap_end].iter_mut().for_each(|b| *b = true);
            }
            k = gap_end;
        }
    }
    let mut runs = Vec::new();
    let mut k = 0;
    while k < on.len() {
        if on[k] {
            let s = k;
            while k < on.len() && on[k] {
                k += 1;
            }
            let d = (k - s) as f64 * period;
            if d >= p.min_on && d <= p.max_on {
                runs.push((s, k));
            }
        } else {
            k += 1;
        }
    }
    runs
}

fn activation_extraction() -> Check {
    let signal = proptest::collection::vec((prop::sample::select(vec![0.0, 30.0, 99.0, 100.0, 101.0, 2500.0]), 1usize..25), 1..40);
    let params = (1usize..8, 0usize..40, 0usize..6);
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let period = CANONICAL_PERIOD_S;
    let result = runner.run(&(signal, params), |(segments, (min_on, span, min_off))| {
        let x: Vec<f64> = segments
            .iter()
            .flat_map(|&(level, len)| std::iter::repeat(level).take(len))
            .collect();
        let p = ActivationParams {
            on_power_threshold: 100.0,
            min_on: min_on as f64 * period,
            max_on: (min_on + span) as f64 * period,
            min_off: min_off as f64 * period,
            border: 0,
        };
        let series = PowerSeries::new(0.0, period, x.clone()).unwrap();
        let got: Vec<(usize, usize)> =
            extract_activations(&series, &p, "h").iter().map(|a| (a.start, a.end)).collect();
        for &(s, e) in &got {
            let d = (e - s) as f64 * period;
            prop_assert!(d >= p.min_on && d <= p.max_on, "run {s}..{e} breaks duration bounds");
            prop_assert!(x[s] > 100.0 && x[e - 1] > 100.0, "run {s}..{e} does not start and end on");
        }
        prop_assert_eq!(got, reference_activations(&x, &p, period));
        Ok(())
    });
    match result {
        Ok(()) => Ok("1000 random step signals agree with the reference".into()),
        Err(e) => Err(e.to_string()),
    }
}

// ---------------------------------------------------------------- 8

fn end_to_end() -> Check {
    let start = Instant::now();
    let houses = synthetic_corpus(&CorpusParams {
        houses: 2,
        days: 28.0,
        seed: 2024,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let mut p = BuildParams::new(Appliance::Kettle, 130, "house_1", 7);
    p.test_ii_days = 7.0;
    let ds = build_splits(&houses, &p).map_err(|e| e.to_string())?;
    let configs = run_configs(
        Appliance::Kettle,
        ModelVariant::Autoencoder,
        &default_grid(),
        &GridParams {
            epochs: 200,
            batch_size: 64,
            seed: 1,
        },
    );
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len());
    let grid = grid_search(&ds, &configs, jobs, &|_, _| {}).map_err(|e| e.to_string())?;
    let best = grid.best_run();
    let val_auc = best.val_auc.ok_or("no validation AUC")?;
    let ckpt = best.checkpoint.as_ref().ok_or("best run kept no weights")?;
    let threshold = best.threshold.ok_or("no threshold")?;
    let report = evaluate_activations(ckpt, &ds.test_i, threshold, CANONICAL_PERIOD_S).map_err(|e| e.to_string())?;
    let test_auc = report.auc.ok_or("held-out set has a single class")?;
    let t = start.elapsed();
    let summary = format!(
        "train {} / val {} / held-out {} windows, best {} lr {}: val AUC {val_auc:.4}, held-out AUC {test_auc:.4}, {:.0} s",
        ds.train.len(),
        ds.val.len(),
        ds.test_i.len(),
        best.config.optimizer.algorithm,
        best.config.optimizer.learning_rate,
        t.as_secs_f64()
    );
    ensure!(val_auc >= 0.95, "val AUC below 0.95: {summary}");
    ensure!(test_auc >= 0.90, "held-out AUC below 0.90: {summary}");
    ensure!(t < Duration::from_secs(15 * 60), "over 15 minutes: {summary}");
    Ok(summary)
}

// ---------------------------------------------------------------- 9

fn degenerate_model() -> Check {
    let houses = synthetic_corpus(&CorpusParams {
        days: 3.0,
        seed: 9,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let mut p = BuildParams::new(Appliance::Kettle, 130, "house_1", 9);
    p.test_ii_days = 0.5;
    let ds = build_splits(&houses, &p).map_err(|e| e.to_string())?;
    let spec = build_architecture(ArchitectureKind::Autoencoder, 130, 1).unwrap();
    let mut aucs = Vec::new();
    for bias in [0.0f32, 0.37] {
        let mut net = Network::<f32>::zeros(spec.clone()).unwrap();
        net.params_mut().last_mut().unwrap().bias.iter_mut().for_each(|b| *b = bias);
        let ckpt = Checkpoint {
            network: net,
            norm: ds.info.norm.clone(),
            seed: 0,
        };
        let r = evaluate_activations(&ckpt, &ds.test_i, 100.0, CANONICAL_PERIOD_S).map_err(|e| e.to_string())?;
        let auc = r.auc.ok_or("single-class split")?;
        ensure!((auc - 0.5).abs() <= 1e-9, "constant output {bias} gives AUC {auc}");
        aucs.push(auc);
    }
    Ok(format!("{} windows, AUC {:?}", ds.test_i.len(), aucs))
}

// ---------------------------------------------------------------- 10

fn selection_logic() -> Check {
    use ModelVariant::*;
    let values = [
        (Rectangles, 0.933),
        (RectanglesSyn, 0.937),
        (HfRectangles, 0.927),
        (Autoencoder, 0.936),
        (AutoencoderSyn, 0.944),
        (HfAutoencoder, 0.949),
        (BigAutoencoder, 0.932),
    ];
    let records: Vec<RunRecord> = values
        .iter()
        .map(|&(model, auc)| RunRecord {
            appliance: "microwave".into(),
            model,
            optimizer: Algorithm::Adam,
            lr: 0.001,
            seed: 0,
            epochs: 200,
            best_iter: Some(100),
            best_val_loss: Some(0.01),
            val_auc: Some(auc),
            threshold: Some(50.0),
            status: RunStatus::Completed,
            weights_path: None,
        })
        .collect();
    let chosen = select_best_model(&SelectionTable::from_records(&records)).map_err(|e| e.to_string())?;
    ensure!(chosen.len() == 1, "{} selections", chosen.len());
    ensure!(
        chosen[0].model == HfAutoencoder && chosen[0].val_auc == 0.949,
        "selected {} ({})",
        chosen[0].model,
        chosen[0].val_auc
    );
    Ok(format!("microwave -> {} ({})", chosen[0].model, chosen[0].val_auc))
}

// ---------------------------------------------------------------- 11

fn classifier_sanity() -> Check {
    let mut rng = rng_from(11);
    let centers = [[0.0, 0.0, 0.0], [4.0, 0.0, 1.0], [0.0, 4.0, -1.0], [4.0, 4.0, 3.0]];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for k in 0..600 {
        let c = k % centers.len();
        let mut row: Vec<f64> = centers[c].iter().map(|m| m + 0.5 * standard_normal(&mut rng)).collect();
        row.push(standard_normal(&mut rng));
        x.push(row);
        y.push(c);
    }
    let (xtr, xte) = x.split_at(420);
    let (ytr, yte) = y.split_at(420);
    let forest = train_forest(
        xtr,
        ytr,
        &ForestParams {
            trees: 50,
            seed: 3,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let correct = xte.iter().zip(yte).filter(|(r, &l)| forest_predict(&forest, r) == l).count();
    let acc = correct as f64 / yte.len() as f64;
    ensure!(acc >= 0.95, "forest holdout accuracy {acc}");

    let n = 2000;
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
    let feats: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| vec![standard_normal(&mut rng), (l * l) as f64 + 2.0, rng.gen::<f64>()])
        .collect();
    let mi = mutual_information_ranking(&feats, &labels, 10).map_err(|e| e.to_string())?;
    ensure!(mi[1] > mi[0] && mi[1] > mi[2], "label feature not first: {mi:?}");
    ensure!(mi[0] < 0.05 && mi[2] < 0.05, "noise importance too high: {mi:?}");
    Ok(format!("forest accuracy {acc:.3}, MI {:.3}/{:.3}/{:.3}", mi[0], mi[1], mi[2]))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("architecture golden test", architecture_golden),
        ("gradient correctness", gradient_correctness),
        ("optimizer correctness", optimizer_correctness),
        ("waveform features", waveform_features),
        ("AUC oracle", auc_oracle),
        ("rolling-window estimator", rolling_estimator),
        ("activation extraction", activation_extraction),
        ("end-to-end desk-scale run", end_to_end),
        ("degenerate-model property", degenerate_model),
        ("selection logic", selection_logic),
        ("classifier sanity", classifier_sanity),
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
