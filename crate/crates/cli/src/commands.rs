//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::SystemTime;

use anyhow::{Context, Result};
use nilm_core::dataset::{build_splits, synthetic_corpus, BuildParams, CorpusParams, Dataset};
use nilm_core::evaluation::{
    evaluate_activations, evaluate_rolling, merge_reports, rolling_window_predict, write_auc_table_csv,
    write_overlay_csv, write_roc_csv, write_summary_csv, EvalReport, RollingConfig,
};
use nilm_core::nn::Checkpoint;
use nilm_core::seed::derive_seed;
use nilm_core::series::{
    write_power_csv, write_series_csv, write_series_pieces_csv, Appliance, MultivariateSeries, PowerSeries,
    CANONICAL_PERIOD_S, FORM_FACTOR_CHANNEL, PHASE_SHIFT_CHANNEL, POWER_CHANNEL,
};
use nilm_core::training::{
    pick_grid_result, read_ledger, run_configs, select_best_model, train_grid, train_run, write_loss_curves,
    GridParams, ModelVariant, RunRecord, RunResult, Selection, SelectionTable,
};
use nilm_core::waveform::io::read_waveform;
use nilm_core::waveform::study::{build_feature_matrix, classifier_benchmark, importance_report};
use nilm_core::waveform::{hf_channel_series, ForestParams, HfChannelParams, SegmentMode, TransientParams};

use crate::workspace::{
    invalid, is_hf, load_recordings, overlap, read_series_file, resolve_model, LoadedModel, Workspace, AGGREGATE_NAME,
    SELECTION_FILE,
};
use crate::{
    DatasetBuildArgs, EvaluateArgs, FeaturesArgs, IngestArgs, ModelChoice, PredictArgs, ProcedureArg, ReportArgs,
    SelectArgs, SynthArgs, TrainArgs,
};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn appliance_index(a: Appliance) -> u64 {
    Appliance::ALL.iter().position(|&x| x == a).unwrap() as u64
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("{} does not exist", path.display())))
    }
}

/// The model's input channels out of an aggregate series.
fn model_input(series: &MultivariateSeries, channels: usize) -> Result<MultivariateSeries> {
    if is_hf(channels) {
        series
            .select(&[POWER_CHANNEL, FORM_FACTOR_CHANNEL, PHASE_SHIFT_CHANNEL])
            .map_err(|_| invalid("the model needs form factor and phase shift columns"))
    } else {
        Ok(series.select(&[POWER_CHANNEL])?)
    }
}

pub fn ingest(ws: &Workspace, a: &IngestArgs) -> Result<()> {
    let input = ws.path(&a.input);
    require_file(&input)?;
    if a.name != AGGREGATE_NAME && a.name.parse::<Appliance>().is_err() {
        return Err(invalid(format!(
            "series name `{}` must be `{AGGREGATE_NAME}` or an appliance",
            a.name
        )));
    }
    let out = match (&a.output, &a.house) {
        (Some(o), _) => ws.path(o),
        (None, Some(h)) => ws.recordings().join(h).join(format!("{}.csv", a.name)),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let pieces = if a.hf {
        let rec = read_waveform(&input).map_err(|e| invalid(format!("{}: {e}", input.display())))?;
        let params = HfChannelParams {
            period: CANONICAL_PERIOD_S,
            current_floor: a.current_floor,
        };
        let hf = hf_channel_series(&rec, &params)?;
        let flagged = hf.flagged.iter().filter(|&&f| f).count();
        if flagged > 0 {
            eprintln!("{flagged} of {} slots below the current floor got neutral descriptors", hf.flagged.len());
        }
        vec![hf.series]
    } else {
        let file = File::open(&input)?;
        nilm_core::series::read_series_csv(std::io::BufReader::new(file), a.period)
            .map_err(|e| invalid(format!("{}: {e}", input.display())))?
    };
    let pieces: Vec<MultivariateSeries> = if a.name == AGGREGATE_NAME {
        pieces
    } else {
        pieces
            .iter()
            .map(|p| p.select(&[POWER_CHANNEL]))
            .collect::<nilm_core::Result<_>>()?
    };
    let mut w = create(&out)?;
    write_series_pieces_csv(&mut w, &pieces)?;
    w.flush()?;
    ws.register("ingest", &[out.clone()])?;
    let samples: usize = pieces.iter().map(MultivariateSeries::len).sum();
    println!(
        "wrote {} ({} samples in {} gap-free piece{})",
        ws.relative(&out),
        samples,
        pieces.len(),
        if pieces.len() == 1 { "" } else { "s" }
    );
    Ok(())
}

pub fn synth_corpus(ws: &Workspace, a: &SynthArgs) -> Result<()> {
    let params = CorpusParams {
        houses: a.houses,
        days: a.days,
        hf_channels: a.hf,
        seed: derive_seed(ws.config.seed, "corpus", 0),
        ..Default::default()
    };
    let houses = synthetic_corpus(&params).map_err(|e| invalid(e.to_string()))?;
    let mut written = Vec::new();
    for h in &houses {
        let dir = ws.recordings().join(&h.house);
        let agg = dir.join(format!("{AGGREGATE_NAME}.csv"));
        let mut w = create(&agg)?;
        write_series_csv(&mut w, &h.aggregate)?;
        w.flush()?;
        written.push(agg);
        for (name, values) in &h.submeters {
            let path = dir.join(format!("{name}.csv"));
            let series = PowerSeries::new(h.aggregate.start_time, h.aggregate.period, values.clone())?;
            let mut w = create(&path)?;
            write_power_csv(&mut w, &series)?;
            w.flush()?;
            written.push(path);
        }
        println!("{}: {} samples", h.house, h.aggregate.len());
    }
    ws.register("synth-corpus", &written)?;
    Ok(())
}

pub fn dataset_build(ws: &Workspace, a: &DatasetBuildArgs) -> Result<()> {
    let cfg = &ws.config;
    let recs = load_recordings(&ws.recordings(), a.appliance, a.hf)?;
    let window = a.window.unwrap_or_else(|| cfg.window(a.appliance));
    let test_house = a.test_house.as_deref().unwrap_or(&cfg.dataset.test_house);
    let mut p = BuildParams::new(
        a.appliance,
        window,
        test_house,
        derive_seed(cfg.seed, "dataset", appliance_index(a.appliance)),
    );
    p.activation = cfg.activation(a.appliance);
    p.test_ii_days = cfg.dataset.test_ii_days;
    p.train_fraction = cfg.dataset.train_fraction;
    if a.hf {
        p.channels = vec![
            POWER_CHANNEL.to_string(),
            FORM_FACTOR_CHANNEL.to_string(),
            PHASE_SHIFT_CHANNEL.to_string(),
        ];
    } else if !a.no_augment {
        p.augment = cfg.augment();
    }
    let ds = build_splits(&recs, &p)?;
    let dir = ws.dataset_dir(a.appliance, a.hf);
    ds.save(&dir)?;
    ws.register("dataset build", &[dir.clone()])?;
    let c = &ds.info.counts;
    println!(
        "{}: window {window}, train {} ({} synthetic), val {}, test I {}, test II {}, skipped activations {}",
        ws.relative(&dir),
        c.train,
        c.synthetic,
        c.val,
        c.test_i,
        c.test_ii,
        c.skipped_activations
    );
    Ok(())
}

fn ledger_key(r: &RunRecord) -> (String, ModelVariant, String, u64) {
    (r.appliance.clone(), r.model, r.optimizer.to_string(), r.lr.to_bits())
}

/// Replace records with the same (appliance, model, optimizer, lr) and
/// append the rest, so retraining does not duplicate lines.
fn update_ledger(path: &Path, new: &[RunRecord]) -> Result<()> {
    let mut records = if path.is_file() { read_ledger(path)? } else { Vec::new() };
    for r in new {
        match records.iter_mut().find(|old| ledger_key(old) == ledger_key(r)) {
            Some(old) => *old = r.clone(),
            None => records.push(r.clone()),
        }
    }
    let tmp = path.with_extension("jsonl.tmp");
    let mut w = create(&tmp)?;
    for r in &records {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    w.flush()?;
    drop(w);
    fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

pub fn train(ws: &Workspace, a: &TrainArgs) -> Result<()> {
    let cfg = &ws.config;
    let variants = match a.model {
        ModelChoice::All => ModelVariant::ALL.to_vec(),
        ModelChoice::One(v) => vec![v],
    };
    let params = GridParams {
        epochs: a.epochs.unwrap_or(cfg.training.epochs),
        batch_size: a.batch_size.unwrap_or(cfg.training.batch_size),
        seed: derive_seed(cfg.seed, "train", appliance_index(a.appliance)),
    };
    if params.epochs == 0 || params.batch_size == 0 {
        return Err(invalid("epochs and batch size must be > 0"));
    }
    let jobs = a.jobs.unwrap_or(cfg.training.jobs).max(1);
    let retries = a.retries.unwrap_or(cfg.training.retries);
    let grid = cfg.optimizer_grid();
    let mut datasets: [Option<Dataset>; 2] = [None, None];
    let stderr = Mutex::new(());
    let mut failures = Vec::new();

    for variant in variants {
        let hf = is_hf(variant.architecture().input_channels());
        let slot = &mut datasets[usize::from(hf)];
        if slot.is_none() {
            ws.dataset_manifest(a.appliance, hf)?;
            *slot = Some(Dataset::load(&ws.dataset_dir(a.appliance, hf))?);
        }
        let ds = slot.as_ref().unwrap();
        let configs = run_configs(a.appliance, variant, &grid, &params);
        let verbose = a.verbose;
        let observer = |c: &nilm_core::training::RunConfig, log: &nilm_core::training::EpochLog| {
            if verbose {
                let _guard = stderr.lock();
                eprintln!(
                    "{variant} {} {}: epoch {} train {:.6} val {:.6}",
                    c.optimizer.algorithm, c.optimizer.learning_rate, log.epoch, log.train_loss, log.val_loss
                );
            }
        };
        eprintln!("training {variant} for {} over {} grid points", a.appliance.name(), configs.len());
        let mut runs = train_grid(ds, &configs, jobs, &observer)?;
        for run in runs.iter_mut().filter(|r| !r.completed()) {
            for attempt in 1..=retries as u64 {
                let mut c = run.config;
                c.seed = derive_seed(run.config.seed, "retry", attempt);
                eprintln!("retrying {variant} {} {} (attempt {attempt})", c.optimizer.algorithm, c.optimizer.learning_rate);
                *run = train_run(&c, ds)?;
                if run.completed() {
                    break;
                }
            }
        }
        let records = save_runs(ws, &runs)?;
        update_ledger(&ws.ledger(), &records)?;
        for r in &records {
            println!(
                "{} {:<16} {:<6} lr {:<6} best epoch {:>4}  val loss {:>10}  val AUC {:>6}  {}",
                r.appliance,
                r.model.name(),
                r.optimizer.to_string(),
                r.lr,
                r.best_iter.map_or_else(|| "-".into(), |e| e.to_string()),
                fmt_opt(r.best_val_loss, 6),
                fmt_opt(r.val_auc, 4),
                match &r.status {
                    nilm_core::training::RunStatus::Completed => "ok".to_string(),
                    nilm_core::training::RunStatus::Failed(why) => format!("FAILED: {why}"),
                }
            );
        }
        match pick_grid_result(runs) {
            Ok(g) => {
                let best = &records[g.best];
                println!(
                    "best {variant}: {} lr {} (val AUC {}){}",
                    best.optimizer,
                    best.lr,
                    fmt_opt(best.val_auc, 4),
                    if g.degenerate { " [degenerate]" } else { "" }
                );
            }
            Err(e) => failures.push(format!("{variant}: {e}")),
        }
    }
    let mut written = vec![ws.ledger()];
    written.push(ws.runs().join(a.appliance.name()));
    ws.register("train", &written)?;
    if failures.is_empty() {
        Ok(())
    } else {
        anyhow::bail!("{}", failures.join("; "))
    }
}

fn save_runs(ws: &Workspace, runs: &[RunResult]) -> Result<Vec<RunRecord>> {
    runs.iter()
        .enumerate()
        .map(|(k, r)| {
            let c = &r.config;
            let stem = ws
                .runs()
                .join(c.appliance.name())
                .join(c.variant.name())
                .join(format!("{k}-{}-{}", c.optimizer.algorithm, c.optimizer.learning_rate));
            fs::create_dir_all(stem.parent().unwrap())?;
            let mut w = create(&stem.with_extension("loss.csv"))?;
            write_loss_curves(&mut w, &r.history)?;
            w.flush()?;
            let weights = match &r.checkpoint {
                Some(ckpt) => {
                    let path = stem.with_extension("bin");
                    ckpt.save(&path)?;
                    Some(ws.relative(&path))
                }
                None => None,
            };
            Ok(RunRecord::from_result(r, weights))
        })
        .collect()
}

pub fn select(ws: &Workspace, a: &SelectArgs) -> Result<()> {
    let ledger = a.ledger.as_ref().map_or_else(|| ws.ledger(), |p| ws.path(p));
    require_file(&ledger)?;
    let records: Vec<RunRecord> = read_ledger(&ledger)?
        .into_iter()
        .filter(|r| a.appliance.map_or(true, |app| r.appliance == app.name()))
        .collect();
    let table = SelectionTable::from_records(&records);
    if table.entries.is_empty() {
        return Err(invalid(format!("no completed runs in {}", ledger.display())));
    }
    let chosen = select_best_model(&table)?;
    for e in &table.entries {
        println!("{:<12} {:<16} val AUC {:.4}", e.appliance, e.model.name(), e.val_auc);
    }
    let out = ws.runs().join(SELECTION_FILE);
    let mut all: Vec<Selection> = if out.is_file() {
        serde_json::from_str(&fs::read_to_string(&out)?).unwrap_or_default()
    } else {
        Vec::new()
    };
    all.retain(|s| !chosen.iter().any(|c| c.appliance == s.appliance));
    all.extend(chosen.iter().cloned());
    all.sort_by(|x, y| x.appliance.cmp(&y.appliance));
    write_json(&out, &all)?;
    ws.register("select", &[out])?;
    for s in &chosen {
        println!(
            "selected {}: {} (val AUC {:.4}){}",
            s.appliance,
            s.model.name(),
            s.val_auc,
            if s.degenerate { " [degenerate]" } else { "" }
        );
    }
    Ok(())
}

fn mean_activation_len(ws: &Workspace, m: &LoadedModel, appliance: Appliance, given: Option<f64>) -> Result<f64> {
    match given {
        Some(a) => Ok(a),
        None => Ok(ws
            .dataset_manifest(appliance, is_hf(m.checkpoint.network.spec().channels))?
            .info
            .mean_activation_len),
    }
}

fn rolling_config(ckpt: &Checkpoint, a: f64) -> Result<RollingConfig> {
    let cfg = RollingConfig {
        window: ckpt.network.spec().window,
        mean_activation_len: a,
    };
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(cfg)
}

pub fn predict(ws: &Workspace, a: &PredictArgs) -> Result<()> {
    let m = resolve_model(ws, a.model.appliance, a.model.model, a.model.weights.as_deref())?;
    let input = ws.path(&a.input);
    require_file(&input)?;
    let pieces = read_series_file(&input)?;
    let rc = rolling_config(&m.checkpoint, mean_activation_len(ws, &m, a.model.appliance, a.mean_activation_len)?)?;
    let mut out = Vec::new();
    for p in &pieces {
        if p.len() < rc.window {
            eprintln!("skipping a piece of {} samples (shorter than the window)", p.len());
            continue;
        }
        let x = model_input(p, m.checkpoint.network.spec().channels)?;
        out.push(MultivariateSeries::from_power(&rolling_window_predict(&m.checkpoint, &x, &rc)?));
    }
    if out.is_empty() {
        return Err(invalid(format!("no piece of {} is as long as the window", input.display())));
    }
    let path = ws.path(&a.output);
    let mut w = create(&path)?;
    write_series_pieces_csv(&mut w, &out)?;
    w.flush()?;
    ws.register("predict", &[path.clone()])?;
    println!(
        "wrote {} with {} from {} (factor {:.4})",
        ws.relative(&path),
        m.label,
        ws.relative(&m.weights),
        rc.correction()
    );
    Ok(())
}

/// Aggregate and ground truth for the rolling procedure.
fn rolling_inputs(ws: &Workspace, a: &EvaluateArgs, hf: bool) -> Result<(MultivariateSeries, PowerSeries, String)> {
    if let (Some(i), Some(t)) = (&a.input, &a.truth) {
        let (i, t) = (ws.path(i), ws.path(t));
        require_file(&i)?;
        require_file(&t)?;
        let agg = read_series_file(&i)?.into_iter().max_by_key(MultivariateSeries::len).unwrap();
        let truth = read_series_file(&t)?.into_iter().max_by_key(MultivariateSeries::len).unwrap();
        let (oa, ot, len) = overlap(&agg, &truth)?
            .ok_or_else(|| invalid("aggregate and truth files do not overlap in time"))?;
        let agg = agg.sub_series(oa, oa + len)?;
        let truth = truth.sub_series(ot, ot + len)?.power_series();
        return Ok((agg, truth, "custom".into()));
    }
    let app = a.model.appliance;
    let house = &ws.config.dataset.test_house;
    let rec = load_recordings(&ws.recordings(), app, hf)?
        .into_iter()
        .filter(|r| &r.house == house)
        .max_by_key(|r| r.aggregate.len())
        .ok_or_else(|| invalid(format!("test house `{house}` has no recording with a {} submeter", app.name())))?;
    let truth = PowerSeries::new(
        rec.aggregate.start_time,
        rec.aggregate.period,
        rec.submeters[app.name()].clone(),
    )?;
    Ok((rec.aggregate, truth, "test_i".into()))
}

pub fn evaluate(ws: &Workspace, a: &EvaluateArgs) -> Result<()> {
    let app = a.model.appliance;
    let m = resolve_model(ws, app, a.model.model, a.model.weights.as_deref())?;
    let hf = is_hf(m.checkpoint.network.spec().channels);
    let threshold = a
        .threshold
        .or(m.threshold)
        .ok_or_else(|| invalid("no validation threshold known for these weights; pass --threshold"))?;
    let (report, overlay) = match a.procedure {
        ProcedureArg::Activations => {
            let ds = Dataset::load(&ws.dataset_dir(app, hf)).map_err(|e| {
                invalid(format!("dataset for {} could not be loaded: {e}", app.name()))
            })?;
            let samples = match a.split {
                crate::SplitArg::Val => &ds.val,
                crate::SplitArg::TestI => &ds.test_i,
                crate::SplitArg::TestIi => &ds.test_ii,
            };
            let r = evaluate_activations(&m.checkpoint, samples, threshold, CANONICAL_PERIOD_S)?;
            (r.with_labels(app.name(), &m.label, a.split.name()), None)
        }
        ProcedureArg::Rolling => {
            let (agg, truth, split) = rolling_inputs(ws, a, hf)?;
            let rc = rolling_config(&m.checkpoint, mean_activation_len(ws, &m, app, a.mean_activation_len)?)?;
            let x = model_input(&agg, m.checkpoint.network.spec().channels)?;
            let pred = rolling_window_predict(&m.checkpoint, &x, &rc)?;
            let r = evaluate_rolling(&pred, &truth, rc.window, threshold, &ws.config.activation(app))?;
            let overlay = (agg.power().to_vec(), truth.values.clone(), pred);
            (r.with_labels(app.name(), &m.label, &split), Some(overlay))
        }
    };
    let procedure = report.procedure.to_string();
    let out = a.output.as_ref().map_or_else(
        || {
            ws.reports().join(format!(
                "{}-{}-{procedure}-{}.json",
                app.name(),
                m.label,
                report.split.as_deref().unwrap_or("custom")
            ))
        },
        |p| ws.path(p),
    );
    write_json(&out, &report)?;
    let roc = out.with_extension("roc.csv");
    let mut w = create(&roc)?;
    write_roc_csv(&mut w, &report.roc)?;
    w.flush()?;
    let mut written = vec![out.clone(), roc];
    if let (Some(path), Some((agg, truth, pred))) = (&a.overlay, overlay) {
        let path = ws.path(path);
        let mut w = create(&path)?;
        write_overlay_csv(&mut w, pred.start_time, pred.period, &agg, &truth, &pred.values)?;
        w.flush()?;
        written.push(path);
    }
    ws.register("evaluate", &written)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    eprintln!(
        "{} {procedure}: AUC {}  MAE {:.2} W  REITE {:.4}  F1 {:.4}  -> {}",
        m.label,
        fmt_opt(report.auc, 4),
        report.regression.mae,
        report.regression.reite,
        report.classification.f1,
        ws.relative(&out)
    );
    Ok(())
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<(SystemTime, PathBuf)> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let t = fs::metadata(&p).and_then(|m| m.modified()).unwrap_or(SystemTime::UNIX_EPOCH);
            (t, p)
        })
        .collect();
    files.sort();
    Ok(files.into_iter().map(|(_, p)| p).collect())
}

pub fn features(ws: &Workspace, a: &FeaturesArgs) -> Result<()> {
    let dir = ws.path(&a.input);
    if !dir.is_dir() {
        return Err(invalid(format!("{} is not a directory", dir.display())));
    }
    let mut sidecars = json_files(&dir)?;
    sidecars.sort();
    let records = sidecars
        .iter()
        .map(|p| read_waveform(p).map_err(|e| invalid(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>>>()?;
    if records.is_empty() {
        return Err(invalid(format!("no waveform sidecars in {}", dir.display())));
    }
    let study = build_feature_matrix(&records, &TransientParams::default())?;
    for (k, why) in &study.skipped {
        eprintln!("skipped {}: {why}", sidecars[*k].display());
    }
    let out = a.output.as_ref().map_or_else(|| ws.reports().join("features"), |p| ws.path(p));
    let matrix_path = out.join("features.csv");
    let mut w = create(&matrix_path)?;
    nilm_core::waveform::io::write_feature_matrix(&mut w, &study.matrix)?;
    w.flush()?;
    let forest = ForestParams {
        trees: a.trees,
        seed: derive_seed(ws.config.seed, "features", 0),
        ..Default::default()
    };
    let mut written = vec![matrix_path];
    for mode in [SegmentMode::Transient, SegmentMode::Steady] {
        let rep = importance_report(&study.matrix, mode, &forest, a.bins)?;
        let name = serde_json::to_value(mode)?.as_str().unwrap_or("mode").to_string();
        let path = out.join(format!("importance_{name}.json"));
        write_json(&path, &rep)?;
        written.push(path);
        println!("{name}: top features by forest {:?}", rep.top(5, true));
        println!("{name}: top features by mutual information {:?}", rep.top(5, false));
    }
    let bench = classifier_benchmark(&study.matrix, a.test_fraction, a.repetitions, &forest, ws.config.seed)?;
    let path = out.join("benchmark.json");
    write_json(&path, &bench)?;
    written.push(path);
    for row in &bench {
        println!(
            "{:<18} 1-NN {:>7}  RF {:.4} ± {:.4}",
            serde_json::to_value(row.subset)?.as_str().unwrap_or(""),
            fmt_opt(row.knn_accuracy, 4),
            row.rf_accuracy_mean,
            row.rf_accuracy_std
        );
    }
    ws.register("features", &written)?;
    Ok(())
}

pub fn report(ws: &Workspace, a: &ReportArgs) -> Result<()> {
    let dir = a.dir.as_ref().map_or_else(|| ws.reports(), |p| ws.path(p));
    if !dir.is_dir() {
        return Err(invalid(format!("report directory {} does not exist", dir.display())));
    }
    let files = json_files(&dir)?;
    if files.is_empty() {
        return Err(invalid(format!("no reports in {}", dir.display())));
    }
    let reports = files
        .iter()
        .map(|p| {
            let r: EvalReport = serde_json::from_str(&fs::read_to_string(p)?)
                .map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            Ok((p.file_name().unwrap().to_string_lossy().to_string(), r))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = merge_reports(&reports);
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    let out = a.output.as_ref().map_or_else(|| dir.join("summary"), |p| ws.path(p));
    let csv_path = out.join("summary.csv");
    let mut w = create(&csv_path)?;
    write_summary_csv(&mut w, &summary)?;
    w.flush()?;
    let auc_path = out.join("auc_table.csv");
    let mut w = create(&auc_path)?;
    write_auc_table_csv(&mut w, &summary)?;
    w.flush()?;
    let json_path = out.join("summary.json");
    write_json(&json_path, &summary)?;
    ws.register("report", &[csv_path, auc_path.clone(), json_path])?;
    print!("{}", fs::read_to_string(&auc_path)?);
    Ok(())
}
