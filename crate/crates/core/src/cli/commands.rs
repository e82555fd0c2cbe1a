use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{BenchArgs, BenchWhat, Command, DataAction, Env, EvalArgs, PlotArgs, SourceArgs, TrainArgs};
use crate::bench::{actual_params, bench_row, memory_footprint, step_flops, write_bench_csv, BenchDims, BenchRow};
use crate::cells::{CellConfig, CellKind};
use crate::data::{
    fetch, fetch::default_cache_dir, save_csv, synth_fixture, Dataset, FetchOptions, Split, TaskSource, SeriesTable,
};
use crate::error::{Error, Result};
use crate::model_io::{
    config_from_json, config_to_json, format_float, from_config, read_run_csv, to_config, write_run_csv,
    write_summary_csv, Checkpoint, ConfigMap, ConfigValue,
};
use crate::plot::{bar_chart, line_chart, Panel, Series};
use crate::training::{evaluate, repeat_runs, SummaryRow, TrainConfig};

pub(super) fn execute(command: Command, env: &mut Env<'_>) -> Result<()> {
    match command {
        Command::Train(a) => train(a, env),
        Command::Eval(a) => eval(a, env),
        Command::Bench(a) => bench(a, env),
        Command::Data(a) => data(a.action, env),
        Command::Plot(a) => plot(a, env),
    }
}

fn fetch_options(source: &SourceArgs) -> FetchOptions {
    FetchOptions {
        cache_dir: source.cache.clone().unwrap_or_else(default_cache_dir),
        offline: source.offline,
    }
}

fn load_dataset(train: &TrainConfig, source: &SourceArgs, env: &Env<'_>) -> Result<Dataset> {
    let task: TaskSource = train.task.parse()?;
    let table = task.load(train.synth_rows, train.data_seed, &fetch_options(source), env.downloader)?;
    Dataset::prepare(&table, &task.task().spec(), train.bptt_len)
}

fn set(map: &mut ConfigMap, key: &str, value: ConfigValue) {
    map.insert(key.to_string(), value);
}

fn int(v: impl TryInto<i64>) -> Result<ConfigValue> {
    v.try_into()
        .map(ConfigValue::Int)
        .map_err(|_| Error::Config("integer flag out of range".into()))
}

/// Defaults, then the config file, then explicit flags.
fn resolve_config(a: &TrainArgs) -> Result<(CellConfig, TrainConfig)> {
    let mut map = match &a.config {
        Some(path) => config_from_json(&fs::read_to_string(path)?)?,
        None => ConfigMap::new(),
    };
    if let Some(t) = &a.task {
        set(&mut map, "task", ConfigValue::Str(t.clone()));
    }
    if let Some(m) = &a.model {
        let kind: CellKind = m.parse()?;
        set(&mut map, "kind", ConfigValue::Str(kind.name().into()));
        if a.solver.is_none() {
            map.remove("solver");
        }
    }
    if let Some(s) = &a.solver {
        set(&mut map, "solver", ConfigValue::Str(s.clone()));
    }
    if let Some(m) = &a.mapping {
        set(&mut map, "input_mapping", ConfigValue::Str(m.clone()));
    }
    if let Some(h) = a.hidden {
        set(&mut map, "hidden_units", int(h)?);
        set(&mut map, "hidden_size", int(h)?);
    }
    let sizes = [
        ("ode_unfolds", a.unfolds),
        ("minibatch", a.batch),
        ("epochs", a.epochs),
        ("bptt_len", a.bptt),
        ("eval_every", a.eval_every),
        ("repeats", a.repeats),
        ("synth_rows", a.synth_rows),
    ];
    for (key, value) in sizes {
        if let Some(v) = value {
            set(&mut map, key, int(v)?);
        }
    }
    for (key, value) in [("seed", a.seed), ("data_seed", a.data_seed)] {
        if let Some(v) = value {
            set(&mut map, key, int(v)?);
        }
    }
    if let Some(lr) = a.lr {
        set(&mut map, "learning_rate", ConfigValue::Real(lr));
    }
    if a.lr_override {
        set(&mut map, "lr_override", ConfigValue::Bool(true));
    }
    if let Some(w) = &a.test_weights {
        set(&mut map, "test_weights", ConfigValue::Str(w.clone()));
    }
    let (mut cell, train) = from_config(&map)?;
    if !map.contains_key("hidden_size") {
        cell.hidden_size = train.hidden_units;
    }
    Ok((cell, train))
}

fn train(a: TrainArgs, env: &mut Env<'_>) -> Result<()> {
    if a.jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    let (mut cell, train) = resolve_config(&a)?;
    let dataset = load_dataset(&train, &a.source, env)?;
    cell.input_size = dataset.spec.input_size();
    cell.output_size = dataset.spec.target_kind.output_size();
    cell.validate()?;

    let dir = &a.out;
    fs::create_dir_all(dir.join("plots"))?;
    let sentinel = dir.join("INCOMPLETE");
    fs::write(&sentinel, "run in progress\n")?;
    fs::write(dir.join("config.json"), config_to_json(&to_config(&cell, &train))?)?;

    let metric_name = dataset.spec.target_kind.metric_name();
    let outcome = repeat_runs(&dataset, &cell, &train, a.jobs)?;
    let mut log = String::new();
    for run in &outcome.runs {
        let r = &run.record;
        for e in &r.epochs {
            let _ = writeln!(
                log,
                "seed {} epoch {} train_loss {} valid_{metric_name} {}",
                r.seed,
                e.epoch,
                format_float(e.train_loss),
                e.valid_metric.map_or("-".to_string(), format_float)
            );
        }
        let _ = writeln!(
            log,
            "seed {} test_{metric_name} {} best_epoch {} seconds {:.3}",
            r.seed,
            format_float(r.test_metric),
            r.best_epoch.map_or("-".to_string(), |b| b.to_string()),
            r.seconds
        );
        write_run_csv(r, fs::File::create(dir.join(format!("run_{}.csv", r.seed)))?)?;
        let mut metrics = BTreeMap::from([
            (format!("test_{metric_name}"), r.test_metric),
            ("final_train_loss".to_string(), r.final_train_loss),
        ]);
        if let Some(b) = r.best_epoch {
            metrics.insert("best_epoch".into(), b as f64);
        }
        Checkpoint::from_model(&run.model, &train, r.seed, metrics).save(dir.join(format!("model_{}.ckpt", r.seed)))?;
        writeln!(
            env.out,
            "seed {} test_{metric_name} {:.6} ({:.1}s)",
            r.seed, r.test_metric, r.seconds
        )?;
    }
    fs::write(dir.join("log.txt"), log)?;
    write_summary_csv(&outcome.summary, fs::File::create(dir.join("summary.csv"))?)?;
    for row in &outcome.summary {
        writeln!(env.out, "{} {}: mean {:.6} std {:.6}", row.model, row.metric, row.mean, row.std)?;
    }
    let records: Vec<_> = outcome.runs.iter().map(|r| r.record.clone()).collect();
    fs::write(
        dir.join("plots").join("curves.svg"),
        line_chart(&curve_panels(
            records.iter().map(|r| (format!("seed{}", r.seed), r.epochs.clone())).collect(),
            metric_name,
        )),
    )?;
    fs::remove_file(&sentinel)?;
    writeln!(env.out, "wrote {}", dir.display())?;
    Ok(())
}

fn curve_panels(runs: Vec<(String, Vec<crate::training::EpochRecord>)>, metric_name: &str) -> Vec<Panel> {
    let loss = runs
        .iter()
        .map(|(name, epochs)| Series {
            name: name.clone(),
            points: epochs.iter().map(|e| (e.epoch as f64, e.train_loss)).collect(),
        })
        .collect();
    let valid = runs
        .iter()
        .map(|(name, epochs)| Series {
            name: name.clone(),
            points: epochs
                .iter()
                .filter_map(|e| e.valid_metric.map(|m| (e.epoch as f64, m)))
                .collect(),
        })
        .collect();
    vec![
        Panel {
            title: "train loss".into(),
            series: loss,
        },
        Panel {
            title: format!("valid {metric_name}"),
            series: valid,
        },
    ]
}

fn eval(a: EvalArgs, env: &mut Env<'_>) -> Result<()> {
    let split: Split = a.split.parse()?;
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let (model, mut train) = ckpt.model()?;
    if let Some(t) = &a.task {
        train.task = t.clone();
    }
    let dataset = load_dataset(&train, &a.source, env)?;
    let (expected, actual) = (model.config.input_size, dataset.spec.input_size());
    if expected != actual {
        return Err(Error::Config(format!(
            "checkpoint expects K={expected} input features but task {} provides K={actual}",
            train.task
        )));
    }
    let outputs = dataset.spec.target_kind.output_size();
    if model.config.output_size != outputs {
        return Err(Error::Config(format!(
            "checkpoint has {} outputs but task {} needs {outputs}",
            model.config.output_size, train.task
        )));
    }
    let kind = dataset.spec.target_kind;
    let (_, value) = evaluate(&model, dataset.split(split), kind, train.minibatch)?;
    let metric = format!("{}_{}", split.name(), kind.metric_name());
    writeln!(env.out, "{metric} {}", format_float(value))?;

    let summary = a.summary.unwrap_or_else(|| {
        a.checkpoint
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("summary.csv")
    });
    let row = SummaryRow {
        task: train.task.clone(),
        model: model.config.kind.name().into(),
        metric,
        mean: value,
        std: 0.0,
        seeds: vec![ckpt.seed],
    };
    append_summary(&summary, &row)
}

fn append_summary(path: &Path, row: &SummaryRow) -> Result<()> {
    let mut bytes = Vec::new();
    write_summary_csv(std::slice::from_ref(row), &mut bytes)?;
    let exists = path.exists() && fs::metadata(path)?.len() > 0;
    let body = if exists {
        let split = bytes.iter().position(|&b| b == b'\n').map_or(0, |i| i + 1);
        &bytes[split..]
    } else {
        &bytes[..]
    };
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(body)?;
    Ok(())
}

fn bench(a: BenchArgs, env: &mut Env<'_>) -> Result<()> {
    let explicit = !a.model.is_empty();
    let kinds: Vec<CellKind> = if explicit {
        a.model.iter().map(|m| m.parse()).collect::<Result<_>>()?
    } else {
        vec![CellKind::Ctrnn, CellKind::Node, CellKind::Lstm, CellKind::Ctgru, CellKind::Ltc]
    };
    let dims = BenchDims {
        n: a.n,
        k: a.k,
        m: if explicit { a.m } else { a.m.or(Some(a.n)) },
        output: a.outputs,
        batch: a.batch,
        steps: a.steps,
    };
    let rows: Vec<BenchRow> = kinds.iter().map(|&k| bench_row(k, dims)).collect::<Result<_>>()?;

    for (&kind, row) in kinds.iter().zip(&rows) {
        let mut config = CellConfig::new(kind, dims.k, dims.n, dims.output);
        if let Some(m) = row.m {
            config.ctgru_scales = m;
        }
        match a.what {
            BenchWhat::Params => {
                let (_, breakdown) = actual_params(&config)?;
                let parts: Vec<String> = breakdown.iter().map(|(n, c)| format!("{n}={c}")).collect();
                writeln!(env.err, "{kind}: {}", parts.join(" "))?;
            }
            BenchWhat::Flops => {
                let f = step_flops(&config);
                writeln!(
                    env.err,
                    "{kind}: macs={} bias_adds={} activations={} elementwise={}",
                    f.macs, f.bias_adds, f.activations, f.elementwise
                )?;
            }
            BenchWhat::Memory => {
                let r = memory_footprint(&config, dims.batch, dims.steps)?;
                writeln!(
                    env.err,
                    "{kind}: param_bytes={} optimizer_bytes={} activation_bytes={}",
                    r.param_bytes, r.optimizer_bytes, r.activation_bytes
                )?;
            }
        }
        if row.discrepancy() {
            writeln!(
                env.err,
                "note: {kind} formula gives {} but the published table prints {}",
                row.formula_count.unwrap_or_default(),
                row.table1_printed.unwrap_or_default()
            )?;
        }
    }
    match &a.out {
        Some(path) => {
            write_bench_csv(&rows, fs::File::create(path)?)?;
            writeln!(env.out, "wrote {}", path.display())?;
        }
        None => write_bench_csv(&rows, &mut *env.out)?,
    }
    Ok(())
}

fn data(action: DataAction, env: &mut Env<'_>) -> Result<()> {
    match action {
        DataAction::Fetch { task, source } => {
            let task = match task.parse::<TaskSource>()? {
                TaskSource::Real(t) => t,
                TaskSource::Synth(_) => return Err(Error::Config("synthetic tasks need no download".into())),
            };
            let path = fetch(task, &fetch_options(&source), env.downloader)?;
            writeln!(env.out, "{}", path.display())?;
        }
        DataAction::Synth { task, rows, seed, out } => {
            let task = task.parse::<TaskSource>()?.task();
            let table = synth_fixture(task, seed, rows)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            save_csv(&table, &task.spec(), &out)?;
            writeln!(env.out, "wrote {} rows to {}", table.rows(), out.display())?;
        }
        DataAction::Info {
            task,
            bptt,
            rows,
            source,
        } => {
            let src: TaskSource = task.parse()?;
            let table: SeriesTable = src.load(rows, 0, &fetch_options(&source), env.downloader)?;
            let spec = src.task().spec();
            let dataset = Dataset::prepare(&table, &spec, bptt)?;
            writeln!(env.out, "task {src}")?;
            writeln!(env.out, "rows {}", table.rows())?;
            writeln!(env.out, "features {}", spec.input_size())?;
            writeln!(env.out, "outputs {}", spec.target_kind.output_size())?;
            writeln!(env.out, "metric {}", spec.target_kind.metric_name())?;
            for split in [Split::Train, Split::Valid, Split::Test] {
                writeln!(env.out, "{}_windows {}", split.name(), dataset.split(split).len())?;
            }
        }
    }
    Ok(())
}

fn run_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(seed) = name
            .strip_prefix("run_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse().ok())
        {
            files.push((seed, path));
        }
    }
    files.sort();
    Ok(files)
}

fn plot(a: PlotArgs, env: &mut Env<'_>) -> Result<()> {
    if a.runs.is_empty() && a.bench.is_none() {
        return Err(Error::Config("nothing to plot: pass --runs and/or --bench".into()));
    }
    fs::create_dir_all(&a.out)?;
    if !a.runs.is_empty() {
        let mut runs = Vec::new();
        for dir in &a.runs {
            let label = dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
            let files = run_files(dir)?;
            if files.is_empty() {
                return Err(Error::Data(format!("no run_<seed>.csv files in {}", dir.display())));
            }
            for (seed, path) in files {
                runs.push((format!("{label}/seed{seed}"), read_run_csv(fs::File::open(path)?)?));
            }
        }
        let path = a.out.join("curves.svg");
        fs::write(&path, line_chart(&curve_panels(runs, "metric")))?;
        writeln!(env.out, "wrote {}", path.display())?;
    }
    if let Some(bench) = &a.bench {
        let mut rdr = csv::Reader::from_path(bench)?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Schema {
                missing: vec![name.to_string()],
            })
        };
        let (kind, n, k, total) = (col("kind")?, col("n")?, col("k")?, col("total_bytes")?);
        let mut bars = Vec::new();
        for record in rdr.records() {
            let r = record?;
            let value: f64 = r[total]
                .parse()
                .map_err(|_| Error::Data(format!("bad total_bytes \"{}\"", &r[total])))?;
            bars.push((format!("{} n={} k={}", &r[kind], &r[n], &r[k]), value));
        }
        let path = a.out.join("bench.svg");
        fs::write(&path, bar_chart("training memory (bytes)", &bars))?;
        writeln!(env.out, "wrote {}", path.display())?;
    }
    Ok(())
}
