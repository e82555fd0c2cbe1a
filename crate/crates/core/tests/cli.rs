use std::cell::Cell;
use std::fs;
use std::path::Path;

use ltcse::cli::{run_cli, Env};
use ltcse::data::Downloader;
use ltcse::model_io::read_summary_csv;
use ltcse::Error;

/// Fails the test if anything tries to reach the network.
#[derive(Default)]
struct NetworkGuard {
    calls: Cell<usize>,
}

impl Downloader for NetworkGuard {
    fn download(&self, url: &str) -> ltcse::Result<Vec<u8>> {
        self.calls.set(self.calls.get() + 1);
        Err(Error::Data(format!("network access attempted: {url}")))
    }
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
    network_calls: usize,
}

fn cli(args: &[&str]) -> Outcome {
    let guard = NetworkGuard::default();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = {
        let mut env = Env {
            downloader: &guard,
            out: &mut out,
            err: &mut err,
        };
        let mut argv = vec!["ltcse"];
        argv.extend_from_slice(args);
        run_cli(argv, &mut env)
    };
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
        network_calls: guard.calls.get(),
    }
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn quick_train(dir: &Path, extra: &[&str]) -> Outcome {
    let mut args = vec![
        "train",
        "--task",
        "synth:occupancy",
        "--model",
        "ltc",
        "--synth-rows",
        "2000",
        "--epochs",
        "2",
        "--repeats",
        "1",
        "--out",
        path(dir),
    ];
    args.extend_from_slice(extra);
    cli(&args)
}

#[test]
fn help_and_version_exit_zero() {
    let help = cli(&["--help"]);
    assert_eq!(help.code, 0);
    for sub in ["train", "eval", "bench", "data", "plot"] {
        assert!(help.stdout.contains(sub), "{sub} missing from help");
    }
    assert_eq!(cli(&["--version"]).code, 0);
    assert_eq!(cli(&["train", "--help"]).code, 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cli(&[]).code, 2);
    assert_eq!(cli(&["frobnicate"]).code, 2);
    assert_eq!(cli(&["train", "--epochs", "many"]).code, 2);
    assert_eq!(cli(&["bench", "weights"]).code, 2);
}

#[test]
fn train_writes_complete_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = quick_train(&run, &[]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    for name in ["config.json", "run_0.csv", "summary.csv", "model_0.ckpt", "log.txt", "plots/curves.svg"] {
        assert!(run.join(name).exists(), "{name} missing");
    }
    assert!(!run.join("INCOMPLETE").exists());
    let csv = fs::read_to_string(run.join("run_0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let svg = fs::read_to_string(run.join("plots/curves.svg")).unwrap();
    assert_eq!(svg.matches("data-series=\"seed0\"").count(), 2);
    assert_eq!(o.network_calls, 0);
}

#[test]
fn illegal_solver_pair_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["train", "--model", "ctrnn", "--solver", "fused", "--out", path(dir.path())]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("fused") && o.stderr.contains("ctrnn"), "{}", o.stderr);
    assert!(!dir.path().join("INCOMPLETE").exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(cli(&["train", "--lr", "0.5", "--out", path(&out)]).code, 2);
    assert_eq!(cli(&["train", "--lr", "0.5", "--lr-override", "--epochs", "0", "--repeats", "1",
        "--synth-rows", "500", "--out", path(&out)]).code, 0);
    assert_eq!(cli(&["train", "--model", "transformer", "--out", path(&out)]).code, 2);
    assert_eq!(cli(&["train", "--task", "weather", "--out", path(&out)]).code, 2);
    assert_eq!(cli(&["train", "--test-weights", "median", "--out", path(&out)]).code, 2);
    assert_eq!(cli(&["train", "--jobs", "0", "--out", path(&out)]).code, 2);

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, "{\"dropout\": 0.5}").unwrap();
    let o = cli(&["train", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("dropout"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        "{\"epochs\": 1, \"hidden_units\": 6, \"repeats\": 3, \"synth_rows\": 1500, \"task\": \"synth:occupancy\"}",
    )
    .unwrap();
    let run = dir.path().join("run");
    let o = cli(&["train", "--config", path(&cfg), "--repeats", "1", "--out", path(&run)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let written = fs::read_to_string(run.join("config.json")).unwrap();
    assert!(written.contains("\"hidden_size\": 6"), "{written}");
    assert!(written.contains("\"repeats\": 1"));
    assert_eq!(fs::read_to_string(run.join("run_0.csv")).unwrap().lines().count(), 2);
    assert!(!run.join("run_1.csv").exists());
}

#[test]
fn offline_without_cache_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&[
        "train",
        "--task",
        "occupancy",
        "--offline",
        "--cache",
        path(&dir.path().join("cache")),
        "--out",
        path(&dir.path().join("run")),
    ]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("archive.ics.uci.edu"), "{}", o.stderr);
    assert_eq!(o.network_calls, 0);

    let o = cli(&["data", "fetch", "--task", "har", "--offline", "--cache", path(dir.path())]);
    assert_eq!(o.code, 3);
    assert_eq!(o.network_calls, 0);
}

#[test]
fn eval_reproduces_test_metric_and_appends_summary() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert_eq!(quick_train(&run, &[]).code, 0);
    let ckpt = run.join("model_0.ckpt");
    let log = fs::read_to_string(run.join("log.txt")).unwrap();
    let recorded = log
        .lines()
        .find_map(|l| l.strip_prefix("seed 0 test_accuracy "))
        .and_then(|rest| rest.split_whitespace().next())
        .unwrap()
        .to_string();

    let o = cli(&["eval", "--checkpoint", path(&ckpt)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout.trim(), format!("test_accuracy {recorded}"));
    let rows = read_summary_csv(fs::File::open(run.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2].metric, "test_accuracy");
    assert_eq!(rows[2].mean, recorded.parse::<f64>().unwrap());

    let train = cli(&["eval", "--checkpoint", path(&ckpt), "--split", "train"]);
    let valid = cli(&["eval", "--checkpoint", path(&ckpt), "--split", "valid"]);
    let value = |o: &Outcome| o.stdout.split_whitespace().nth(1).unwrap().parse::<f64>().unwrap();
    assert!(value(&train) >= value(&valid) - 0.05);

    let o = cli(&["eval", "--checkpoint", path(&ckpt), "--task", "synth:har"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("K=5") && o.stderr.contains("K=561"), "{}", o.stderr);

    assert_eq!(cli(&["eval", "--checkpoint", path(&ckpt), "--split", "holdout"]).code, 2);
    let broken = dir.path().join("broken.ckpt");
    let bytes = fs::read(&ckpt).unwrap();
    fs::write(&broken, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(cli(&["eval", "--checkpoint", path(&broken)]).code, 2);
    assert_eq!(cli(&["eval", "--checkpoint", path(&dir.path().join("none.ckpt"))]).code, 1);
}

#[test]
fn bench_commands() {
    let o = cli(&["bench", "params", "--model", "ode-rnn", "--n", "128", "--k", "8"]);
    assert_eq!(o.code, 0);
    let row = o.stdout.lines().nth(1).unwrap();
    assert!(row.starts_with("node,128,8,,9216,8192,"), "{row}");
    assert!(o.stderr.contains("8192"));

    let o = cli(&["bench", "memory", "--model", "lstm", "--model", "gru", "--n", "16", "--k", "4"]);
    assert_eq!(o.code, 0);
    let totals: Vec<u64> = o
        .stdout
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(totals.len(), 2);
    assert!(totals[0] > totals[1]);

    let o = cli(&["bench", "flops", "--model", "ct-gru"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("--m"));
    assert_eq!(cli(&["bench", "flops", "--model", "ctgru", "--m", "4", "--n", "8"]).code, 0);
    assert_eq!(cli(&["bench", "params", "--model", "ltc", "--n", "0"]).code, 2);

    let table = cli(&["bench", "params"]);
    assert_eq!(table.code, 0);
    assert_eq!(table.stdout.lines().count(), 6);
    assert_eq!(table.stderr.matches("note:").count(), 5);
}

#[test]
fn data_commands() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fixtures/traffic.csv");
    let o = cli(&["data", "synth", "--task", "traffic", "--rows", "300", "--out", path(&csv)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("date_time,"));
    assert_eq!(text.lines().count(), 301);

    let info = cli(&["data", "info", "--task", "synth:har", "--rows", "640"]);
    assert_eq!(info.code, 0);
    assert!(info.stdout.contains("features 561"));
    assert!(info.stdout.contains("outputs 6"));
    assert_eq!(cli(&["data", "fetch", "--task", "synth:har"]).code, 2);
}

#[test]
fn plot_is_deterministic_and_orders_bars() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert_eq!(quick_train(&run, &[]).code, 0);
    let bench = dir.path().join("bench.csv");
    assert_eq!(
        cli(&["bench", "memory", "--model", "gru", "--model", "lstm", "--model", "ltc", "--n", "8", "--k", "3",
            "--out", path(&bench)])
        .code,
        0
    );
    let (p1, p2) = (dir.path().join("p1"), dir.path().join("p2"));
    for p in [&p1, &p2] {
        let o = cli(&["plot", "--runs", path(&run), "--bench", path(&bench), "--out", path(p)]);
        assert_eq!(o.code, 0, "{}", o.stderr);
    }
    for name in ["curves.svg", "bench.svg"] {
        assert_eq!(fs::read(p1.join(name)).unwrap(), fs::read(p2.join(name)).unwrap());
    }
    let curves = fs::read_to_string(p1.join("curves.svg")).unwrap();
    assert_eq!(curves.matches("data-series=\"run/seed0\"").count(), 2);

    let mut rdr = csv::Reader::from_path(&bench).unwrap();
    let mut expected: Vec<(String, u64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[8].parse().unwrap())
        })
        .collect();
    expected.sort_by(|a, b| b.1.cmp(&a.1));
    let svg = fs::read_to_string(p1.join("bench.svg")).unwrap();
    let order: Vec<&str> = svg
        .split("data-bar=\"")
        .skip(1)
        .map(|s| s.split_whitespace().next().unwrap())
        .collect();
    let want: Vec<&str> = expected.iter().map(|e| e.0.as_str()).collect();
    assert_eq!(order, want);

    assert_eq!(cli(&["plot", "--out", path(&p1)]).code, 2);
    assert_eq!(cli(&["plot", "--runs", path(dir.path()), "--out", path(&p1)]).code, 3);
}
