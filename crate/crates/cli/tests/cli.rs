use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lsqtomo_cli::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lsqtomo"))
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn toml_file(path: &Path) -> toml::Table {
    toml::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_EVENTS: &str = r#"
schema_version = 1
seed = 11
output_dir = "unused"

[model]
kind = "morse"
parameter = 0.279

[state]
alpha_re = -1.5
n_max = 5

[evolution]
time_units = "pi_over_w01"
period = 6.0
time_count = 12

[measurement]
mode = "events"
events_per_time = 200

[reconstruction]
kernel = "spacetime"
regularization = "none"
"#;

const HARMONIC_GROUND: &str = r#"
schema_version = 1
seed = 1
output_dir = "unused"

[model]
kind = "harmonic"
parameter = 1.0

[state]
alpha_re = 0.0
n_max = 0

[evolution]
time_units = "pi_over_w01"
period = 1.0
time_count = 1
time_averaged = true

[measurement]
mode = "events"
events_per_time = 10

[reconstruction]
kernel = "diagonal"
regularization = "none"
"#;

#[test]
fn shipped_configs_validate() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn same_seed_gives_byte_identical_datasets() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_EVENTS);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for (out, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
        let o = run(&["simulate", "--config", path_str(&cfg), "--out", path_str(out), "--seed", seed]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["events.csv", "metadata.toml"] {
        assert_eq!(fs::read(a.join("dataset").join(f)).unwrap(), fs::read(b.join("dataset").join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(a.join("dataset/events.csv")).unwrap(), fs::read(c.join("dataset/events.csv")).unwrap());
    // The stored configuration carries the effective seed and round-trips.
    let stored = ExperimentConfig::load(&c.join("config.toml")).unwrap();
    assert_eq!(stored.seed, 12);
    let mut original = ExperimentConfig::from_toml(SMALL_EVENTS).unwrap();
    original.seed = 12;
    assert_eq!(stored, original);
}

#[test]
fn pipeline_outputs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = shipped("morse_smeared_counts.toml");
    let outs = [tmp.path().join("a"), tmp.path().join("b")];
    for out in &outs {
        let o = run(&["pipeline", "--config", path_str(&cfg), "--out", path_str(out), "--plots"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["results.csv", "comparison.csv", "lcurve.csv", "result.toml", "populations.svg", "lcurve.svg"] {
        assert_eq!(fs::read(outs[0].join(f)).unwrap(), fs::read(outs[1].join(f)).unwrap(), "{f}");
    }
    let rows = read_rows(&outs[0].join("results.csv"));
    assert_eq!(rows.len(), 13 * 13);
    assert!(rows.iter().all(|r| !r[6].is_empty()), "bias columns filled for gridded data");
}

#[test]
fn zero_events_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &SMALL_EVENTS.replace("events_per_time = 200", "events_per_time = 0"));
    let out = tmp.path().join("out");
    let o = run(&["simulate", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("measurement.events_per_time"), "{}", stderr(&o));
    assert!(!out.exists(), "nothing is written before validation passes");
}

#[test]
fn harmonic_ground_kernel_has_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", HARMONIC_GROUND);
    let out = tmp.path().join("out");
    let o = run(&["kernels", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&out.join("kernels.csv"));
    assert!(rows.len() > 100);
    for r in &rows {
        assert_eq!((&r[0], &r[1]), ("0", "0"));
        let x: f64 = r[2].parse().unwrap();
        let k: f64 = r[4].parse().unwrap();
        let expected = 2f64.sqrt() * (-x * x).exp();
        assert!((k - expected).abs() < 1e-10, "x = {x}: {k} vs {expected}");
        assert_eq!(r[5].parse::<f64>().unwrap(), 0.0);
    }
}

fn reported_deviation(stdout: &str) -> f64 {
    let tail = stdout.split("max deviation from identity ").nth(1).expect("deviation reported");
    tail.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn biorthogonality_report_is_below_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, cfg) in [
        ("events", write_config(tmp.path(), "e.toml", SMALL_EVENTS)),
        ("averaged", shipped("morse_time_averaged.toml")),
        ("smeared", shipped("morse_smeared_counts.toml")),
    ] {
        let out = tmp.path().join(name);
        let o = run(&["kernels", "--config", path_str(&cfg), "--out", path_str(&out), "--plots"]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let dev = reported_deviation(&stdout(&o));
        let report = toml_file(&out.join("kernels.toml"));
        let stored = report["sets"].as_array().unwrap()[0]["identity_deviation"].as_float().unwrap();
        if name == "smeared" {
            // Regularized kernels are not exact inverses; only the report is checked.
            assert!(stored > 0.0);
        } else {
            assert!(dev < 1e-6 && stored < 1e-6, "{name}: {dev}");
        }
    }
    assert!(tmp.path().join("averaged/kernel_n2.svg").exists());
    assert!(tmp.path().join("averaged/kernel_n11.svg").exists());
}

fn comparison_error(out: &Path) -> f64 {
    toml_file(&out.join("result.toml"))["comparison"]["max_abs_error"].as_float().unwrap()
}

#[test]
fn exact_datasets_reproduce_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let morse_exact = SMALL_EVENTS.replace("mode = \"events\"\nevents_per_time = 200", "mode = \"exact\"");
    let smeared_exact = morse_exact.replace(
        "mode = \"exact\"",
        "mode = \"exact\"\npositions = 25\nbounds = [-2.0, 10.0]\nsigma_t = 0.2\nsigma_x = 0.3",
    );
    let damped = include_str!("../configs/harmonic_exact.toml").replace("time_count = 24", "time_count = 24\ndamping = 0.05");
    for (name, cfg) in [
        ("harmonic", shipped("harmonic_exact.toml")),
        ("morse", write_config(tmp.path(), "m.toml", &morse_exact)),
        ("smeared", write_config(tmp.path(), "s.toml", &smeared_exact)),
        ("damped", write_config(tmp.path(), "d.toml", &damped)),
    ] {
        let out = tmp.path().join(name);
        let o = run(&["pipeline", "--config", path_str(&cfg), "--out", path_str(&out)]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let err = comparison_error(&out);
        assert!(err < 1e-6, "{name}: {err}");
    }
}

#[test]
fn lcurve_sweep_from_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = shipped("morse_smeared_counts.toml");
    let out = tmp.path().join("run");
    let o = run(&["simulate", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["lcurve", "--config", path_str(&cfg), "--out", path_str(&out), "--plots", "--lambda", "1e-4,2e-3,5e-3,5e-2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&out.join("lcurve.csv"));
    let col = |i: usize| rows.iter().map(|r| r[i].parse::<f64>().unwrap()).collect::<Vec<_>>();
    assert_eq!(col(0), vec![1e-4, 2e-3, 5e-3, 5e-2]);
    assert!(col(1).windows(2).all(|w| w[1] >= w[0]), "residual norm nondecreasing");
    assert!(col(2).windows(2).all(|w| w[1] <= w[0]), "solution norm nonincreasing");
    assert!(rows[0][3].is_empty() && rows[3][3].is_empty(), "no curvature at the endpoints");
    let report = toml_file(&out.join("lcurve.toml"));
    let corner = report["corner"].as_float().unwrap();
    assert!([2e-3, 5e-3].contains(&corner), "{corner}");
    assert!(out.join("lcurve.svg").exists());

    let o = run(&["lcurve", "--config", path_str(&cfg), "--out", path_str(&out), "--lambda", "1e-3,1e-2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unknown_schema_versions_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_EVENTS);
    let out = tmp.path().join("run");
    assert!(run(&["simulate", "--config", path_str(&cfg), "--out", path_str(&out)]).status.success());
    let meta = out.join("dataset/metadata.toml");
    let text = fs::read_to_string(&meta).unwrap().replace("schema_version = 1", "schema_version = 2");
    fs::write(&meta, text).unwrap();
    let o = run(&["reconstruct", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unsupported schema version 2"), "{}", stderr(&o));

    let bad = write_config(tmp.path(), "v.toml", &SMALL_EVENTS.replace("schema_version = 1", "schema_version = 3"));
    let o = run(&["simulate", "--config", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema_version"), "{}", stderr(&o));
}

#[test]
fn geometry_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_EVENTS);
    let other = write_config(tmp.path(), "o.toml", &SMALL_EVENTS.replace("time_count = 12", "time_count = 10"));
    let out = tmp.path().join("run");
    assert!(run(&["simulate", "--config", path_str(&cfg), "--out", path_str(&out)]).status.success());
    let o = run(&["reconstruct", "--config", path_str(&other), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("geometry mismatch"), "{}", stderr(&o));
}

#[test]
fn singular_gram_exits_with_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(shipped("morse_smeared_counts.toml"))
        .unwrap()
        .replace("regularization = \"tikhonov\"", "regularization = \"none\"");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let o = run(&["kernels", "--config", path_str(&cfg), "--out", path_str(&tmp.path().join("k"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("condition estimate"), "{}", stderr(&o));
}

#[test]
fn missing_files_are_io_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--config", path_str(&tmp.path().join("absent.toml"))]);
    assert_eq!(o.status.code(), Some(4));
    let cfg = write_config(tmp.path(), "c.toml", SMALL_EVENTS);
    let o = run(&["reconstruct", "--config", path_str(&cfg), "--dataset", path_str(&tmp.path().join("nowhere"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn events_reconstruction_reports_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("avg");
    let o = run(&["pipeline", "--config", path_str(&shipped("morse_time_averaged.toml")), "--out", path_str(&out), "--plots"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_rows(&out.join("comparison.csv"));
    assert_eq!(rows.len(), 13, "populations only");
    let max_z = toml_file(&out.join("result.toml"))["comparison"]["max_abs_z"].as_float().unwrap();
    assert!(max_z < 5.0, "{max_z}");
    assert!(stdout(&o).contains("max |z|"));
    assert!(out.join("populations.svg").exists());
}

#[test]
fn morse_events_configuration_runs_to_completion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("events");
    let o = run(&["simulate", "--config", path_str(&shipped("morse_events.toml")), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("600000 events at 120 times"), "{}", stdout(&o));
}
