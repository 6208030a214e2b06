use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use planted_forest::ForestModel;
use tempfile::TempDir;

fn rpf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpf")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

/// y = step in x1 plus a small x2 effect.
fn training_csv(dir: &TempDir) -> PathBuf {
    let mut text = String::from("x1,y,x2\n");
    for i in 0..60 {
        let x1 = i as f64 / 60.0;
        let x2 = ((i * 7) % 11) as f64 / 11.0;
        let y = if x1 > 0.5 { 2.0 } else { -1.0 } + 0.3 * x2 + 0.05 * ((i * 13) % 5) as f64;
        text.push_str(&format!("{x1},{y},{x2}\n"));
    }
    write(dir, "train.csv", &text)
}

fn fit(dir: &TempDir, data: &Path, extra: &[&str]) -> (PathBuf, Output) {
    let model = dir.path().join("model.json");
    let mut args = vec!["fit", "--data", path_str(data), "--out", path_str(&model), "--ntrees", "10", "--seed", "1"];
    args.extend_from_slice(extra);
    let out = rpf(&args);
    (model, out)
}

fn column(csv: &str, skip_header: bool) -> Vec<f64> {
    csv.lines().skip(usize::from(skip_header)).map(|l| l.parse().unwrap()).collect()
}

#[test]
fn fit_then_predict_round_trips() {
    let dir = TempDir::new().unwrap();
    let data = training_csv(&dir);
    let (model_path, out) = fit(&dir, &data, &["--max-interaction", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("training mse by iteration 0:"));

    let out = rpf(&["predict", "--model", path_str(&model_path), "--data", path_str(&data)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("prediction\n"));
    let predictions = column(&text, true);
    assert_eq!(predictions.len(), 60);

    let model = ForestModel::load(&model_path).unwrap();
    let dataset = planted_forest::Dataset::from_csv_path(&data).unwrap();
    let direct = model.predict_rows(dataset.rows());
    assert_eq!(predictions, direct);

    let y = dataset.y();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    let mse = y.iter().zip(&predictions).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64;
    assert!(mse < var);
}

#[test]
fn fits_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let data = training_csv(&dir);
    let (path, _) = fit(&dir, &data, &[]);
    let first = fs::read(&path).unwrap();
    let (path, _) = fit(&dir, &data, &[]);
    assert_eq!(first, fs::read(&path).unwrap());
}

#[test]
fn input_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let no_y = write(&dir, "no_y.csv", "a,b\n1,2\n3,4\n");
    let (_, out) = fit(&dir, &no_y, &[]);
    assert_eq!(out.status.code(), Some(2));
    let bad = write(&dir, "bad.csv", "x,y\n1,oops\n2,3\n");
    assert_eq!(fit(&dir, &bad, &[]).1.status.code(), Some(2));

    let data = training_csv(&dir);
    let (model, _) = fit(&dir, &data, &[]);
    let narrow = write(&dir, "narrow.csv", "x1\n0.2\n");
    let out = rpf(&["predict", "--model", path_str(&model), "--data", path_str(&narrow)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(rpf(&["simulate", "--model", "13"]).status.code(), Some(2));
    assert_eq!(rpf(&["simulate", "--model", "no-such-model"]).status.code(), Some(2));
    assert_eq!(rpf(&["fit", "--bogus"]).status.code(), Some(2));
}

#[test]
fn constant_predictor_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let flat = write(&dir, "flat.csv", "x,y\n0.5,1\n0.5,2\n0.5,3\n");
    assert_eq!(fit(&dir, &flat, &[]).1.status.code(), Some(3));
}

#[test]
fn four_point_model_predicts_one_at_015() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "four.csv", "x,y\n0.1,1\n0.2,1\n0.8,3\n0.9,3\n");
    let model = dir.path().join("m.json");
    let out = rpf(&[
        "fit", "--data", path_str(&data), "--out", path_str(&model), "--ntrees", "1", "--nsplits", "1",
        "--t-try", "1", "--split-try", "all", "--no-bootstrap",
    ]);
    assert!(out.status.success());
    let query = write(&dir, "q.csv", "x\n0.15\n");
    let out = rpf(&["predict", "--model", path_str(&model), "--data", path_str(&query)]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "prediction\n1.0\n");
}

fn parse_components(text: &str) -> Vec<(String, f64, f64, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let num = |s: &str| s.parse().unwrap_or(f64::NAN);
            (f[0].to_string(), num(f[1]), num(f[2]), num(f[5]))
        })
        .collect()
}

#[test]
fn additive_components_are_centered_and_sum_to_predictions() {
    let dir = TempDir::new().unwrap();
    let data = training_csv(&dir);
    let (model, _) = fit(&dir, &data, &[]);
    let out = rpf(&["components", "--model", path_str(&model)]);
    assert!(out.status.success());
    let rows = parse_components(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0].0, "constant");
    assert!(rows[1..].iter().all(|r| r.0 == "x1" || r.0 == "x2"));
    for name in ["x1", "x2"] {
        let cells: Vec<_> = rows.iter().filter(|r| r.0 == name).collect();
        let span = cells.last().unwrap().2 - cells[0].1;
        let mean: f64 = cells.iter().map(|r| (r.2 - r.1) * r.3).sum::<f64>() / span;
        assert!(mean.abs() < 1e-9, "{name}: {mean}");
    }

    // constant + components at probe points equals the model prediction
    let forest = ForestModel::load(&model).unwrap();
    let value = |name: &str, x: f64| {
        rows.iter()
            .find(|r| r.0 == name && r.1 < x && x <= r.2)
            .unwrap()
            .3
    };
    let ranges = forest.feature_ranges().to_vec();
    for i in 0..100 {
        let t = (i as f64 + 0.5) / 100.0;
        let x: Vec<f64> = ranges.iter().map(|r| r.min + t * (r.max - r.min)).collect();
        let total = rows[0].3 + value("x1", x[0]) + value("x2", x[1]);
        assert!((total - forest.predict(&x)).abs() < 1e-9);
    }
}

#[test]
fn interaction_components_and_grid_export() {
    let dir = TempDir::new().unwrap();
    let data = training_csv(&dir);
    let (model, _) = fit(&dir, &data, &["--max-interaction", "inf", "--nsplits", "40"]);
    let out = rpf(&["components", "--model", path_str(&model), "--order", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains("x1:x2"));
    let out = rpf(&["components", "--model", path_str(&model), "--grid-size", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("x1,")).count(), 5);
    assert_eq!(rpf(&["components", "--model", path_str(&model), "--order", "3"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = TempDir::new().unwrap();
    let data = training_csv(&dir);
    let config = write(&dir, "rpf.toml", "seed = 9\n[fit]\nntrees = 3\nnsplits = 5\n");
    let model = dir.path().join("c.json");
    let out = rpf(&["--config", path_str(&config), "fit", "--data", path_str(&data), "--out", path_str(&model), "--nsplits", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let forest = ForestModel::load(&model).unwrap();
    assert_eq!(forest.params().ntrees, 3);
    assert_eq!(forest.params().nsplits, 7);
    assert_eq!(forest.params().seed, 9);
    let broken = write(&dir, "broken.toml", "[fit]\nunknown = 1\n");
    let out = rpf(&["--config", path_str(&broken), "fit", "--data", path_str(&data), "--out", path_str(&model)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out_path = dir.path().join(name);
        let out = rpf(&[
            "simulate", "--model", "additive-sparse-smooth", "--n", "80", "--reps", "1", "--seed", "7",
            "--grid", "default", "--ntrees", "5", "--out", path_str(&out_path),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8(out.stdout).unwrap().contains("rpf additive"));
        fs::read_to_string(out_path).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(first, run("b.csv"));
    assert!(first.starts_with("model,shape,d,variant,params,rep,mse\n"));
}

#[test]
fn convergence_reports_medians_and_slope() {
    let out = rpf(&["convergence", "--n-list", "100,200,400", "--reps", "2", "--zero-signal", "--noise-sd", "0"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 7);
    for line in csv.lines().skip(1) {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[2], 0.0);
    }
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("n=100 median_sup_error_interior="));
    assert!(summary.contains("slope="));
}
