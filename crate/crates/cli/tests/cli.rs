use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gpbench::model::io;

fn gpbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpbench")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

const SIX: &str = "x1,y\n0.0,1\n0.2,0.3\n0.4,-0.5\n0.6,0.2\n0.8,0.9\n1.0,0.1\n";

#[test]
fn fit_then_predict_interpolates() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("train.csv"), SIX).unwrap();
    fs::write(p.join("points.csv"), "x1\n0.0\n0.2\n0.4\n0.6\n0.8\n1.0\n").unwrap();
    ok(&gpbench(&["fit", "--data", "train.csv", "--kernel", "gauss", "--nugget", "fixed:0", "--out", "m.txt"], p));
    assert!(p.join("m.txt.diagnostics.json").exists());
    assert!(p.join("m.txt.manifest.json").exists());
    ok(&gpbench(&["predict", "--model", "m.txt", "--points", "points.csv", "--out", "pred.csv"], p));
    let (header, rows) = read_csv(&p.join("pred.csv"));
    assert_eq!(header, ["x1", "yhat", "mse"]);
    let y = [1.0, 0.3, -0.5, 0.2, 0.9, 0.1];
    for (row, t) in rows.iter().zip(y) {
        assert!((row[1] - t).abs() < 1e-6, "{row:?}");
    }
}

#[test]
fn dlb_fit_interpolates_closely() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("train.csv"), SIX).unwrap();
    ok(&gpbench(&["fit", "--data", "train.csv", "--nugget", "dlb", "--param", "log10", "--out", "m.txt"], p));
    let model = io::load(&p.join("m.txt")).unwrap();
    for (i, t) in [1.0, 0.3, -0.5, 0.2, 0.9, 0.1].iter().enumerate() {
        assert!((model.predict_mean(&[0.2 * i as f64]) - t).abs() < 1e-3);
    }
}

#[test]
fn predictions_match_in_process_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("train.csv"), SIX).unwrap();
    fs::write(p.join("points.csv"), "x1\n0.05\n0.33\n0.71\n0.999\n").unwrap();
    ok(&gpbench(&["fit", "--data", "train.csv", "--kernel", "matern52", "--out", "m.txt"], p));
    ok(&gpbench(&["predict", "--model", "m.txt", "--points", "points.csv", "--out", "pred.csv"], p));
    let model = io::load(&p.join("m.txt")).unwrap();
    let (_, rows) = read_csv(&p.join("pred.csv"));
    for row in rows {
        let pr = model.predict(&row[..1]);
        assert_eq!(pr.mean.to_bits(), row[1].to_bits());
        assert_eq!(pr.mse.to_bits(), row[2].to_bits());
    }
}

#[test]
fn empty_points_give_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("train.csv"), SIX).unwrap();
    fs::write(p.join("points.csv"), "x1\n").unwrap();
    ok(&gpbench(&["fit", "--data", "train.csv", "--out", "m.txt"], p));
    ok(&gpbench(&["predict", "--model", "m.txt", "--points", "points.csv", "--out", "pred.csv"], p));
    assert_eq!(fs::read_to_string(p.join("pred.csv")).unwrap(), "x1,yhat,mse\n");
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bad.csv"), "x1,y\n0.1,2\n0.2,3\n0.3,oops\n").unwrap();
    let out = gpbench(&["fit", "--data", "bad.csv", "--out", "m.txt"], p);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:4"));

    fs::write(p.join("train.csv"), SIX).unwrap();
    assert_eq!(code(&gpbench(&["fit", "--data", "train.csv", "--kernel", "pexp:2.5", "--out", "m"], p)), 2);
    assert_eq!(code(&gpbench(&["fit", "--data", "train.csv", "--nugget", "lots", "--out", "m"], p)), 2);
    assert_eq!(code(&gpbench(&["fit", "--data", "missing.csv", "--out", "m"], p)), 2);
    assert_eq!(code(&gpbench(&["fit"], p)), 2);

    ok(&gpbench(&["fit", "--data", "train.csv", "--out", "m.txt"], p));
    fs::write(p.join("pts2.csv"), "x1,x2\n0.1,0.2\n").unwrap();
    assert_eq!(code(&gpbench(&["predict", "--model", "m.txt", "--points", "pts2.csv", "--out", "o.csv"], p)), 2);

    let out = gpbench(&["benchmark", "--function", "nope", "--n", "10", "--out", "b"], p);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("borehole"));
    let out = gpbench(&["benchmark", "--function", "otl", "--n", "10", "--profiles", "bogus", "--out", "b"], p);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("gauss-nugE"));
    assert_eq!(code(&gpbench(&["sk-mm1", "--n2", "6", "--out", "s"], p)), 2);
}

#[test]
fn constant_output_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("flat.csv"), "x1,x2,y\n0.1,0.2,5\n0.5,0.9,5\n0.8,0.3,5\n").unwrap();
    ok(&gpbench(&["fit", "--data", "flat.csv", "--out", "m.txt"], p));
    let diag = fs::read_to_string(p.join("m.txt.diagnostics.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&diag).unwrap();
    assert_eq!(v["degenerate"], true);
}

#[test]
fn design_and_function_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&gpbench(&["gen-design", "--n", "16", "--d", "4", "--seed", "3", "--out", "d.csv"], p));
    let (header, rows) = read_csv(&p.join("d.csv"));
    assert_eq!(header, ["x1", "x2", "x3", "x4"]);
    for k in 0..4 {
        let mut cells: Vec<usize> = rows.iter().map(|r| (r[k] * 16.0).floor() as usize).collect();
        cells.sort();
        assert_eq!(cells, (0..16).collect::<Vec<_>>());
    }
    ok(&gpbench(&["eval-fn", "--function", "borehole", "--points", "d.csv", "--out", "y.csv"], p));
    let (header, rows) = read_csv(&p.join("y.csv"));
    assert_eq!(header.last().unwrap(), "y");
    let f = gpbench::testbed::lookup("borehole", Some(4)).unwrap();
    for r in rows {
        assert_eq!(r[4], f.eval(&r[..4]));
    }
}

fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            [&f[..11], &f[13..]].concat().join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn benchmark_is_deterministic_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let run = |out: &str, jobs: &str| {
        let args = [
            "benchmark", "--function", "otl", "--n", "14", "--m", "100", "--macroreps", "3", "--profiles",
            "gauss-nugE,gauss-nug6,pexp195-dlb", "--seed", "11", "--jobs", jobs, "--out", out,
        ];
        ok(&gpbench(&args, p));
        fs::read_to_string(p.join(out).join("results.csv")).unwrap()
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "8");
    assert_eq!(strip_timing(&a), strip_timing(&b));
    assert_eq!(strip_timing(&a), strip_timing(&c));
    assert_eq!(
        a.lines().next().unwrap(),
        "function,d,n,profile,macrorep,seed,emrmse_gp,emrmse_lm,pmrmse_gp,xi,pi,fit_seconds,predict_seconds,warnings"
    );
    assert_eq!(a.lines().count(), 1 + 9);
    assert_eq!(fs::read(p.join("a/plot_data.csv")).unwrap(), fs::read(p.join("c/plot_data.csv")).unwrap());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "benchmark");
    assert_eq!(manifest["flags"]["seed"], 11);
}

#[test]
fn sk_mm1_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let run = |out: &str| {
        let args =
            ["sk-mm1", "--n2", "100", "--macroreps", "2", "--customers", "5000", "--seed", "4", "--out", out];
        ok(&gpbench(&args, p));
        fs::read_to_string(p.join(out).join("results.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a.lines().count(), 1 + 2 * 3);
    assert!(a.lines().skip(1).all(|l| l.starts_with("mm1,1,100,")));
    assert_eq!(strip_timing(&a), strip_timing(&run("b")));
}
