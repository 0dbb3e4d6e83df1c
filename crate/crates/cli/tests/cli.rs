use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use otfactor::{import_model, read_tensor, write_tensor, DenseTensor};

fn otfactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otfactor")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"
[loss]
epsilon = 0.1
lambda = 5.0

[model]
kind = "tucker"
ranks = [2, 2, 2]
core_constraint = "simplex"
factor_constraints = ["column"]

[solver]
rho = 1e-2
outer_iters = 40
outer_tol = 1e-4

[simulate]
recipe = "mixture"
n = 6
components = 2
samples = 5000
seed = 3
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_decompose_project_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let data = dir.path().join("data.wtf");
    let out = otfactor(&["simulate", "--config", path(&cfg), "--out", path(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let x = read_tensor(&data).unwrap();
    assert_eq!(x.shape(), &[6, 6, 6]);
    assert!(dir.path().join("data.wtf.truth_1.csv").exists());

    let model = dir.path().join("model");
    let out = otfactor(&["decompose", "--config", path(&cfg), "--data", path(&data), "--out", path(&model)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(model.join("metrics.txt")).unwrap();
    assert!(metrics.contains("atom_tv_mode_1: ["), "{metrics}");
    assert!(metrics.contains("atom_tv_worst: "));
    assert!(model.join("trace.csv").exists() && model.join("core.wtf").exists());

    let coeffs = dir.path().join("core.wtf");
    let out = otfactor(&["project", "--model", path(&model), "--data", path(&data), "--block", "0", "--out", path(&coeffs)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let projected = read_tensor(&coeffs).unwrap();
    let learned = import_model(&model).unwrap().core;
    let gap = projected.data().iter().zip(learned.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-4, "projected core differs by {gap}");

    let out = otfactor(&["evaluate", "--data", path(&data), "--data2", path(&data), "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("frobenius: 0.0000000000000000e0"), "{text}");
    let ot: f64 = text.lines().find_map(|l| l.strip_prefix("ot_value: ")).unwrap().parse().unwrap();
    // the diagonal coupling moves nothing, so only its entropy counts; no
    // unit-mass coupling on N cells has entropy below -(ln N + 1)
    let eps = 0.1;
    let diagonal: f64 = eps * x.data().iter().filter(|&&v| v > 0.0).map(|&v| v * (v.ln() - 1.0)).sum::<f64>();
    let floor = -eps * (((x.len() * x.len()) as f64).ln() + 1.0);
    assert!(ot <= diagonal + 1e-9 && ot >= floor, "{ot} outside [{floor}, {diagonal}]");
}

#[test]
fn identical_runs_export_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("outer_iters = 40", "outer_iters = 3"));
    let data = dir.path().join("data.wtf");
    assert!(otfactor(&["simulate", "--config", path(&cfg), "--out", path(&data)]).status.code().is_some());
    let first = read_tensor(&data).unwrap();
    assert!(otfactor(&["simulate", "--config", path(&cfg), "--out", path(&data)]).status.success());
    assert_eq!(read_tensor(&data).unwrap(), first);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        otfactor(&["decompose", "--config", path(&cfg), "--data", path(&data), "--out", path(out)]);
    }
    for f in ["factor_1.csv", "factor_2.csv", "factor_3.csv", "core.wtf", "model.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn zero_sweeps_write_the_initialisation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("outer_iters = 40", "outer_iters = 0"));
    let data = dir.path().join("data.wtf");
    assert!(otfactor(&["simulate", "--config", path(&cfg), "--out", path(&data)]).status.success());
    let model = dir.path().join("model");
    let out = otfactor(&["decompose", "--config", path(&cfg), "--data", path(&data), "--out", path(&model)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(model.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1);
    let m = import_model(&model).unwrap();
    let x = read_tensor(&data).unwrap();
    let spec = otfactor::RunConfig::load(&cfg).unwrap().model_spec().unwrap();
    assert_eq!(m, otfactor::solver::initialize(&x, &spec, otfactor::Init::Nnsvd).unwrap());
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.wtf");
    write_tensor(&DenseTensor::from_elem(&[3, 3, 3], 1.0 / 27.0).unwrap(), &data).unwrap();
    for (bad, needle) in [
        (SMALL.replace("epsilon = 0.1", "epsilon = -1.0"), "epsilon must be positive"),
        (SMALL.replace("lambda = 5.0", "lambda = 0.0"), "lambda must be positive"),
        (SMALL.replace("rho = 1e-2", "rho = 0.0"), "rho must be positive"),
        (SMALL.replace("[\"column\"]", "[\"diagonal\"]"), "unknown constraint name"),
        (SMALL.replace("seed = 3", "seed = 3\ncolour = 1"), "unknown field"),
    ] {
        let cfg = write_config(dir.path(), &bad);
        let out = otfactor(&["decompose", "--config", path(&cfg), "--data", path(&data), "--out", path(dir.path())]);
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(1), "{err}");
        assert!(err.contains(needle), "{err}");
        assert_eq!(err.trim().lines().count(), 1, "{err}");
    }
    let cfg = write_config(dir.path(), &SMALL.replace("ranks = [2, 2, 2]", "ranks = [4, 2, 2]"));
    let out = otfactor(&["decompose", "--config", path(&cfg), "--data", path(&data), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible rank"));

    fs::write(&data, "not a tensor\n").unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = otfactor(&["decompose", "--config", path(&cfg), "--data", path(&data), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad magic"));
}

#[test]
fn non_convergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("outer_iters = 40", "outer_iters = 1"));
    let data = dir.path().join("data.wtf");
    assert!(otfactor(&["simulate", "--config", path(&cfg), "--out", path(&data)]).status.success());
    let model = dir.path().join("model");
    let out = otfactor(&["decompose", "--config", path(&cfg), "--data", path(&data), "--out", path(&model)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(model.join("metrics.txt").exists());

    let tight = write_config(dir.path(), &SMALL.replace("[loss]", "[monitor]\nmax_iter = 1\n\n[loss]"));
    let out = otfactor(&["evaluate", "--data", path(&data), "--data2", path(&data), "--config", path(&tight)]);
    assert_eq!(out.status.code(), Some(2));
}
