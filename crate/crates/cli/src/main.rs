//! Command-line front end: simulate data, decompose it, project new data onto
//! a learned basis, and compare two tensors.
//!
//! Exit codes: 0 on success, 1 on invalid input or configuration, 2 when a
//! solver stopped without meeting its tolerance.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use otfactor::eval::{normalize_columns, relative_frobenius};
use otfactor::io::{read_factor_csv, write_factor_csv};
use otfactor::ot::loss_value;
use otfactor::{
    atom_match_score, block_coordinate_descent, export_model, export_trace, import_model, project_onto_basis,
    read_tensor, reconstruction_metrics, write_tensor, Block, Error, RunConfig,
};

#[derive(Parser)]
#[command(name = "otfactor", version, about = "Wasserstein tensor factorisation")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from the [simulate] section of a config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a CP or Tucker model by block coordinate descent.
    Decompose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for one block on new data with every other block of a model fixed.
    Project {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// 0 for the core, k for factor k.
        #[arg(long)]
        block: usize,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the config.toml stored with the model.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the transport loss and Frobenius distance between two tensors.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        data2: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
}

enum Outcome {
    Done,
    /// Finished, but a solver flagged non-convergence.
    NotConverged(String),
}

/// Ground-truth atom file written next to a simulated dataset, mode `k` 0-based.
fn truth_path(data: &Path, k: usize) -> PathBuf {
    let mut name = data.as_os_str().to_owned();
    name.push(format!(".truth_{}.csv", k + 1));
    PathBuf::from(name)
}

fn simulate(config: &Path, out: &Path) -> otfactor::Result<Outcome> {
    let cfg = RunConfig::load(config)?;
    let sim = cfg.simulate()?;
    write_tensor(&sim.data, out)?;
    for (k, atoms) in sim.truth.iter().enumerate() {
        if let Some(m) = atoms {
            write_factor_csv(m, truth_path(out, k))?;
        }
    }
    println!("wrote {} tensor of shape {:?}", out.display(), sim.data.shape());
    Ok(Outcome::Done)
}

fn decompose(config: &Path, data: &Path, out: &Path) -> otfactor::Result<Outcome> {
    let cfg = RunConfig::load(config)?;
    let x = read_tensor(data)?;
    let spec = cfg.model_spec()?;
    spec.validate(x.shape())?;
    let solver = cfg.solver_config(x.shape())?;
    let (model, trace) = block_coordinate_descent(&x, &spec, &solver)?;

    fs::create_dir_all(out)?;
    export_model(&model, out)?;
    export_trace(&trace, out.join("trace.csv"))?;
    fs::write(out.join("config.toml"), cfg.to_toml()?)?;

    let metrics = reconstruction_metrics(&x, &model, &solver.loss, &solver.monitor)?;
    let objectives = trace.sweep_objectives();
    let mut text = String::new();
    let _ = writeln!(text, "sweeps: {}", trace.sweeps);
    let _ = writeln!(text, "converged: {}", trace.converged());
    let _ = writeln!(text, "objective: {:.16e}", objectives.last().copied().unwrap_or(f64::NAN));
    let _ = writeln!(text, "frobenius_rel_error: {:.16e}", metrics.frobenius_rel_error);
    let _ = writeln!(text, "monitored_loss: {:.16e}", metrics.monitored_loss);
    let _ = writeln!(text, "seconds: {:.3}", trace.records.last().map_or(0.0, |r| r.seconds));
    let mut worst: Option<f64> = None;
    for (k, factor) in model.factors.iter().enumerate() {
        let path = truth_path(data, k);
        if !path.exists() {
            continue;
        }
        let truth = read_factor_csv(&path)?;
        if truth.rows() != factor.rows() || truth.cols() != factor.cols() {
            info!("skipping {}: shape differs from factor {}", path.display(), k + 1);
            continue;
        }
        let m = atom_match_score(&normalize_columns(factor), &truth)?;
        let list: Vec<String> = m.distances.iter().map(|d| format!("{d:.6}")).collect();
        let _ = writeln!(text, "atom_tv_mode_{}: [{}]", k + 1, list.join(", "));
        worst = Some(worst.unwrap_or(0.0).max(m.worst()));
    }
    if let Some(w) = worst {
        let _ = writeln!(text, "atom_tv_worst: {w:.6}");
    }
    fs::write(out.join("metrics.txt"), &text)?;

    if solver.outer_iters > 0 && !trace.converged() {
        return Ok(Outcome::NotConverged(format!(
            "decompose stopped after {} sweeps without meeting its tolerances; results written to {}",
            trace.sweeps,
            out.display()
        )));
    }
    println!("{} sweeps, objective {:.10e}; wrote {}", trace.sweeps, objectives.last().unwrap_or(&f64::NAN), out.display());
    Ok(Outcome::Done)
}

fn project(model_dir: &Path, data: &Path, block: usize, out: &Path, config: Option<&Path>) -> otfactor::Result<Outcome> {
    let cfg_path = config.map(Path::to_path_buf).unwrap_or_else(|| model_dir.join("config.toml"));
    let cfg = RunConfig::load(&cfg_path)?;
    let model = import_model(model_dir)?;
    let x = read_tensor(data)?;
    if block > model.order() {
        return Err(Error::ModeOutOfRange { mode: block, order: model.order() });
    }
    let which = if block == 0 { Block::Core } else { Block::Factor(block - 1) };
    let solver = cfg.solver_config(x.shape())?;
    let p = project_onto_basis(&x, &model, which, &solver, None)?;
    write_tensor(&p.block, out)?;
    if !p.inner.converged {
        return Ok(Outcome::NotConverged(format!(
            "projection onto {which} stopped at gradient norm {:e} after {} iterations; result written to {}",
            p.inner.grad_norm,
            p.inner.iterations,
            out.display()
        )));
    }
    println!("projected onto {which} in {} iterations; wrote {}", p.inner.iterations, out.display());
    Ok(Outcome::Done)
}

fn evaluate(a: &Path, b: &Path, config: &Path) -> otfactor::Result<Outcome> {
    let cfg = RunConfig::load(config)?;
    let x = read_tensor(a)?;
    let y = read_tensor(b)?;
    x.require_same_shape(&y)?;
    let loss = cfg.loss_spec(x.shape())?;
    let opts = otfactor::SinkhornOptions { tol: cfg.monitor.tol, max_iter: cfg.monitor.max_iter };
    let ot = loss_value(&x, &y, &loss, &opts)?;
    let frobenius = relative_frobenius(&x, &y)? * x.frobenius_norm();
    println!("ot_value: {:.16e}", ot.value);
    println!("frobenius: {frobenius:.16e}");
    if !ot.converged {
        return Ok(Outcome::NotConverged(format!(
            "sinkhorn stopped at residual {:e} after {} iterations",
            ot.residual, ot.iterations
        )));
    }
    Ok(Outcome::Done)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } | Error::NonFinite(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Simulate { config, out } => simulate(config, out),
        Command::Decompose { config, data, out } => decompose(config, data, out),
        Command::Project { model, data, block, out, config } => project(model, data, *block, out, config.as_deref()),
        Command::Evaluate { data, data2, config } => evaluate(data, data2, config),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
