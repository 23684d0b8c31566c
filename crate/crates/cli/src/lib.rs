//! Command-line front end: bundle I/O, reduction, bounds, simulation and comparison reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod mtx;
pub mod spec;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::json;
use shiftbt::balanced::gramian_factors;
use shiftbt::bounds::{bound_for, Orders};
use shiftbt::harness::{
    construct_example, reduce_method, run_comparison, smooth, BetaSpec, ExperimentConfig, MethodSpec,
};
use shiftbt::linalg::spectral_abscissa;
use shiftbt::lti::default_horizon;
use shiftbt::params::{alpha_sweep, heuristic_beta, log_space, precompute_blocks};
use shiftbt::rom::{rom_output, Method, ReducedModel, Rom};
use shiftbt::{LtiSystem, PiecewiseConstantInput, TimeGrid, Trajectory};

use crate::bundle::{read_rom, read_system, write_rom, RomMeta};
use crate::config::{CompareConfig, DEFAULT_HORIZON_CAP};
pub use crate::error::CliError;
use crate::fsutil::write_atomic;

#[derive(Debug, Parser)]
#[command(name = "shiftbt", version, about = "Balanced truncation for systems with nonzero initial values")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce a system and write the reduced bundle.
    Reduce(ReduceArgs),
    /// Print error-bound constants as JSON lines.
    Bounds(BoundsArgs),
    /// Simulate a system (and optionally a reduced model) and write a CSV table.
    Simulate(SimulateArgs),
    /// Run a comparison experiment described by a TOML file.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// bt | trlbt | augbt | btbt | jshift | sshift
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub order: Option<usize>,
    /// K,L for separate-projection methods
    #[arg(long)]
    pub orders: Option<String>,
    /// heur-fro | heur-spec | sample | optimize | VALUE
    #[arg(long, default_value = "optimize")]
    pub alpha: String,
    /// VALUE, heur, or a comma-separated list of them
    #[arg(long, default_value = "1")]
    pub beta: String,
    /// Input signal file (lines `t,u1,...,um`); needed for `--beta heur`
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Initial-value coordinates, comma separated
    #[arg(long)]
    pub z0: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub common: MethodArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: MethodArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// Reduced bundle; the output then holds the error norm
    #[arg(long)]
    pub rom: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub z0: Option<String>,
    /// STEP,HORIZON (HORIZON may be `auto`)
    #[arg(long, default_value = "0.01,auto")]
    pub grid: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Reduce(args) => cmd_reduce(&args),
        Command::Bounds(args) => cmd_bounds(&args, &mut std::io::stdout().lock()),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Compare(args) => cmd_compare(&args),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Loaded {
    sys: LtiSystem,
    method: Method,
    orders: Orders,
    z0: DVector<f64>,
    betas: Vec<Option<f64>>,
}

fn read_input(path: Option<&Path>, m: usize) -> Result<PiecewiseConstantInput, CliError> {
    let Some(path) = path else {
        return Ok(PiecewiseConstantInput::zero(m));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let u = spec::input(&text)?;
    if u.dim() != m {
        return Err(CliError::Usage(format!("input has {} channels, system has {m}", u.dim())));
    }
    Ok(u)
}

fn read_z0(s: Option<&str>, q: usize) -> Result<DVector<f64>, CliError> {
    let z0 = match s {
        Some(s) => spec::vector(s)?,
        None => DVector::zeros(q),
    };
    if z0.len() != q {
        return Err(CliError::Usage(format!("z0 has length {}, system has q = {q}", z0.len())));
    }
    Ok(z0)
}

fn load(args: &MethodArgs) -> Result<Loaded, CliError> {
    let method: Method = args.method.parse().map_err(|e: shiftbt::Error| CliError::Usage(e.to_string()))?;
    let orders = spec::orders(method, args.order, args.orders.as_deref())?;
    let sys = read_system(&args.system)?.system;
    let u = read_input(args.input.as_deref(), sys.inputs())?;
    let z0 = read_z0(args.z0.as_deref(), sys.initial_dim())?;
    let mut betas = Vec::new();
    for b in spec::betas(&args.beta)? {
        betas.push(Some(match b {
            BetaSpec::Value(v) => v,
            BetaSpec::Heuristic => heuristic_beta(u.l2_norm()?, z0.norm())?,
        }));
    }
    Ok(Loaded { sys, method, orders, z0, betas })
}

fn reduce_all(l: &Loaded, alpha: &str) -> Result<Vec<shiftbt::harness::Reduction>, CliError> {
    let alpha = spec::alpha(alpha)?;
    let factors = gramian_factors(&l.sys)?;
    let blocks = precompute_blocks(&factors, &l.sys.a)?;
    let spec = MethodSpec { method: l.method, orders: l.orders };
    let betas = if l.method == Method::JShiftBt { l.betas.clone() } else { vec![None] };
    betas.into_iter().map(|beta| Ok(reduce_method(&l.sys, &factors, &blocks, &spec, beta, alpha, &l.z0)?)).collect()
}

pub fn cmd_reduce(args: &ReduceArgs) -> Result<(), CliError> {
    let loaded = load(&args.common)?;
    if loaded.betas.len() != 1 {
        return Err(CliError::Usage("reduce takes a single beta".into()));
    }
    let red = reduce_all(&loaded, &args.common.alpha)?.remove(0);
    let (sigma, theta) = match &red.model {
        ReducedModel::Separate(s) => (s.sigma.clone(), s.theta.clone()),
        ReducedModel::Joint(_) => (vec![], vec![]),
    };
    let rom = red.model.to_rom();
    let meta = RomMeta {
        method: loaded.method.to_string(),
        orders: loaded.orders.to_string(),
        alpha: red.alpha,
        beta: red.beta,
        hsv: rom.hsv.clone(),
        sigma,
        theta,
        alpha_trace: red.alpha_trace.iter().map(|&(a, c)| [a, c]).collect(),
    };
    write_rom(&args.out, &rom, &meta)
}

pub fn cmd_bounds(args: &BoundsArgs, out: &mut impl std::io::Write) -> Result<(), CliError> {
    let loaded = load(&args.common)?;
    if loaded.method == Method::TrlBt {
        return Err(CliError::Usage("trlbt has no error bound".into()));
    }
    for red in reduce_all(&loaded, &args.common.alpha)? {
        let b = bound_for(&loaded.sys, &red.model).expect("method has a bound")?;
        let mut record = json!({
            "method": loaded.method.name(),
            "alpha": red.alpha,
            "beta": red.beta,
            "c_u": b.c_u,
            "c_x0": b.c_x0,
        });
        match loaded.orders {
            Orders::Joint(r) => record["r"] = json!(r),
            Orders::Separate { k, l } => {
                record["k"] = json!(k);
                record["l"] = json!(l);
            }
        }
        writeln!(out, "{record}").map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

fn trajectory_csv(header: &str, traj: &Trajectory) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for (k, t) in traj.grid().times().enumerate() {
        s.push_str(&num(t));
        for v in traj.samples().column(k).iter() {
            s.push(',');
            s.push_str(&num(*v));
        }
        s.push('\n');
    }
    s
}

fn decay(a: &nalgebra::DMatrix<f64>) -> Result<Option<f64>, CliError> {
    if a.nrows() == 0 {
        return Ok(None);
    }
    Ok(Some(-spectral_abscissa(a)?))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let sys = read_system(&args.system)?.system;
    let u = read_input(args.input.as_deref(), sys.inputs())?;
    let z0 = read_z0(args.z0.as_deref(), sys.initial_dim())?;
    let (step, horizon) = spec::grid(&args.grid)?;
    let rom: Option<Rom> = args.rom.as_deref().map(read_rom).transpose()?.map(|(r, _)| r);
    let horizon = match horizon {
        Some(h) => h,
        None => {
            let mut rate = decay(&sys.a)?.unwrap_or(1.0);
            if let Some(rom) = &rom {
                rate = rate.min(decay(&rom.a)?.unwrap_or(rate));
                if let Some(a) = rom.alpha.filter(|a| *a > 0.0) {
                    rate = rate.min(a);
                }
            }
            if !(rate > 0.0) {
                return Err(shiftbt::Error::NotStable { abscissa: -rate }.into());
            }
            default_horizon(-rate, u.last_breakpoint(), DEFAULT_HORIZON_CAP)
        }
    };
    let grid = TimeGrid::covering(horizon, step)?;
    let y = sys.simulate_z0(&u, &z0, &grid)?;
    let text = match &rom {
        None => {
            let header: Vec<String> =
                std::iter::once("t".to_string()).chain((1..=sys.outputs()).map(|i| format!("y{i}"))).collect();
            trajectory_csv(&header.join(","), &y)
        }
        Some(rom) => {
            let yr = rom_output(rom, &u, &z0, &grid)?;
            let norms = y.difference(&yr)?.pointwise_norms();
            let e = Trajectory::new(grid, nalgebra::DMatrix::from_row_slice(1, norms.len(), &norms))?;
            trajectory_csv("t,error", &e)
        }
    };
    write_atomic(&args.out, text.as_bytes())
}

fn row_tag(method: Method, orders: Orders, beta: Option<f64>) -> String {
    let mut tag = format!("{}_{}", method.name(), orders.to_string().replace(',', "-"));
    if method == Method::JShiftBt {
        if let Some(b) = beta {
            tag.push_str(&format!("_beta{b:e}"));
        }
    }
    tag
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let cfg = CompareConfig::load(&args.config)?;
    let methods = cfg.method_specs()?;
    if methods.is_empty() && cfg.sweep.is_none() {
        return Err(CliError::Usage("config lists no methods and no sweep".into()));
    }
    if cfg.smoothing % 2 == 0 {
        return Err(CliError::Usage(format!("smoothing window must be odd, got {}", cfg.smoothing)));
    }
    let mut sys = read_system(&cfg.system)?.system;
    if let Some(kind) = cfg.example()? {
        sys = construct_example(kind, &sys)?;
    }
    let experiment = ExperimentConfig {
        methods,
        betas: cfg.beta_specs()?,
        alpha: cfg.alpha_mode()?,
        input: cfg.input_signal(sys.inputs())?,
        z0: cfg.z0_vector(sys.initial_dim())?,
        step: cfg.step,
        horizon: cfg.horizon,
        horizon_cap: cfg.horizon_cap,
    };

    if let Some(sweep) = &cfg.sweep {
        let blocks = precompute_blocks(&gramian_factors(&sys)?, &sys.a)?;
        let alphas = log_space(10f64.powi(sweep.jmin), 10f64.powi(sweep.jmax), sweep.points);
        let mut text = String::from("alpha,c_u\n");
        for (a, c) in alpha_sweep(&blocks, sweep.order, sweep.beta, &alphas)? {
            let _ = writeln!(text, "{},{}", num(a), num(c));
        }
        write_atomic(&args.out.join("alpha_sweep.csv"), text.as_bytes())?;
    }
    if experiment.methods.is_empty() {
        return Ok(());
    }

    let report = run_comparison(&sys, &experiment)?;
    let mut table =
        String::from("method,orders,alpha,beta,c_u,c_x0,bound,l2_error,linf_error,violation,seconds,error\n");
    for row in &report.rows {
        let _ = writeln!(
            table,
            "{},\"{}\",{},{},{},{},{},{},{},{},{},\"{}\"",
            row.method.name(),
            row.orders,
            opt_num(row.alpha),
            opt_num(row.beta),
            opt_num(row.bound.map(|b| b.c_u)),
            opt_num(row.bound.map(|b| b.c_x0)),
            opt_num(row.bound_value),
            opt_num(row.l2_error),
            opt_num(row.linf_error),
            row.violation,
            num(row.seconds),
            row.error.as_deref().unwrap_or("").replace('"', "'"),
        );
        if let Some(traj) = &row.trajectory {
            let smoothed = smooth(traj, cfg.smoothing)?;
            let name = format!("{}.csv", row_tag(row.method, row.orders, row.beta));
            write_atomic(&args.out.join("trajectories").join(name), trajectory_csv("t,error", &smoothed).as_bytes())?;
        }
    }
    write_atomic(&args.out.join("report.csv"), table.as_bytes())?;
    if report.rows.iter().all(|r| r.error.is_some() && r.l2_error.is_none()) {
        return Err(CliError::Failed("every method failed".into()));
    }
    Ok(())
}

/// Flushes stdout and maps the result to a process exit code, reporting errors on stderr.
pub fn exit_code(result: Result<(), CliError>) -> i32 {
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
