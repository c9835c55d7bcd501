//! `opinion` command-line front end.
//!
//! Every run resolves a [`RunConfig`] from, in order, the built-in defaults,
//! `--config FILE`, each `--set key=value` and the convenience flags, then
//! writes its outputs and the resolved `config.txt` into
//! `<root>/<subcommand>`. The root is `--out`, the config's `output` key,
//! `$OPINION_OUT` or `opinion-out`, first match wins.
//!
//! Trajectory CSVs carry `step,tau,t,norm2,mean,maxabs` and, for chains of at
//! most 64 agents, one `y_<label>` column per agent.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4
//! optimizer stopped before convergence (outputs are still written), 1 I/O.
//! Failures end with a single JSON line on stderr.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use opinion_core::dynamics::{integrate, ControlSignal, IntegrateOptions, System, Trajectory};
use opinion_core::experiments::{
    evaluate_bounds, fit_cost_growth, regime_records, run_scaling_sweep, SweepRecord,
};
use opinion_core::io::{
    agent_lines, cost_vs_n, heatline, read_numeric_table, write_control, write_json, write_sweep,
    write_trajectory, CostSeries, ResultMetadata, RunConfig,
};
use opinion_core::network::{extension_half_width, kalman_rank, ChainOperator, ControlLayout};
use opinion_core::synthesis::{minimize, synthesize_boundary_via_extension, ControlProblem, SynthesisResult};
use opinion_core::Error;

pub const OUTPUT_ENV: &str = "OPINION_OUT";
const DEFAULT_ROOT: &str = "opinion-out";

#[derive(Debug, Parser)]
#[command(name = "opinion", version, about = "Consensus control of opinion dynamics on a chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the chain, optionally driven by a control CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Control table as written by `control` (`u_*` columns, frame units).
        #[arg(long)]
        control: Option<PathBuf>,
    },
    /// Minimise the terminal cost plus control penalty.
    Control {
        #[command(flatten)]
        common: Common,
    },
    /// Two boundary controls through the extended chain.
    Extend {
        #[command(flatten)]
        common: Common,
    },
    /// Control cost against N for each scaling regime.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Kalman rank for each requested chain size.
    Kalman {
        #[command(flatten)]
        common: Common,
    },
    /// Constants of the cost and remainder bounds.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// The 45-agent reference run: free and controlled trajectories.
    ReproduceExperiment {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Control { .. } => "control",
            Command::Extend { .. } => "extend",
            Command::Sweep { .. } => "sweep",
            Command::Kalman { .. } => "kalman",
            Command::Bounds { .. } => "bounds",
            Command::ReproduceExperiment { .. } => "reproduce-experiment",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Control { common }
            | Command::Extend { common }
            | Command::Sweep { common }
            | Command::Kalman { common }
            | Command::Bounds { common }
            | Command::ReproduceExperiment { common } => common,
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output root.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Chain size; a list or range such as `2..8` for `kalman` and `sweep`.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    flavor: Option<String>,
    #[arg(long)]
    layout: Option<String>,
    #[arg(long = "T")]
    horizon: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    ginf: Option<String>,
    #[arg(long = "C0")]
    c0: Option<String>,
    #[arg(long = "C1")]
    c1: Option<String>,
    #[arg(long = "Cbeta")]
    c_beta: Option<String>,
}

/// A failed run: exit code, short kind tag and message.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub status: &'static str,
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl Failure {
    fn io(e: std::io::Error) -> Self {
        Failure {
            status: "error",
            kind: "io",
            exit_code: 1,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (kind, exit_code) = match &e {
            Error::Config { .. } => ("config", 2),
            Error::InvalidDimension(_)
            | Error::Layout(_)
            | Error::Nonlinearity(_)
            | Error::DimensionMismatch(_)
            | Error::Frame(_)
            | Error::Domain(_) => ("invalid-input", 2),
            Error::Divergence { .. } => ("divergence", 3),
            Error::InsufficientData(_) | Error::EmptyData(_) => ("numerical", 3),
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => ("io", 1),
        };
        Failure {
            status: "error",
            kind,
            exit_code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Outcome of a completed subcommand.
struct Done {
    converged: bool,
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            if !usage {
                return 0;
            }
            report(&Failure {
                status: "error",
                kind: "usage",
                exit_code: 2,
                message: e.kind().to_string(),
            });
            return 2;
        }
    };
    match dispatch(&cli.command) {
        Ok(Done { converged: true }) => 0,
        Ok(Done { converged: false }) => {
            report(&Failure {
                status: "not-converged",
                kind: "optimizer",
                exit_code: 4,
                message: "optimizer stopped before reaching the gradient tolerance; outputs written".into(),
            });
            4
        }
        Err(f) => {
            report(&f);
            f.exit_code
        }
    }
}

fn report(f: &Failure) {
    eprintln!("{}", serde_json::to_string(f).expect("plain struct"));
}

fn base_config(command: &Command) -> RunConfig {
    match command {
        Command::ReproduceExperiment { .. } => RunConfig {
            n: 45,
            horizon: 2.0,
            beta: 1e-15,
            max_iters: 300,
            ..RunConfig::default()
        },
        _ => RunConfig::default(),
    }
}

fn resolve_config(command: &Command) -> CliResult<RunConfig> {
    let common = command.common();
    let mut cfg = base_config(command);
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::from(Error::Io(e)))
            .map_err(|mut f| {
                f.kind = "config";
                f.exit_code = 2;
                f.message = format!("{}: {}", path.display(), f.message);
                f
            })?;
        cfg = cfg.apply_document(&text)?;
    }
    for pair in &common.set {
        cfg = cfg.apply_document(pair)?;
    }
    let sweep = matches!(command, Command::Sweep { .. });
    let n_key = match command {
        Command::Kalman { .. } => "kalman_n",
        Command::Sweep { .. } => "sweep_n",
        _ => "n",
    };
    let flags = [
        (n_key, &common.n),
        (if sweep { "sweep_flavor" } else { "flavor" }, &common.flavor),
        (if sweep { "sweep_layout" } else { "layout" }, &common.layout),
        ("T", &common.horizon),
        ("beta", &common.beta),
        ("g_inf", &common.ginf),
        ("C0", &common.c0),
        ("C1", &common.c1),
        ("C_beta", &common.c_beta),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg = cfg.apply_document(&format!("{key} = {v}"))?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_root(common: &Common, cfg: &RunConfig) -> PathBuf {
    if let Some(out) = &common.out {
        return out.clone();
    }
    if let Some(out) = cfg.output.as_deref().filter(|s| !s.is_empty()) {
        return PathBuf::from(out);
    }
    match std::env::var_os(OUTPUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_ROOT),
    }
}

fn dispatch(command: &Command) -> CliResult<Done> {
    let cfg = resolve_config(command)?;
    let dir = output_root(command.common(), &cfg).join(command.name());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.txt"), cfg.to_document())?;
    let done = match command {
        Command::Simulate { control, .. } => simulate(&cfg, &dir, control.as_deref())?,
        Command::Control { .. } => control(&cfg, &dir)?,
        Command::Extend { .. } => extend(&cfg, &dir)?,
        Command::Sweep { .. } => sweep(&cfg, &dir)?,
        Command::Kalman { .. } => kalman(&cfg, &dir)?,
        Command::Bounds { .. } => bounds(&cfg, &dir)?,
        Command::ReproduceExperiment { .. } => reproduce(&cfg, &dir)?,
    };
    println!("output: {}", dir.display());
    Ok(done)
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn system(cfg: &RunConfig) -> CliResult<System> {
    Ok(System::new(ChainOperator::new(cfg.n, cfg.flavor)?, cfg.nonlinearity_spec()?)
        .with_layout(ControlLayout::build(cfg.n, &cfg.layout)?))
}

fn problem(cfg: &RunConfig) -> CliResult<ControlProblem> {
    Ok(ControlProblem::new(system(cfg)?, cfg.initial_state(), cfg.time_frame()?, cfg.steps()?)?)
}

fn dump_trajectory(dir: &Path, stem: &str, traj: &Trajectory, first_label: i64, title: &str) -> CliResult<()> {
    write_trajectory(create(dir, &format!("{stem}.csv"))?, traj, first_label)?;
    fs::write(dir.join(format!("{stem}_heatline.svg")), heatline(traj, title)?)?;
    fs::write(dir.join(format!("{stem}_lines.svg")), agent_lines(traj, title)?)?;
    Ok(())
}

fn read_control(path: &Path, problem: &ControlProblem) -> CliResult<ControlSignal> {
    let table = read_numeric_table(File::open(path)?)?;
    let channels = problem.n_channels();
    let cols = (1..=channels)
        .map(|c| {
            table.column(&format!("u_{c}")).ok_or_else(|| {
                Failure::from(Error::DimensionMismatch(format!(
                    "{} has no column u_{c}",
                    path.display()
                )))
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let steps = table.rows.len();
    let values = (0..steps).flat_map(|k| cols.iter().map(move |c| c[k])).collect();
    Ok(ControlSignal::from_values(problem.frame, channels, steps, values)?)
}

#[derive(Serialize)]
struct SimulationSummary {
    n: usize,
    frame: &'static str,
    horizon: f64,
    n_steps: usize,
    controlled: bool,
    initial_norm: f64,
    terminal_norm: f64,
}

fn simulate(cfg: &RunConfig, dir: &Path, control: Option<&Path>) -> CliResult<Done> {
    let p = problem(cfg)?;
    let signal = control.map(|path| read_control(path, &p)).transpose()?;
    let traj = integrate(&p.system, signal.as_ref(), &p.y0, &p.frame, p.n_steps, IntegrateOptions::default())?;
    let title = if signal.is_some() { "controlled run" } else { "free run" };
    dump_trajectory(dir, "trajectory", &traj, 1, title)?;
    let summary = SimulationSummary {
        n: cfg.n,
        frame: p.frame.kind.name(),
        horizon: p.frame.base_horizon,
        n_steps: p.n_steps,
        controlled: signal.is_some(),
        initial_norm: traj.initial_norm(),
        terminal_norm: traj.terminal_norm(),
    };
    write_json(create(dir, "summary.json")?, &summary)?;
    println!("initial_norm {:?}", summary.initial_norm);
    println!("terminal_norm {:?}", summary.terminal_norm);
    Ok(Done { converged: true })
}

fn write_synthesis(dir: &Path, cfg: &RunConfig, result: &SynthesisResult, stem: &str) -> CliResult<()> {
    write_control(create(dir, "control.csv")?, &result.control)?;
    dump_trajectory(dir, stem, &result.trajectory, 1, "controlled run")?;
    write_json(create(dir, "result.json")?, &ResultMetadata::new(result, &cfg.objective()))?;
    Ok(())
}

fn print_result(result: &SynthesisResult) {
    println!("iterations {}", result.iterations);
    println!("converged {}", result.converged);
    println!("initial_norm {:?}", result.trajectory.initial_norm());
    println!("terminal_norm {:?}", result.terminal_norm);
    println!("control_cost {:?}", result.control_cost);
}

fn control(cfg: &RunConfig, dir: &Path) -> CliResult<Done> {
    let p = problem(cfg)?;
    let result = minimize(&p, &cfg.objective(), &p.zero_control(), &cfg.minimize_options())?;
    write_synthesis(dir, cfg, &result, "controlled")?;
    print_result(&result);
    Ok(Done {
        converged: result.converged,
    })
}

#[derive(Serialize)]
struct ExtensionSummary {
    #[serde(flatten)]
    extended: ResultMetadata,
    boundary_flux_norm: f64,
    inner_terminal_norm: f64,
}

fn extend(cfg: &RunConfig, dir: &Path) -> CliResult<Done> {
    let objective = cfg.objective();
    let ext = synthesize_boundary_via_extension(
        cfg.n,
        &cfg.nonlinearity_spec()?,
        &cfg.initial_state(),
        cfg.horizon,
        cfg.steps()?,
        &objective,
        &cfg.minimize_options(),
    )?;
    let h = extension_half_width(cfg.n) as i64;
    dump_trajectory(dir, "extended", &ext.extended_trajectory, -h, "extended chain")?;
    dump_trajectory(dir, "inner", &ext.inner_trajectory, 1, "restricted to the original chain")?;
    write_control(create(dir, "boundary_control.csv")?, &ext.boundary_control)?;
    let summary = ExtensionSummary {
        extended: ResultMetadata::new(&ext.extended_result, &objective),
        boundary_flux_norm: ext.boundary_flux_norm,
        inner_terminal_norm: ext.inner_trajectory.terminal_norm(),
    };
    write_json(create(dir, "result.json")?, &summary)?;
    print_result(&ext.extended_result);
    println!("boundary_flux_norm {:?}", ext.boundary_flux_norm);
    Ok(Done {
        converged: ext.extended_result.converged,
    })
}

#[derive(Serialize)]
struct RegimeFit {
    regime: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<opinion_core::experiments::GrowthFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn sweep(cfg: &RunConfig, dir: &Path) -> CliResult<Done> {
    let plan = cfg.sweep_plan()?;
    let records = run_scaling_sweep(&plan)?;
    write_sweep(create(dir, "sweep.csv")?, &records)?;
    let mut fits = Vec::new();
    let mut series = Vec::new();
    for &regime in &plan.regimes {
        let recs = regime_records(&records, regime);
        let (fit, error) = match fit_cost_growth(&recs) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        println!(
            "{:<18} {}",
            regime.name(),
            fit.as_ref().map_or_else(
                || format!("no fit: {}", error.as_deref().unwrap_or("")),
                |f| format!("{} rate {:?}", f.model.name(), f.fitted_rate)
            )
        );
        series.push(CostSeries {
            label: regime.name().into(),
            points: ok_points(&recs),
            fit: fit.clone(),
        });
        fits.push(RegimeFit {
            regime: regime.name(),
            fit,
            error,
        });
    }
    write_json(create(dir, "fit.json")?, &fits)?;
    match cost_vs_n(&series, "control cost against N") {
        Ok(svg) => fs::write(dir.join("cost_vs_n.svg"), svg)?,
        Err(Error::EmptyData(_)) => {}
        Err(e) => return Err(e.into()),
    }
    for r in &records {
        println!(
            "N={:<4} {:<18} cost_physical={:<24?} terminal_norm={:<24?} {}",
            r.n,
            r.regime.name(),
            r.cost_physical,
            r.terminal_norm,
            r.status
        );
    }
    Ok(Done {
        converged: records.iter().all(|r| r.converged && r.status == "ok"),
    })
}

fn ok_points(records: &[SweepRecord]) -> Vec<(usize, f64)> {
    records
        .iter()
        .filter(|r| r.status == "ok")
        .map(|r| (r.n, r.cost_physical))
        .collect()
}

fn kalman(cfg: &RunConfig, dir: &Path) -> CliResult<Done> {
    let mut out = create(dir, "kalman.csv")?;
    writeln!(out, "N,rank,satisfied,method")?;
    println!("{:>4} {:>5} {:>9} method", "N", "rank", "satisfied");
    for &n in &cfg.kalman_n {
        let op = ChainOperator::new(n, cfg.flavor)?;
        let layout = ControlLayout::build(n, &cfg.layout)?;
        let r = kalman_rank(&op, &layout)?;
        let method = match r.method {
            opinion_core::network::RankMethod::ExactRational => "exact",
            opinion_core::network::RankMethod::Hautus => "hautus",
        };
        writeln!(out, "{},{},{},{}", r.n, r.rank, r.satisfied, method)?;
        println!("{:>4} {:>5} {:>9} {}", r.n, r.rank, r.satisfied, method);
    }
    out.flush()?;
    Ok(Done { converged: true })
}

fn bounds(cfg: &RunConfig, dir: &Path) -> CliResult<Done> {
    let g_inf = match cfg.g_inf {
        Some(g) => g,
        None => {
            let y0 = cfg.initial_state();
            let m = y0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            cfg.nonlinearity_spec()?.lipschitz_bound(m)
        }
    };
    let b = evaluate_bounds(g_inf, cfg.horizon, cfg.n, cfg.bound_constants())?;
    let header = "g_inf,T,N,K,C_alpha,cost_bound,K_N,N_min,target_ball";
    let fields = [b.g_inf, b.horizon, b.n as f64, b.k, b.c_alpha, b.cost_bound, b.k_n, b.n_min, b.target_ball];
    let row = fields
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 2 { b.n.to_string() } else { format!("{v:?}") })
        .collect::<Vec<_>>()
        .join(",");
    fs::write(dir.join("bounds.csv"), format!("{header}\n{row}\n"))?;
    for (name, value) in header.split(',').zip(row.split(',')) {
        println!("{name:<12} {value}");
    }
    Ok(Done { converged: true })
}

#[derive(Serialize)]
struct ReproductionSummary {
    initial_norm: f64,
    free_terminal_norm: f64,
    controlled_terminal_norm: f64,
    #[serde(flatten)]
    controlled: ResultMetadata,
}

fn reproduce(cfg: &RunConfig, dir: &Path) -> CliResult<Done> {
    let p = problem(cfg)?;
    let free = integrate(&p.system, None, &p.y0, &p.frame, p.n_steps, IntegrateOptions::default())?;
    dump_trajectory(dir, "free", &free, 1, "free run")?;
    let objective = cfg.objective();
    let result = minimize(&p, &objective, &p.zero_control(), &cfg.minimize_options())?;
    write_control(create(dir, "control.csv")?, &result.control)?;
    dump_trajectory(dir, "controlled", &result.trajectory, 1, "controlled run")?;
    let summary = ReproductionSummary {
        initial_norm: free.initial_norm(),
        free_terminal_norm: free.terminal_norm(),
        controlled_terminal_norm: result.terminal_norm,
        controlled: ResultMetadata::new(&result, &objective),
    };
    write_json(create(dir, "result.json")?, &summary)?;
    println!("free_terminal_norm {:?}", summary.free_terminal_norm);
    print_result(&result);
    Ok(Done {
        converged: result.converged,
    })
}
