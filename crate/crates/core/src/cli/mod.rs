//! The `essrate` command line.
//!
//! Exit codes: 0 success, 1 bad config or arguments, 2 integration failure,
//! 3 I/O failure, 4 a check ran but its property does not hold.
//! `reproduce-paper` exits with the number of failing criteria.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{essential_check, fit_rate, predicted_rate, theorem_bound_check, FitKind, FitOptions};
use crate::error::Error;
use crate::integrate::{run, StepPolicy};
use crate::stability::RkMethod;
use crate::{plot, reproduce};
use config::{ExperimentConfig, FitReport, SimulationReport};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INTEGRATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Integration(_) => EXIT_INTEGRATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::DimensionMismatch { .. }
            | Error::MetricUnavailable { .. }
            | Error::Unknown { .. }
            | Error::NoOptimum(_) => CliError::Config(e.to_string()),
            _ => CliError::Integration(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "essrate", version, about = "Essential convergence rates of optimizer ODEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one experiment (or every point of its sweep).
    Simulate { config: PathBuf },
    /// Sample |R(z)| of a Runge–Kutta method on a grid.
    Stability {
        method: String,
        #[arg(long, value_parser = parse_range, default_value = "-4,1")]
        re: (f64, f64),
        #[arg(long, value_parser = parse_range, default_value = "-3,3")]
        im: (f64, f64),
        #[arg(long, default_value_t = 101)]
        res: usize,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write a heat map.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Estimate the asymptotic spectral radius over a family of quadratics.
    EssentialCheck { config: PathBuf },
    /// Compare α(t_k) with (r + ε)k along a stability-capped run.
    TheoremCheck {
        config: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long)]
        k_min: Option<usize>,
    },
    /// Run every reproduction criterion and write a report.
    ReproducePaper {
        #[arg(short, long)]
        out: PathBuf,
        /// Comma-separated criterion ids to run instead of all.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `a,b`")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(a < b) {
        return Err(format!("need a < b, got {a},{b}"));
    }
    Ok((a, b))
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("essrate: {e}");
        return e.code();
    }
    let out = std::io::stdout();
    let mut out = out.lock();
    match execute(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("essrate: {e}");
            e.code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ESSRATE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("ESSRATE_THREADS must be a positive integer, got `{v}`")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute<W: Write>(cmd: Command, out: &mut W) -> Result<i32, CliError> {
    match cmd {
        Command::Simulate { config } => simulate(&config::load(&config)?, out),
        Command::Stability {
            method,
            re,
            im,
            res,
            out: path,
            svg,
        } => stability(&method, re, im, res, &path, svg.as_deref(), out),
        Command::EssentialCheck { config } => essential(&config::load(&config)?, out),
        Command::TheoremCheck { config, eps, k_min } => theorem(&config::load(&config)?, eps, k_min, out),
        Command::ReproducePaper { out: dir, only } => reproduce_paper(&dir, &only, out),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn method(name: &str) -> Result<RkMethod, CliError> {
    RkMethod::by_name(name).map_err(|e| CliError::Config(e.to_string()))
}

/// Runs every expanded config in parallel, then writes outputs in order.
pub fn simulate<W: Write>(configs: &[ExperimentConfig], out: &mut W) -> Result<i32, CliError> {
    let results: Vec<Result<(SimulationReport, crate::integrate::Trajectory), CliError>> =
        configs.par_iter().map(simulate_one).collect();
    let total = configs.len();
    for (i, (cfg, res)) in configs.iter().zip(results).enumerate() {
        let (report, traj) = res?;
        let o = &cfg.outputs;
        if let Some(p) = &o.trajectory_csv {
            write_file(&config::indexed(p, i, total), traj.to_csv().as_bytes())?;
        }
        if let Some(p) = &o.report_json {
            let json = serde_json::to_string_pretty(&report).expect("reports serialize");
            write_file(&config::indexed(p, i, total), json.as_bytes())?;
        }
        if let Some(p) = &o.svg {
            write_file(&config::indexed(p, i, total), plot::trajectory_svg(&traj).as_bytes())?;
        }
        let last = &report.final_record;
        let phis: Vec<String> = last
            .phi
            .iter()
            .map(|(m, v)| format!("{}={v:.6e}", m.name()))
            .collect();
        let _ = writeln!(
            out,
            "[{i}] {} {}: {} steps, t={:.6}, {}",
            report.meta.dynamics,
            report.meta.method,
            report.steps,
            last.t,
            phis.join(" ")
        );
        for f in &report.fits {
            match (&f.fit, &f.error) {
                (Some(fit), _) => {
                    let _ = writeln!(
                        out,
                        "    fit {} {:?}: exponent {:.6} (r2 {:.4})",
                        f.metric.name(),
                        f.kind,
                        fit.exponent,
                        fit.r_squared
                    );
                }
                (None, Some(e)) => {
                    let _ = writeln!(out, "    fit {} {:?}: {e}", f.metric.name(), f.kind);
                }
                _ => {}
            }
        }
    }
    Ok(0)
}

fn simulate_one(cfg: &ExperimentConfig) -> Result<(SimulationReport, crate::integrate::Trajectory), CliError> {
    let g = cfg.dynamics()?;
    let m = method(&cfg.method)?;
    cfg.policy.validate()?;
    let s = cfg.stop;
    if s.max_steps.is_none() && s.t_max.is_none() && s.phi_target.is_none() {
        return Err(CliError::Config(
            "at `stop`: set at least one of max_steps, t_max, phi_target".into(),
        ));
    }
    let y0 = g.initial_state(&cfg.start(g.dim()))?;
    let t0 = cfg.t_start.unwrap_or_else(|| g.t_start());
    let traj = run(&m, &g, &y0, t0, &cfg.policy, &cfg.stop, &cfg.metrics)?;
    let f = g.objective();
    let fits = cfg
        .fits
        .iter()
        .map(|spec| {
            let series = if spec.kind == FitKind::LinearInK {
                traj.series_k(spec.metric)
            } else {
                traj.series_t(spec.metric)
            };
            let fit = fit_rate(&series, spec.kind, &FitOptions::window(spec.window));
            FitReport {
                metric: spec.metric,
                kind: spec.kind,
                predicted: predicted_rate(g.model(), spec.metric, f.mu(), f.ell()),
                error: fit.as_ref().err().map(|e| e.to_string()),
                fit: fit.ok(),
            }
        })
        .collect();
    let report = SimulationReport {
        config: cfg.clone(),
        meta: traj.meta.clone(),
        steps: traj.last().k,
        final_record: traj.last().clone(),
        fits,
    };
    Ok((report, traj))
}

pub fn stability<W: Write>(
    name: &str,
    re: (f64, f64),
    im: (f64, f64),
    res: usize,
    path: &Path,
    svg: Option<&Path>,
    out: &mut W,
) -> Result<i32, CliError> {
    let m = method(name)?;
    let grid = m.domain_grid(re, im, res)?;
    let mut csv = String::from("re,im,abs_r\n");
    for (x, y, v) in grid.triples() {
        csv.push_str(&format!("{x:?},{y:?},{v:?}\n"));
    }
    write_file(path, csv.as_bytes())?;
    if let Some(p) = svg {
        write_file(p, plot::stability_heatmap(m.name(), &grid).as_bytes())?;
    }
    let _ = writeln!(out, "method: {}", m.name());
    let _ = writeln!(out, "domain_radius: {:.6}", m.domain_radius());
    let _ = writeln!(
        out,
        "real_axis_radius: {:.6}",
        m.directional_radius(std::f64::consts::PI)
    );
    Ok(0)
}

pub fn essential<W: Write>(configs: &[ExperimentConfig], out: &mut W) -> Result<i32, CliError> {
    let mut code = 0;
    for (i, cfg) in configs.iter().enumerate() {
        let g = cfg.dynamics()?;
        let m = method(&cfg.method)?;
        let family = cfg.family(g.objective())?;
        let x0s = cfg
            .family
            .as_ref()
            .and_then(|f| f.x0s.clone())
            .unwrap_or_else(|| vec![cfg.start(g.dim())]);
        let v = essential_check(&g, &family, &x0s, &m, &cfg.essential_options())?;
        let json = serde_json::to_string_pretty(&v).expect("verdicts serialize");
        if let Some(p) = &cfg.outputs.report_json {
            write_file(&config::indexed(p, i, configs.len()), json.as_bytes())?;
        }
        let _ = writeln!(
            out,
            "[{i}] {}: c_estimate = {:.6}, witness {}, {}",
            g.descriptor(),
            v.c_estimate,
            v.lb_witness,
            if v.is_one_essential() {
                "1-essential".to_string()
            } else {
                format!(
                    "not 1-essential (ub_ok {}, lb_ok {}, {} failed runs)",
                    v.ub_ok,
                    v.lb_ok,
                    v.failures().len()
                )
            }
        );
        for (k, e) in v.failures() {
            let _ = writeln!(out, "    run {k}: {e}");
        }
        if !v.is_one_essential() {
            code = EXIT_CHECK_FAILED;
        }
    }
    Ok(code)
}

pub fn theorem<W: Write>(
    configs: &[ExperimentConfig],
    eps: f64,
    k_min: Option<usize>,
    out: &mut W,
) -> Result<i32, CliError> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(CliError::Config(format!("--eps must be non-negative, got {eps}")));
    }
    let mut code = 0;
    for (i, cfg) in configs.iter().enumerate() {
        if !matches!(cfg.policy, StepPolicy::StabilityCapped { .. }) {
            return Err(CliError::Config("at `policy`: theorem-check needs stability_capped".into()));
        }
        let (report, traj) = simulate_one(cfg)?;
        let m = method(&cfg.method)?;
        let th = cfg.theorem.clone();
        let alpha = th
            .as_ref()
            .and_then(|t| t.alpha.clone())
            .unwrap_or_else(|| cfg.model.rescaling.clone());
        let r = th.as_ref().and_then(|t| t.r).unwrap_or_else(|| m.domain_radius());
        let k_min = k_min.or(th.and_then(|t| t.k_min)).unwrap_or(10);
        let chk = theorem_bound_check(&traj, &alpha, r, eps, k_min);
        let _ = writeln!(
            out,
            "[{i}] {}: fraction_satisfied = {:.6}, worst_ratio = {:.6}, r + eps = {:.6} ({} indices, k >= {k_min})",
            report.meta.dynamics, chk.fraction_satisfied, chk.worst_ratio, chk.bound, chk.count
        );
        if let Some(p) = &cfg.outputs.report_json {
            let json = serde_json::to_string_pretty(&chk).expect("checks serialize");
            write_file(&config::indexed(p, i, configs.len()), json.as_bytes())?;
        }
        if chk.fraction_satisfied < 1.0 {
            code = EXIT_CHECK_FAILED;
        }
    }
    Ok(code)
}

pub fn reproduce_paper<W: Write>(dir: &Path, only: &[String], out: &mut W) -> Result<i32, CliError> {
    let ids: Vec<String> = if only.is_empty() {
        reproduce::ids().into_iter().map(String::from).collect()
    } else {
        only.to_vec()
    };
    for id in &ids {
        if !reproduce::ids().iter().any(|k| k.eq_ignore_ascii_case(id)) {
            return Err(CliError::Config(format!("unknown criterion `{id}`")));
        }
    }
    // Fail on an unwritable directory before spending time on the runs.
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let md_path = dir.join("report.md");
    let csv_path = dir.join("report.csv");
    let md = fs::File::create(&md_path).map_err(|e| io_err(&md_path, e))?;
    let csv = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;

    let outcomes: Vec<reproduce::Outcome> = ids
        .par_iter()
        .map(|id| reproduce::run_one(id).expect("ids were checked"))
        .collect();
    for o in &outcomes {
        let _ = writeln!(
            out,
            "{} {} ({} ms): {}",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.millis,
            o.detail
        );
    }
    reproduce::write_markdown(&outcomes, md).map_err(|e| io_err(&md_path, e))?;
    reproduce::write_csv(&outcomes, csv).map_err(|e| io_err(&csv_path, e))?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(out, "{} of {} criteria pass", outcomes.len() - failed, outcomes.len());
    Ok(failed as i32)
}
