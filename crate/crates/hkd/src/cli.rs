//! Command-line front end.
//!
//! Exit codes: 0 success or all checks passed, 1 a check failed, 2 usage
//! or input error, 3 numerical blow-up.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use hkd_core::diagnostics::{self, DiagnosticsOptions, DiagnosticsReport};
use hkd_core::scenarios::{self, Scenario, SweepAxis, SweepMetric, SweepSpec};
use hkd_core::Trajectory;

use crate::config::{self, RunConfig};
use crate::error::{Error, Result};
use crate::svg::{self, SvgOptions};
use crate::trajectory_csv;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "hkd", version, about = "Two-population delayed opinion dynamics with leaders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a configured run and write its trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Trajectory CSV; written to stdout when no output is given.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a preset: fig1a, fig1b, fig2a, fig2b, fig3-left, fig3-right.
    Figure {
        name: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Delay; the grid keeps 50 steps per delay and the horizon 40 delays.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the hull, norm and contraction checks and print a table.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Number of windows for the contraction check; all by default.
        #[arg(long)]
        windows: Option<usize>,
    },
    /// Vary one parameter and print a metric per value.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// K1, K2, tau, k, h or seed.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
        /// final_diameter, consensus_value or time_to_threshold(eps).
        #[arg(long)]
        metric: String,
    },
}

/// Parses `args` (program name first) and runs the command, reading the
/// seed override from the environment.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let seed_env = std::env::var_os(config::SEED_ENV).map(|v| v.to_string_lossy().into_owned());
    run_with_seed_env(args, seed_env.as_deref(), out, err)
}

/// Like [`run`] with the value of the seed variable passed explicitly.
pub fn run_with_seed_env<I, T>(args: I, seed_env: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code as u8;
        }
    };
    let seed = match config::parse_seed(seed_env) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    match execute(cli.command, seed, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn scenario_from_config(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    RunConfig::load(path)?.to_scenario(seed)
}

/// Relative paths in a configuration are taken from its directory.
fn relative_to(config: &Path, p: &Path) -> PathBuf {
    match config.parent() {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn emit(
    s: &Scenario,
    traj: &Trajectory,
    csv: Option<PathBuf>,
    svg_path: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let rendered = RunConfig::from_scenario(s).render()?;
    if csv.is_none() && svg_path.is_none() {
        trajectory_csv::write_csv(&mut *out, traj, &rendered)?;
    }
    if let Some(p) = csv {
        let mut f = create(&p)?;
        trajectory_csv::write_csv(&mut f, traj, &rendered)?;
        f.flush().map_err(|e| Error::io(&p, e))?;
    }
    if let Some(p) = svg_path {
        let opts = SvgOptions { title: format!("{} (seed {})", s.name, s.seed), ..Default::default() };
        let mut f = create(&p)?;
        svg::write_svg(&mut f, traj, &opts)?;
        f.flush().map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

fn summary(s: &Scenario, traj: &Trajectory, err: &mut dyn Write) -> Result<()> {
    let last = traj.last();
    let d = diagnostics::diameters(&last);
    let mean = scenarios::mean_opinion(&last);
    writeln!(
        err,
        "{}: seed {}, {} nodes to t = {}, final diameter {:.6e}, mean opinion {:?}",
        s.name,
        s.seed,
        traj.node_count(),
        traj.t_end(),
        d.d,
        mean
    )?;
    Ok(())
}

fn execute(cmd: Command, seed: Option<u64>, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    match cmd {
        Command::Simulate { config, csv, svg } => {
            let cfg = RunConfig::load(&config)?;
            let s = cfg.to_scenario(seed)?;
            let (_, traj) = s.simulate()?;
            let csv = csv.or_else(|| cfg.output.csv.as_deref().map(|p| relative_to(&config, p)));
            let svg = svg.or_else(|| cfg.output.svg.as_deref().map(|p| relative_to(&config, p)));
            emit(&s, &traj, csv, svg, out)?;
            summary(&s, &traj, err)?;
            Ok(EXIT_OK)
        }
        Command::Figure { name, seed: seed_flag, tau, csv, svg } => {
            let mut s = scenarios::preset_by_name(&name)?;
            if let Some(tau) = tau {
                s = s.with_tau(tau)?;
            }
            if let Some(seed) = seed_flag.or(seed) {
                s.seed = seed;
            }
            let (_, traj) = s.simulate()?;
            emit(&s, &traj, csv, svg, out)?;
            summary(&s, &traj, err)?;
            Ok(EXIT_OK)
        }
        Command::Check { config, windows } => {
            let s = scenario_from_config(&config, seed)?;
            let (init, traj) = s.simulate()?;
            let opts = DiagnosticsOptions { windows, ..Default::default() };
            let report = diagnostics::diagnose(&s.params, &init, &traj, &opts)?;
            print_report(&report, out)?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Sweep { config, axis, values, metric } => {
            let spec = SweepSpec {
                base: scenario_from_config(&config, seed)?,
                axis: axis.parse::<SweepAxis>()?,
                values,
                metric: metric.parse::<SweepMetric>()?,
            };
            let rows = scenarios::sweep(&spec)?;
            writeln!(out, "{},{}", spec.axis.as_str(), spec.metric.label())?;
            for r in rows {
                writeln!(out, "{},{}", r.value, r.metric)?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn print_report(report: &DiagnosticsReport, out: &mut dyn Write) -> Result<()> {
    let c = &report.constants;
    writeln!(
        out,
        "Lambda = {:.6e}  Gamma = {:.6e}  C0 = {:.6e}  sigma = {:.6e}",
        c.lambda, c.gamma, c.c0, c.sigma
    )?;
    writeln!(out, "{:<56} {:<6} {:>14} {:>10}", "check", "result", "worst", "at t")?;
    for check in report.checks() {
        writeln!(
            out,
            "{:<56} {:<6} {:>14.6e} {:>10.4}",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.worst,
            check.at_time
        )?;
        if !check.passed {
            writeln!(out, "    {}", check.detail)?;
        }
    }
    if let Some(first) = report.contraction.first() {
        writeln!(out, "windows along {:?}:", first.direction)?;
        writeln!(out, "{:>4} {:>14} {:>14} {:>14} {:>14} {:>16}", "n", "m_n", "M_n", "D_n", "sigma_n", "log10 Gamma1_n")?;
        for w in &first.windows {
            writeln!(
                out,
                "{:>4} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>16.3}",
                w.n,
                w.min,
                w.max,
                w.diameter,
                w.sigma,
                w.gamma_1.log10()
            )?;
        }
    }
    writeln!(out, "{}", if report.passed() { "all checks passed" } else { "some checks FAILED" })?;
    Ok(())
}
