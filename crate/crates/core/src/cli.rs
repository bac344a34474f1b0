//! Command-line front end. Tables go to stdout as CSV, diagnostics to stderr.
//!
//! Exit codes: 0 success, 2 input validation, 3 computation failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::committee::committee_cutoff;
use crate::config::{ConfigError, ModelConfig};
use crate::contract::calibrate;
use crate::equilibrium::{
    experimentation_rate, rd_derivative, solve_equilibrium, EquilibriumKind, EquilibriumSolution,
    Param, RateConvention, Scenario,
};
use crate::error::{CornerDirection, Error};
use crate::mc_oracle::{compare, simulate, SimSetup};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

/// Parameters accepted by `sweep --param`.
pub const SWEEPABLE: [Param; 10] = Param::ALL;

#[derive(Debug, Parser)]
#[command(
    name = "repcut",
    version,
    about = "Cutoff equilibria for expert advice with career concerns"
)]
pub struct Cli {
    /// Print the (validated) config as TOML and exit; the built-in baseline if no path is given.
    #[arg(long, value_name = "CONFIG", num_args = 0..=1)]
    pub dump_config: Option<Option<PathBuf>>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the equilibrium cutoff and print one CSV row.
    Solve {
        config: PathBuf,
        /// Override beliefs.pi.
        #[arg(long)]
        pi: Option<f64>,
    },
    /// Solve on a grid of one parameter.
    Sweep {
        config: PathBuf,
        /// One of: pi, alpha, beta1, beta0, lambda, sigma_h, sigma_l, mu_gap, kappa, phi.
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Back out the implementing bonus for each target experimentation rate.
    Calibrate {
        config: PathBuf,
        #[arg(
            long = "rho-star",
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        rho_star: Vec<f64>,
    },
    /// Simulate episodes and compare with the analytic targets.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        episodes: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Cutoff to simulate at; the equilibrium cutoff if omitted.
        #[arg(long, allow_hyphen_values = true)]
        cutoff: Option<f64>,
    },
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => CliError::Input(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Compute(format!("write failed: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(format!("write failed: {e}"))
    }
}

/// Render with 9 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Parse `args` and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(path) = cli.dump_config {
        let cfg = match path {
            Some(p) => ModelConfig::load(&p)?,
            None => ModelConfig::default(),
        };
        write!(out, "{}", cfg.to_toml())?;
        return Ok(());
    }
    match cli.command {
        None => Err(CliError::Input(
            "no command given; see `repcut --help`".into(),
        )),
        Some(Command::Solve { config, pi }) => {
            let mut cfg = ModelConfig::load(&config)?;
            if let Some(pi) = pi {
                cfg.beliefs.pi = pi;
                cfg.validate()?;
            }
            cmd_solve(&cfg, out)
        }
        Some(Command::Sweep {
            config,
            param,
            from,
            to,
            points,
        }) => {
            let cfg = ModelConfig::load(&config)?;
            let param = Param::parse(&param).ok_or_else(|| {
                let names: Vec<&str> = SWEEPABLE.iter().map(|p| p.name()).collect();
                CliError::Input(format!(
                    "unknown sweep parameter `{param}` (expected one of {})",
                    names.join(", ")
                ))
            })?;
            cmd_sweep(&cfg, param, from, to, points, out)
        }
        Some(Command::Calibrate { config, rho_star }) => {
            let cfg = ModelConfig::load(&config)?;
            cmd_calibrate(&cfg, &rho_star, out)
        }
        Some(Command::Simulate {
            config,
            episodes,
            seed,
            cutoff,
        }) => {
            let cfg = ModelConfig::load(&config)?;
            cmd_simulate(&cfg, episodes, seed, cutoff, out)
        }
    }
}

fn solve_config(
    cfg: &ModelConfig,
    sc: &Scenario,
) -> Result<(EquilibriumSolution, Vec<&'static str>), Error> {
    let mut flags = Vec::new();
    let sol = match &cfg.committee {
        Some(cc) => {
            let c = committee_cutoff(sc, &cc.to_spec()?, cc.member)?;
            if c.blocked_maps_to_unobserved {
                flags.push("committee_block_unobserved");
            }
            c.solution
        }
        None => solve_equilibrium(sc)?,
    };
    match sol.kind {
        EquilibriumKind::Corner(CornerDirection::AllRisky) => flags.push("corner_all_risky"),
        EquilibriumKind::Corner(CornerDirection::AllSafe) => flags.push("corner_all_safe"),
        EquilibriumKind::Interior => {}
    }
    if sol.all_roots.len() > 1 {
        flags.push("multiple_roots");
    }
    if sol.off_path {
        flags.push("off_path");
    }
    if sc.transfers.ll_violation() {
        flags.push("ll_violation");
    }
    if sc.payoff.convexity_violation() {
        flags.push("convexity_violation");
    }
    Ok((sol, flags))
}

const SOLVE_HEADER: [&str; 11] = [
    "pi",
    "cutoff",
    "pi_success",
    "pi_failure",
    "pi_safe",
    "p_c",
    "rho_high_type",
    "rho_unconditional",
    "rd_derivative",
    "n_roots",
    "flags",
];

fn solve_row(cfg: &ModelConfig, sc: &Scenario) -> Result<Vec<String>, Error> {
    let (sol, flags) = solve_config(cfg, sc)?;
    let rho_u = experimentation_rate(
        &sc.model,
        &sc.beliefs,
        sol.cutoff,
        RateConvention::Unconditional { pi: sc.beliefs.pi },
    )?;
    let rd = if sol.is_interior() {
        rd_derivative(sc, sol.cutoff)?
    } else {
        f64::NAN
    };
    let p = &sol.posteriors;
    Ok(vec![
        fmt_sig(sc.beliefs.pi),
        fmt_sig(sol.cutoff),
        fmt_sig(p.pi_success),
        fmt_sig(p.pi_failure),
        fmt_sig(p.pi_safe),
        fmt_sig(sol.success_prob_at_cutoff),
        fmt_sig(sol.experimentation_rate),
        fmt_sig(rho_u),
        fmt_sig(rd),
        sol.all_roots.len().to_string(),
        flags.join(";"),
    ])
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn cmd_solve(cfg: &ModelConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = cfg.scenario()?;
    let row = solve_row(cfg, &sc)?;
    let mut w = csv_writer(out);
    w.write_record(SOLVE_HEADER)?;
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_sweep(
    cfg: &ModelConfig,
    param: Param,
    from: f64,
    to: f64,
    points: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if points == 0 || !from.is_finite() || !to.is_finite() {
        return Err(CliError::Input(
            "sweep needs finite bounds and at least one point".into(),
        ));
    }
    let base = cfg.scenario()?;
    let grid: Vec<f64> = (0..points)
        .map(|i| {
            if points == 1 {
                from
            } else {
                from + (to - from) * i as f64 / (points - 1) as f64
            }
        })
        .collect();
    let rows: Vec<Result<Vec<String>, Error>> = grid
        .par_iter()
        .map(|&v| {
            let sc = param.set(&base, v);
            sc.validate()?;
            let mut row = vec![param.name().to_string(), fmt_sig(v)];
            row.extend(solve_row(cfg, &sc)?);
            Ok(row)
        })
        .collect();
    let mut w = csv_writer(out);
    let mut header = vec!["param", "value"];
    header.extend(SOLVE_HEADER);
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_calibrate(
    cfg: &ModelConfig,
    targets: &[f64],
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let sc = cfg.scenario()?;
    for (i, &r) in targets.iter().enumerate() {
        if !(r > 0.0 && r < 1.0) {
            return Err(CliError::Input(format!(
                "invalid rho_star[{i}]: must lie in (0, 1), got {r}"
            )));
        }
    }
    let rows: Vec<_> = targets.par_iter().map(|&r| calibrate(&sc, r)).collect();
    let mut w = csv_writer(out);
    w.write_record(["rho_star", "cutoff", "p_h", "beta1", "ll_violation"])?;
    for row in rows {
        let row = row?;
        w.write_record([
            fmt_sig(row.rho_star),
            fmt_sig(row.cutoff),
            fmt_sig(row.p_h_at_cutoff),
            fmt_sig(row.beta1),
            row.ll_violation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_simulate(
    cfg: &ModelConfig,
    episodes: u64,
    seed: u64,
    cutoff: Option<f64>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let sc = cfg.scenario()?;
    if episodes == 0 {
        return Err(CliError::Input(
            "invalid episodes: must be at least 1".into(),
        ));
    }
    let cutoff = match cutoff {
        Some(c) if c.is_nan() => return Err(CliError::Input("invalid cutoff: NaN".into())),
        Some(c) => c,
        None => solve_config(cfg, &sc)?.0.cutoff,
    };
    let setup = SimSetup {
        model: sc.model,
        beliefs: sc.beliefs,
        cutoff,
        frictions: sc.frictions,
    };
    let summary = simulate(&setup, episodes, seed)?;
    let checks = compare(&setup, &summary)?;
    let mut w = csv_writer(out);
    w.write_record(["statistic", "analytic", "empirical", "std_error", "z"])?;
    w.write_record([
        "episodes".to_string(),
        String::new(),
        episodes.to_string(),
        String::new(),
        String::new(),
    ])?;
    w.write_record([
        "cutoff".to_string(),
        fmt_sig(cutoff),
        String::new(),
        String::new(),
        String::new(),
    ])?;
    for c in checks {
        w.write_record([
            c.name,
            fmt_sig(c.analytic),
            fmt_sig(c.empirical),
            fmt_sig(c.std_error),
            fmt_sig(c.z),
        ])?;
    }
    w.flush()?;
    Ok(())
}
