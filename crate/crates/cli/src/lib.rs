//! Command-line front end: configuration ingestion, bound sweeps, simulation
//! and the oracle suite.

pub mod config;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use ehfb_core::awgn_bounds::{achievability, capacity_eh_awgn, converse, AchParams, BoundResult, ConvParams, Lambda, Mode};
use ehfb_core::dmc_bounds::{eh_dmc_achievability, eh_dmc_converse};
use ehfb_core::ehmodel::{ChannelSpec, EnergyProcess};
use ehfb_core::mcsim::{simulate_all, simulate_outage, simulate_saving_phase, EventEstimate, SimConfig};
use ehfb_core::verify::{run_all, Scale};
use ehfb_core::Error;

use config::{parse_config, ChannelKind, ConfigError, Params};
use output::{fmt12, render, write_atomic};

#[derive(Debug, Parser)]
#[command(name = "ehfb", version, about = "Finite-blocklength bounds for energy-harvesting channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Achievability and converse for the EH-AWGN channel over a log-spaced n grid.
    BoundsAwgn(GridArgs),
    /// Second-order bounds for an EH-DMC over a log-spaced n grid.
    BoundsDmc {
        #[command(flatten)]
        grid: GridArgs,
        /// Relaxation of the cost level used for the converse dispersion.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Monte Carlo estimates of the achievability error events.
    Simulate(SimArgs),
    /// Runs the oracle suite; exits nonzero on any violation.
    Verify {
        /// Coarser grids.
        #[arg(long)]
        fast: bool,
    },
    /// Bounds at a fixed n while one configuration key takes a list of values.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n_min: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub n_max: u64,
    #[arg(long, default_value_t = 7)]
    pub points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `trials` from the configuration.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Overrides `seed` from the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Configuration key to vary.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values; commas inside brackets do not split.
    #[arg(long)]
    pub values: String,
    /// Blocklength; overrides `n` from the configuration.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// The command name as used in [`RunConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandName {
    BoundsAwgn,
    BoundsDmc,
    Simulate,
    Verify,
    Sweep,
}

/// A command with its validated parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandName,
    pub params: Params,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    /// Checks that every key the command needs is present and that the
    /// channel and energy law can be built.
    pub fn new(command: CommandName, params: Params, output_path: Option<PathBuf>) -> Result<Self, Vec<ConfigError>> {
        let mut errors = Vec::new();
        let missing = |key: &str| ConfigError { line: 0, message: format!("missing key '{key}'") };
        if command != CommandName::Verify {
            if params.epsilon.is_none() {
                errors.push(missing("epsilon"));
            }
            if let Err(message) = params.energy_process() {
                errors.push(ConfigError { line: 0, message });
            }
            if let Err(message) = params.channel_spec() {
                errors.push(ConfigError { line: 0, message });
            }
        }
        let channel = params.channel.unwrap_or(ChannelKind::Awgn);
        match command {
            CommandName::BoundsAwgn if channel != ChannelKind::Awgn => {
                errors.push(ConfigError { line: 0, message: "bounds-awgn needs channel = awgn".into() })
            }
            CommandName::BoundsDmc if channel != ChannelKind::Dmc => {
                errors.push(ConfigError { line: 0, message: "bounds-dmc needs channel = dmc".into() })
            }
            CommandName::Simulate => {
                if params.n.is_none() {
                    errors.push(missing("n"));
                }
                if params.lambda == Some(Lambda::Auto) {
                    errors.push(ConfigError { line: 0, message: "simulate needs a numeric lambda".into() });
                }
            }
            CommandName::Sweep if params.n.is_none() => errors.push(missing("n")),
            _ => {}
        }
        if errors.is_empty() {
            Ok(Self { command, params, output_path })
        } else {
            Err(errors)
        }
    }
}

/// Why a command failed; maps onto the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad input. Exit status 1.
    Validation(Vec<String>),
    /// A computation or I/O step failed. Exit status 2.
    Computation(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Computation(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(msgs) => write!(f, "invalid input:\n  {}", msgs.join("\n  ")),
            Failure::Computation(m) => write!(f, "computation failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) => Failure::Validation(vec![e.to_string()]),
            Error::Computation { .. } => Failure::Computation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Computation(e.to_string())
    }
}

fn config_failure(errors: Vec<ConfigError>) -> Failure {
    Failure::Validation(errors.iter().map(|e| e.to_string()).collect())
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<Params, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config(&text).map_err(|errs| {
        Failure::Validation(errs.iter().map(|e| format!("{}: {e}", path.display())).collect())
    })
}

/// Log-spaced integer grid from `lo` to `hi` inclusive, duplicates removed.
pub fn n_grid(lo: u64, hi: u64, points: usize) -> Result<Vec<u64>, Failure> {
    if lo < 1 || hi < lo || points < 1 {
        return Err(Failure::Validation(vec![format!(
            "need 1 <= n-min <= n-max and points >= 1, got n-min={lo}, n-max={hi}, points={points}"
        )]));
    }
    if points == 1 || lo == hi {
        return Ok(vec![lo]);
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut g: Vec<u64> = (0..points)
        .map(|i| ((a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as u64).clamp(lo, hi))
        .collect();
    g.dedup();
    Ok(g)
}

fn diag(r: &BoundResult, key: &str) -> String {
    fmt12(r.diag(key).unwrap_or(f64::NAN))
}

fn awgn_row(params: &Params, proc: &EnergyProcess, n: u64) -> Result<Vec<String>, Failure> {
    let ChannelSpec::Awgn(ch) = params.channel_spec().map_err(|m| Failure::Validation(vec![m]))? else {
        return Err(Failure::Validation(vec!["expected an AWGN channel".into()]));
    };
    let eps = params.epsilon.expect("validated");
    let mode = params.mode.unwrap_or(Mode::Explicit);
    let mut ap = AchParams::new(n, eps);
    ap.lambda = params.lambda.unwrap_or(Lambda::Auto);
    ap.mode = mode;
    if let Some(c) = params.berry_esseen_constant {
        ap.berry_esseen_constant = c;
    }
    let mut cp = ConvParams::new(n, eps);
    cp.mode = mode;
    let ach = achievability(proc, &ch, &ap)?;
    let conv = converse(proc, &ch, &cp)?;
    Ok(vec![
        n.to_string(),
        fmt12(eps),
        diag(&ach, "lambda"),
        mode.as_str().to_string(),
        fmt12(ach.log2_m),
        fmt12(conv.log2_m),
        fmt12(ach.rate(n)),
        fmt12(conv.rate(n)),
        fmt12(capacity_eh_awgn(proc, &ch)),
        diag(&ach, "N_n"),
        diag(&ach, "eps_n"),
        diag(&conv, "delta_n"),
        diag(&conv, "tau_n"),
        diag(&conv, "zeta_n"),
        ach.valid.to_string(),
        conv.valid.to_string(),
    ])
}

fn dmc_row(params: &Params, proc: &EnergyProcess, n: u64, eta: Option<f64>) -> Result<Vec<String>, Failure> {
    let ChannelSpec::Dmc(ch) = params.channel_spec().map_err(|m| Failure::Validation(vec![m]))? else {
        return Err(Failure::Validation(vec!["expected a DMC".into()]));
    };
    let eps = params.epsilon.expect("validated");
    let ach = eh_dmc_achievability(&ch, proc, n, eps, params.lambda.unwrap_or(Lambda::Auto))?;
    let conv = eh_dmc_converse(&ch, proc, n, eps, eta.or(params.eta))?;
    Ok(vec![
        n.to_string(),
        fmt12(eps),
        diag(&conv, "eta"),
        diag(&conv, "C_ED"),
        diag(&conv, "V_star"),
        fmt12(ach.log2_m),
        fmt12(conv.log2_m),
        diag(&conv, "C_prime"),
        diag(&conv, "eps_R"),
        ach.valid.to_string(),
        conv.valid.to_string(),
    ])
}

fn grid_rows(
    grid: &[u64],
    row: impl Fn(u64) -> Result<Vec<String>, Failure> + Sync,
) -> Result<Vec<Vec<String>>, Failure> {
    let mut rows: Vec<(u64, Vec<String>)> = grid
        .par_iter()
        .map(|&n| row(n).map(|r| (n, r)))
        .collect::<Result<_, _>>()?;
    rows.sort_by_key(|(n, _)| *n);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn print_grid_summary(title: &str, columns: &[&str], rows: &[Vec<String>], out: &Path) {
    let pick = |name: &str| columns.iter().position(|c| *c == name);
    let (a, c) = (pick("ach_log2M").unwrap(), pick("conv_log2M").unwrap());
    println!("{title}: {} grid points -> {}", rows.len(), out.display());
    println!("{:>12}  {:>20}  {:>20}", "n", "ach_log2M", "conv_log2M");
    for r in rows {
        println!("{:>12}  {:>20}  {:>20}", r[0], r[a], r[c]);
    }
}

fn bounds_awgn(args: &GridArgs) -> Result<(), Failure> {
    let params = load_config(&args.config)?;
    let cfg = RunConfig::new(CommandName::BoundsAwgn, params, Some(args.out.clone())).map_err(config_failure)?;
    let grid = n_grid(args.n_min, args.n_max, args.points)?;
    let proc = cfg.params.energy_process().map_err(|m| Failure::Validation(vec![m]))?;
    let rows = grid_rows(&grid, |n| awgn_row(&cfg.params, &proc, n))?;
    write_atomic(&args.out, &render(output::AWGN_UNITS, &output::AWGN_COLUMNS, &rows)?)?;
    print_grid_summary("bounds-awgn", &output::AWGN_COLUMNS, &rows, &args.out);
    Ok(())
}

fn bounds_dmc(args: &GridArgs, eta: Option<f64>) -> Result<(), Failure> {
    if let Some(e) = eta {
        if e.is_nan() || e <= 0.0 || !e.is_finite() {
            return Err(Failure::Validation(vec![format!("--eta must be > 0, got {e}")]));
        }
    }
    let params = load_config(&args.config)?;
    let cfg = RunConfig::new(CommandName::BoundsDmc, params, Some(args.out.clone())).map_err(config_failure)?;
    let grid = n_grid(args.n_min, args.n_max, args.points)?;
    let proc = cfg.params.energy_process().map_err(|m| Failure::Validation(vec![m]))?;
    let rows = grid_rows(&grid, |n| dmc_row(&cfg.params, &proc, n, eta))?;
    write_atomic(&args.out, &render(output::DMC_UNITS, &output::DMC_COLUMNS, &rows)?)?;
    print_grid_summary("bounds-dmc", &output::DMC_COLUMNS, &rows, &args.out);
    Ok(())
}

/// Default trial count and seed when neither flag nor configuration sets them.
pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;

/// Event estimates for a simulate configuration. AWGN runs cover E0 to E3 and,
/// at desk scale, the end-to-end code; DMC runs cover E0 and E1.
pub fn simulate_events(params: &Params, trials: u64, seed: u64) -> Result<Vec<EventEstimate>, Failure> {
    let proc = params.energy_process().map_err(|m| Failure::Validation(vec![m]))?;
    let ch = params.channel_spec().map_err(|m| Failure::Validation(vec![m]))?;
    let lambda = match params.lambda {
        Some(Lambda::Fixed(l)) => l,
        _ => 0.5,
    };
    let cfg = SimConfig {
        seed,
        trials,
        n: params.n.expect("validated"),
        epsilon: params.epsilon.expect("validated"),
        lambda,
        proc,
        ch: ch.clone(),
        k_eps_override: params.k_eps,
        berry_esseen_constant: params.berry_esseen_constant.unwrap_or(0.5),
    };
    cfg.validate()?;
    Ok(match ch {
        ChannelSpec::Awgn(_) => simulate_all(&cfg, params.messages.unwrap_or(2))?,
        ChannelSpec::Dmc(_) => vec![simulate_saving_phase(&cfg)?, simulate_outage(&cfg)?],
    })
}

fn simulate(args: &SimArgs) -> Result<(), Failure> {
    let params = load_config(&args.config)?;
    let cfg = RunConfig::new(CommandName::Simulate, params, Some(args.out.clone())).map_err(config_failure)?;
    let trials = args.trials.or(cfg.params.trials).unwrap_or(DEFAULT_TRIALS);
    if trials < 1 {
        return Err(Failure::Validation(vec!["--trials must be >= 1".into()]));
    }
    let seed = args.seed.or(cfg.params.seed).unwrap_or(DEFAULT_SEED);
    let events = simulate_events(&cfg.params, trials, seed)?;
    let rows: Vec<Vec<String>> = events
        .iter()
        .map(|e| {
            vec![
                e.event.as_str().to_string(),
                fmt12(e.empirical),
                fmt12(e.ci_low),
                fmt12(e.ci_high),
                fmt12(e.analytic_bound),
                e.trials.to_string(),
                seed.to_string(),
            ]
        })
        .collect();
    write_atomic(&args.out, &render(output::SIM_UNITS, &output::SIM_COLUMNS, &rows)?)?;
    println!("simulate: {trials} trials, seed {seed} -> {}", args.out.display());
    for e in &events {
        println!(
            "{:>6}  p = {:<14}  95% CI [{}, {}]  bound {}  {}",
            e.event.as_str(),
            fmt12(e.empirical),
            fmt12(e.ci_low),
            fmt12(e.ci_high),
            fmt12(e.analytic_bound),
            if e.bound_holds() { "ok" } else { "EXCEEDED" }
        );
    }
    Ok(())
}

fn verify(fast: bool) -> Result<(), Failure> {
    let checks = run_all(if fast { Scale::Fast } else { Scale::Full })?;
    for c in &checks {
        println!(
            "{:<22} cases {:>7}  violations {:>4}  worst {:>12}  tol {:>7}  {}",
            c.name,
            c.cases,
            c.violations,
            fmt12(c.worst),
            fmt12(c.tolerance),
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Computation(format!("oracle violations in {}", failed.join(", "))))
    }
}

// Splits on commas outside brackets.
fn split_values(list: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (mut depth, mut cur) = (0i32, String::new());
    for ch in list.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur.trim().to_string());
    out
}

fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let mut params = load_config(&args.config)?;
    if let Some(n) = args.n {
        if n < 1 {
            return Err(Failure::Validation(vec!["--n must be >= 1".into()]));
        }
        params.n = Some(n);
    }
    if !config::KEYS.contains(&args.param.as_str()) {
        return Err(Failure::Validation(vec![format!("unknown key '{}'", args.param)]));
    }
    if matches!(args.param.as_str(), "channel" | "n") {
        return Err(Failure::Validation(vec![format!("'{}' cannot be swept here", args.param)]));
    }
    let values = split_values(&args.values);
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for v in &values {
        let mut p = params.clone();
        if let Err(m) = p.set(&args.param, v) {
            errors.push(format!("value '{v}': {m}"));
            continue;
        }
        match RunConfig::new(CommandName::Sweep, p, Some(args.out.clone())) {
            Ok(cfg) => points.push((v.clone(), cfg.params)),
            Err(errs) => errors.extend(errs.iter().map(|e| format!("value '{v}': {e}"))),
        }
    }
    if !errors.is_empty() {
        return Err(Failure::Validation(errors));
    }
    let dmc = params.channel == Some(ChannelKind::Dmc);
    let mut rows: Vec<(String, Vec<String>)> = points
        .par_iter()
        .map(|(v, p)| {
            let proc = p.energy_process().map_err(|m| Failure::Validation(vec![m]))?;
            let n = p.n.expect("validated");
            let row = if dmc { dmc_row(p, &proc, n, None)? } else { awgn_row(p, &proc, n)? };
            Ok((v.clone(), row))
        })
        .collect::<Result<_, Failure>>()?;
    if rows.iter().all(|(v, _)| v.parse::<f64>().is_ok()) {
        rows.sort_by(|a, b| a.0.parse::<f64>().unwrap().total_cmp(&b.0.parse::<f64>().unwrap()));
    }
    let (units, base): (&str, &[&str]) = if dmc {
        (output::DMC_UNITS, &output::DMC_COLUMNS)
    } else {
        (output::AWGN_UNITS, &output::AWGN_COLUMNS)
    };
    let mut columns = vec!["param", "value"];
    columns.extend_from_slice(base);
    let rows: Vec<Vec<String>> = rows
        .into_iter()
        .map(|(v, r)| {
            let mut full = vec![args.param.clone(), v];
            full.extend(r);
            full
        })
        .collect();
    write_atomic(&args.out, &render(units, &columns, &rows)?)?;
    println!("sweep over {}: {} values -> {}", args.param, rows.len(), args.out.display());
    Ok(())
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::BoundsAwgn(a) => bounds_awgn(a),
        Command::BoundsDmc { grid, eta } => bounds_dmc(grid, *eta),
        Command::Simulate(a) => simulate(a),
        Command::Verify { fast } => verify(*fast),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("ehfb: {f}");
            f.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        assert_eq!(n_grid(1000, 1_000_000, 4).unwrap(), vec![1000, 10_000, 100_000, 1_000_000]);
        assert_eq!(n_grid(5, 5, 3).unwrap(), vec![5]);
        assert_eq!(n_grid(1, 3, 10).unwrap(), vec![1, 2, 3]);
        assert!(n_grid(10, 5, 3).is_err());
        assert!(n_grid(0, 5, 3).is_err());
    }

    #[test]
    fn value_splitting() {
        assert_eq!(split_values("0.1, 0.2"), vec!["0.1", "0.2"]);
        assert_eq!(split_values("[0, 1],[0, 2]"), vec!["[0, 1]", "[0, 2]"]);
    }

    #[test]
    fn missing_keys_are_listed() {
        let errs = RunConfig::new(CommandName::Simulate, Params::default(), None).unwrap_err();
        let text: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        assert!(text.iter().any(|m| m.contains("'epsilon'")));
        assert!(text.iter().any(|m| m.contains("'mean_energy'")));
        assert!(text.iter().any(|m| m.contains("'noise_var'")));
        assert!(text.iter().any(|m| m.contains("'n'")));
        assert!(RunConfig::new(CommandName::Verify, Params::default(), None).is_ok());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::Domain("x".into())).exit_code(), 1);
        assert_eq!(Failure::from(Error::Computation { message: "x".into(), partial: 0.0 }).exit_code(), 2);
    }
}
