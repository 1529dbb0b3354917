//! Command-line front end: `solve`, `sweep`, `optimize`, `simulate` and
//! `validate`.
//!
//! Scenario flags mirror the config keys (`--n_primary 16`, `--scan_t_us 20`,
//! ...). They are layered over `--config FILE`, which is layered over
//! `--preset`; with neither a preset nor a file the `reference` preset is
//! used. Every table goes out as CSV with a fixed header.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::analysis::{analyze, Analysis, CSV_HEADER};
use crate::config::{ConfigOverrides, RawConfig};
use crate::optimizer::{
    evaluate_mismatch, optimize_any, write_grid_csv, Mismatch, OptimizationProblem, SearchGrids,
};
use crate::params::{Scenario, Scheme, ThroughputAccounting, REFERENCE_PRESET};
use crate::sim::{
    compare_to_analytical, compare_with_bias, run_replications, run_simulation_traced, summarize,
    write_discrepancy_rows, write_stats_csv, write_summary_csv, CheckStatus, Discrepancy, Metric,
    SimConfig, Tolerance, DISCREPANCY_CSV_HEADER,
};

#[derive(Debug, Parser)]
#[command(name = "dcf-coexist", version, about = "Primary/secondary 802.11 DCF coexistence model and simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario and print every intermediate quantity.
    Solve(SolveArgs),
    /// Solve a scenario for each value of one parameter.
    Sweep(SweepArgs),
    /// Grid-search the secondary parameters under a primary loss cap.
    Optimize(OptimizeArgs),
    /// Run simulation replications and compare them with the model.
    Simulate(SimulateArgs),
    /// Check a list of scenarios, simulation against model.
    Validate(ValidateArgs),
}

/// Scenario keys; every flag is optional and overrides the config.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Named parameter preset.
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML config file with the same keys as these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "n_primary")]
    pub n_primary: Option<u32>,
    #[arg(long = "n_secondary")]
    pub n_secondary: Option<u32>,
    #[arg(long = "w_primary")]
    pub w_primary: Option<u32>,
    #[arg(long = "w_secondary")]
    pub w_secondary: Option<u32>,
    #[arg(long = "m_primary")]
    pub m_primary: Option<u32>,
    #[arg(long = "m_secondary")]
    pub m_secondary: Option<u32>,
    #[arg(long = "lambda_primary")]
    pub lambda_primary: Option<f64>,
    #[arg(long = "lambda_secondary")]
    pub lambda_secondary: Option<f64>,
    #[arg(long = "tp_suc_us")]
    pub tp_suc_us: Option<f64>,
    #[arg(long = "ts_suc_us")]
    pub ts_suc_us: Option<f64>,
    #[arg(long = "tp_col_us")]
    pub tp_col_us: Option<f64>,
    #[arg(long = "ts_col_us")]
    pub ts_col_us: Option<f64>,
    #[arg(long = "difs_us")]
    pub difs_us: Option<f64>,
    #[arg(long = "eifs_us")]
    pub eifs_us: Option<f64>,
    #[arg(long = "scan_t_us")]
    pub scan_t_us: Option<f64>,
    #[arg(long = "period_T_us")]
    pub period_t_us: Option<f64>,
    #[arg(long = "idle_slot_us")]
    pub idle_slot_us: Option<f64>,
    /// sensing, silent_period or coexist.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// airtime or success_slot.
    #[arg(long = "throughput_accounting", value_parser = parse_accounting)]
    pub throughput_accounting: Option<ThroughputAccounting>,
}

fn parse_accounting(s: &str) -> Result<ThroughputAccounting, String> {
    match s {
        "airtime" => Ok(ThroughputAccounting::Airtime),
        "success_slot" => Ok(ThroughputAccounting::SuccessSlot),
        other => Err(format!("expected airtime or success_slot, got '{other}'")),
    }
}

impl ScenarioArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            preset: self.preset.clone(),
            n_primary: self.n_primary,
            n_secondary: self.n_secondary,
            w_primary: self.w_primary,
            w_secondary: self.w_secondary,
            m_primary: self.m_primary,
            m_secondary: self.m_secondary,
            lambda_primary: self.lambda_primary,
            lambda_secondary: self.lambda_secondary,
            tp_suc_us: self.tp_suc_us,
            ts_suc_us: self.ts_suc_us,
            tp_col_us: self.tp_col_us,
            ts_col_us: self.ts_col_us,
            difs_us: self.difs_us,
            eifs_us: self.eifs_us,
            scan_t_us: self.scan_t_us,
            period_t_us: self.period_t_us,
            idle_slot_us: self.idle_slot_us,
            scheme: self.scheme,
            beta: self.beta,
            throughput_accounting: self.throughput_accounting,
        }
    }

    /// Preset, then config file, then flags.
    pub fn raw(&self) -> anyhow::Result<RawConfig> {
        let mut layered = match &self.config {
            Some(path) => ConfigOverrides::from_file(path)?,
            None => ConfigOverrides::default(),
        };
        layered = layered.merged(self.overrides());
        if layered.preset.is_none() && self.config.is_none() {
            layered.preset = Some(REFERENCE_PRESET.to_string());
        }
        Ok(layered.resolve()?)
    }

    pub fn scenario(&self) -> anyhow::Result<Scenario> {
        Ok(self.raw()?.to_scenario()?)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Also write the solved scenario as a one-row CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Keys `sweep` accepts.
pub const SWEEP_KEYS: [&str; 7] = [
    "n_primary",
    "n_secondary",
    "scan_t_us",
    "w_secondary",
    "beta",
    "lambda_primary",
    "lambda_secondary",
];

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Parameter to vary.
    #[arg(long = "var")]
    pub variable: String,
    /// Comma-separated list or inclusive range `start:end:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub values: String,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Scheme to optimize; defaults to the scenario's.
    #[arg(long = "optimize-scheme")]
    pub optimize_scheme: Option<Scheme>,
    /// Allowed fractional loss of primary throughput.
    #[arg(long = "loss-cap", default_value_t = 0.1)]
    pub loss_cap: f64,
    /// Scan lengths in µs, list or `start:end:step`.
    #[arg(long = "t-grid")]
    pub t_grid: Option<String>,
    #[arg(long = "ws-grid")]
    pub ws_grid: Option<String>,
    #[arg(long = "beta-grid")]
    pub beta_grid: Option<String>,
    /// Number of primaries actually deployed, if not the designed-for one.
    #[arg(long = "actual-n-primary")]
    pub actual_n_primary: Option<u32>,
    #[arg(long = "actual-lambda-primary")]
    pub actual_lambda_primary: Option<f64>,
    /// Write every evaluated grid point as CSV.
    #[arg(long = "grid-out")]
    pub grid_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub replications: usize,
    /// Transmission slots per replication, warmup included.
    #[arg(long = "run-length", default_value_t = SimConfig::DEFAULT_RUN_LENGTH)]
    pub run_length: u64,
    /// Warmup slots (default 5 % of the run).
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long, default_value_t = SimConfig::DEFAULT_BATCHES)]
    pub batches: usize,
    /// Credit only whole secondary packets.
    #[arg(long = "no-fragments")]
    pub no_fragments: bool,
}

impl RunArgs {
    fn sim_config(&self, scenario: Scenario) -> SimConfig {
        let mut c = SimConfig::new(scenario, self.seed).with_run_length(self.run_length);
        if let Some(w) = self.warmup {
            c.warmup = w;
        }
        c.batches = self.batches;
        c.count_fragments = !self.no_fragments;
        c
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Per-replication statistics CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Aggregate CSV: value and standard error per metric.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Slot-level trace of the first replication.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// TOML file with `[[scenario]]` tables (a `name` plus config keys);
    /// the built-in suite when absent.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long = "se-multiplier", default_value_t = 3.0)]
    pub se_multiplier: f64,
    /// Relative PT error cap; negative disables it.
    #[arg(long = "max-relative-pt", default_value_t = 0.05, allow_hyphen_values = true)]
    pub max_relative_pt: f64,
    /// Comma-separated metrics to check (default all).
    #[arg(long)]
    pub metrics: Option<String>,
    /// Scale the model's PT by `1 + bias` before comparing.
    #[arg(long = "inject-bias", allow_hyphen_values = true)]
    pub inject_bias: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses and runs; `Ok(false)` when a validation check failed.
pub fn run<I, T>(args: I) -> anyhow::Result<bool>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    execute(cli.command, &mut io::stdout().lock())
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> anyhow::Result<bool> {
    match command {
        Command::Solve(a) => cmd_solve(&a, stdout).map(|_| true),
        Command::Sweep(a) => cmd_sweep(&a, stdout).map(|_| true),
        Command::Optimize(a) => cmd_optimize(&a, stdout).map(|_| true),
        Command::Simulate(a) => cmd_simulate(&a, stdout).map(|_| true),
        Command::Validate(a) => cmd_validate(&a, stdout),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Values from `a,b,c` or the inclusive range `start:end:step`.
pub fn parse_values(spec: &str) -> anyhow::Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((start, rest)) = spec.split_once(':') {
        let (end, step) = rest
            .split_once(':')
            .with_context(|| format!("range '{spec}' must be start:end:step"))?;
        let num = |s: &str| -> anyhow::Result<f64> {
            s.trim().parse().with_context(|| format!("bad number '{s}' in '{spec}'"))
        };
        let (a, b, h) = (num(start)?, num(end)?, num(step)?);
        if !(h > 0.0) || !(b >= a) {
            bail!("range '{spec}' needs step > 0 and end ≥ start");
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| ((a + k as f64 * h) * 1e9).round() / 1e9).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().with_context(|| format!("bad number '{s}'")))
        .collect()
}

fn parse_u32s(spec: &str) -> anyhow::Result<Vec<u32>> {
    parse_values(spec)?
        .into_iter()
        .map(|v| {
            if v.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&v) {
                bail!("expected a non-negative integer, got {v}");
            }
            Ok(v as u32)
        })
        .collect()
}

fn write_analysis_text(out: &mut dyn Write, a: &Analysis) -> io::Result<()> {
    let n = a.scenario.network();
    let us = a.scenario.timing().to_micros();
    let s = a.scenario.scheme();
    writeln!(out, "scenario")?;
    writeln!(
        out,
        "  scheme={} beta={} N_p={} N_s={} W_p={} W_s={} m_p={} m_s={} lambda_p={} lambda_s={}",
        s.scheme, s.beta, n.n_primary, n.n_secondary, n.w_primary, n.w_secondary,
        n.m_primary, n.m_secondary, n.lambda_primary, n.lambda_secondary
    )?;
    writeln!(out, "  scan_t_us={} period_T_us={}", us.scan_t_us, us.period_t_us)?;
    writeln!(out, "state 1 (primaries only)")?;
    writeln!(out, "  tau_p1={:.6} p_p1={:.6}", a.state1.tau_p1, a.state1.p_p1)?;
    if n.n_secondary == 0 {
        writeln!(out, "state 2: degenerate (no secondary nodes)")?;
    } else {
        writeln!(out, "state 2 (both networks)")?;
        writeln!(
            out,
            "  tau_p2={:.6} tau_s2={:.6} p_p2={:.6} p_s2={:.6} iterations={}",
            a.state2.tau_p2, a.state2.tau_s2, a.state2.p_p2, a.state2.p_s2, a.state2.iterations
        )?;
    }
    writeln!(out, "slots")?;
    writeln!(
        out,
        "  p_idle={:.6} p_succ={:.6} p_coll={:.6} p_slot={:.6}",
        a.slots1.p_idle, a.slots1.p_succ, a.slots1.p_coll, a.slots1.p_slot
    )?;
    let q = &a.slots2;
    writeln!(
        out,
        "  q_ii={:.6} q_si={:.6} q_is={:.6} q_ci={:.6} q_ic={:.6} q_cc={:.6} q_slot={:.6}",
        q.q_ii, q.q_si, q.q_is, q.q_ci, q.q_ic, q.q_cc, q.q_slot
    )?;
    writeln!(out, "scan")?;
    writeln!(
        out,
        "  alpha_b={:.6} alpha_i={:.6} alpha_c={:.6}",
        a.scan.alpha_b, a.scan.alpha_i, a.scan.alpha_c
    )?;
    let r = &a.report;
    writeln!(out, "throughput")?;
    writeln!(
        out,
        "  PT={:.6} ST={:.6} ST_conditional={:.6} PT_alone={:.6}",
        r.pt, r.st, r.st_conditional, r.baseline_pt
    )?;
    Ok(())
}

fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let a = analyze(&args.scenario.scenario()?)?;
    write_analysis_text(stdout, &a)?;
    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(CSV_HEADER)?;
        w.write_record(a.csv_record())?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    if !SWEEP_KEYS.contains(&args.variable.as_str()) {
        bail!(
            "cannot sweep '{}' (one of: {})",
            args.variable,
            SWEEP_KEYS.join(", ")
        );
    }
    let values = parse_values(&args.values)?;
    if values.is_empty() {
        bail!("sweep value list is empty");
    }
    let base = args.scenario.raw()?;
    let rows: Vec<Vec<String>> = values
        .par_iter()
        .map(|v| -> anyhow::Result<Vec<String>> {
            let mut raw = base;
            raw.set(&args.variable, &v.to_string())?;
            let scenario = raw
                .to_scenario()
                .with_context(|| format!("{} = {v}", args.variable))?;
            Ok(analyze(&scenario)?.csv_record())
        })
        .collect::<anyhow::Result<_>>()?;
    let out: Box<dyn Write + '_> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(stdout),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn opt_us(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

fn cmd_optimize(args: &OptimizeArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let base = args.scenario.scenario()?;
    let scheme = args.optimize_scheme.unwrap_or(base.scheme().scheme);
    let mut grids = SearchGrids::default();
    if let Some(t) = &args.t_grid {
        grids.t_us = parse_values(t)?;
    }
    if let Some(w) = &args.ws_grid {
        grids.w_s = parse_u32s(w)?;
    }
    if let Some(b) = &args.beta_grid {
        grids.beta = parse_values(b)?;
    }
    let problem = OptimizationProblem::new(base, scheme, args.loss_cap).with_grids(grids);
    let result = optimize_any(&problem)?;
    let b = &result.best;
    writeln!(stdout, "scheme={} feasible={}", result.scheme, result.feasible)?;
    writeln!(
        stdout,
        "PT_alone={:.6} PT_floor={:.6}",
        result.baseline_pt, result.pt_floor
    )?;
    writeln!(
        stdout,
        "best t_us={} W_s={} beta={} PT={:.6} ST={:.6}",
        opt_us(b.t_us),
        b.w_s,
        opt_us(b.beta),
        b.pt,
        b.st
    )?;
    if let Some(path) = &args.grid_out {
        write_grid_csv(create(path)?, &result.grid)?;
    }
    if args.actual_n_primary.is_some() || args.actual_lambda_primary.is_some() {
        let assumed = *problem.base.network();
        let mut actual = assumed;
        if let Some(n) = args.actual_n_primary {
            actual.n_primary = n;
        }
        if let Some(l) = args.actual_lambda_primary {
            actual.lambda_primary = l;
        }
        let row = evaluate_mismatch(&problem, &Mismatch { assumed, actual })?;
        writeln!(
            stdout,
            "deployed N_p={} lambda_p={}: PT={:.6} ST={:.6} PT_alone={:.6}",
            actual.n_primary, actual.lambda_primary, row.pt, row.st, row.baseline_pt
        )?;
    }
    Ok(())
}

fn write_discrepancy_text(out: &mut dyn Write, label: &str, d: &Discrepancy) -> io::Result<()> {
    let f = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
    for c in &d.checks {
        writeln!(
            out,
            "{label:<16} {:<8} model={:<10} sim={:<10} se={:<10} {}",
            c.metric.name(),
            f(c.analytic),
            f(c.simulated),
            f(c.se),
            c.status.name()
        )?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    if args.run.replications == 0 {
        bail!("replications must be ≥ 1");
    }
    let scenario = args.scenario.scenario()?;
    let config = args.run.sim_config(scenario);
    config.validate()?;
    let mut runs = Vec::with_capacity(args.run.replications);
    if let Some(path) = &args.trace {
        let mut w = create(path)?;
        runs.push(run_simulation_traced(&config, &mut w)?);
        w.flush()?;
        if args.run.replications > 1 {
            let rest = run_replications(&config, args.run.replications)?;
            runs.extend(rest.into_iter().skip(1));
        }
    } else {
        runs = run_replications(&config, args.run.replications)?;
    }
    let summary = summarize(&runs)?;
    let analysis = analyze(&scenario)?;
    let d = compare_to_analytical(&summary, &analysis, &Tolerance::default())?;
    writeln!(
        stdout,
        "replications={} run_length={} warmup={} batches={} seed={}",
        args.run.replications, config.run_length, config.warmup, config.batches, config.seed
    )?;
    write_discrepancy_text(stdout, "simulate", &d)?;
    if let Some(path) = &args.out {
        write_stats_csv(create(path)?, &runs)?;
    }
    if let Some(path) = &args.summary {
        write_summary_csv(create(path)?, &summary)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SuiteFile {
    #[serde(default)]
    scenario: Vec<toml::Table>,
}

/// A named scenario of a validation suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub name: String,
    pub scenario: Scenario,
}

/// Reads `[[scenario]]` tables; each holds a `name` and config keys over
/// the `reference` preset unless it names another.
pub fn load_suite(path: &Path) -> anyhow::Result<Vec<SuiteEntry>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let file: SuiteFile = toml::from_str(&text).with_context(|| format!("{}", path.display()))?;
    file.scenario
        .into_iter()
        .enumerate()
        .map(|(i, mut table)| {
            let name = match table.remove("name") {
                Some(toml::Value::String(s)) => s,
                Some(_) => bail!("scenario {i}: name must be a string"),
                None => format!("scenario{i}"),
            };
            let mut o: ConfigOverrides = table
                .try_into()
                .with_context(|| format!("scenario '{name}'"))?;
            if o.preset.is_none() {
                o.preset = Some(REFERENCE_PRESET.to_string());
            }
            let scenario = o
                .resolve()
                .and_then(|r| r.to_scenario())
                .with_context(|| format!("scenario '{name}'"))?;
            Ok(SuiteEntry { name, scenario })
        })
        .collect()
}

/// Saturated N_p × scan-length grid, the N_p = N_s = 16 short-scan family
/// and an unsaturated primary network.
pub fn default_suite() -> Vec<SuiteEntry> {
    let mut out = Vec::new();
    let base = RawConfig::preset(REFERENCE_PRESET).expect("preset exists");
    let mut push = |name: String, raw: RawConfig| {
        out.push(SuiteEntry {
            name,
            scenario: raw.to_scenario().expect("built-in suite is valid"),
        });
    };
    for np in [6, 15, 30] {
        for t in [50.0, 100.0, 150.0] {
            let raw = RawConfig { n_primary: np, n_secondary: 15, scan_t_us: t, ..base };
            push(format!("np{np}_t{t}"), raw);
        }
    }
    for t in [20.0, 100.0, 300.0] {
        let raw = RawConfig { n_primary: 16, n_secondary: 16, scan_t_us: t, ..base };
        push(format!("np16_ns16_t{t}"), raw);
    }
    let raw = RawConfig { n_primary: 15, n_secondary: 15, lambda_primary: 0.05, ..base };
    push("np15_lambda0.05".into(), raw);
    out
}

fn cmd_validate(args: &ValidateArgs, stdout: &mut dyn Write) -> anyhow::Result<bool> {
    let suite = match &args.scenarios {
        Some(path) => load_suite(path)?,
        None => default_suite(),
    };
    if args.run.replications == 0 {
        bail!("replications must be ≥ 1");
    }
    let tol = Tolerance {
        se_multiplier: args.se_multiplier,
        max_relative_pt: (args.max_relative_pt >= 0.0).then_some(args.max_relative_pt),
        metrics: match &args.metrics {
            Some(list) => list
                .split(',')
                .map(|m| m.trim().parse::<Metric>())
                .collect::<crate::Result<_>>()?,
            None => Metric::ALL.to_vec(),
        },
    };
    let mut results = Vec::with_capacity(suite.len());
    for entry in &suite {
        let config = args.run.sim_config(entry.scenario);
        let runs = run_replications(&config, args.run.replications)?;
        let summary = summarize(&runs)?;
        let analysis = analyze(&entry.scenario)?;
        let d = match args.inject_bias {
            Some(bias) => compare_with_bias(&summary, &analysis, &tol, bias)?,
            None => compare_to_analytical(&summary, &analysis, &tol)?,
        };
        results.push((entry.name.clone(), d));
    }
    let mut all_passed = true;
    for (name, d) in &results {
        write_discrepancy_text(stdout, name, d)?;
        all_passed &= d.passed();
    }
    let failed = results
        .iter()
        .flat_map(|(_, d)| &d.checks)
        .filter(|c| c.status == CheckStatus::Fail)
        .count();
    writeln!(
        stdout,
        "{}: {} scenarios, {} failed checks",
        if all_passed { "PASS" } else { "FAIL" },
        results.len(),
        failed
    )?;
    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(DISCREPANCY_CSV_HEADER)?;
        for (name, d) in &results {
            write_discrepancy_rows(&mut w, name, d, &tol)?;
        }
        w.flush()?;
    }
    Ok(all_passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists_and_ranges() {
        assert_eq!(parse_values("6:30:3").unwrap(), vec![6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0]);
        assert_eq!(parse_values("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_values("20, 50,100").unwrap(), vec![20.0, 50.0, 100.0]);
        assert!(parse_values("").unwrap().is_empty());
        assert!(parse_values("5:1:1").is_err());
        assert!(parse_values("1:5").is_err());
        assert!(parse_u32s("1.5").is_err());
    }

    #[test]
    fn flags_override_preset() {
        let a = ScenarioArgs {
            n_primary: Some(16),
            scan_t_us: Some(20.0),
            ..Default::default()
        };
        let s = a.scenario().unwrap();
        assert_eq!(s.network().n_primary, 16);
        assert!((s.timing().scan_t - 1.0).abs() < 1e-12);
        assert_eq!(s.network().n_secondary, Scenario::reference().network().n_secondary);
    }

    #[test]
    fn default_suite_is_valid() {
        let s = default_suite();
        assert_eq!(s.len(), 13);
        let mut names: Vec<_> = s.iter().map(|e| &e.name).collect();
        names.dedup();
        assert_eq!(names.len(), 13);
    }
}
