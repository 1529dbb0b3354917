//! Exhaustive grid search for the secondary parameters that maximize
//! secondary throughput while keeping primary throughput within a loss cap
//! of what the primary achieves alone.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze, analyze_solved, Analysis};
use crate::error::{Error, Result};
use crate::fixed_point::{solve_state1, solve_state2};
use crate::params::{NetworkParams, Scenario, Scheme, SchemeConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrids {
    /// Scan lengths in µs (sensing only).
    pub t_us: Vec<f64>,
    pub w_s: Vec<u32>,
    /// Contention fractions (silent period only).
    pub beta: Vec<f64>,
}

impl Default for SearchGrids {
    /// t ∈ {0, 5, …, 600} µs, W_s ∈ {4, …, 512}, β ∈ {0.05, 0.10, …, 1}.
    fn default() -> Self {
        Self {
            t_us: (0..=120).map(|k| 5.0 * k as f64).collect(),
            w_s: (4..=512).collect(),
            beta: (1..=20).map(|k| k as f64 / 20.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationProblem {
    /// Fixed network and timing; `w_secondary`, the scan length and the
    /// scheme are overridden by the search.
    pub base: Scenario,
    pub scheme: Scheme,
    /// Allowed fractional loss of primary throughput.
    pub loss_cap: f64,
    pub grids: SearchGrids,
}

impl OptimizationProblem {
    pub fn new(base: Scenario, scheme: Scheme, loss_cap: f64) -> Self {
        Self {
            base,
            scheme,
            loss_cap,
            grids: SearchGrids::default(),
        }
    }

    pub fn with_grids(mut self, grids: SearchGrids) -> Self {
        self.grids = grids;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.loss_cap > 0.0 && self.loss_cap <= 1.0) {
            return Err(Error::invalid("loss_cap", "loss_cap must be in (0,1]"));
        }
        if self.grids.w_s.is_empty() {
            return Err(Error::invalid("w_s_grid", "W_s grid is empty"));
        }
        if let Some(&w) = self.grids.w_s.iter().find(|&&w| w == 0) {
            return Err(Error::invalid("w_s_grid", format!("W_s must be ≥ 1, got {w}")));
        }
        match self.scheme {
            Scheme::Sensing => {
                if self.grids.t_us.is_empty() {
                    return Err(Error::invalid("t_grid", "t grid is empty"));
                }
                let period = self.base.timing().to_micros().period_t_us;
                if let Some(&t) = self.grids.t_us.iter().find(|&&t| !(t >= 0.0 && t < period)) {
                    return Err(Error::invalid("t_grid", format!("t = {t} µs outside [0, T)")));
                }
            }
            Scheme::SilentPeriod => {
                if self.grids.beta.is_empty() {
                    return Err(Error::invalid("beta_grid", "beta grid is empty"));
                }
                if let Some(&b) = self.grids.beta.iter().find(|&&b| !(b > 0.0 && b <= 1.0)) {
                    return Err(Error::invalid("beta_grid", format!("beta = {b} outside (0,1]")));
                }
            }
            Scheme::Coexist => {}
        }
        Ok(())
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub scheme: Scheme,
    /// Scan length, sensing only.
    pub t_us: Option<f64>,
    pub w_s: u32,
    /// Contention fraction, silent period only.
    pub beta: Option<f64>,
    pub pt: f64,
    pub st: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub scheme: Scheme,
    /// Best feasible point, or the point with the highest PT when none is
    /// feasible.
    pub best: GridPoint,
    pub baseline_pt: f64,
    /// `(1 - loss_cap) * baseline_pt`.
    pub pt_floor: f64,
    pub feasible: bool,
    /// Every evaluated point, W_s-major in grid order.
    pub grid: Vec<GridPoint>,
}

/// Scenario realizing a grid point on top of `base`.
pub fn scenario_for(base: &Scenario, point: &GridPoint) -> Result<Scenario> {
    let mut network = *base.network();
    network.w_secondary = point.w_s;
    let mut timing = *base.timing();
    if let Some(t) = point.t_us {
        timing = timing.with_scan_us(t)?;
    }
    let scheme = match point.scheme {
        Scheme::Sensing => SchemeConfig::sensing(),
        Scheme::SilentPeriod => SchemeConfig::silent_period(point.beta.unwrap_or(1.0))?,
        Scheme::Coexist => SchemeConfig::coexist(),
    };
    crate::params::validate(network, timing, scheme)
}

/// Re-evaluates a grid point from scratch.
pub fn evaluate_point(base: &Scenario, point: &GridPoint) -> Result<Analysis> {
    analyze(&scenario_for(base, point)?)
}

/// Higher ST first, then smaller W_s, smaller t, larger β.
fn rank_by_st(a: &GridPoint, b: &GridPoint) -> Ordering {
    b.st.total_cmp(&a.st).then_with(|| tie_break(a, b))
}

fn rank_by_pt(a: &GridPoint, b: &GridPoint) -> Ordering {
    b.pt.total_cmp(&a.pt).then_with(|| tie_break(a, b))
}

fn tie_break(a: &GridPoint, b: &GridPoint) -> Ordering {
    a.w_s
        .cmp(&b.w_s)
        .then_with(|| opt_cmp(a.t_us, b.t_us))
        .then_with(|| opt_cmp(b.beta, a.beta))
}

fn opt_cmp(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        _ => Ordering::Equal,
    }
}

fn optimize(problem: &OptimizationProblem, expected: Scheme) -> Result<OptimizationResult> {
    if problem.scheme != expected {
        return Err(Error::InvalidArgument(format!(
            "problem is for scheme {}, not {expected}",
            problem.scheme
        )));
    }
    problem.validate()?;
    let base = problem.base;
    let state1 = solve_state1(base.network())?;
    let baseline_pt = analyze_solved(&base, state1, solve_state2(base.network())?)
        .report
        .baseline_pt;
    let pt_floor = (1.0 - problem.loss_cap) * baseline_pt;

    let per_window: Vec<Result<Vec<GridPoint>>> = problem
        .grids
        .w_s
        .par_iter()
        .map(|&w_s| {
            let network = NetworkParams {
                w_secondary: w_s,
                ..*base.network()
            };
            let state2 = solve_state2(&network)?;
            let mut points = Vec::new();
            let mut push = |scenario: Scenario, t_us: Option<f64>, beta: Option<f64>| {
                let r = analyze_solved(&scenario, state1, state2).report;
                points.push(GridPoint {
                    scheme: expected,
                    t_us,
                    w_s,
                    beta,
                    pt: r.pt,
                    st: r.st,
                    feasible: r.pt >= pt_floor,
                });
            };
            match expected {
                Scheme::Sensing => {
                    for &t in &problem.grids.t_us {
                        let timing = base.timing().with_scan_us(t)?;
                        let s = crate::params::validate(network, timing, SchemeConfig::sensing())?;
                        push(s, Some(t), None);
                    }
                }
                Scheme::SilentPeriod => {
                    for &b in &problem.grids.beta {
                        let s = crate::params::validate(
                            network,
                            *base.timing(),
                            SchemeConfig::silent_period(b)?,
                        )?;
                        push(s, None, Some(b));
                    }
                }
                Scheme::Coexist => {
                    let s = crate::params::validate(network, *base.timing(), SchemeConfig::coexist())?;
                    push(s, None, None);
                }
            }
            Ok(points)
        })
        .collect();

    let mut grid = Vec::new();
    for chunk in per_window {
        grid.extend(chunk?);
    }
    let best_feasible = grid.iter().filter(|p| p.feasible).min_by(|a, b| rank_by_st(a, b));
    let (best, feasible) = match best_feasible {
        Some(p) => (*p, true),
        None => (
            *grid
                .iter()
                .min_by(|a, b| rank_by_pt(a, b))
                .expect("grid is non-empty"),
            false,
        ),
    };
    Ok(OptimizationResult {
        scheme: expected,
        best,
        baseline_pt,
        pt_floor,
        feasible,
        grid,
    })
}

/// Best (t, W_s) for the sensing scheme.
pub fn optimize_sensing(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    optimize(problem, Scheme::Sensing)
}

/// Best (β, W_s) for the silent-period scheme.
pub fn optimize_silence(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    optimize(problem, Scheme::SilentPeriod)
}

/// Best W_s when the secondary always contends.
pub fn optimize_coexist(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    optimize(problem, Scheme::Coexist)
}

/// Dispatches on `problem.scheme`.
pub fn optimize_any(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    optimize(problem, problem.scheme)
}

pub const GRID_CSV_HEADER: [&str; 7] = ["scheme", "t_us", "w_s", "beta", "pt", "st", "feasible"];

fn opt_field(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the evaluated grid; columns as in [`GRID_CSV_HEADER`], empty
/// cells where a parameter does not apply to the scheme.
pub fn write_grid_csv<W: Write>(out: W, grid: &[GridPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRID_CSV_HEADER)?;
    for p in grid {
        w.write_record([
            p.scheme.name().to_string(),
            opt_field(p.t_us),
            p.w_s.to_string(),
            opt_field(p.beta),
            p.pt.to_string(),
            p.st.to_string(),
            p.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Network the secondary was designed for vs the one actually deployed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mismatch {
    pub assumed: NetworkParams,
    pub actual: NetworkParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessRow {
    pub mismatch: Mismatch,
    /// Optimum found for the assumed network.
    pub design: GridPoint,
    pub design_feasible: bool,
    /// Throughput achieved when the design runs on the actual network.
    pub pt: f64,
    pub st: f64,
    /// Primary throughput of the actual primary network alone.
    pub baseline_pt: f64,
}

/// Optimizes against the assumed network and evaluates the design on the
/// actual one, for `problem.scheme`.
pub fn evaluate_mismatch(problem: &OptimizationProblem, mismatch: &Mismatch) -> Result<RobustnessRow> {
    let assumed = OptimizationProblem {
        base: problem.base.with_network(mismatch.assumed)?,
        ..problem.clone()
    };
    let result = optimize_any(&assumed)?;
    let actual = problem.base.with_network(mismatch.actual)?;
    let a = evaluate_point(&actual, &result.best)?;
    Ok(RobustnessRow {
        mismatch: *mismatch,
        design: result.best,
        design_feasible: result.feasible,
        pt: a.report.pt,
        st: a.report.st,
        baseline_pt: a.report.baseline_pt,
    })
}

/// Every mismatch under all three schemes, scheme-major.
pub fn robustness_sweep(problem: &OptimizationProblem, mismatches: &[Mismatch]) -> Result<Vec<RobustnessRow>> {
    let mut rows = Vec::with_capacity(3 * mismatches.len());
    for scheme in Scheme::ALL {
        let p = OptimizationProblem {
            scheme,
            ..problem.clone()
        };
        for m in mismatches {
            rows.push(evaluate_mismatch(&p, m)?);
        }
    }
    Ok(rows)
}

pub const ROBUSTNESS_CSV_HEADER: [&str; 15] = [
    "scheme",
    "assumed_n_primary",
    "assumed_lambda_primary",
    "actual_n_primary",
    "actual_lambda_primary",
    "n_secondary",
    "t_us",
    "w_s",
    "beta",
    "design_feasible",
    "design_pt",
    "design_st",
    "pt",
    "st",
    "baseline_pt",
];

pub fn write_robustness_csv<W: Write>(out: W, rows: &[RobustnessRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROBUSTNESS_CSV_HEADER)?;
    for r in rows {
        let (a, b) = (r.mismatch.assumed, r.mismatch.actual);
        w.write_record([
            r.design.scheme.name().to_string(),
            a.n_primary.to_string(),
            a.lambda_primary.to_string(),
            b.n_primary.to_string(),
            b.lambda_primary.to_string(),
            b.n_secondary.to_string(),
            opt_field(r.design.t_us),
            r.design.w_s.to_string(),
            opt_field(r.design.beta),
            r.design_feasible.to_string(),
            r.design.pt.to_string(),
            r.design.st.to_string(),
            r.pt.to_string(),
            r.st.to_string(),
            r.baseline_pt.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
