use std::io::Write;

use super::stats::{analytic_values, Metric, SimSummary};
use crate::analysis::Analysis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerance {
    /// A metric passes when `|sim - model| <= se_multiplier * SE`.
    pub se_multiplier: f64,
    /// Additional cap on the relative PT error.
    pub max_relative_pt: Option<f64>,
    pub metrics: Vec<Metric>,
}

impl Default for Tolerance {
    /// 3 standard errors, 5 % relative PT error, every metric.
    fn default() -> Self {
        Self {
            se_multiplier: 3.0,
            max_relative_pt: Some(0.05),
            metrics: Metric::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// One side has no value (e.g. no collisions observed) or no SE.
    Skipped,
}

impl CheckStatus {
    pub fn name(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCheck {
    pub metric: Metric,
    pub analytic: Option<f64>,
    pub simulated: Option<f64>,
    pub se: Option<f64>,
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub checks: Vec<MetricCheck>,
}

impl Discrepancy {
    /// No check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, m: Metric) -> Option<&MetricCheck> {
        self.checks.iter().find(|c| c.metric == m)
    }
}

/// Compares simulated estimates with the model for the same scenario.
pub fn compare_to_analytical(sim: &SimSummary, analysis: &Analysis, tol: &Tolerance) -> Result<Discrepancy> {
    compare_values(sim, &analytic_values(analysis), analysis, tol)
}

/// As [`compare_to_analytical`], with the model's PT scaled by
/// `1 + pt_bias` (a negative control for the comparison itself).
pub fn compare_with_bias(sim: &SimSummary, analysis: &Analysis, tol: &Tolerance, pt_bias: f64) -> Result<Discrepancy> {
    let mut values = analytic_values(analysis);
    if let Some(pt) = values[Metric::Pt as usize].as_mut() {
        *pt *= 1.0 + pt_bias;
    }
    compare_values(sim, &values, analysis, tol)
}

fn compare_values(sim: &SimSummary, model: &[Option<f64>; 6], analysis: &Analysis, tol: &Tolerance) -> Result<Discrepancy> {
    if sim.scenario != analysis.scenario {
        return Err(Error::Mismatch(
            "simulation and model were computed for different scenarios".into(),
        ));
    }
    let checks = tol
        .metrics
        .iter()
        .map(|&metric| {
            let analytic = model[metric as usize];
            let simulated = sim.value(metric);
            let se = sim.se(metric);
            let (abs_err, rel_err) = match (analytic, simulated) {
                (Some(a), Some(s)) => {
                    let d = (s - a).abs();
                    (Some(d), (a != 0.0).then(|| d / a.abs()))
                }
                _ => (None, None),
            };
            let status = match (abs_err, se) {
                (Some(d), Some(se)) => {
                    let within_se = d <= tol.se_multiplier * se;
                    let within_rel = match (metric, tol.max_relative_pt) {
                        (Metric::Pt, Some(cap)) => rel_err.map_or(d == 0.0, |r| r <= cap),
                        _ => true,
                    };
                    if within_se && within_rel {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    }
                }
                _ => CheckStatus::Skipped,
            };
            MetricCheck {
                metric,
                analytic,
                simulated,
                se,
                abs_err,
                rel_err,
                status,
            }
        })
        .collect();
    Ok(Discrepancy { checks })
}

pub const DISCREPANCY_CSV_HEADER: [&str; 9] = [
    "scenario",
    "metric",
    "analytic",
    "simulated",
    "se",
    "abs_err",
    "rel_err",
    "status",
    "tolerance_se",
];

/// Appends one row per check, labelled with `scenario`.
pub fn write_discrepancy_rows<W: Write>(
    w: &mut csv::Writer<W>,
    scenario: &str,
    d: &Discrepancy,
    tol: &Tolerance,
) -> Result<()> {
    let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for c in &d.checks {
        w.write_record([
            scenario.to_string(),
            c.metric.name().to_string(),
            f(c.analytic),
            f(c.simulated),
            f(c.se),
            f(c.abs_err),
            f(c.rel_err),
            c.status.name().to_string(),
            tol.se_multiplier.to_string(),
        ])?;
    }
    Ok(())
}
