//! One fully solved scenario: fixed points, slot distributions, scan chain
//! and throughput under the scenario's scheme.

use crate::error::Result;
use crate::fixed_point::{solve_state1, solve_state2, State1Solution, State2Solution};
use crate::params::{Scenario, Scheme};
use crate::scan::{scan_model, state1_slots, state2_slots, ScanOutcomeModel, State1SlotDistribution, State2SlotDistribution};
use crate::throughput::{throughput_coexist, throughput_sensing, throughput_silence, ThroughputReport};

#[derive(Debug, Clone, Copy)]
pub struct Analysis {
    pub scenario: Scenario,
    pub state1: State1Solution,
    pub state2: State2Solution,
    pub slots1: State1SlotDistribution,
    pub slots2: State2SlotDistribution,
    /// Always computed; only the sensing scheme's throughput depends on it.
    pub scan: ScanOutcomeModel,
    pub report: ThroughputReport,
}

pub fn analyze(scenario: &Scenario) -> Result<Analysis> {
    let n = scenario.network();
    Ok(analyze_solved(scenario, solve_state1(n)?, solve_state2(n)?))
}

/// Completes an analysis from fixed points already solved for the
/// scenario's network; they do not depend on timing or scheme.
pub fn analyze_solved(scenario: &Scenario, state1: State1Solution, state2: State2Solution) -> Analysis {
    let n = scenario.network();
    let timing = scenario.timing();
    let slots1 = state1_slots(&state1, n.n_primary, timing);
    let slots2 = state2_slots(&state2, n, timing);
    let scan = scan_model(&slots1, &slots2, timing);
    let report = match scenario.scheme().scheme {
        Scheme::Sensing => throughput_sensing(&slots1, &slots2, &scan, timing),
        Scheme::SilentPeriod => throughput_silence(&slots1, &slots2, scenario.scheme().beta, timing),
        Scheme::Coexist => throughput_coexist(&slots1, &slots2, timing),
    };
    Analysis {
        scenario: *scenario,
        state1,
        state2,
        slots1,
        slots2,
        scan,
        report,
    }
}

/// Column names of [`Analysis::csv_record`].
pub const CSV_HEADER: [&str; 27] = [
    "scheme",
    "n_primary",
    "n_secondary",
    "w_primary",
    "w_secondary",
    "m_primary",
    "m_secondary",
    "lambda_primary",
    "lambda_secondary",
    "scan_t_us",
    "period_T_us",
    "beta",
    "tau_p1",
    "p_p1",
    "tau_p2",
    "tau_s2",
    "p_p2",
    "p_s2",
    "p_slot",
    "q_slot",
    "alpha_b",
    "alpha_i",
    "alpha_c",
    "pt",
    "st",
    "st_conditional",
    "baseline_pt",
];

impl Analysis {
    pub fn csv_record(&self) -> Vec<String> {
        let n = self.scenario.network();
        let us = self.scenario.timing().to_micros();
        let s = self.scenario.scheme();
        let r = &self.report;
        let f = |x: f64| format!("{x}");
        vec![
            s.scheme.name().to_string(),
            n.n_primary.to_string(),
            n.n_secondary.to_string(),
            n.w_primary.to_string(),
            n.w_secondary.to_string(),
            n.m_primary.to_string(),
            n.m_secondary.to_string(),
            f(n.lambda_primary),
            f(n.lambda_secondary),
            f(round_us(us.scan_t_us)),
            f(round_us(us.period_t_us)),
            f(s.beta),
            f(self.state1.tau_p1),
            f(self.state1.p_p1),
            f(self.state2.tau_p2),
            f(self.state2.tau_s2),
            f(self.state2.p_p2),
            f(self.state2.p_s2),
            f(self.slots1.p_slot),
            f(self.slots2.q_slot),
            f(self.scan.alpha_b),
            f(self.scan.alpha_i),
            r.alpha_c.map(f).unwrap_or_default(),
            f(r.pt),
            f(r.st),
            f(r.st_conditional),
            f(r.baseline_pt),
        ]
    }
}

/// Drops the float noise of a µs → slot → µs round trip.
pub(crate) fn round_us(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}
