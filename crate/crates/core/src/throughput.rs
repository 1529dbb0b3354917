//! Primary and secondary throughput, as fractions of real time spent in
//! successful transmissions, under the three secondary access schemes.

use serde::Serialize;

use crate::params::{Scheme, SchemeConfig, TimingParams};
use crate::scan::{ScanOutcomeModel, State1SlotDistribution, State2SlotDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputReport {
    pub pt: f64,
    pub st: f64,
    /// Secondary throughput while the secondary is allowed to contend.
    pub st_conditional: f64,
    /// Stationary busy-scan probability; sensing scheme only.
    pub alpha_c: Option<f64>,
    /// Primary throughput with no secondary network at all.
    pub baseline_pt: f64,
    pub scheme: SchemeConfig,
}

fn state1_primary(d1: &State1SlotDistribution, timing: &TimingParams) -> f64 {
    d1.p_slot * d1.p_succ * timing.primary_payload()
}

fn state2_primary(d2: &State2SlotDistribution, timing: &TimingParams) -> f64 {
    d2.q_slot * d2.q_si * timing.primary_payload()
}

fn state2_secondary(d2: &State2SlotDistribution, timing: &TimingParams) -> f64 {
    d2.q_slot * d2.q_is * timing.secondary_payload()
}

/// Primary throughput of the primary network alone.
pub fn primary_alone(d1: &State1SlotDistribution, timing: &TimingParams) -> f64 {
    state1_primary(d1, timing)
}

/// Secondary contends only after an idle scan; a busy scan holds it off
/// until the next one.
pub fn throughput_sensing(
    d1: &State1SlotDistribution,
    d2: &State2SlotDistribution,
    scan: &ScanOutcomeModel,
    timing: &TimingParams,
) -> ThroughputReport {
    let a = scan.alpha_c;
    let st_conditional = state2_secondary(d2, timing);
    ThroughputReport {
        pt: a * state1_primary(d1, timing) + (1.0 - a) * state2_primary(d2, timing),
        st: (1.0 - a) * st_conditional,
        st_conditional,
        alpha_c: Some(a),
        baseline_pt: state1_primary(d1, timing),
        scheme: SchemeConfig::sensing(),
    }
}

/// Secondary contends a fraction `beta` of the time regardless of the
/// channel. `beta` outside (0, 1] is accepted here for limit checks.
pub fn throughput_silence(
    d1: &State1SlotDistribution,
    d2: &State2SlotDistribution,
    beta: f64,
    timing: &TimingParams,
) -> ThroughputReport {
    report_with_beta(d1, d2, beta, timing, SchemeConfig { scheme: Scheme::SilentPeriod, beta })
}

/// Secondary always contends.
pub fn throughput_coexist(
    d1: &State1SlotDistribution,
    d2: &State2SlotDistribution,
    timing: &TimingParams,
) -> ThroughputReport {
    report_with_beta(d1, d2, 1.0, timing, SchemeConfig::coexist())
}

fn report_with_beta(
    d1: &State1SlotDistribution,
    d2: &State2SlotDistribution,
    beta: f64,
    timing: &TimingParams,
    scheme: SchemeConfig,
) -> ThroughputReport {
    let st_conditional = state2_secondary(d2, timing);
    ThroughputReport {
        pt: (1.0 - beta) * state1_primary(d1, timing) + beta * state2_primary(d2, timing),
        st: beta * st_conditional,
        st_conditional,
        alpha_c: None,
        baseline_pt: state1_primary(d1, timing),
        scheme,
    }
}
