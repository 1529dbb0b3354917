//! Transmission-slot distributions and the busy/idle chain of scan outcomes.
//!
//! A transmission slot (TS) is idle (one real-time slot), a success
//! (airtime + DIFS) or a collision (airtime + EIFS). Scans are not aligned
//! with TS boundaries, so the probability that a scan of length `t` finds
//! the channel busy is computed over a uniformly random phase of the TS
//! renewal sequence.

use crate::fixed_point::{State1Solution, State2Solution};
use crate::params::{NetworkParams, TimingParams};

/// TS types when only the primary network contends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State1SlotDistribution {
    pub p_idle: f64,
    pub p_succ: f64,
    pub p_coll: f64,
    /// Probability that a given real-time slot starts a TS.
    pub p_slot: f64,
}

/// TS types when both networks contend. The first letter is the primary
/// outcome, the second the secondary one (i: idle, s: success,
/// c: collision); `q_cc` covers every slot where both networks transmit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State2SlotDistribution {
    pub q_ii: f64,
    pub q_si: f64,
    pub q_is: f64,
    pub q_ci: f64,
    pub q_ic: f64,
    pub q_cc: f64,
    pub q_slot: f64,
    /// Probability that no primary transmits in a slot (secondaries are
    /// silent while scanning).
    pub q_i: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOutcomeModel {
    /// Busy given the previous scan was busy.
    pub alpha_b: f64,
    /// Busy given the previous scan was idle.
    pub alpha_i: f64,
    /// Stationary busy probability.
    pub alpha_c: f64,
}

/// Idle, single-success and collision probabilities of `n` nodes each
/// transmitting with probability `tau`.
fn outcome_probabilities(n: u32, tau: f64) -> (f64, f64, f64) {
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    let idle = (1.0 - tau).powi(n as i32);
    let succ = n as f64 * tau * (1.0 - tau).powi(n as i32 - 1);
    let coll = if n == 1 {
        0.0
    } else {
        (1.0 - idle - succ).max(0.0)
    };
    (idle, succ, coll)
}

pub fn state1_slots(sol: &State1Solution, n_primary: u32, timing: &TimingParams) -> State1SlotDistribution {
    let (p_idle, p_succ, p_coll) = outcome_probabilities(n_primary, sol.tau_p1);
    let mean = p_succ * timing.primary_success_slot()
        + p_coll * timing.primary_collision_slot()
        + p_idle;
    State1SlotDistribution {
        p_idle,
        p_succ,
        p_coll,
        p_slot: 1.0 / mean,
    }
}

pub fn state2_slots(sol: &State2Solution, params: &NetworkParams, timing: &TimingParams) -> State2SlotDistribution {
    let (pi, ps, pc) = outcome_probabilities(params.n_primary, sol.tau_p2);
    let (si, ss, sc) = outcome_probabilities(params.n_secondary, sol.tau_s2);
    let q_ii = pi * si;
    let q_si = ps * si;
    let q_is = pi * ss;
    let q_ci = pc * si;
    let q_ic = pi * sc;
    let q_cc = (1.0 - pi) * (1.0 - si);
    let mean = q_si * timing.primary_success_slot()
        + q_is * timing.secondary_success_slot()
        + q_ci * timing.primary_collision_slot()
        + q_ic * timing.secondary_collision_slot()
        + q_cc * timing.cross_collision_slot()
        + q_ii;
    State2SlotDistribution {
        q_ii,
        q_si,
        q_is,
        q_ci,
        q_ic,
        q_cc,
        q_slot: 1.0 / mean,
        q_i: pi,
    }
}

impl State1SlotDistribution {
    pub fn sum(&self) -> f64 {
        self.p_idle + self.p_succ + self.p_coll
    }

    /// Fractions of real time spent in idle, successful and collision slots.
    pub fn time_shares(&self, timing: &TimingParams) -> [f64; 3] {
        [
            self.p_slot * self.p_idle,
            self.p_slot * self.p_succ * timing.primary_success_slot(),
            self.p_slot * self.p_coll * timing.primary_collision_slot(),
        ]
    }
}

impl State2SlotDistribution {
    pub fn sum(&self) -> f64 {
        self.q_ii + self.q_si + self.q_is + self.q_ci + self.q_ic + self.q_cc
    }

    /// Fractions of real time per slot type, in the order
    /// ii, si, is, ci, ic, cc.
    pub fn time_shares(&self, timing: &TimingParams) -> [f64; 6] {
        let q = self.q_slot;
        [
            q * self.q_ii,
            q * self.q_si * timing.primary_success_slot(),
            q * self.q_is * timing.secondary_success_slot(),
            q * self.q_ci * timing.primary_collision_slot(),
            q * self.q_ic * timing.secondary_collision_slot(),
            q * self.q_cc * timing.cross_collision_slot(),
        ]
    }
}

/// `[x]^+`.
pub fn pos_part(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Busy probability of a scan that follows a busy scan, i.e. taken while
/// only the primary network contends.
///
/// A scan of `t` slots is idle when it falls entirely inside idle time:
/// the DIFS/EIFS tail of a busy TS followed by idle TSs, or a run of idle
/// TSs only.
pub fn alpha_b(dist: &State1SlotDistribution, timing: &TimingParams) -> f64 {
    let busy_share = dist.p_succ + dist.p_coll;
    if busy_share == 0.0 {
        return 0.0;
    }
    let t = timing.scan_t;
    let t_d = t - timing.difs;
    let t_e = t - timing.eifs;
    let pi = dist.p_idle;
    let idle = dist.p_slot
        * ((dist.p_succ * pi.powf(pos_part(t_d)) + dist.p_coll * pi.powf(pos_part(t_e)))
            / busy_share
            + dist.p_succ * pos_part(-t_d)
            + dist.p_coll * pos_part(-t_e));
    (1.0 - idle).clamp(0.0, 1.0)
}

/// `(q^a - q^b) / (1 - q)` for `0 <= a <= b`, continuous at `q = 1`
/// (where it equals `b - a`).
fn geometric_span(q: f64, a: f64, b: f64) -> f64 {
    let d = b - a;
    if d <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return d;
    }
    if q <= 0.0 {
        return if a == 0.0 { 1.0 } else { 0.0 };
    }
    q.powf(a) * -(d * q.ln()).exp_m1() / (1.0 - q)
}

/// Busy probability of a scan that follows an idle scan: the scan starts
/// out of a State-2 TS sequence and sees the primary transmitting with its
/// State-2 probability. Secondary airtime ahead of the scan is idle for the
/// scan; the `TsSuc - 1` and `TsCol - 1` terms account for secondary
/// transmissions that stop just before the scan begins.
pub fn alpha_i(dist: &State2SlotDistribution, timing: &TimingParams) -> f64 {
    let q_i = dist.q_i;
    if q_i >= 1.0 {
        return 0.0;
    }
    let t = timing.scan_t;
    let t_d = t - timing.difs;
    let t_e = t - timing.eifs;
    let after_success = geometric_span(q_i, pos_part(t_d), t) + pos_part(-t_d);
    let after_collision = geometric_span(q_i, pos_part(t_e), t) + pos_part(-t_e);
    let idle = dist.q_slot
        * (q_i.powf(t)
            + after_success * (dist.q_si + dist.q_is)
            + (timing.ts_suc - 1.0) * dist.q_is * q_i.powf(pos_part(t_d))
            + (timing.ts_col - 1.0) * dist.q_ic * q_i.powf(pos_part(t_e))
            + after_collision * (dist.q_ci + dist.q_ic + dist.q_cc));
    (1.0 - idle).clamp(0.0, 1.0)
}

/// Stationary busy probability of the two-state scan chain.
pub fn alpha_c_steady(alpha_b: f64, alpha_i: f64) -> f64 {
    if alpha_i == 0.0 {
        return 0.0;
    }
    alpha_i / (1.0 + alpha_i - alpha_b)
}

/// Busy probability `n` scans after starting from `alpha_c0`.
pub fn alpha_c_after(alpha_b: f64, alpha_i: f64, alpha_c0: f64, n: usize) -> f64 {
    let mut a = alpha_c0;
    for _ in 0..n {
        a = alpha_b * a + alpha_i * (1.0 - a);
    }
    a
}

pub fn scan_model(
    d1: &State1SlotDistribution,
    d2: &State2SlotDistribution,
    timing: &TimingParams,
) -> ScanOutcomeModel {
    let alpha_b = alpha_b(d1, timing);
    let alpha_i = alpha_i(d2, timing);
    ScanOutcomeModel {
        alpha_b,
        alpha_i,
        alpha_c: alpha_c_steady(alpha_b, alpha_i),
    }
}
