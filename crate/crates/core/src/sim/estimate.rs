//! Transmission probability from observed success/collision counts.
//!
//! With `n` nodes each transmitting independently with probability `tau`,
//! the ratio of single-transmission slots to collision slots is
//! `n tau (1-tau)^(n-1) / P(at least two transmit)`, strictly decreasing in
//! `tau`; the estimate inverts it by bisection. For State-2 slots the other
//! network's idle factor cancels from the ratio, so the same inversion
//! applies per network.

use super::engine::SlotKind;
use super::stats::Counters;

/// `P(exactly one) / P(at least two)` for `n` nodes.
pub fn success_collision_ratio(n: u32, tau: f64) -> f64 {
    let q = 1.0 - tau;
    if q == 0.0 {
        return if n == 1 { f64::INFINITY } else { 0.0 };
    }
    let one = n as f64 * tau * q.powi(n as i32 - 1);
    // Binomial tail summed term by term; stable for small tau.
    let mut term = one;
    let mut tail = 0.0;
    for k in 1..n {
        term *= (n - k) as f64 / (k + 1) as f64 * tau / q;
        tail += term;
        if term < tail * 1e-18 {
            break;
        }
    }
    one / tail
}

/// Inverts [`success_collision_ratio`]. `None` when the ratio carries no
/// information: fewer than two nodes, or no successes or no collisions.
pub fn invert_success_collision_ratio(n: u32, successes: u64, collisions: u64) -> Option<f64> {
    if n < 2 || successes == 0 || collisions == 0 {
        return None;
    }
    let target = successes as f64 / collisions as f64;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if success_collision_ratio(n, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauEstimates {
    /// Primary, from slots where only primaries contend.
    pub tau_p1: Option<f64>,
    /// Primary, from slots where both networks contend.
    pub tau_p2: Option<f64>,
    pub tau_s2: Option<f64>,
}

pub(crate) fn tau_from_counters(c: &Counters, n_primary: u32, n_secondary: u32) -> TauEstimates {
    let s1 = &c.counts[0];
    let s2 = &c.counts[1];
    TauEstimates {
        tau_p1: invert_success_collision_ratio(
            n_primary,
            s1[SlotKind::PrimarySuccess as usize],
            s1[SlotKind::PrimaryCollision as usize],
        ),
        tau_p2: invert_success_collision_ratio(
            n_primary,
            s2[SlotKind::PrimarySuccess as usize],
            s2[SlotKind::PrimaryCollision as usize],
        ),
        tau_s2: invert_success_collision_ratio(
            n_secondary,
            s2[SlotKind::SecondarySuccess as usize],
            s2[SlotKind::SecondaryCollision as usize],
        ),
    }
}
