//! Transmission/collision probability fixed points of the DCF back-off chain.
//!
//! The chain per node has states `(i, j)` (stage `i`, counter `j`) plus an
//! empty-queue state `(-1, 0)` when the traffic intensity is below one.
//! `tau(p)` is the stationary probability that a node transmits in a slot
//! given a constant collision probability `p`.

use crate::error::{Error, Result};
use crate::params::NetworkParams;

pub const TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;
const DAMPING: f64 = 0.5;

/// `sum_{k<m} (2p)^k`, i.e. `(1 - (2p)^m) / (1 - 2p)` without the removable
/// singularity at `p = 1/2`.
fn doubling_sum(p: f64, m: u32) -> f64 {
    let r = 2.0 * p;
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..m {
        sum += term;
        term *= r;
    }
    sum
}

/// Denominator shared by `tau` and the stationary distribution:
/// `(W + 1) + p W sum_{k<m}(2p)^k + 2 (1 - p)(1 - λ)/λ`.
fn chain_denominator(p: f64, w: u32, m: u32, lambda: f64) -> f64 {
    let w = w as f64;
    let base = (w + 1.0) + p * w * doubling_sum(p, m);
    if lambda == 1.0 {
        base
    } else {
        base + 2.0 * (1.0 - p) * (1.0 - lambda) / lambda
    }
}

/// Saturated transmission probability for collision probability `p`,
/// window `w` and `m` doubling stages.
pub fn tau_of_p_saturated(p: f64, w: u32, m: u32) -> f64 {
    2.0 / chain_denominator(p, w, m, 1.0)
}

/// Transmission probability of a node with per-slot arrival probability
/// `lambda`. Equals [`tau_of_p_saturated`] bit for bit at `lambda = 1`.
pub fn tau_of_p_unsaturated(p: f64, w: u32, m: u32, lambda: f64) -> f64 {
    2.0 / chain_denominator(p, w, m, lambda)
}

/// Stationary distribution of the per-node back-off chain.
#[derive(Debug, Clone, PartialEq)]
pub struct UnsaturatedStationaryDistribution {
    /// Mass of the empty-queue state `(-1, 0)`.
    pub empty: f64,
    /// `stages[i][j]` is the mass of state `(i, j)`, `j < W_i`.
    pub stages: Vec<Vec<f64>>,
}

impl UnsaturatedStationaryDistribution {
    /// Mass of state `(i, j)`; `i = -1` addresses the empty-queue state.
    pub fn get(&self, i: i64, j: usize) -> f64 {
        if i < 0 {
            if j == 0 {
                self.empty
            } else {
                0.0
            }
        } else {
            self.stages
                .get(i as usize)
                .and_then(|s| s.get(j))
                .copied()
                .unwrap_or(0.0)
        }
    }

    pub fn total(&self) -> f64 {
        self.empty + self.stages.iter().flatten().sum::<f64>()
    }

    /// Probability of transmitting in a slot, the mass of all `(i, 0)`.
    pub fn tau(&self) -> f64 {
        self.stages.iter().map(|s| s[0]).sum()
    }

    pub fn state_count(&self) -> usize {
        1 + self.stages.iter().map(Vec::len).sum::<usize>()
    }
}

/// Closed-form stationary distribution:
/// `s(i,j) = (W_i - j)/W_i · p^i · s00` (stage `m` scaled by `1/(1-p)`) and
/// `s(-1,0) = (1-λ)/λ · s00`.
pub fn stationary_distribution(
    p: f64,
    w: u32,
    m: u32,
    lambda: f64,
) -> UnsaturatedStationaryDistribution {
    let s00 = 2.0 * (1.0 - p) / chain_denominator(p, w, m, lambda);
    let empty = if lambda == 1.0 {
        0.0
    } else {
        s00 * (1.0 - lambda) / lambda
    };
    let mut stages = Vec::with_capacity(m as usize + 1);
    let mut head = s00;
    for i in 0..=m {
        let wi = (w as u64) << i;
        let h = if i == m { head / (1.0 - p) } else { head };
        let row = (0..wi)
            .map(|j| (wi - j) as f64 / wi as f64 * h)
            .collect();
        stages.push(row);
        head *= p;
    }
    UnsaturatedStationaryDistribution { empty, stages }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State1Solution {
    pub tau_p1: f64,
    pub p_p1: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State2Solution {
    pub tau_p2: f64,
    pub tau_s2: f64,
    pub p_p2: f64,
    pub p_s2: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `tau = tau(p)`, `p = 1 - (1 - tau)^(n-1)` for one network by
/// bisection on `p`. Returns `(tau, p, residual, iterations)`.
fn solve_single(n: u32, w: u32, m: u32, lambda: f64) -> Result<(f64, f64, f64, usize)> {
    if n <= 1 {
        return Ok((tau_of_p_unsaturated(0.0, w, m, lambda), 0.0, 0.0, 0));
    }
    let f = |p: f64| {
        let tau = tau_of_p_unsaturated(p, w, m, lambda);
        p - (1.0 - (1.0 - tau).powi(n as i32 - 1))
    };
    // f is strictly increasing: f(0) < 0 < f(1).
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (f64::INFINITY, 0.0);
    for it in 1..=MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() < best.0 {
            best = (v.abs(), mid);
        }
        if v == 0.0 || hi - lo <= f64::EPSILON * mid {
            return Ok(finish(best.1, best.0, it, w, m, lambda));
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 <= TOLERANCE {
        return Ok(finish(best.1, best.0, MAX_ITERATIONS, w, m, lambda));
    }
    Err(Error::NonConvergence {
        what: "single-network fixed point",
        iterations: MAX_ITERATIONS,
        residual: best.0,
    })
}

fn finish(p: f64, residual: f64, it: usize, w: u32, m: u32, lambda: f64) -> (f64, f64, f64, usize) {
    (tau_of_p_unsaturated(p, w, m, lambda), p, residual, it)
}

/// Saturated single-network fixed point; returns `(tau, p)`.
pub fn solve_bianchi_saturated(n: u32, w: u32, m: u32) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("node count must be ≥ 1".into()));
    }
    let (tau, p, _, _) = solve_single(n, w, m, 1.0)?;
    Ok((tau, p))
}

/// Primary network alone (secondaries silent).
pub fn solve_state1(params: &NetworkParams) -> Result<State1Solution> {
    let (tau, p, residual, iterations) = solve_single(
        params.n_primary,
        params.w_primary,
        params.m_primary,
        params.lambda_primary,
    )?;
    check_residual("State-1 fixed point", residual, iterations)?;
    Ok(State1Solution {
        tau_p1: tau,
        p_p1: p,
        residual,
        iterations,
    })
}

fn check_residual(what: &'static str, residual: f64, iterations: usize) -> Result<()> {
    if residual <= TOLERANCE {
        Ok(())
    } else {
        Err(Error::NonConvergence {
            what,
            iterations,
            residual,
        })
    }
}

/// Both networks contending. Damped Picard iteration on `(p_p2, p_s2)`
/// starting from `(0, 0)`.
pub fn solve_state2(params: &NetworkParams) -> Result<State2Solution> {
    if params.n_secondary == 0 {
        let s1 = solve_state1(params)?;
        return Ok(State2Solution {
            tau_p2: s1.tau_p1,
            tau_s2: 0.0,
            p_p2: s1.p_p1,
            p_s2: 1.0 - (1.0 - s1.tau_p1).powi(params.n_primary as i32),
            residual: s1.residual,
            iterations: s1.iterations,
        });
    }
    let np = params.n_primary as i32;
    let ns = params.n_secondary as i32;
    let tau_p = |p: f64| {
        tau_of_p_unsaturated(p, params.w_primary, params.m_primary, params.lambda_primary)
    };
    let tau_s = |p: f64| {
        tau_of_p_unsaturated(
            p,
            params.w_secondary,
            params.m_secondary,
            params.lambda_secondary,
        )
    };
    let (mut pp, mut ps) = (0.0f64, 0.0f64);
    let mut residual = f64::INFINITY;
    for it in 0..MAX_ITERATIONS {
        let (tp, ts) = (tau_p(pp), tau_s(ps));
        let gp = 1.0 - (1.0 - tp).powi(np - 1) * (1.0 - ts).powi(ns);
        let gs = 1.0 - (1.0 - tp).powi(np) * (1.0 - ts).powi(ns - 1);
        residual = (gp - pp).abs().max((gs - ps).abs());
        if residual <= TOLERANCE {
            return Ok(State2Solution {
                tau_p2: tp,
                tau_s2: ts,
                p_p2: pp,
                p_s2: ps,
                residual,
                iterations: it,
            });
        }
        pp = DAMPING * pp + (1.0 - DAMPING) * gp;
        ps = DAMPING * ps + (1.0 - DAMPING) * gs;
    }
    Err(Error::NonConvergence {
        what: "State-2 fixed point",
        iterations: MAX_ITERATIONS,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn net(np: u32, ns: u32) -> NetworkParams {
        NetworkParams {
            n_primary: np,
            n_secondary: ns,
            w_primary: 32,
            w_secondary: 32,
            m_primary: 4,
            m_secondary: 4,
            lambda_primary: 1.0,
            lambda_secondary: 1.0,
        }
    }

    /// The textbook closed form with the `(1 - 2p)` factors, evaluated
    /// directly; only valid away from `p = 1/2`.
    fn tau_direct(p: f64, w: f64, m: i32) -> f64 {
        let a = 1.0 - 2.0 * p;
        2.0 * a / (a * (w + 1.0) + p * w * (1.0 - (2.0 * p).powi(m)))
    }

    #[test]
    fn tau_at_zero_collision() {
        assert_eq!(tau_of_p_saturated(0.0, 32, 4), 2.0 / 33.0);
        assert!((tau_of_p_unsaturated(0.0, 32, 4, 0.5) - 2.0 / 35.0).abs() < 1e-15);
    }

    #[test]
    fn tau_at_half_matches_limit() {
        // Expanding (1 - (2p)^m)/(1 - 2p) around p = 1/2 gives m, so the
        // limit is 2 / (W + 1 + W m / 2) = 2/97 for W = 32, m = 4.
        assert!((tau_of_p_saturated(0.5, 32, 4) - 2.0 / 97.0).abs() < 1e-15);
        for eps in [1e-3, -1e-3, 1e-5, -1e-5] {
            let near = tau_direct(0.5 + eps, 32.0, 4);
            assert!((near - tau_of_p_saturated(0.5 + eps, 32, 4)).abs() < 1e-9);
            assert!((near - 2.0 / 97.0).abs() < eps.abs());
        }
    }

    #[test]
    fn tau_matches_direct_evaluation() {
        // 1 - 0.4^4 = 0.9744, /(0.6) = 1.624; denominator 33 + 6.4·1.624.
        let expected = 2.0 / (33.0 + 0.2 * 32.0 * 1.624);
        assert!((tau_of_p_saturated(0.2, 32, 4) - expected).abs() < 1e-15);
        assert!((tau_of_p_saturated(0.2, 32, 4) - tau_direct(0.2, 32.0, 4)).abs() < 1e-15);
    }

    /// Explicit transition matrix of the back-off chain; state 0 is the
    /// empty-queue state.
    fn transition_matrix(p: f64, w: u32, m: u32, lambda: f64) -> (DMatrix<f64>, Vec<(i64, usize)>) {
        let mut states = vec![(-1i64, 0usize)];
        for i in 0..=m {
            for j in 0..((w as usize) << i) {
                states.push((i as i64, j));
            }
        }
        let idx = |i: i64, j: usize| states.iter().position(|&s| s == (i, j)).unwrap();
        let n = states.len();
        let mut t = DMatrix::zeros(n, n);
        let w0 = w as usize;
        for (from, &(i, j)) in states.iter().enumerate() {
            if i < 0 {
                t[(from, from)] += 1.0 - lambda;
                for k in 0..w0 {
                    t[(from, idx(0, k))] += lambda / w0 as f64;
                }
            } else if j > 0 {
                t[(from, idx(i, j - 1))] += 1.0;
            } else {
                let next = (i + 1).min(m as i64);
                let wn = w0 << next;
                for k in 0..wn {
                    t[(from, idx(next, k))] += p / wn as f64;
                }
                for k in 0..w0 {
                    t[(from, idx(0, k))] += (1.0 - p) * lambda / w0 as f64;
                }
                t[(from, 0)] += (1.0 - p) * (1.0 - lambda);
            }
        }
        (t, states)
    }

    fn eigen_oracle(p: f64, w: u32, m: u32, lambda: f64) -> (Vec<f64>, Vec<(i64, usize)>) {
        let (t, states) = transition_matrix(p, w, m, lambda);
        let n = states.len();
        let mut a = t.transpose() - DMatrix::identity(n, n);
        for c in 0..n {
            a[(n - 1, c)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let x = a.lu().solve(&b).expect("chain is irreducible");
        (x.iter().copied().collect(), states)
    }

    #[test]
    fn stationary_matches_eigenvector_small_chain() {
        let (oracle, states) = eigen_oracle(0.3, 2, 1, 0.5);
        assert_eq!(states.len(), 7);
        let dist = stationary_distribution(0.3, 2, 1, 0.5);
        assert_eq!(dist.state_count(), 7);
        for (x, &(i, j)) in oracle.iter().zip(&states) {
            assert!((dist.get(i, j) - x).abs() < 1e-12, "state ({i},{j})");
        }
    }

    #[test]
    fn stationary_matches_eigenvector_all_small_chains() {
        for w in [1u32, 2, 3, 4, 8] {
            for m in 0..=3u32 {
                let states = 1 + (w as usize) * ((1 << (m + 1)) - 1);
                if states > 64 {
                    continue;
                }
                for &(p, lambda) in &[(0.0, 1.0), (0.1, 0.05), (0.3, 0.5), (0.5, 0.9), (0.7, 1.0)] {
                    let (oracle, st) = eigen_oracle(p, w, m, lambda);
                    let dist = stationary_distribution(p, w, m, lambda);
                    for (x, &(i, j)) in oracle.iter().zip(&st) {
                        assert!(
                            (dist.get(i, j) - x).abs() < 1e-9,
                            "W={w} m={m} p={p} λ={lambda} state ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn unsaturated_tau_matches_chain_oracle() {
        // The W=32, m=4 chain has 993 states; solve it with the same linear
        // system and sum the (i, 0) masses.
        let (oracle, states) = eigen_oracle(0.1, 32, 4, 0.05);
        let tau: f64 = oracle
            .iter()
            .zip(&states)
            .filter(|(_, &(i, j))| i >= 0 && j == 0)
            .map(|(x, _)| *x)
            .sum();
        assert!((tau_of_p_unsaturated(0.1, 32, 4, 0.05) - tau).abs() < 1e-12);
    }

    #[test]
    fn saturated_distribution_has_no_empty_mass() {
        let d = stationary_distribution(0.2, 32, 4, 1.0);
        assert_eq!(d.empty, 0.0);
        assert!((d.total() - 1.0).abs() < 1e-12);
        assert!((d.tau() - tau_of_p_saturated(0.2, 32, 4)).abs() < 1e-15);
    }

    #[test]
    fn single_node_never_collides() {
        let (tau, p) = solve_bianchi_saturated(1, 32, 4).unwrap();
        assert_eq!(p, 0.0);
        assert_eq!(tau, 2.0 / 33.0);
        assert_eq!(solve_state1(&net(1, 0)).unwrap().p_p1, 0.0);
    }

    #[test]
    fn saturated_reference_points() {
        let (tau6, _) = solve_bianchi_saturated(6, 32, 4).unwrap();
        assert!((tau6 - 0.0454422).abs() < 5e-7, "{tau6}");
        let (tau30, _) = solve_bianchi_saturated(30, 32, 4).unwrap();
        assert!((tau30 - 0.0221627).abs() < 5e-7, "{tau30}");
    }

    #[test]
    fn unsaturated_state1_reference() {
        let mut n = net(15, 6);
        n.lambda_primary = 0.05;
        n.lambda_secondary = 0.01;
        let s1 = solve_state1(&n).unwrap();
        assert!((s1.tau_p1 - 0.0249174).abs() < 5e-7, "{}", s1.tau_p1);
        let s2 = solve_state2(&n).unwrap();
        assert!((s2.tau_s2 - 0.0105035).abs() < 5e-7, "{}", s2.tau_s2);
    }

    #[test]
    fn symmetric_state2_reference() {
        let s2 = solve_state2(&net(6, 15)).unwrap();
        assert!((s2.tau_p2 - 0.026734).abs() < 5e-7);
        assert!((s2.tau_p2 - s2.tau_s2).abs() < 1e-10);
        assert!(s2.residual <= TOLERANCE);
    }

    #[test]
    fn no_secondaries_reduces_to_state1() {
        let s1 = solve_state1(&net(9, 0)).unwrap();
        let s2 = solve_state2(&net(9, 0)).unwrap();
        assert_eq!(s2.tau_s2, 0.0);
        assert_eq!(s2.tau_p2, s1.tau_p1);
        assert_eq!(s2.p_p2, s1.p_p1);
    }

    #[test]
    fn tau_decreases_in_n_and_w() {
        for w in [16u32, 32, 64] {
            let mut prev = f64::INFINITY;
            for n in 2..=30 {
                let (tau, _) = solve_bianchi_saturated(n, w, 4).unwrap();
                assert!(tau < prev);
                prev = tau;
            }
        }
        for n in 2..=30 {
            let taus: Vec<f64> = [16u32, 32, 64]
                .iter()
                .map(|&w| solve_bianchi_saturated(n, w, 4).unwrap().0)
                .collect();
            assert!(taus[0] > taus[1] && taus[1] > taus[2]);
        }
    }

    proptest! {
        #[test]
        fn unit_intensity_is_saturated(p in 0.0f64..0.999, w in 1u32..1024, m in 0u32..10) {
            prop_assert_eq!(tau_of_p_unsaturated(p, w, m, 1.0), tau_of_p_saturated(p, w, m));
        }

        #[test]
        fn distribution_normalized(p in 0.0f64..0.95, w in 1u32..64, m in 0u32..6, lambda in 0.001f64..=1.0) {
            let d = stationary_distribution(p, w, m, lambda);
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
            prop_assert!(d.stages.iter().flatten().all(|&x| x >= 0.0));
            prop_assert!((d.tau() - tau_of_p_unsaturated(p, w, m, lambda)).abs() < 1e-14);
        }

        #[test]
        fn solutions_within_tolerance(
            np in 1u32..40, ns in 0u32..40,
            wp in prop::sample::select(vec![8u32, 16, 32, 64, 128]),
            ws in 4u32..300, lp in 0.001f64..=1.0, ls in 0.001f64..=1.0,
        ) {
            let n = NetworkParams { n_primary: np, n_secondary: ns, w_primary: wp, w_secondary: ws,
                m_primary: 4, m_secondary: 4, lambda_primary: lp, lambda_secondary: ls };
            let s1 = solve_state1(&n).unwrap();
            prop_assert!(s1.residual <= TOLERANCE);
            prop_assert!((0.0..1.0).contains(&s1.tau_p1) && (0.0..1.0).contains(&s1.p_p1));
            let s2 = solve_state2(&n).unwrap();
            prop_assert!(s2.residual <= TOLERANCE);
            for x in [s2.tau_p2, s2.tau_s2, s2.p_p2, s2.p_s2] {
                prop_assert!((0.0..1.0).contains(&x));
            }
        }

        #[test]
        fn symmetric_networks_agree(n in 1u32..30, w in 4u32..200, m in 0u32..6, l in 0.01f64..=1.0) {
            let p = NetworkParams { n_primary: n, n_secondary: n, w_primary: w, w_secondary: w,
                m_primary: m, m_secondary: m, lambda_primary: l, lambda_secondary: l };
            let s2 = solve_state2(&p).unwrap();
            prop_assert!((s2.tau_p2 - s2.tau_s2).abs() <= 1e-10);
        }
    }
}
