//! Network, timing and scheme parameters shared by the model, optimizer and
//! simulator.
//!
//! All durations inside [`TimingParams`] are expressed in idle-slot units
//! (one idle slot = one real-time slot). Conversion from microseconds happens
//! once, at load time, through [`normalize_us`]; nothing downstream rounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the built-in preset holding the reference 802.11 parameter set.
pub const REFERENCE_PRESET: &str = "reference";

/// Initial contention window and number of doubling stages of one network.
///
/// The window at stage `i` is `2^i * window`; per-stage windows are never
/// stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Backoff {
    pub window: u32,
    pub stages: u32,
}

impl Backoff {
    pub fn new(window: u32, stages: u32) -> Self {
        Self { window, stages }
    }

    /// Contention window at back-off stage `stage` (stages above the cap use
    /// the cap).
    pub fn window_at(&self, stage: u32) -> u64 {
        (self.window as u64) << stage.min(self.stages)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub n_primary: u32,
    pub n_secondary: u32,
    pub w_primary: u32,
    pub w_secondary: u32,
    pub m_primary: u32,
    pub m_secondary: u32,
    /// Per-transmission-slot packet arrival probability; 1 means saturated.
    pub lambda_primary: f64,
    pub lambda_secondary: f64,
}

impl NetworkParams {
    pub fn primary_backoff(&self) -> Backoff {
        Backoff::new(self.w_primary, self.m_primary)
    }

    pub fn secondary_backoff(&self) -> Backoff {
        Backoff::new(self.w_secondary, self.m_secondary)
    }

    pub fn is_saturated(&self) -> bool {
        self.lambda_primary == 1.0 && self.lambda_secondary == 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_primary < 1 {
            return Err(Error::invalid("n_primary", "n_primary must be ≥ 1"));
        }
        if self.w_primary < 1 {
            return Err(Error::invalid("w_primary", "w_primary must be ≥ 1"));
        }
        if self.w_secondary < 1 {
            return Err(Error::invalid("w_secondary", "w_secondary must be ≥ 1"));
        }
        // 2^m * W must fit comfortably in the counters used by the simulator.
        for (field, w, m) in [
            ("m_primary", self.w_primary, self.m_primary),
            ("m_secondary", self.w_secondary, self.m_secondary),
        ] {
            if m > 24 || (w as u64) << m > 1 << 32 {
                return Err(Error::invalid(
                    field,
                    format!("{field} too large: 2^{m}·{w} exceeds 2^32 slots"),
                ));
            }
        }
        check_intensity("lambda_primary", self.lambda_primary)?;
        check_intensity("lambda_secondary", self.lambda_secondary)?;
        Ok(())
    }
}

fn check_intensity(field: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("{field} must be in (0,1], got {value}"),
        ))
    }
}

/// What a successful transmission slot contributes to throughput.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThroughputAccounting {
    /// Only the packet airtime (TpSuc / TsSuc).
    #[default]
    Airtime,
    /// The whole successful slot, airtime plus the DIFS that follows it.
    SuccessSlot,
}

/// Real-time durations in idle-slot units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    pub tp_suc: f64,
    pub ts_suc: f64,
    pub tp_col: f64,
    pub ts_col: f64,
    pub difs: f64,
    pub eifs: f64,
    pub scan_t: f64,
    pub period_t: f64,
    /// Microseconds per idle slot; only used to convert to and from µs.
    pub idle_slot_us: f64,
    pub accounting: ThroughputAccounting,
}

impl TimingParams {
    /// Builds normalized timing from microsecond durations.
    pub fn from_micros(us: &TimingMicros) -> Result<Self> {
        let slot = us.idle_slot_us;
        Ok(Self {
            tp_suc: normalize_us(us.tp_suc_us, slot)?,
            ts_suc: normalize_us(us.ts_suc_us, slot)?,
            tp_col: normalize_us(us.tp_col_us, slot)?,
            ts_col: normalize_us(us.ts_col_us, slot)?,
            difs: normalize_us(us.difs_us, slot)?,
            eifs: normalize_us(us.eifs_us, slot)?,
            scan_t: normalize_us(us.scan_t_us, slot)?,
            period_t: normalize_us(us.period_t_us, slot)?,
            idle_slot_us: slot,
            accounting: us.accounting,
        })
    }

    pub fn to_micros(&self) -> TimingMicros {
        let s = self.idle_slot_us;
        TimingMicros {
            tp_suc_us: self.tp_suc * s,
            ts_suc_us: self.ts_suc * s,
            tp_col_us: self.tp_col * s,
            ts_col_us: self.ts_col * s,
            difs_us: self.difs * s,
            eifs_us: self.eifs * s,
            scan_t_us: self.scan_t * s,
            period_t_us: self.period_t * s,
            idle_slot_us: s,
            accounting: self.accounting,
        }
    }

    pub fn with_scan_us(mut self, scan_t_us: f64) -> Result<Self> {
        self.scan_t = normalize_us(scan_t_us, self.idle_slot_us)?;
        self.validate()?;
        Ok(self)
    }

    pub fn scan_t_us(&self) -> f64 {
        self.scan_t * self.idle_slot_us
    }

    /// Duration of a successful primary slot, TpSuc + DIFS.
    pub fn primary_success_slot(&self) -> f64 {
        self.tp_suc + self.difs
    }

    pub fn secondary_success_slot(&self) -> f64 {
        self.ts_suc + self.difs
    }

    pub fn primary_collision_slot(&self) -> f64 {
        self.tp_col + self.eifs
    }

    pub fn secondary_collision_slot(&self) -> f64 {
        self.ts_col + self.eifs
    }

    /// Primary/secondary collision: the longer packet plus EIFS.
    pub fn cross_collision_slot(&self) -> f64 {
        self.tp_col.max(self.ts_col) + self.eifs
    }

    /// Throughput credit of one successful primary slot.
    pub fn primary_payload(&self) -> f64 {
        match self.accounting {
            ThroughputAccounting::Airtime => self.tp_suc,
            ThroughputAccounting::SuccessSlot => self.tp_suc + self.difs,
        }
    }

    pub fn secondary_payload(&self) -> f64 {
        match self.accounting {
            ThroughputAccounting::Airtime => self.ts_suc,
            ThroughputAccounting::SuccessSlot => self.ts_suc + self.difs,
        }
    }

    /// Fraction of each period the secondary may contend, `(T - t) / T`.
    pub fn contention_fraction(&self) -> f64 {
        (self.period_t - self.scan_t) / self.period_t
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.idle_slot_us > 0.0 && self.idle_slot_us.is_finite()) {
            return Err(Error::invalid(
                "idle_slot_us",
                "idle_slot_us must be positive",
            ));
        }
        for (field, v) in [
            ("tp_suc", self.tp_suc),
            ("ts_suc", self.ts_suc),
            ("tp_col", self.tp_col),
            ("ts_col", self.ts_col),
            ("difs", self.difs),
            ("eifs", self.eifs),
            ("scan_t", self.scan_t),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    field,
                    format!("{field} must be a finite duration ≥ 0, got {v}"),
                ));
            }
        }
        if !self.period_t.is_finite() || self.period_t <= self.scan_t {
            return Err(Error::invalid("period_T", "T must exceed t"));
        }
        Ok(())
    }
}

/// Timing in microseconds, as written in config files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingMicros {
    pub tp_suc_us: f64,
    pub ts_suc_us: f64,
    pub tp_col_us: f64,
    pub ts_col_us: f64,
    pub difs_us: f64,
    pub eifs_us: f64,
    pub scan_t_us: f64,
    pub period_t_us: f64,
    pub idle_slot_us: f64,
    pub accounting: ThroughputAccounting,
}

/// Converts a duration to idle-slot units. No rounding is applied.
pub fn normalize_us(duration_us: f64, idle_slot_us: f64) -> Result<f64> {
    if !(idle_slot_us > 0.0) || !idle_slot_us.is_finite() {
        return Err(Error::invalid(
            "idle_slot_us",
            format!("idle_slot_us must be positive, got {idle_slot_us}"),
        ));
    }
    Ok(duration_us / idle_slot_us)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Periodic spectrum scan; contend only after an idle scan.
    Sensing,
    /// Unconditional silence of `scan_t` every period.
    SilentPeriod,
    /// Always contend; protection comes from the contention window alone.
    Coexist,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Sensing, Scheme::SilentPeriod, Scheme::Coexist];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sensing => "sensing",
            Scheme::SilentPeriod => "silent_period",
            Scheme::Coexist => "coexist",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sensing" | "scan" | "scanning" => Ok(Scheme::Sensing),
            "silent_period" | "silence" | "silent-period" => Ok(Scheme::SilentPeriod),
            "coexist" | "coexistence" => Ok(Scheme::Coexist),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Secondary access scheme and, for the silent-period scheme, the fraction
/// of time the secondary contends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub beta: f64,
}

impl SchemeConfig {
    pub fn sensing() -> Self {
        Self {
            scheme: Scheme::Sensing,
            beta: 1.0,
        }
    }

    pub fn coexist() -> Self {
        Self {
            scheme: Scheme::Coexist,
            beta: 1.0,
        }
    }

    pub fn silent_period(beta: f64) -> Result<Self> {
        let cfg = Self {
            scheme: Scheme::SilentPeriod,
            beta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Silent period whose β follows from the period and silence duration.
    pub fn silent_from_timing(timing: &TimingParams) -> Self {
        Self {
            scheme: Scheme::SilentPeriod,
            beta: timing.contention_fraction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.scheme {
            Scheme::SilentPeriod if !(self.beta > 0.0 && self.beta <= 1.0) => Err(
                Error::invalid("beta", format!("beta must be in (0,1], got {}", self.beta)),
            ),
            Scheme::Coexist if self.beta != 1.0 => {
                Err(Error::invalid("beta", "coexist scheme requires beta = 1"))
            }
            _ => Ok(()),
        }
    }
}

/// A validated parameter bundle: one fully specified scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    network: NetworkParams,
    timing: TimingParams,
    scheme: SchemeConfig,
}

/// Checks every parameter invariant and returns the bundle unchanged.
///
/// The first violated invariant is reported, named by its config key.
pub fn validate(
    network: NetworkParams,
    timing: TimingParams,
    scheme: SchemeConfig,
) -> Result<Scenario> {
    network.validate()?;
    timing.validate()?;
    scheme.validate()?;
    Ok(Scenario {
        network,
        timing,
        scheme,
    })
}

impl Scenario {
    /// Reference parameter set: 802.11 timing with a 20 µs idle slot,
    /// W = 32 and m = 4 on both networks, N_p = 6, N_s = 15, t = 50 µs,
    /// T = 500 ms, both networks saturated.
    ///
    /// The post-collision idle tail is 414 µs (a 364 µs EIFS followed by
    /// DIFS) and successful slots are credited in full (airtime + DIFS).
    pub fn reference() -> Self {
        let network = NetworkParams {
            n_primary: 6,
            n_secondary: 15,
            w_primary: 32,
            w_secondary: 32,
            m_primary: 4,
            m_secondary: 4,
            lambda_primary: 1.0,
            lambda_secondary: 1.0,
        };
        let timing = TimingParams::from_micros(&reference_timing_us())
            .expect("preset idle slot is positive");
        validate(network, timing, SchemeConfig::sensing()).expect("preset is valid")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            REFERENCE_PRESET => Ok(Self::reference()),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (available: {REFERENCE_PRESET})"
            ))),
        }
    }

    pub fn network(&self) -> &NetworkParams {
        &self.network
    }

    pub fn timing(&self) -> &TimingParams {
        &self.timing
    }

    pub fn scheme(&self) -> &SchemeConfig {
        &self.scheme
    }

    pub fn with_network(self, network: NetworkParams) -> Result<Self> {
        validate(network, self.timing, self.scheme)
    }

    pub fn with_timing(self, timing: TimingParams) -> Result<Self> {
        validate(self.network, timing, self.scheme)
    }

    pub fn with_scheme(self, scheme: SchemeConfig) -> Result<Self> {
        validate(self.network, self.timing, scheme)
    }
}

pub(crate) fn reference_timing_us() -> TimingMicros {
    TimingMicros {
        tp_suc_us: 1178.0,
        ts_suc_us: 1178.0,
        tp_col_us: 864.0,
        ts_col_us: 864.0,
        difs_us: 50.0,
        eifs_us: 414.0,
        scan_t_us: 50.0,
        period_t_us: 500_000.0,
        idle_slot_us: 20.0,
        accounting: ThroughputAccounting::SuccessSlot,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn preset_is_valid_and_normalized() {
        let s = Scenario::reference();
        let t = s.timing();
        assert_eq!(s.network().w_primary, 32);
        assert_eq!(s.network().m_primary, 4);
        assert!((t.tp_suc - 58.9).abs() < 1e-12);
        assert!((t.difs - 2.5).abs() < 1e-12);
        assert!((t.scan_t - 2.5).abs() < 1e-12);
        assert!((t.period_t - 25_000.0).abs() < 1e-9);
    }

    #[test]
    fn normalize_examples() {
        assert!((normalize_us(1178.0, 20.0).unwrap() - 58.9).abs() < 1e-12);
        assert_eq!(normalize_us(50.0, 20.0).unwrap(), 2.5);
        assert_eq!(normalize_us(0.0, 20.0).unwrap(), 0.0);
        assert!(normalize_us(10.0, 0.0).is_err());
        assert!(normalize_us(10.0, -1.0).is_err());
    }

    #[test]
    fn zero_primaries_rejected() {
        let s = Scenario::reference();
        let mut n = *s.network();
        n.n_primary = 0;
        let err = s.with_network(n).unwrap_err();
        assert_eq!(err.field(), Some("n_primary"));
        assert_eq!(err.to_string(), "n_primary must be ≥ 1");
    }

    #[test]
    fn scan_longer_than_period_rejected() {
        let mut us = reference_timing_us();
        us.scan_t_us = 600.0;
        us.period_t_us = 500.0;
        let timing = TimingParams::from_micros(&us).unwrap();
        let err = Scenario::reference().with_timing(timing).unwrap_err();
        assert_eq!(err.field(), Some("period_T"));
        assert_eq!(err.to_string(), "T must exceed t");
    }

    #[test]
    fn intensity_bounds() {
        let s = Scenario::reference();
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            let mut n = *s.network();
            n.lambda_secondary = bad;
            assert_eq!(
                s.with_network(n).unwrap_err().field(),
                Some("lambda_secondary")
            );
        }
        let mut n = *s.network();
        n.lambda_primary = 1.0;
        n.lambda_secondary = 1e-6;
        assert!(s.with_network(n).is_ok());
    }

    #[test]
    fn coexist_requires_unit_beta() {
        let bad = SchemeConfig {
            scheme: Scheme::Coexist,
            beta: 0.5,
        };
        assert!(bad.validate().is_err());
        assert!(SchemeConfig::silent_period(0.0).is_err());
        assert!(SchemeConfig::silent_period(0.7).is_ok());
    }

    #[test]
    fn window_doubles_per_stage() {
        let b = Backoff::new(32, 4);
        assert_eq!(b.window_at(0), 32);
        assert_eq!(b.window_at(4), 512);
        assert_eq!(b.window_at(7), 512);
    }

    proptest! {
        #[test]
        fn normalize_is_linear(a in 0.0f64..1e7, b in 0.0f64..1e7, slot in 1e-3f64..1e3) {
            let lhs = normalize_us(a + b, slot).unwrap();
            let rhs = normalize_us(a, slot).unwrap() + normalize_us(b, slot).unwrap();
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs.abs().max(1.0));
        }

        #[test]
        fn normalize_round_trips(d in 0.0f64..1e7, slot in 1e-3f64..1e3) {
            let back = normalize_us(d, slot).unwrap() * slot;
            prop_assert!((back - d).abs() <= 2.0 * f64::EPSILON * d.max(1.0));
        }
    }
}
