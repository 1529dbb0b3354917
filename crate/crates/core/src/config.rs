//! Flat plain-text (TOML) scenario config.
//!
//! Keys match the parameter names one to one; durations carry a `_us`
//! suffix and are normalized to idle-slot units when the scenario is built.
//!
//! ```toml
//! preset = "reference"
//! n_primary = 16
//! n_secondary = 16
//! scan_t_us = 20
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{
    reference_timing_us, validate, NetworkParams, Scenario, Scheme, SchemeConfig,
    ThroughputAccounting, TimingMicros, TimingParams, REFERENCE_PRESET,
};

/// Every key of a scenario with concrete values, durations in µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    pub n_primary: u32,
    pub n_secondary: u32,
    pub w_primary: u32,
    pub w_secondary: u32,
    pub m_primary: u32,
    pub m_secondary: u32,
    pub lambda_primary: f64,
    pub lambda_secondary: f64,
    pub tp_suc_us: f64,
    pub ts_suc_us: f64,
    pub tp_col_us: f64,
    pub ts_col_us: f64,
    pub difs_us: f64,
    pub eifs_us: f64,
    pub scan_t_us: f64,
    #[serde(rename = "period_T_us")]
    pub period_t_us: f64,
    pub idle_slot_us: f64,
    pub scheme: Scheme,
    /// Only meaningful for the silent-period scheme; derived from
    /// `(T - t) / T` when absent.
    pub beta: Option<f64>,
    pub throughput_accounting: ThroughputAccounting,
}

impl RawConfig {
    pub fn preset(name: &str) -> Result<Self> {
        if name != REFERENCE_PRESET {
            return Err(Error::Config(format!(
                "unknown preset '{name}' (available: {REFERENCE_PRESET})"
            )));
        }
        Ok(Self::from_scenario(&Scenario::reference()))
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let n = s.network();
        let us = s.timing().to_micros();
        let beta = match s.scheme().scheme {
            Scheme::SilentPeriod => Some(s.scheme().beta),
            _ => None,
        };
        Self {
            n_primary: n.n_primary,
            n_secondary: n.n_secondary,
            w_primary: n.w_primary,
            w_secondary: n.w_secondary,
            m_primary: n.m_primary,
            m_secondary: n.m_secondary,
            lambda_primary: n.lambda_primary,
            lambda_secondary: n.lambda_secondary,
            tp_suc_us: us.tp_suc_us,
            ts_suc_us: us.ts_suc_us,
            tp_col_us: us.tp_col_us,
            ts_col_us: us.ts_col_us,
            difs_us: us.difs_us,
            eifs_us: us.eifs_us,
            scan_t_us: us.scan_t_us,
            period_t_us: us.period_t_us,
            idle_slot_us: us.idle_slot_us,
            scheme: s.scheme().scheme,
            beta,
            throughput_accounting: us.accounting,
        }
    }

    pub fn network(&self) -> NetworkParams {
        NetworkParams {
            n_primary: self.n_primary,
            n_secondary: self.n_secondary,
            w_primary: self.w_primary,
            w_secondary: self.w_secondary,
            m_primary: self.m_primary,
            m_secondary: self.m_secondary,
            lambda_primary: self.lambda_primary,
            lambda_secondary: self.lambda_secondary,
        }
    }

    pub fn timing_us(&self) -> TimingMicros {
        TimingMicros {
            tp_suc_us: self.tp_suc_us,
            ts_suc_us: self.ts_suc_us,
            tp_col_us: self.tp_col_us,
            ts_col_us: self.ts_col_us,
            difs_us: self.difs_us,
            eifs_us: self.eifs_us,
            scan_t_us: self.scan_t_us,
            period_t_us: self.period_t_us,
            idle_slot_us: self.idle_slot_us,
            accounting: self.throughput_accounting,
        }
    }

    /// Normalizes durations and validates every invariant.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let timing = TimingParams::from_micros(&self.timing_us())?;
        let scheme = match self.scheme {
            Scheme::Sensing => SchemeConfig::sensing(),
            Scheme::Coexist => SchemeConfig::coexist(),
            Scheme::SilentPeriod => match self.beta {
                Some(beta) => SchemeConfig::silent_period(beta)?,
                None => {
                    timing.validate()?;
                    SchemeConfig::silent_from_timing(&timing)
                }
            },
        };
        validate(self.network(), timing, scheme)
    }

    /// Sets one key by name from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
        }
        match key {
            "n_primary" => self.n_primary = num(key, value)?,
            "n_secondary" => self.n_secondary = num(key, value)?,
            "w_primary" => self.w_primary = num(key, value)?,
            "w_secondary" => self.w_secondary = num(key, value)?,
            "m_primary" => self.m_primary = num(key, value)?,
            "m_secondary" => self.m_secondary = num(key, value)?,
            "lambda_primary" => self.lambda_primary = num(key, value)?,
            "lambda_secondary" => self.lambda_secondary = num(key, value)?,
            "tp_suc_us" => self.tp_suc_us = num(key, value)?,
            "ts_suc_us" => self.ts_suc_us = num(key, value)?,
            "tp_col_us" => self.tp_col_us = num(key, value)?,
            "ts_col_us" => self.ts_col_us = num(key, value)?,
            "difs_us" => self.difs_us = num(key, value)?,
            "eifs_us" => self.eifs_us = num(key, value)?,
            "scan_t_us" => self.scan_t_us = num(key, value)?,
            "period_T_us" => self.period_t_us = num(key, value)?,
            "idle_slot_us" => self.idle_slot_us = num(key, value)?,
            "beta" => self.beta = Some(num(key, value)?),
            "scheme" => self.scheme = value.parse()?,
            "throughput_accounting" => {
                self.throughput_accounting = match value.trim() {
                    "airtime" => ThroughputAccounting::Airtime,
                    "success_slot" => ThroughputAccounting::SuccessSlot,
                    other => {
                        return Err(Error::Config(format!(
                            "bad throughput_accounting '{other}'"
                        )))
                    }
                }
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

impl Default for RawConfig {
    fn default() -> Self {
        let mut raw = Self::from_scenario(&Scenario::reference());
        let us = reference_timing_us();
        raw.eifs_us = us.eifs_us;
        raw
    }
}

/// A partially specified config: a file, command-line flags, or both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub preset: Option<String>,
    pub n_primary: Option<u32>,
    pub n_secondary: Option<u32>,
    pub w_primary: Option<u32>,
    pub w_secondary: Option<u32>,
    pub m_primary: Option<u32>,
    pub m_secondary: Option<u32>,
    pub lambda_primary: Option<f64>,
    pub lambda_secondary: Option<f64>,
    pub tp_suc_us: Option<f64>,
    pub ts_suc_us: Option<f64>,
    pub tp_col_us: Option<f64>,
    pub ts_col_us: Option<f64>,
    pub difs_us: Option<f64>,
    pub eifs_us: Option<f64>,
    pub scan_t_us: Option<f64>,
    #[serde(rename = "period_T_us")]
    pub period_t_us: Option<f64>,
    pub idle_slot_us: Option<f64>,
    pub scheme: Option<Scheme>,
    pub beta: Option<f64>,
    pub throughput_accounting: Option<ThroughputAccounting>,
}

macro_rules! merge_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl ConfigOverrides {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Layers `top` over `self`; keys set in `top` win.
    pub fn merged(mut self, top: ConfigOverrides) -> Self {
        if top.preset.is_some() {
            self.preset = top.preset.clone();
        }
        merge_fields!(self, top;
            n_primary, n_secondary, w_primary, w_secondary, m_primary, m_secondary,
            lambda_primary, lambda_secondary, tp_suc_us, ts_suc_us, tp_col_us, ts_col_us,
            difs_us, eifs_us, scan_t_us, period_t_us, idle_slot_us, scheme, beta,
            throughput_accounting);
        self
    }

    /// Fills every key, starting from the named preset when one is given.
    /// Without a preset every key except `beta`, `scheme` and
    /// `throughput_accounting` must be present.
    pub fn resolve(&self) -> Result<RawConfig> {
        match &self.preset {
            Some(name) => {
                let mut raw = RawConfig::preset(name)?;
                self.apply_to(&mut raw);
                Ok(raw)
            }
            None => {
                macro_rules! need {
                    ($f:ident, $key:literal) => {
                        self.$f
                            .ok_or_else(|| Error::Config(format!("missing key {}", $key)))?
                    };
                }
                Ok(RawConfig {
                    n_primary: need!(n_primary, "n_primary"),
                    n_secondary: need!(n_secondary, "n_secondary"),
                    w_primary: need!(w_primary, "w_primary"),
                    w_secondary: need!(w_secondary, "w_secondary"),
                    m_primary: need!(m_primary, "m_primary"),
                    m_secondary: need!(m_secondary, "m_secondary"),
                    lambda_primary: need!(lambda_primary, "lambda_primary"),
                    lambda_secondary: need!(lambda_secondary, "lambda_secondary"),
                    tp_suc_us: need!(tp_suc_us, "tp_suc_us"),
                    ts_suc_us: need!(ts_suc_us, "ts_suc_us"),
                    tp_col_us: need!(tp_col_us, "tp_col_us"),
                    ts_col_us: need!(ts_col_us, "ts_col_us"),
                    difs_us: need!(difs_us, "difs_us"),
                    eifs_us: need!(eifs_us, "eifs_us"),
                    scan_t_us: need!(scan_t_us, "scan_t_us"),
                    period_t_us: need!(period_t_us, "period_T_us"),
                    idle_slot_us: need!(idle_slot_us, "idle_slot_us"),
                    scheme: self.scheme.unwrap_or(Scheme::Sensing),
                    beta: self.beta,
                    throughput_accounting: self.throughput_accounting.unwrap_or_default(),
                })
            }
        }
    }

    fn apply_to(&self, raw: &mut RawConfig) {
        macro_rules! put {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { raw.$f = v; } )* };
        }
        put!(
            n_primary, n_secondary, w_primary, w_secondary, m_primary, m_secondary,
            lambda_primary, lambda_secondary, tp_suc_us, ts_suc_us, tp_col_us, ts_col_us,
            difs_us, eifs_us, scan_t_us, period_t_us, idle_slot_us, scheme,
            throughput_accounting
        );
        if self.beta.is_some() {
            raw.beta = self.beta;
        }
    }
}

/// Reads a config file and builds the validated scenario.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    ConfigOverrides::from_file(path)?.resolve()?.to_scenario()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_with_overrides() {
        let cfg = ConfigOverrides::from_toml_str(
            r#"
            preset = "reference"
            n_primary = 16
            n_secondary = 16
            scan_t_us = 20
            "#,
        )
        .unwrap();
        let s = cfg.resolve().unwrap().to_scenario().unwrap();
        assert_eq!(s.network().n_primary, 16);
        assert!((s.timing().scan_t - 1.0).abs() < 1e-12);
        assert_eq!(s.timing().accounting, ThroughputAccounting::SuccessSlot);
    }

    #[test]
    fn full_file_without_preset() {
        let text = r#"
            n_primary = 6
            n_secondary = 15
            w_primary = 32
            w_secondary = 32
            m_primary = 4
            m_secondary = 4
            lambda_primary = 1.0
            lambda_secondary = 1.0
            tp_suc_us = 1178
            ts_suc_us = 1178
            tp_col_us = 864
            ts_col_us = 864
            difs_us = 50
            eifs_us = 364
            scan_t_us = 50
            period_T_us = 500000
            idle_slot_us = 20
            scheme = "silent_period"
        "#;
        let s = ConfigOverrides::from_toml_str(text)
            .unwrap()
            .resolve()
            .unwrap()
            .to_scenario()
            .unwrap();
        assert!((s.timing().eifs - 18.2).abs() < 1e-12);
        assert_eq!(s.scheme().scheme, Scheme::SilentPeriod);
        assert!((s.scheme().beta - (1.0 - 50.0 / 500_000.0)).abs() < 1e-15);
        assert_eq!(s.timing().accounting, ThroughputAccounting::Airtime);
    }

    #[test]
    fn missing_key_without_preset() {
        let err = ConfigOverrides::from_toml_str("n_primary = 3")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("missing key"));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ConfigOverrides::from_toml_str("n_primaries = 3").is_err());
    }

    #[test]
    fn validation_runs_at_load() {
        let err = ConfigOverrides::from_toml_str(
            "preset = \"reference\"\nscan_t_us = 600\nperiod_T_us = 500",
        )
        .unwrap()
        .resolve()
        .unwrap()
        .to_scenario()
        .unwrap_err();
        assert_eq!(err.to_string(), "T must exceed t");
    }

    #[test]
    fn raw_round_trip_through_scenario() {
        let raw = RawConfig::preset(REFERENCE_PRESET).unwrap();
        let again = RawConfig::from_scenario(&raw.to_scenario().unwrap());
        assert_eq!(raw.n_secondary, again.n_secondary);
        assert!((raw.tp_suc_us - again.tp_suc_us).abs() < 1e-9);
        assert!((raw.period_t_us - again.period_t_us).abs() < 1e-6);
    }

    #[test]
    fn set_by_key() {
        let mut raw = RawConfig::default();
        raw.set("period_T_us", "23500").unwrap();
        raw.set("scheme", "coexist").unwrap();
        assert_eq!(raw.period_t_us, 23_500.0);
        assert_eq!(raw.scheme, Scheme::Coexist);
        assert!(raw.set("bogus", "1").is_err());
        assert!(raw.set("n_primary", "abc").is_err());
    }
}
