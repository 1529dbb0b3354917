use std::io::Write;

use super::engine::{SimConfig, SlotKind, TICKS_PER_SLOT};
use super::estimate::{tau_from_counters, TauEstimates};
use crate::analysis::Analysis;
use crate::error::{Error, Result};
use crate::params::{Scenario, Scheme};

/// Tallies over a stretch of measured transmission slots.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counters {
    pub ts: u64,
    pub ticks: i64,
    /// `counts[state][kind]`: state 0 = primaries only, 1 = both networks;
    /// kind indexed by [`SlotKind`].
    pub counts: [[u64; 6]; 2],
    /// Real time per slot type, in ticks.
    pub durations: [[i64; 6]; 2],
    /// Primary throughput credit in idle slots.
    pub primary_credit: f64,
    pub secondary_credit: f64,
    /// Secondary successes cut short by the next scan or silence.
    pub fragments: u64,
    /// Scans finalized in this stretch and how many found the channel busy.
    pub scans: u64,
    pub scans_busy: u64,
    pub primary_attempts: u64,
    pub primary_collisions: u64,
    pub secondary_attempts: u64,
    pub secondary_collisions: u64,
}

impl Counters {
    pub fn merge(&mut self, o: &Counters) {
        self.ts += o.ts;
        self.ticks += o.ticks;
        for s in 0..2 {
            for k in 0..6 {
                self.counts[s][k] += o.counts[s][k];
                self.durations[s][k] += o.durations[s][k];
            }
        }
        self.primary_credit += o.primary_credit;
        self.secondary_credit += o.secondary_credit;
        self.fragments += o.fragments;
        self.scans += o.scans;
        self.scans_busy += o.scans_busy;
        self.primary_attempts += o.primary_attempts;
        self.primary_collisions += o.primary_collisions;
        self.secondary_attempts += o.secondary_attempts;
        self.secondary_collisions += o.secondary_collisions;
    }

    pub fn time_slots(&self) -> f64 {
        self.ticks as f64 / TICKS_PER_SLOT as f64
    }

    fn metrics(&self, scenario: &Scenario) -> [Option<f64>; 6] {
        let n = scenario.network();
        let tau = tau_from_counters(self, n.n_primary, n.n_secondary);
        let time = self.time_slots();
        let alpha_c = (scenario.scheme().scheme == Scheme::Sensing && self.scans > 0)
            .then(|| self.scans_busy as f64 / self.scans as f64);
        let per_time = |x: f64| (time > 0.0).then(|| x / time);
        [
            tau.tau_p1,
            tau.tau_p2,
            tau.tau_s2,
            alpha_c,
            per_time(self.primary_credit),
            per_time(self.secondary_credit),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub config: SimConfig,
    /// All measured slots (warmup excluded).
    pub total: Counters,
    pub batches: Vec<Counters>,
    /// Real time at the start of measurement and at the end of the run.
    pub start_ticks: i64,
    pub end_ticks: i64,
    /// Outcome (busy = true) of every finalized scan, indexed by period.
    pub scan_log: Vec<bool>,
    /// First scan counted in the statistics.
    pub first_measured_scan: u64,
    /// Sampled `(stage, counter)` occupancy of primary nodes, when enabled.
    pub state_histogram: Option<Vec<Vec<u64>>>,
    /// Samples of primary nodes with an empty queue.
    pub empty_state_samples: u64,
}

impl SimStats {
    pub fn scenario(&self) -> &Scenario {
        &self.config.scenario
    }

    pub fn tau_estimates(&self) -> TauEstimates {
        let n = self.scenario().network();
        tau_from_counters(&self.total, n.n_primary, n.n_secondary)
    }

    pub fn alpha_c(&self) -> Option<f64> {
        self.total.metrics(self.scenario())[Metric::AlphaC as usize]
    }

    pub fn pt(&self) -> f64 {
        self.total.primary_credit / self.total.time_slots()
    }

    pub fn st(&self) -> f64 {
        self.total.secondary_credit / self.total.time_slots()
    }

    /// Observed collision probability of primary transmissions.
    pub fn primary_collision_probability(&self) -> Option<f64> {
        (self.total.primary_attempts > 0)
            .then(|| self.total.primary_collisions as f64 / self.total.primary_attempts as f64)
    }
}

/// Quantities compared between simulation and model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    TauP1 = 0,
    TauP2 = 1,
    TauS2 = 2,
    AlphaC = 3,
    Pt = 4,
    St = 5,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::TauP1,
        Metric::TauP2,
        Metric::TauS2,
        Metric::AlphaC,
        Metric::Pt,
        Metric::St,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TauP1 => "tau_p1",
            Metric::TauP2 => "tau_p2",
            Metric::TauS2 => "tau_s2",
            Metric::AlphaC => "alpha_c",
            Metric::Pt => "pt",
            Metric::St => "st",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric '{s}'")))
    }
}

/// Point estimates and batch-means standard errors of every metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub scenario: Scenario,
    pub values: [Option<f64>; 6],
    pub se: [Option<f64>; 6],
    /// Batches that contributed to each standard error.
    pub n_batches: [usize; 6],
}

impl SimSummary {
    pub fn value(&self, m: Metric) -> Option<f64> {
        self.values[m as usize]
    }

    pub fn se(&self, m: Metric) -> Option<f64> {
        self.se[m as usize]
    }

    /// Model values posing as exact measurements (zero standard error).
    pub fn from_analysis(a: &Analysis) -> Self {
        let values = analytic_values(a);
        Self {
            scenario: a.scenario,
            values,
            se: values.map(|v| v.map(|_| 0.0)),
            n_batches: [0; 6],
        }
    }
}

/// Model counterparts of every [`Metric`]; `None` where the model has no
/// such quantity (no secondaries, or no scan outside the sensing scheme).
pub fn analytic_values(a: &Analysis) -> [Option<f64>; 6] {
    let has_secondary = a.scenario.network().n_secondary > 0;
    [
        Some(a.state1.tau_p1),
        has_secondary.then_some(a.state2.tau_p2),
        has_secondary.then_some(a.state2.tau_s2),
        a.report.alpha_c,
        Some(a.report.pt),
        Some(a.report.st),
    ]
}

/// Pools one or more replications of the same scenario. Values come from
/// the pooled counters; standard errors from the spread of all batches of
/// all replications.
pub fn summarize(runs: &[SimStats]) -> Result<SimSummary> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no simulation runs to summarize".into()))?;
    let scenario = *first.scenario();
    if runs.iter().any(|r| *r.scenario() != scenario) {
        return Err(Error::Mismatch("replications simulate different scenarios".into()));
    }
    let mut pooled = Counters::default();
    let mut per_batch: Vec<[Option<f64>; 6]> = Vec::new();
    for r in runs {
        pooled.merge(&r.total);
        per_batch.extend(r.batches.iter().map(|b| b.metrics(&scenario)));
    }
    let values = pooled.metrics(&scenario);
    let mut se = [None; 6];
    let mut n_batches = [0; 6];
    for m in 0..6 {
        let xs: Vec<f64> = per_batch.iter().filter_map(|b| b[m]).collect();
        n_batches[m] = xs.len();
        if xs.len() >= 2 {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            se[m] = Some((var / n).sqrt());
        }
    }
    Ok(SimSummary {
        scenario,
        values,
        se,
        n_batches,
    })
}

pub const STATS_CSV_HEADER: [&str; 26] = [
    "replication",
    "seed",
    "stream",
    "run_length",
    "warmup",
    "ts_measured",
    "time_slots",
    "tau_p1",
    "tau_p2",
    "tau_s2",
    "alpha_c",
    "pt",
    "st",
    "scans",
    "scans_busy",
    "fragments",
    "s1_idle",
    "s1_success",
    "s1_collision",
    "s2_ii",
    "s2_si",
    "s2_is",
    "s2_ci",
    "s2_ic",
    "s2_cc",
    "primary_collision_probability",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl SimStats {
    pub fn csv_record(&self, replication: usize) -> Vec<String> {
        let t = &self.total;
        let m = t.metrics(self.scenario());
        let s1 = &t.counts[0];
        let s2 = &t.counts[1];
        let mut row = vec![
            replication.to_string(),
            self.config.seed.to_string(),
            self.config.stream.to_string(),
            self.config.run_length.to_string(),
            self.config.warmup.to_string(),
            t.ts.to_string(),
            t.time_slots().to_string(),
        ];
        row.extend(m.iter().map(|x| opt(*x)));
        row.extend([t.scans, t.scans_busy, t.fragments].map(|x| x.to_string()));
        for k in [SlotKind::Idle, SlotKind::PrimarySuccess, SlotKind::PrimaryCollision] {
            row.push(s1[k as usize].to_string());
        }
        row.extend(s2.iter().map(|x| x.to_string()));
        row.push(opt(self.primary_collision_probability()));
        row
    }
}

/// One row per replication, columns as in [`STATS_CSV_HEADER`].
pub fn write_stats_csv<W: Write>(out: W, runs: &[SimStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STATS_CSV_HEADER)?;
    for (i, r) in runs.iter().enumerate() {
        w.write_record(r.csv_record(i))?;
    }
    w.flush()?;
    Ok(())
}

/// `metric,value,se,batches`.
pub fn write_summary_csv<W: Write>(out: W, summary: &SimSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "value", "se", "batches"])?;
    for m in Metric::ALL {
        w.write_record([
            m.name().to_string(),
            opt(summary.value(m)),
            opt(summary.se(m)),
            summary.n_batches[m as usize].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
