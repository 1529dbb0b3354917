use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::stats::{Counters, SimStats};
use crate::error::{Error, Result};
use crate::params::{Backoff, Scenario, Scheme};

/// Simulator clock resolution. Every duration must be a whole number of
/// ticks (0.01 idle slot, i.e. 0.2 µs with a 20 µs slot).
pub const TICKS_PER_SLOT: i64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// Transmission slots simulated, warmup included.
    pub run_length: u64,
    /// Leading transmission slots excluded from every statistic.
    pub warmup: u64,
    pub seed: u64,
    /// ChaCha stream; replications of one seed use distinct streams.
    pub stream: u64,
    /// Batches for batch-means standard errors.
    pub batches: usize,
    /// Credit secondary fragments cut short by the next scan in proportion
    /// to their airtime. When false only whole packets count.
    pub count_fragments: bool,
    /// Record the back-off state of every primary node every this many
    /// measured slots.
    pub state_sample_interval: Option<u64>,
}

impl SimConfig {
    pub const DEFAULT_RUN_LENGTH: u64 = 500_000;
    pub const DEFAULT_BATCHES: usize = 10;

    /// Default run: 500 000 slots, 5 % warmup, 10 batches.
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            run_length: Self::DEFAULT_RUN_LENGTH,
            warmup: Self::DEFAULT_RUN_LENGTH / 20,
            seed,
            stream: 0,
            batches: Self::DEFAULT_BATCHES,
            count_fragments: true,
            state_sample_interval: None,
        }
    }

    /// Sets the run length and resets the warmup to 5 % of it.
    pub fn with_run_length(mut self, run_length: u64) -> Self {
        self.run_length = run_length;
        self.warmup = run_length / 20;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batches < 1 {
            return Err(Error::invalid("batches", "batches must be ≥ 1"));
        }
        if self.run_length <= self.warmup {
            return Err(Error::invalid("run_length", "run_length must exceed warmup"));
        }
        if self.run_length - self.warmup < self.batches as u64 {
            return Err(Error::invalid(
                "run_length",
                "fewer measured slots than batches",
            ));
        }
        if self.state_sample_interval == Some(0) {
            return Err(Error::invalid("state_sample_interval", "interval must be ≥ 1"));
        }
        Durations::new(&self.scenario).map(|_| ())
    }
}

fn to_ticks(field: &'static str, slots: f64) -> Result<i64> {
    let x = slots * TICKS_PER_SLOT as f64;
    let r = x.round();
    if !x.is_finite() || (x - r).abs() > 1e-6 * x.abs().max(1.0) {
        return Err(Error::invalid(
            field,
            format!("{field} = {slots} slots is not a multiple of 1/{TICKS_PER_SLOT} slot"),
        ));
    }
    Ok(r as i64)
}

#[derive(Debug, Clone, Copy)]
struct Durations {
    tp_suc: i64,
    ts_suc: i64,
    tp_col: i64,
    ts_col: i64,
    difs: i64,
    eifs: i64,
    period: i64,
    /// Length of the no-secondary window at the start of each period:
    /// the scan for sensing, `(1 - β) T` for the silent period.
    quiet: i64,
}

impl Durations {
    fn new(s: &Scenario) -> Result<Self> {
        let t = s.timing();
        let period = to_ticks("period_T", t.period_t)?;
        let quiet = match s.scheme().scheme {
            Scheme::Sensing => to_ticks("scan_t", t.scan_t)?,
            Scheme::SilentPeriod => to_ticks("beta", (1.0 - s.scheme().beta) * t.period_t)?,
            Scheme::Coexist => 0,
        };
        Ok(Self {
            tp_suc: to_ticks("tp_suc", t.tp_suc)?,
            ts_suc: to_ticks("ts_suc", t.ts_suc)?,
            tp_col: to_ticks("tp_col", t.tp_col)?,
            ts_col: to_ticks("ts_col", t.ts_col)?,
            difs: to_ticks("difs", t.difs)?,
            eifs: to_ticks("eifs", t.eifs)?,
            period,
            quiet,
        })
    }
}

/// Network regime of one transmission slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetState {
    /// Only primaries contend.
    PrimaryOnly = 0,
    /// Both networks contend.
    Both = 1,
}

/// Outcome of one transmission slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Idle = 0,
    PrimarySuccess = 1,
    SecondarySuccess = 2,
    PrimaryCollision = 3,
    SecondaryCollision = 4,
    /// At least one primary and one secondary transmit.
    CrossCollision = 5,
}

impl SlotKind {
    pub const ALL: [SlotKind; 6] = [
        SlotKind::Idle,
        SlotKind::PrimarySuccess,
        SlotKind::SecondarySuccess,
        SlotKind::PrimaryCollision,
        SlotKind::SecondaryCollision,
        SlotKind::CrossCollision,
    ];

    pub fn label(self, state: NetState) -> &'static str {
        match (state, self) {
            (NetState::PrimaryOnly, SlotKind::Idle) => "idle",
            (NetState::PrimaryOnly, SlotKind::PrimarySuccess) => "success",
            (NetState::PrimaryOnly, SlotKind::PrimaryCollision) => "collision",
            (_, SlotKind::Idle) => "ii",
            (_, SlotKind::PrimarySuccess) => "si",
            (_, SlotKind::SecondarySuccess) => "is",
            (_, SlotKind::PrimaryCollision) => "ci",
            (_, SlotKind::SecondaryCollision) => "ic",
            (_, SlotKind::CrossCollision) => "cc",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    stage: u32,
    counter: u64,
    has_packet: bool,
}

struct Network {
    nodes: Vec<Node>,
    windows: Vec<u64>,
    stages: u32,
    lambda: f64,
}

impl Network {
    fn new(n: u32, backoff: Backoff, lambda: f64, rng: &mut ChaCha8Rng) -> Self {
        let windows: Vec<u64> = (0..=backoff.stages).map(|i| backoff.window_at(i)).collect();
        let nodes = (0..n)
            .map(|_| Node {
                stage: 0,
                counter: rng.gen_range(0..windows[0]),
                has_packet: true,
            })
            .collect();
        Self {
            nodes,
            windows,
            stages: backoff.stages,
            lambda,
        }
    }

    fn transmitters(&self, out: &mut Vec<u32>) {
        out.clear();
        out.extend(
            self.nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| n.has_packet && n.counter == 0)
                .map(|(i, _)| i as u32),
        );
    }

    /// Advances every node by one transmission slot in which it contended.
    /// `success` is the outcome seen by this network's transmitters.
    fn step(&mut self, success: bool, rng: &mut ChaCha8Rng) {
        let saturated = self.lambda == 1.0;
        for node in &mut self.nodes {
            if !node.has_packet {
                if rng.gen_bool(self.lambda) {
                    node.has_packet = true;
                    node.stage = 0;
                    node.counter = rng.gen_range(0..self.windows[0]);
                }
            } else if node.counter > 0 {
                node.counter -= 1;
            } else if success {
                node.stage = 0;
                if saturated || rng.gen_bool(self.lambda) {
                    node.counter = rng.gen_range(0..self.windows[0]);
                } else {
                    node.has_packet = false;
                }
            } else {
                node.stage = (node.stage + 1).min(self.stages);
                node.counter = rng.gen_range(0..self.windows[node.stage as usize]);
            }
        }
    }
}

/// Busy flags of the scan windows `[kT, kT + t)`, indexed by `k`.
struct ScanBook {
    busy: Vec<bool>,
    finalized: u64,
}

impl ScanBook {
    /// Marks every scan window overlapped by primary airtime `[a, b)`.
    fn mark(&mut self, a: i64, b: i64, period: i64, scan: i64) {
        let lo = ((a - scan).div_euclid(period) + 1).max(0);
        let hi = (b - 1).div_euclid(period);
        for k in lo..=hi {
            let k = k as usize;
            if self.busy.len() <= k {
                self.busy.resize(k + 1, false);
            }
            self.busy[k] = true;
        }
    }

    fn is_busy(&self, k: u64) -> bool {
        self.busy.get(k as usize).copied().unwrap_or(false)
    }
}

pub fn run_simulation(config: &SimConfig) -> Result<SimStats> {
    run(config, None)
}

/// Runs and writes one line per transmission slot to `trace`:
/// `time_slots,state,slot,nodes`, where `state` is 1 (primaries only) or
/// 2 (both networks), `slot` the slot type and `nodes` the transmitting
/// nodes (`p<i>` / `s<i>`, space separated). No header line.
pub fn run_simulation_traced(config: &SimConfig, trace: &mut dyn Write) -> Result<SimStats> {
    run(config, Some(trace))
}

fn run(config: &SimConfig, mut trace: Option<&mut dyn Write>) -> Result<SimStats> {
    config.validate()?;
    let scenario = &config.scenario;
    let tk = Durations::new(scenario)?;
    let scheme = scenario.scheme().scheme;
    let timing = scenario.timing();
    let net = scenario.network();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);
    let mut prim = Network::new(net.n_primary, net.primary_backoff(), net.lambda_primary, &mut rng);
    let mut sec = Network::new(net.n_secondary, net.secondary_backoff(), net.lambda_secondary, &mut rng);

    let primary_payload = timing.primary_payload();
    let secondary_payload = timing.secondary_payload();
    let sensing = scheme == Scheme::Sensing;
    let measured = config.run_length - config.warmup;
    let per_batch = measured / config.batches as u64;

    let mut batches = vec![Counters::default(); config.batches];
    let mut scans = ScanBook { busy: Vec::new(), finalized: 0 };
    let mut histogram = config.state_sample_interval.map(|_| {
        prim.windows.iter().map(|&w| vec![0u64; w as usize]).collect::<Vec<_>>()
    });
    let mut empty_samples = 0u64;

    let mut now: i64 = 0;
    let mut start_ticks = 0;
    let mut first_measured_scan = 0u64;
    let (mut tx_p, mut tx_s) = (Vec::new(), Vec::new());
    let mut duration_sum = 0i64;

    for ts in 0..config.run_length {
        if ts == config.warmup {
            start_ticks = now;
            first_measured_scan = (now as u64).div_ceil(tk.period as u64);
        }
        let batch = (ts >= config.warmup)
            .then(|| (((ts - config.warmup) / per_batch) as usize).min(config.batches - 1));

        if sensing {
            while scans.finalized as i64 * tk.period + tk.quiet <= now {
                let k = scans.finalized;
                if let Some(b) = batch {
                    if k >= first_measured_scan {
                        batches[b].scans += 1;
                        batches[b].scans_busy += scans.is_busy(k) as u64;
                    }
                }
                scans.finalized += 1;
            }
        }

        let k = now / tk.period;
        let offset = now % tk.period;
        let eligible = net.n_secondary > 0
            && match scheme {
                Scheme::Sensing => offset >= tk.quiet && !scans.is_busy(k as u64),
                Scheme::SilentPeriod => offset >= tk.quiet,
                Scheme::Coexist => true,
            };

        prim.transmitters(&mut tx_p);
        if eligible {
            sec.transmitters(&mut tx_s);
        } else {
            tx_s.clear();
        }
        let remaining = if eligible && scheme != Scheme::Coexist {
            (k + 1) * tk.period - now
        } else {
            i64::MAX
        };
        let s_suc = tk.ts_suc.min(remaining);
        let s_col = tk.ts_col.min(remaining);
        let (kind, duration, primary_air) = match (tx_p.len(), tx_s.len()) {
            (0, 0) => (SlotKind::Idle, TICKS_PER_SLOT, 0),
            (1, 0) => (SlotKind::PrimarySuccess, tk.tp_suc + tk.difs, tk.tp_suc),
            (0, 1) => (SlotKind::SecondarySuccess, s_suc + tk.difs, 0),
            (_, 0) => (SlotKind::PrimaryCollision, tk.tp_col + tk.eifs, tk.tp_col),
            (0, _) => (SlotKind::SecondaryCollision, s_col + tk.eifs, 0),
            _ => (SlotKind::CrossCollision, tk.tp_col.max(s_col) + tk.eifs, tk.tp_col),
        };
        let state = if eligible { NetState::Both } else { NetState::PrimaryOnly };

        if sensing && primary_air > 0 {
            scans.mark(now, now + primary_air, tk.period, tk.quiet);
        }

        if let Some(out) = trace.as_deref_mut() {
            write_trace_line(out, now, state, kind, &tx_p, &tx_s)?;
        }

        if let Some(b) = batch {
            let c = &mut batches[b];
            c.ts += 1;
            c.ticks += duration;
            c.counts[state as usize][kind as usize] += 1;
            c.durations[state as usize][kind as usize] += duration;
            match kind {
                SlotKind::PrimarySuccess => c.primary_credit += primary_payload,
                SlotKind::SecondarySuccess => {
                    let whole = s_suc == tk.ts_suc;
                    if !whole {
                        c.fragments += 1;
                    }
                    if whole || tk.ts_suc == 0 {
                        c.secondary_credit += secondary_payload;
                    } else if config.count_fragments {
                        c.secondary_credit += secondary_payload * s_suc as f64 / tk.ts_suc as f64;
                    }
                }
                _ => {}
            }
            let collided = tx_p.len() + tx_s.len() > 1;
            c.primary_attempts += tx_p.len() as u64;
            c.secondary_attempts += tx_s.len() as u64;
            if collided {
                c.primary_collisions += tx_p.len() as u64;
                c.secondary_collisions += tx_s.len() as u64;
            }
            if let (Some(h), Some(every)) = (histogram.as_mut(), config.state_sample_interval) {
                if (ts - config.warmup) % every == 0 {
                    for n in &prim.nodes {
                        if n.has_packet {
                            h[n.stage as usize][n.counter as usize] += 1;
                        } else {
                            empty_samples += 1;
                        }
                    }
                }
            }
            duration_sum += duration;
        }

        let success = tx_p.len() + tx_s.len() == 1;
        prim.step(success, &mut rng);
        if eligible {
            sec.step(success, &mut rng);
        }
        now += duration;
    }

    if sensing {
        let last = config.batches - 1;
        while scans.finalized as i64 * tk.period + tk.quiet <= now {
            let k = scans.finalized;
            if k >= first_measured_scan {
                batches[last].scans += 1;
                batches[last].scans_busy += scans.is_busy(k) as u64;
            }
            scans.finalized += 1;
        }
    }

    let mut scan_log = scans.busy;
    scan_log.resize(scans.finalized as usize, false);
    let mut total = Counters::default();
    for b in &batches {
        total.merge(b);
    }
    debug_assert_eq!(total.ticks, duration_sum);
    Ok(SimStats {
        config: config.clone(),
        total,
        batches,
        start_ticks,
        end_ticks: now,
        scan_log,
        first_measured_scan,
        state_histogram: histogram,
        empty_state_samples: empty_samples,
    })
}

fn write_trace_line(
    out: &mut dyn Write,
    now: i64,
    state: NetState,
    kind: SlotKind,
    tx_p: &[u32],
    tx_s: &[u32],
) -> Result<()> {
    write!(
        out,
        "{}.{:02},{},{},",
        now / TICKS_PER_SLOT,
        now % TICKS_PER_SLOT,
        state as u8 + 1,
        kind.label(state)
    )?;
    let mut first = true;
    for (prefix, ids) in [("p", tx_p), ("s", tx_s)] {
        for id in ids {
            if !first {
                out.write_all(b" ")?;
            }
            write!(out, "{prefix}{id}")?;
            first = false;
        }
    }
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_accept_preset_and_reject_odd_durations() {
        assert_eq!(to_ticks("x", 58.9).unwrap(), 5890);
        assert_eq!(to_ticks("x", 0.25).unwrap(), 25);
        assert!(to_ticks("x", 1.0 / 3.0).is_err());
    }

    #[test]
    fn scan_marking_bounds() {
        let mut book = ScanBook { busy: Vec::new(), finalized: 0 };
        // Period 1000, scan 250: airtime [900, 1100) overlaps scan 1 only.
        book.mark(900, 1100, 1000, 250);
        assert!(!book.is_busy(0) && book.is_busy(1));
        // Airtime ending exactly at the scan start does not overlap it.
        book.mark(1800, 2000, 1000, 250);
        assert!(!book.is_busy(2));
        // Airtime starting at the scan end does not overlap it.
        book.mark(3250, 3400, 1000, 250);
        assert!(!book.is_busy(3));
        // Zero-length scans are busy only when strictly inside airtime.
        let mut point = ScanBook { busy: Vec::new(), finalized: 0 };
        point.mark(1000, 1200, 1000, 0);
        assert!(!point.is_busy(1));
        point.mark(1900, 2100, 1000, 0);
        assert!(point.is_busy(2));
    }

    #[test]
    fn run_shorter_than_batches_rejected() {
        let mut c = SimConfig::new(Scenario::reference(), 1).with_run_length(12);
        c.warmup = 5;
        assert!(c.validate().is_err());
        c.warmup = 12;
        assert!(c.validate().is_err());
    }
}
