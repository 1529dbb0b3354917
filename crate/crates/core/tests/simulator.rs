use dcf_coexist::fixed_point::stationary_distribution;
use dcf_coexist::sim::*;
use dcf_coexist::{analyze, Scenario, SchemeConfig, TimingParams};

fn scenario(np: u32, ns: u32) -> Scenario {
    let s = Scenario::reference();
    let mut n = *s.network();
    n.n_primary = np;
    n.n_secondary = ns;
    s.with_network(n).unwrap()
}

/// 5 ms periods so that short runs see many scans.
fn short_period(s: Scenario) -> Scenario {
    let mut us = s.timing().to_micros();
    us.period_t_us = 5_000.0;
    s.with_timing(TimingParams::from_micros(&us).unwrap()).unwrap()
}

#[test]
fn identical_config_is_bit_identical() {
    let c = SimConfig::new(short_period(scenario(6, 15)), 42).with_run_length(50_000);
    let a = run_simulation(&c).unwrap();
    let b = run_simulation(&c).unwrap();
    assert_eq!(a, b);
    let other = SimConfig { stream: 1, ..c };
    assert_ne!(run_simulation(&other).unwrap().total, a.total);
}

#[test]
fn replications_follow_stream_order() {
    let c = SimConfig::new(scenario(6, 15), 3).with_run_length(20_000);
    let reps = run_replications(&c, 3).unwrap();
    for (i, r) in reps.iter().enumerate() {
        let single = run_simulation(&SimConfig { stream: i as u64, ..c.clone() }).unwrap();
        assert_eq!(*r, single);
    }
}

#[test]
fn time_is_conserved() {
    for scheme in [
        SchemeConfig::sensing(),
        SchemeConfig::coexist(),
        SchemeConfig::silent_period(0.6).unwrap(),
    ] {
        let s = short_period(scenario(6, 15)).with_scheme(scheme).unwrap();
        let r = run_simulation(&SimConfig::new(s, 7).with_run_length(40_000)).unwrap();
        let t = &r.total;
        let by_kind: i64 = t.durations.iter().flatten().sum();
        assert_eq!(by_kind, t.ticks);
        assert_eq!(r.end_ticks - r.start_ticks, t.ticks);
        let per_batch: i64 = r.batches.iter().map(|b| b.ticks).sum();
        assert_eq!(per_batch, t.ticks);
        assert_eq!(t.counts.iter().flatten().sum::<u64>(), t.ts);
        assert_eq!(t.ts, 40_000 - 2_000);
    }
}

#[test]
fn lone_primary_never_collides() {
    let r = run_simulation(&SimConfig::new(scenario(1, 0), 1).with_run_length(20_000)).unwrap();
    assert_eq!(r.total.primary_collisions, 0);
    assert!(r.total.primary_attempts > 0);
    assert_eq!(r.tau_estimates().tau_p1, None);
}

#[test]
fn trace_has_one_line_per_slot() {
    let c = SimConfig::new(scenario(6, 15), 9).with_run_length(1000);
    let mut buf = Vec::new();
    let traced = run_simulation_traced(&c, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1000);
    assert_eq!(traced, run_simulation(&c).unwrap());
}

/// No secondary transmits during a scan, in a period whose scan was busy,
/// or past the end of its period.
#[test]
fn secondaries_respect_scan_outcomes() {
    let s = short_period(scenario(6, 15));
    let period = (s.timing().period_t * TICKS_PER_SLOT as f64).round() as i64;
    let scan = (s.timing().scan_t * TICKS_PER_SLOT as f64).round() as i64;
    let c = SimConfig::new(s, 11).with_run_length(60_000);
    let mut buf = Vec::new();
    let r = run_simulation_traced(&c, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let (mut secondary_slots, mut busy_seen) = (0, 0);
    for line in text.lines() {
        let f: Vec<&str> = line.split(',').collect();
        let (whole, frac) = f[0].split_once('.').unwrap();
        let now = whole.parse::<i64>().unwrap() * TICKS_PER_SLOT + frac.parse::<i64>().unwrap();
        let k = (now / period) as usize;
        if f[3].split(' ').any(|id| id.starts_with('s')) {
            secondary_slots += 1;
            assert_eq!(f[1], "2", "{line}");
            assert!(!r.scan_log[k], "secondary in busy period {k}: {line}");
            assert!(now % period >= scan, "secondary during scan: {line}");
        }
        if r.scan_log.get(k) == Some(&true) {
            busy_seen += 1;
            assert_eq!(f[1], "1", "{line}");
        }
    }
    assert!(secondary_slots > 0 && busy_seen > 0);
    assert!(r.total.fragments > 0);
}

#[test]
fn fragments_only_change_secondary_credit() {
    let s = short_period(scenario(6, 15));
    let with = run_simulation(&SimConfig::new(s, 5).with_run_length(40_000)).unwrap();
    let without = run_simulation(&SimConfig {
        count_fragments: false,
        ..SimConfig::new(s, 5).with_run_length(40_000)
    })
    .unwrap();
    assert_eq!(with.total.counts, without.total.counts);
    assert_eq!(with.total.primary_credit, without.total.primary_credit);
    assert!(with.total.secondary_credit > without.total.secondary_credit);
}

/// Without secondaries and with N = 15 the decoupling approximation is
/// accurate, so the estimate must sit within three standard errors.
#[test]
fn primary_alone_tau_matches_fixed_point() {
    let s = scenario(15, 0);
    let a = analyze(&s).unwrap();
    let runs = run_replications(&SimConfig::new(s, 2).with_run_length(200_000), 4).unwrap();
    let sum = summarize(&runs).unwrap();
    let (v, se) = (sum.value(Metric::TauP1).unwrap(), sum.se(Metric::TauP1).unwrap());
    assert!((v - a.state1.tau_p1).abs() < 3.0 * se, "{v} vs {} (se {se})", a.state1.tau_p1);
    assert_eq!(sum.value(Metric::TauP2), None);
    assert_eq!(sum.value(Metric::St), Some(0.0));
}

/// Upper 1 % point of chi-square (Wilson–Hilferty).
fn chi2_critical_1pct(dof: usize) -> f64 {
    let k = dof as f64;
    let z = 2.326_347_874;
    let h = 2.0 / (9.0 * k);
    k * (1.0 - h + z * h.sqrt()).powi(3)
}

/// Sampled back-off states of saturated primaries against the chain's
/// stationary distribution at the observed collision probability.
#[test]
fn backoff_states_follow_stationary_distribution() {
    let s = scenario(10, 0);
    let net = *s.network();
    let c = SimConfig {
        state_sample_interval: Some(200),
        ..SimConfig::new(s, 17).with_run_length(2_000_000)
    };
    let r = run_simulation(&c).unwrap();
    let h = r.state_histogram.as_ref().unwrap();
    assert_eq!(r.empty_state_samples, 0);
    let p_hat = r.primary_collision_probability().unwrap();
    let pi = stationary_distribution(p_hat, net.w_primary, net.m_primary, 1.0);
    let total: u64 = h.iter().flatten().sum();
    assert_eq!(total, net.n_primary as u64 * (c.run_length - c.warmup).div_ceil(200));

    let (mut chi2, mut bins) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (i, stage) in h.iter().enumerate() {
        for (j, &obs) in stage.iter().enumerate() {
            let exp = pi.stages[i][j] * total as f64;
            if exp >= 5.0 {
                chi2 += (obs as f64 - exp).powi(2) / exp;
                bins += 1;
            } else {
                pooled_obs += obs as f64;
                pooled_exp += exp;
            }
        }
    }
    if pooled_exp > 0.0 {
        chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    // One parameter (p) estimated from the same run.
    let dof = bins - 2;
    let crit = chi2_critical_1pct(dof);
    assert!(chi2 < crit, "chi2 {chi2:.1} over {bins} bins, critical {crit:.1}");
}

#[test]
fn chi2_critical_matches_tables() {
    // Tabulated upper 1 % points.
    for (dof, table) in [(10, 23.209), (50, 76.154), (100, 135.807)] {
        assert!((chi2_critical_1pct(dof) - table).abs() / table < 2e-3);
    }
}

#[test]
fn long_period_mismatch_stays_bounded() {
    // T = 23.5 ms holds about 20 packets after the scan.
    let s = scenario(16, 16);
    let mut us = s.timing().to_micros();
    us.period_t_us = 23_500.0;
    us.scan_t_us = 20.0;
    let s = s.with_timing(TimingParams::from_micros(&us).unwrap()).unwrap();
    let a = analyze(&s).unwrap();
    let runs = run_replications(&SimConfig::new(s, 4).with_run_length(200_000), 4).unwrap();
    let sum = summarize(&runs).unwrap();
    let d = compare_to_analytical(&sum, &a, &Tolerance::default()).unwrap();
    let pt = d.check(Metric::Pt).unwrap();
    assert!(pt.rel_err.unwrap() <= 0.05, "{pt:?}");
    assert!(r_finite(&d));
}

fn r_finite(d: &Discrepancy) -> bool {
    d.checks.iter().all(|c| c.abs_err.is_none_or(f64::is_finite))
}

#[test]
fn injected_bias_is_detected() {
    let s = scenario(15, 15);
    let a = analyze(&s).unwrap();
    let runs = run_replications(&SimConfig::new(s, 8).with_run_length(100_000), 2).unwrap();
    let sum = summarize(&runs).unwrap();
    let d = compare_with_bias(&sum, &a, &Tolerance::default(), 0.10).unwrap();
    assert_eq!(d.check(Metric::Pt).unwrap().status, CheckStatus::Fail);
    assert!(!d.passed());
}

#[test]
fn summarize_rejects_mixed_scenarios() {
    let a = run_simulation(&SimConfig::new(scenario(6, 15), 1).with_run_length(5_000)).unwrap();
    let b = run_simulation(&SimConfig::new(scenario(7, 15), 1).with_run_length(5_000)).unwrap();
    assert!(summarize(&[a, b]).is_err());
    assert!(summarize(&[]).is_err());
}

#[test]
fn stats_csv_has_documented_columns() {
    let runs = run_replications(&SimConfig::new(scenario(6, 15), 1).with_run_length(5_000), 2).unwrap();
    let mut out = Vec::new();
    write_stats_csv(&mut out, &runs).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], STATS_CSV_HEADER.join(","));
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), STATS_CSV_HEADER.len());
    }
}
