use std::collections::{HashMap, HashSet};

use aoi_core::analytic;
use aoi_core::sim::{measure_renewals, simulate, trace_replication, EventTrace, SimRun, TraceKind};
use aoi_core::system::{StrategyKind, SystemConfig};
use aoi_core::AoiError;
use aoi_testkit::rel_diff;

/// Three UEs with 100 channel uses of serving time each and ε = 0.
fn three_by_hundred() -> SystemConfig {
    SystemConfig {
        gen_rate: 0.002,
        per_ue_bits: vec![80.0; 3],
        per_ue_blocklength: vec![90.0; 3],
        per_ue_snr: vec![3.0; 3],
        overhead: 10.0,
        broadcast_bits: 240.0,
        broadcast_blocklength: 100.0,
        dispersion: Default::default(),
    }
}

fn scripted(strategy: StrategyKind, arrivals: Vec<f64>, horizon: f64) -> EventTrace {
    let run = SimRun::new(three_by_hundred(), strategy)
        .horizon(horizon)
        .warmup_fraction(0.0)
        .uniform_epsilon(0.0)
        .arrival_times(arrivals);
    trace_replication(&run, 0).unwrap()
}

/// `(time, ue, update_id)` of every serve_start.
fn starts(trace: &EventTrace) -> Vec<(f64, Option<usize>, u64)> {
    trace
        .events
        .iter()
        .filter(|e| e.kind == TraceKind::ServeStart)
        .map(|e| (e.time, e.ue, e.update_id.unwrap()))
        .collect()
}

#[test]
fn single_forced_update_resets_age_to_blocklength() {
    let mut cfg = three_by_hundred();
    cfg.per_ue_bits = vec![100.0];
    cfg.per_ue_blocklength = vec![125.0];
    cfg.per_ue_snr = vec![3.0];
    cfg.broadcast_bits = 100.0;
    cfg.broadcast_blocklength = 125.0;
    let run = SimRun::new(cfg, StrategyKind::Brnp)
        .horizon(1000.0)
        .warmup_fraction(0.0)
        .replications(1)
        .uniform_epsilon(0.0)
        .arrival_times(vec![50.0]);
    let trace = trace_replication(&run, 0).unwrap();
    let ok: Vec<_> = trace
        .events
        .iter()
        .filter(|e| e.kind == TraceKind::ServeEnd { success: true })
        .collect();
    assert_eq!(ok.len(), 1);
    assert_eq!(ok[0].time, 175.0);
    // Age grows as t until 175, then as t − 50 (125 at the reception).
    let est = simulate(&run).unwrap();
    let expect = (175.0f64.powi(2) / 2.0 + (1000.0f64.powi(2) - 175.0f64.powi(2)) / 2.0 - 50.0 * 825.0) / 1000.0;
    assert!((est.mean - expect).abs() < 1e-9, "{} vs {expect}", est.mean);
}

#[test]
fn dnp_cycles_start_at_first_ue() {
    let t = scripted(StrategyKind::Dnp, vec![0.0, 150.0, 700.0], 2000.0);
    let seq: Vec<_> = starts(&t).iter().map(|&(time, ue, id)| (time, ue.unwrap(), id)).collect();
    assert_eq!(
        seq,
        vec![
            (0.0, 0, 0),
            (100.0, 1, 0),
            (200.0, 2, 0),
            (300.0, 0, 1),
            (400.0, 1, 1),
            (500.0, 2, 1),
            (700.0, 0, 2),
            (800.0, 1, 2),
            (900.0, 2, 2),
        ]
    );
}

#[test]
fn dpb_takes_over_at_next_ue_for_a_full_round() {
    let t = scripted(StrategyKind::Dpb, vec![0.0, 150.0, 600.0], 2000.0);
    let seq: Vec<_> = starts(&t).iter().map(|&(time, ue, id)| (time, ue.unwrap(), id)).collect();
    assert_eq!(
        seq,
        vec![
            (0.0, 0, 0),
            (100.0, 1, 0),
            (200.0, 2, 1),
            (300.0, 0, 1),
            (400.0, 1, 1),
            // idle from 500; the pointer resumes at UE 2
            (600.0, 2, 2),
            (700.0, 0, 2),
            (800.0, 1, 2),
        ]
    );
}

#[test]
fn dps_restarts_at_current_ue() {
    let t = scripted(StrategyKind::Dps, vec![0.0, 150.0, 600.0], 2000.0);
    let seq: Vec<_> = starts(&t).iter().map(|&(time, ue, id)| (time, ue.unwrap(), id)).collect();
    assert_eq!(
        seq,
        vec![
            (0.0, 0, 0),
            (100.0, 1, 0),
            (150.0, 1, 1),
            (250.0, 2, 1),
            (350.0, 0, 1),
            (600.0, 1, 2),
            (700.0, 2, 2),
            (800.0, 0, 2),
        ]
    );
    let preempts: Vec<_> = t.events.iter().filter(|e| e.kind == TraceKind::Preempt).collect();
    assert_eq!(preempts.len(), 1);
    assert_eq!((preempts[0].time, preempts[0].ue, preempts[0].update_id), (150.0, Some(1), Some(0)));
}

#[test]
fn broadcast_semantics() {
    // BRPS: the arrival at 50 abandons the first broadcast.
    let t = scripted(StrategyKind::Brps, vec![0.0, 50.0], 1000.0);
    assert_eq!(starts(&t), vec![(0.0, None, 0), (50.0, None, 1)]);
    let ends: Vec<_> = t.events.iter().filter(|e| matches!(e.kind, TraceKind::ServeEnd { .. })).collect();
    assert_eq!(ends.len(), 3);
    assert!(ends.iter().all(|e| e.time == 150.0 && e.update_id == Some(1)));

    // BRNP: arrivals during a broadcast wait, and only the newest survives.
    let t = scripted(StrategyKind::Brnp, vec![0.0, 30.0, 60.0], 1000.0);
    assert_eq!(starts(&t), vec![(0.0, None, 0), (100.0, None, 2)]);
}

fn check_trace_invariants(trace: &EventTrace, strategy: StrategyKind, n: usize, cycle: f64) {
    let mut last = 0.0;
    // Running transmission per UE (unicast) or shared (broadcast).
    let mut open: HashMap<Option<usize>, u64> = HashMap::new();
    let mut received: HashSet<(usize, u64)> = HashSet::new();
    let mut generated: HashMap<u64, f64> = HashMap::new();
    let mut freshest = vec![f64::NEG_INFINITY; n];
    let mut last_start: Vec<Option<f64>> = vec![None; n];
    for e in &trace.events {
        assert!(e.time >= last, "time went backwards");
        last = e.time;
        match e.kind {
            TraceKind::Generate => {
                generated.insert(e.update_id.unwrap(), e.time);
            }
            TraceKind::ServeStart => {
                let key = if strategy.is_broadcast() { None } else { e.ue };
                open.insert(key, e.update_id.unwrap());
                if strategy == StrategyKind::Dnp {
                    let ue = e.ue.unwrap();
                    if let Some(prev) = last_start[ue] {
                        assert!(e.time - prev >= cycle - 1e-9, "DNP revisited UE {ue} early");
                    }
                    last_start[ue] = Some(e.time);
                }
            }
            TraceKind::Preempt => {
                open.clear();
            }
            TraceKind::ServeEnd { success } => {
                let ue = e.ue.unwrap();
                let key = if strategy.is_broadcast() { None } else { Some(ue) };
                let id = e.update_id.unwrap();
                assert_eq!(open.get(&key), Some(&id), "serve_end without matching serve_start");
                if !strategy.is_broadcast() {
                    open.remove(&key);
                }
                if success {
                    assert!(received.insert((ue, id)), "UE {ue} received update {id} twice");
                    let g = generated[&id];
                    assert!(g > freshest[ue], "age must drop at a reception");
                    freshest[ue] = g;
                }
            }
            TraceKind::Idle => {}
        }
    }
}

#[test]
fn random_traces_satisfy_invariants() {
    let cfg = SystemConfig::homogeneous(3, 0.004, 100.0, 0.8, 3.0, 10.0, 1.0).unwrap();
    for s in StrategyKind::SIMULATED {
        let run = SimRun::new(cfg.clone(), s).horizon(2e5).seed(5).uniform_epsilon(0.2);
        let trace = trace_replication(&run, 3).unwrap();
        assert!(trace.len() > 500);
        check_trace_invariants(&trace, s, 3, cfg.cycle_length());
    }
}

#[test]
fn age_after_reception_is_at_least_one_transmission() {
    let cfg = SystemConfig::homogeneous(3, 0.004, 100.0, 0.8, 3.0, 10.0, 1.0).unwrap();
    let min_unicast = cfg.serving_times().into_iter().fold(f64::INFINITY, f64::min);
    for s in StrategyKind::SIMULATED {
        let run = SimRun::new(cfg.clone(), s).horizon(1e5).seed(9).uniform_epsilon(0.1);
        let trace = trace_replication(&run, 0).unwrap();
        let gen: HashMap<u64, f64> = trace
            .events
            .iter()
            .filter(|e| e.kind == TraceKind::Generate)
            .map(|e| (e.update_id.unwrap(), e.time))
            .collect();
        let floor = if s.is_broadcast() { cfg.broadcast_blocklength } else { min_unicast };
        for e in trace.events.iter().filter(|e| e.kind == TraceKind::ServeEnd { success: true }) {
            assert!(e.time - gen[&e.update_id.unwrap()] >= floor - 1e-9);
        }
    }
}

#[test]
fn identical_seed_gives_identical_trace() {
    let cfg = SystemConfig::homogeneous(3, 0.002, 100.0, 0.9, 3.0, 10.0, 1.0).unwrap();
    for s in StrategyKind::SIMULATED {
        let run = SimRun::new(cfg.clone(), s).horizon(2e5).seed(42);
        let a = trace_replication(&run, 1).unwrap();
        let b = trace_replication(&run, 1).unwrap();
        assert_eq!(a, b);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write_lines(&mut buf_a).unwrap();
        b.write_lines(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        let c = trace_replication(&run.clone().seed(43), 1).unwrap();
        assert_ne!(a, c);
        assert_eq!(simulate(&run).unwrap(), simulate(&run).unwrap());
    }
}

#[test]
fn rejects_short_horizon_and_analytic_only_strategies() {
    let cfg = SystemConfig::homogeneous(3, 0.002, 100.0, 0.8, 3.0, 10.0, 1.0).unwrap();
    let run = SimRun::new(cfg.clone(), StrategyKind::Dnp).horizon(300.0);
    assert!(matches!(simulate(&run), Err(AoiError::InsufficientHorizon { .. })));
    let run = SimRun::new(cfg.clone(), StrategyKind::DnpZeroWait);
    assert!(matches!(simulate(&run), Err(AoiError::UnsupportedStrategy(_))));
    let run = SimRun::new(cfg, StrategyKind::Dnp).horizon(5e3).replications(2);
    assert!(matches!(
        measure_renewals(&run, 0),
        Err(AoiError::InsufficientRenewalSamples { .. })
    ));
}

#[test]
fn dps_never_waits_and_attempts_are_geometric() {
    let cfg = SystemConfig::homogeneous(3, 0.003, 100.0, 0.8, 3.0, 10.0, 1.0).unwrap();
    let run = SimRun::new(cfg, StrategyKind::Dps)
        .horizon(1e6)
        .seed(17)
        .uniform_epsilon(0.3);
    let m = measure_renewals(&run, 1).unwrap();
    assert_eq!(m.mean.mean_w, 0.0);
    let h = m.interval(|d| d.mean_attempts);
    assert!(h.contains(1.0 / 0.7), "{h:?}");
}

#[test]
fn measured_moments_recombine_to_time_average() {
    // T is independent of the interarrival Y only without preemption.
    let cfg = SystemConfig::homogeneous(3, 0.002, 100.0, 0.8, 3.0, 10.0, 1.0).unwrap();
    for s in [StrategyKind::Dnp, StrategyKind::Brnp, StrategyKind::Brps] {
        let run = SimRun::new(cfg.clone(), s).horizon(2e6).seed(23);
        let m = measure_renewals(&run, 2).unwrap();
        let recombined = m.mean.mean_y2 / (2.0 * m.mean.mean_y) + m.mean.mean_t;
        assert!(m.aoi.contains(recombined), "{s}: {recombined} vs {:?}", m.aoi);
    }
}

#[test]
fn dpb_moments_match_but_time_average_exceeds_recombination() {
    let cfg = SystemConfig::homogeneous(3, 0.002, 100.0, 0.8, 3.0, 10.0, 1.0).unwrap();
    let run = SimRun::new(cfg.clone(), StrategyKind::Dpb).horizon(2e6).seed(23);
    for ue in 0..3 {
        let exact = analytic::renewal_diagnostics(&cfg, StrategyKind::Dpb, ue).unwrap();
        let m = measure_renewals(&run, ue).unwrap();
        let fields: [(&str, fn(&analytic::RenewalDiagnostics) -> f64); 5] = [
            ("T", |d| d.mean_t),
            ("W", |d| d.mean_w),
            ("S", |d| d.mean_s),
            ("Y", |d| d.mean_y),
            ("Y2", |d| d.mean_y2),
        ];
        for (name, f) in fields {
            let iv = m.interval(f);
            assert!((iv.mean - f(&exact)).abs() <= 3.0 * iv.half_width, "ue {ue} {name}: {iv:?} vs {}", f(&exact));
        }
        // Buffered updates that start close to U_n arrive after short gaps.
        let recombined = m.mean.mean_y2 / (2.0 * m.mean.mean_y) + m.mean.mean_t;
        assert!(m.aoi.lower() > recombined, "ue {ue}: {:?} vs {recombined}", m.aoi);
        assert!(rel_diff(m.aoi.mean, exact.average_aoi()) < 0.03);
    }
}

#[test]
fn ci_shrinks_with_horizon() {
    let cfg = SystemConfig::homogeneous(3, 0.002, 100.0, 0.8, 3.0, 10.0, 1.0).unwrap();
    let base = SimRun::new(cfg, StrategyKind::Dnp).replications(200).seed(101);
    let a = simulate(&base.clone().horizon(2e5)).unwrap();
    let b = simulate(&base.horizon(4e5)).unwrap();
    let ratio = b.ci_half_width / a.ci_half_width;
    assert!((0.6..=0.82).contains(&ratio), "ratio {ratio}");
}

#[test]
fn per_ue_estimates_track_closed_forms() {
    // Heterogeneous UEs, moderate load.
    let cfg = SystemConfig {
        gen_rate: 0.003,
        per_ue_bits: vec![100.0, 60.0, 140.0],
        per_ue_blocklength: vec![125.0, 80.0, 160.0],
        per_ue_snr: vec![3.0, 2.0, 5.0],
        overhead: 15.0,
        broadcast_bits: 300.0,
        broadcast_blocklength: 360.0,
        dispersion: Default::default(),
    };
    for s in [StrategyKind::Dnp, StrategyKind::Dps] {
        let est = simulate(&SimRun::new(cfg.clone(), s).horizon(2e6).seed(7)).unwrap();
        assert_eq!(est.per_ue.len(), 3);
        for (ue, iv) in est.per_ue.iter().enumerate() {
            let exact = analytic::per_ue_aoi(&cfg, s, ue).unwrap();
            // Within 3 half-widths: a per-UE smoke check; the strict 95%
            // comparison lives in the acceptance suite.
            assert!((iv.mean - exact).abs() <= 3.0 * iv.half_width, "{s} ue {ue}: {iv:?} vs {exact}");
        }
    }
}
