mod common;

use proptest::prelude::*;

use common::*;
use resilient_est::harness::{run, write_csv, Simulation, SimulationTrace};
use resilient_est::scenario::ScenarioConfig;

fn csv_bytes(trace: &SimulationTrace) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(trace, &mut out).unwrap();
    out
}

#[test]
fn identical_configs_give_identical_traces() {
    let cfg = random_attack_config(77, true);
    let (a, ra) = run(&cfg, false).unwrap();
    let (b, rb) = run(&cfg, false).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    assert_eq!(ra.switch_events, rb.switch_events);
}

#[test]
fn csv_round_trips_through_a_file() {
    let cfg = ScenarioConfig::load(BENCHMARK_CONFIG).unwrap();
    let (trace, _) = run(&cfg, false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    resilient_est::harness::export_csv(&trace, &path).unwrap();

    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, trace.header());
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (t, sigma, err) = (col("t"), col("sigma"), col("err_inf"));
    let mut count = 0;
    for (rec, row) in reader.records().zip(&trace.rows) {
        let rec = rec.unwrap();
        assert_eq!(rec[t].parse::<f64>().unwrap(), row.t);
        assert_eq!(rec[sigma].parse::<usize>().unwrap(), row.sigma);
        assert_eq!(rec[err].parse::<f64>().unwrap(), row.err_inf);
        let x: Vec<f64> = (1..=3).map(|i| rec[col(&format!("x{i}"))].parse().unwrap()).collect();
        assert_eq!(x, row.x);
        count += 1;
    }
    assert_eq!(count, trace.rows.len());
}

#[test]
fn halving_the_step_keeps_the_switching_sequence() {
    let cfg = ScenarioConfig::load(BENCHMARK_CONFIG).unwrap();
    let mut fine = cfg.clone();
    fine.dt = 0.01;
    let (_, coarse_report) = run(&cfg, false).unwrap();
    let (_, fine_report) = run(&fine, false).unwrap();
    assert_eq!(coarse_report.sigma_path(), fine_report.sigma_path());
    for (a, b) in coarse_report.switch_events.iter().zip(&fine_report.switch_events) {
        assert!((a.t - b.t).abs() <= 5.0 * cfg.dt, "{} vs {}", a.t, b.t);
    }
}

/// Attacks starting inside the detector transient still respect the
/// guaranteed bound, even though they may go unnoticed for a while.
#[test]
fn early_attacks_respect_the_error_bound() {
    for seed in 0..10 {
        let cfg = random_attack_config_with(4000 + seed, true, EARLY_ONSET);
        let (trace, _) = run(&cfg, false).unwrap();
        for r in trace.rows.iter().filter(|r| !r.in_transient) {
            assert!(r.err_inf <= r.err_bound, "seed {}, t = {}: {} > {}", 4000 + seed, r.t, r.err_inf, r.err_bound);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trace_invariants_hold(seed in 0u64..10_000, random_estimates in any::<bool>()) {
        let cfg = random_attack_config(seed, random_estimates);
        let mut sim = Simulation::<f64>::new(&cfg, false).unwrap();
        let count = sim.lambda.len();
        let mut rows = Vec::new();
        while sim.remaining() > 0 {
            rows.push(sim.step().unwrap());
            prop_assert!(sim.switch_state().cycles_this_sample <= count);
        }
        let mut switches = 0;
        for pair in rows.windows(2) {
            prop_assert!(pair[1].resets_cum >= pair[0].resets_cum);
            if pair[1].sigma != pair[0].sigma {
                switches += 1;
            }
        }
        prop_assert!(switches <= 8);
        prop_assert!(sim.switch_state().switch_count <= 8);
        for r in &rows {
            prop_assert_eq!(r.fired, r.residual_active > r.threshold_active);
            prop_assert!(r.sigma >= 1 && r.sigma <= count);
        }
    }
}
