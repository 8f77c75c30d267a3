#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resilient_est::catalog::BENCHMARK_NAME;
use resilient_est::scenario::{AttackKind, AttackSignal, ScenarioConfig};

pub const BENCHMARK_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/benchmark.json");
pub const NO_ATTACK_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/no_attack.json");

/// Window length the generator keeps between attacks on different sensors.
pub const GAP: f64 = 8.5;

/// Onset range once detection thresholds have settled (past Delta1 = 4.82 s).
pub const SETTLED_ONSET: (f64, f64) = (5.5, 8.0);

/// Onset range that includes the detector transient.
pub const EARLY_ONSET: (f64, f64) = (2.0, 5.0);

pub fn base_config() -> ScenarioConfig {
    ScenarioConfig::from_json(&format!(r#"{{"model": "{BENCHMARK_NAME}"}}"#)).unwrap()
}

pub fn random_x0(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..3).map(|_| rng.gen_range(-0.1..=0.1)).collect()
}

pub fn random_z0(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    [2, 2, 2, 1]
        .iter()
        .map(|&d| (0..d).map(|_| rng.gen_range(-2.0..=2.0)).collect())
        .collect()
}

/// One to two square-wave attacks on single sensors, separated by more than
/// the attack window so at most one sensor is compromised in any window.
pub fn random_attacks(rng: &mut ChaCha8Rng, horizon: f64, onset: (f64, f64)) -> Vec<AttackSignal> {
    let count = rng.gen_range(1..=2);
    let mut out = Vec::new();
    let mut t = rng.gen_range(onset.0..onset.1);
    let mut last_sensor = 0;
    for _ in 0..count {
        let duration = rng.gen_range(1.0..3.0);
        if t + duration > horizon - 1.0 {
            break;
        }
        let mut sensor = rng.gen_range(1..=4);
        while sensor == last_sensor {
            sensor = rng.gen_range(1..=4);
        }
        out.push(AttackSignal {
            sensor,
            t_on: t,
            t_off: t + duration,
            kind: AttackKind::Square {
                amplitude: rng.gen_range(0.5..=1.0),
                period: rng.gen_range(0.3..=0.7),
            },
        });
        last_sensor = sensor;
        t += duration + GAP + rng.gen_range(0.0..1.0);
    }
    out
}

pub fn random_attack_config(seed: u64, random_estimates: bool) -> ScenarioConfig {
    random_attack_config_with(seed, random_estimates, SETTLED_ONSET)
}

pub fn random_attack_config_with(seed: u64, random_estimates: bool, onset: (f64, f64)) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = base_config();
    cfg.seed = seed;
    cfg.x0 = Some(random_x0(&mut rng));
    if random_estimates {
        cfg.observer.z0 = Some(random_z0(&mut rng));
    }
    cfg.attacks = random_attacks(&mut rng, cfg.horizon, onset);
    cfg.detector.lip_samples = 2000;
    cfg
}

pub fn random_quiet_config(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = base_config();
    cfg.seed = seed;
    cfg.x0 = Some(random_x0(&mut rng));
    cfg.observer.z0 = Some(random_z0(&mut rng));
    cfg.detector.lip_samples = 2000;
    cfg
}

/// Sensors (one-based) that are never attacked in `cfg`.
pub fn clean_sensors(cfg: &ScenarioConfig) -> Vec<usize> {
    (1..=4).filter(|i| cfg.attacks.iter().all(|a| a.sensor != *i)).collect()
}
