//! Attack signals, measurement noise, attack-window validation and the JSON
//! scenario configuration.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::LambdaOrder;
use crate::observer::{ObserverConfig, SampleHold};
use crate::scalar::Scalar;

/// Tolerance used when comparing grid times against interval endpoints.
const TIME_EPS: f64 = 1e-9;

/// Waveform of one attack signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttackKind {
    Zero,
    /// `+amplitude` for the first half of each period counted from `t_on`,
    /// `−amplitude` for the second half.
    Square { amplitude: f64, period: f64 },
    Constant { value: f64 },
    /// `slope·(t − t_on)`.
    Ramp { slope: f64 },
    /// Piecewise linear through `(t, value)` points, clamped at the ends.
    Table { points: Vec<(f64, f64)> },
}

/// An attack on one sensor, active on `(t_on, t_off]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSignal {
    /// One-based sensor label.
    pub sensor: usize,
    pub t_on: f64,
    pub t_off: f64,
    #[serde(flatten)]
    pub kind: AttackKind,
}

impl AttackSignal {
    pub fn active(&self, t: f64) -> bool {
        t > self.t_on + TIME_EPS && t <= self.t_off + TIME_EPS
    }

    pub fn value(&self, t: f64) -> f64 {
        if !self.active(t) {
            return 0.0;
        }
        let s = t - self.t_on;
        match &self.kind {
            AttackKind::Zero => 0.0,
            AttackKind::Square { amplitude, period } => {
                let phase = s.rem_euclid(*period);
                if phase < 0.5 * period - TIME_EPS {
                    *amplitude
                } else {
                    -*amplitude
                }
            }
            AttackKind::Constant { value } => *value,
            AttackKind::Ramp { slope } => slope * s,
            AttackKind::Table { points } => interpolate(points, t),
        }
    }

    fn check(&self, p: usize) -> Result<()> {
        if self.sensor == 0 || self.sensor > p {
            return Err(Error::ScenarioInvalid(format!(
                "attack on sensor {} but the model has sensors 1..={p}",
                self.sensor
            )));
        }
        if !(self.t_off >= self.t_on) {
            return Err(Error::ScenarioInvalid(format!(
                "attack on sensor {} ends before it starts",
                self.sensor
            )));
        }
        match &self.kind {
            AttackKind::Square { period, .. } if !(*period > 0.0) => Err(Error::ScenarioInvalid(
                "square-wave period must be positive".into(),
            )),
            AttackKind::Table { points } if points.is_empty() => {
                Err(Error::ScenarioInvalid("attack table has no points".into()))
            }
            _ => Ok(()),
        }
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let k = points.partition_point(|(tk, _)| *tk <= t);
    let (t0, v0) = points[k - 1];
    let (t1, v1) = points[k];
    if t1 > t0 {
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    } else {
        v1
    }
}

/// Attack signals, declared sparsity and noise of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    pub signals: Vec<AttackSignal>,
    pub q: usize,
    /// `M_{v,i}` per sensor.
    pub noise_bound: Vec<f64>,
    pub noise_seed: u64,
}

impl AttackScenario {
    /// `a(t) ∈ ℝ^p`; overlapping signals on one sensor add up.
    pub fn attack_vector(&self, t: f64, p: usize) -> Vec<f64> {
        let mut a = vec![0.0; p];
        for s in &self.signals {
            a[s.sensor - 1] += s.value(t);
        }
        a
    }

    pub fn noise(&self) -> NoiseSource {
        NoiseSource::new(self.noise_bound.clone(), self.noise_seed)
    }
}

/// I.i.d. uniform noise on `[−M_{v,i}, M_{v,i}]`, reproducible per seed.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    bounds: Vec<f64>,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(bounds: Vec<f64>, seed: u64) -> Self {
        Self {
            bounds,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self) -> Vec<f64> {
        let rng = &mut self.rng;
        self.bounds
            .iter()
            .map(|&b| if b > 0.0 { rng.gen_range(-b..=b) } else { 0.0 })
            .collect()
    }
}

/// Window lengths after which an observer has forgotten any earlier attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowConstants {
    pub delta1: f64,
    pub delta2: f64,
    pub delta: f64,
}

/// Default margin of `Δ` over `Δ₁ + Δ₂`.
pub const WINDOW_MARGIN: f64 = 0.01;

/// Smallest `Δ₁, Δ₂` with
/// `(max{2ηM_z, ε} + 2M_z)·η·e^{−θΔ₁/8} ≤ ε` and `2M_zη·e^{−θΔ₂/8} ≤ ε`
/// for every observer, and `Δ = Δ₁ + Δ₂ + margin`.
pub fn compute_windows<T: Scalar>(cfgs: &[ObserverConfig<T>], margin: f64) -> Result<WindowConstants> {
    let mut delta1: f64 = 0.0;
    let mut delta2: f64 = 0.0;
    for c in cfgs {
        let (eta, eps, m_z) = (c.eta.as_f64(), c.eps.as_f64(), c.m_z.as_f64());
        if !(eps > 0.0) {
            return Err(Error::WindowsUndefined { sensor: c.sensor + 1 });
        }
        let scale = 8.0 / c.theta.as_f64();
        let a1 = ((2.0 * eta * m_z).max(eps) + 2.0 * m_z) * eta;
        let a2 = 2.0 * m_z * eta;
        delta1 = delta1.max(scale * (a1 / eps).ln().max(0.0));
        delta2 = delta2.max(scale * (a2 / eps).ln().max(0.0));
    }
    Ok(WindowConstants {
        delta1,
        delta2,
        delta: delta1 + delta2 + margin,
    })
}

/// Outcome of checking a scenario on the simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub p: usize,
    pub q: usize,
    pub delta: f64,
    /// `min_t |U(t)|`.
    pub min_attack_free: usize,
    pub min_attack_free_at: f64,
    /// Largest number of simultaneously attacked sensors.
    pub max_attacked: usize,
    pub pass: bool,
}

/// `U(t)` on the grid: sensors whose attack was zero at every grid time in
/// `[t − Δ, t]`.
pub fn attack_free_sets(scn: &AttackScenario, p: usize, delta: f64, grid: &[f64]) -> Vec<Vec<usize>> {
    let mut last_hit = vec![f64::NEG_INFINITY; p];
    grid.iter()
        .map(|&t| {
            for (i, a) in scn.attack_vector(t, p).iter().enumerate() {
                if *a != 0.0 {
                    last_hit[i] = t;
                }
            }
            (0..p)
                .filter(|&i| last_hit[i] < t - delta - TIME_EPS)
                .map(|i| i + 1)
                .collect()
        })
        .collect()
}

/// Checks `|U(t)| ≥ p − q` and at most `q` attacked sensors at every grid time.
pub fn validate_scenario(
    scn: &AttackScenario,
    p: usize,
    windows: &WindowConstants,
    grid: &[f64],
) -> ValidationReport {
    let sets = attack_free_sets(scn, p, windows.delta, grid);
    let (mut min_u, mut min_at) = (p, grid.first().copied().unwrap_or(0.0));
    for (t, u) in grid.iter().zip(&sets) {
        if u.len() < min_u {
            min_u = u.len();
            min_at = *t;
        }
    }
    let max_attacked = grid
        .iter()
        .map(|&t| scn.attack_vector(t, p).iter().filter(|a| **a != 0.0).count())
        .max()
        .unwrap_or(0);
    let q = scn.q;
    ValidationReport {
        p,
        q,
        delta: windows.delta,
        min_attack_free: min_u,
        min_attack_free_at: min_at,
        max_attacked,
        pass: q < p && min_u >= p - q && max_attacked <= q,
    }
}

/// `t_k = k·dt`, `k = 0..=round(horizon/dt)`.
pub fn time_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let steps = (horizon / dt).round() as usize;
    (0..=steps).map(|k| k as f64 * dt).collect()
}

/// A value given once for every entry or one per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerEntry {
    Same(f64),
    Each(Vec<f64>),
}

impl PerEntry {
    pub fn expand(&self, len: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            PerEntry::Same(v) => Ok(vec![*v; len]),
            PerEntry::Each(v) if v.len() == len => Ok(v.clone()),
            PerEntry::Each(v) => Err(Error::ScenarioInvalid(format!(
                "{what} lists {} values, expected {len}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    #[serde(default = "default_theta")]
    pub theta: PerEntry,
    /// Initial estimates per sensor; zero when absent.
    #[serde(default)]
    pub z0: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub hold: SampleHold,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

impl Default for ObserverSection {
    fn default() -> Self {
        Self {
            theta: default_theta(),
            z0: None,
            hold: SampleHold::default(),
            substeps: default_substeps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "default_noise")]
    pub bound: PerEntry,
    /// Defaults to the top-level seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            bound: default_noise(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    /// Threshold coefficient, once or per enumerated subset.
    #[serde(default = "default_coeff")]
    pub coeff: PerEntry,
    /// Lower Lipschitz constant for the error bound; sampled when absent.
    #[serde(default)]
    pub lip_lower: Option<f64>,
    #[serde(default = "default_lip_samples")]
    pub lip_samples: usize,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            coeff: default_coeff(),
            lip_lower: None,
            lip_samples: default_lip_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(default)]
    pub lambda_order: LambdaOrder,
}

/// Everything a run needs, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: String,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    /// Initial state; zero when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default)]
    pub observer: ObserverSection,
    #[serde(default)]
    pub attacks: Vec<AttackSignal>,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
}

fn default_theta() -> PerEntry {
    PerEntry::Same(32.0)
}
fn default_substeps() -> usize {
    4
}
fn default_noise() -> PerEntry {
    PerEntry::Same(1e-6)
}
fn default_coeff() -> PerEntry {
    PerEntry::Same(crate::detection::BENCHMARK_COEFF)
}
fn default_lip_samples() -> usize {
    10_000
}
fn default_horizon() -> f64 {
    25.0
}
fn default_dt() -> f64 {
    0.02
}
fn default_q() -> usize {
    1
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks everything that only depends on `p`.
    pub fn check(&self, p: usize) -> Result<()> {
        if !(self.dt > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::ScenarioInvalid("dt and horizon must be positive".into()));
        }
        if self.q >= p {
            return Err(Error::ScenarioInvalid(format!("q = {} must be below p = {p}", self.q)));
        }
        for a in &self.attacks {
            a.check(p)?;
        }
        if self.observer.substeps == 0 {
            return Err(Error::ScenarioInvalid("observer.substeps must be at least 1".into()));
        }
        let bounds = self.noise.bound.expand(p, "noise.bound")?;
        if bounds.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::ScenarioInvalid("noise bounds must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise.seed.unwrap_or(self.seed)
    }

    pub fn scenario(&self, p: usize) -> Result<AttackScenario> {
        self.check(p)?;
        Ok(AttackScenario {
            signals: self.attacks.clone(),
            q: self.q,
            noise_bound: self.noise.bound.expand(p, "noise.bound")?,
            noise_seed: self.noise_seed(),
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        time_grid(self.horizon, self.dt)
    }
}
