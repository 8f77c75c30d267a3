//! End-to-end runs: truth integration, measurement, observer bank, detection,
//! switching and estimation, one sample at a time, plus the CSV trace and JSON
//! run report.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::catalog::{self, RegisteredModel};
use crate::detection::{detect_subset, DetectionRecord};
use crate::error::{Error, Result};
use crate::estimator::{error_bound, estimate_state, sigma_update, SubsetEnumeration, SwitchState};
use crate::inversion::{combinations, InverseSet, LipschitzEstimates, SubsetIndex};
use crate::model::PlantModel;
use crate::observer::{EnvelopeParams, ObserverBank};
use crate::scalar::{from_f64_vec, inf_dist, to_f64_vec, Scalar};
use crate::scenario::{
    compute_windows, validate_scenario, AttackScenario, NoiseSource, ScenarioConfig,
    ValidationReport, WindowConstants, WINDOW_MARGIN,
};

/// Samples on each side of a switch excluded from the steady-state error.
pub const SWITCH_GUARD: usize = 2;
/// Start of the steady-state window.
pub const STEADY_FROM: f64 = 1.0;

/// One sample of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub a: Vec<f64>,
    /// `ẑ` stacked in sensor order.
    pub zhat: Vec<f64>,
    /// Active subset after this sample's update.
    pub sigma: usize,
    /// Residual and threshold of the subset active when the sample arrived.
    pub residual_active: f64,
    pub threshold_active: f64,
    pub fired: bool,
    pub xhat: Vec<f64>,
    pub err_inf: f64,
    pub err_bound: f64,
    pub in_transient: bool,
    pub resets_cum: usize,
    /// Every subset fired at this sample.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub n: usize,
    pub dims: Vec<usize>,
    pub rows: Vec<TraceRow>,
}

impl SimulationTrace {
    pub fn p(&self) -> usize {
        self.dims.len()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=self.n).map(|i| format!("x{i}")));
        h.extend((1..=self.p()).map(|i| format!("y{i}")));
        h.extend((1..=self.p()).map(|i| format!("a{i}")));
        for (i, d) in self.dims.iter().enumerate() {
            h.extend((1..=*d).map(|j| format!("zhat{}_{}", i + 1, j)));
        }
        h.extend(
            ["sigma", "residual_active", "threshold_active", "fired"]
                .iter()
                .map(|s| s.to_string()),
        );
        h.extend((1..=self.n).map(|i| format!("xhat{i}")));
        h.extend(
            ["err_inf", "err_bound", "in_transient", "resets_cum"]
                .iter()
                .map(|s| s.to_string()),
        );
        h
    }

    /// Whether sample `k` lies within `guard` samples of a switch.
    pub fn near_switch(&self, k: usize, guard: usize) -> bool {
        let lo = k.saturating_sub(guard);
        let hi = (k + guard).min(self.rows.len().saturating_sub(1));
        (lo..=hi).any(|j| self.rows[j].in_transient)
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes the trace as CSV: one header row, floats with 17 significant digits,
/// booleans as `0`/`1`.
pub fn write_csv<W: Write>(trace: &SimulationTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace.header())?;
    for r in &trace.rows {
        let mut rec = vec![num(r.t)];
        rec.extend(r.x.iter().map(|v| num(*v)));
        rec.extend(r.y.iter().map(|v| num(*v)));
        rec.extend(r.a.iter().map(|v| num(*v)));
        rec.extend(r.zhat.iter().map(|v| num(*v)));
        rec.push(r.sigma.to_string());
        rec.push(num(r.residual_active));
        rec.push(num(r.threshold_active));
        rec.push(flag(r.fired).to_string());
        rec.extend(r.xhat.iter().map(|v| num(*v)));
        rec.push(num(r.err_inf));
        rec.push(num(r.err_bound));
        rec.push(flag(r.in_transient).to_string());
        rec.push(r.resets_cum.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(trace: &SimulationTrace, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(trace, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub t: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub model: String,
    pub samples: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    /// One entry per single update of `σ`.
    pub switch_events: Vec<SwitchEvent>,
    /// Samples at which the active subset started firing.
    pub detection_onsets: Vec<f64>,
    /// Samples at which every subset fired.
    pub violation_times: Vec<f64>,
    /// `max ‖x̂ − x‖_∞` for `t ≥ 1` away from switches.
    pub max_steady_error: f64,
    pub total_resets: usize,
    pub state_left_box: bool,
    pub windows: Option<WindowConstants>,
    pub validation: Option<ValidationReport>,
    pub lip_lower_min: f64,
    pub wall_clock_s: f64,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The values `σ` passed through, starting from 1.
    pub fn sigma_path(&self) -> Vec<usize> {
        let mut path = vec![1];
        path.extend(self.switch_events.iter().map(|e| e.to));
        path
    }
}

/// Per-sensor observer design data and the window constants.
#[derive(Debug, Clone, Serialize)]
pub struct GainsReport {
    pub sensors: Vec<SensorGains>,
    pub gamma0: f64,
    pub delta0: f64,
    pub eps: f64,
    pub windows: Option<WindowConstants>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensorGains {
    pub sensor: usize,
    pub dim: usize,
    pub theta: f64,
    pub gain: Vec<f64>,
    pub eta: f64,
    pub eps: f64,
    pub reset_radius: f64,
}

/// Builds the observer bank a config describes.
pub fn build_bank<T: Scalar>(cfg: &ScenarioConfig, model: &PlantModel<T>) -> Result<ObserverBank<T>> {
    let p = model.p();
    cfg.check(p)?;
    let theta: Vec<T> = from_f64_vec(&cfg.observer.theta.expand(p, "observer.theta")?);
    let m_v: Vec<T> = from_f64_vec(&cfg.noise.bound.expand(p, "noise.bound")?);
    let z0: Vec<Vec<T>> = match &cfg.observer.z0 {
        Some(z) if z.len() == p => z.iter().map(|b| from_f64_vec(b)).collect(),
        Some(z) => {
            return Err(Error::ScenarioInvalid(format!(
                "observer.z0 lists {} blocks, expected {p}",
                z.len()
            )))
        }
        None => model.sensors.iter().map(|s| vec![T::zero(); s.dim]).collect(),
    };
    let mut bank = ObserverBank::new(model, &theta, &m_v, &z0, cfg.observer.hold)?;
    for c in &mut bank.configs {
        c.substeps = cfg.observer.substeps;
    }
    Ok(bank)
}

pub fn gains_report(cfg: &ScenarioConfig) -> Result<GainsReport> {
    let reg = catalog::lookup::<f64>(&cfg.model)?;
    let bank = build_bank(cfg, &reg.model)?;
    let env = bank.envelope();
    Ok(GainsReport {
        sensors: bank
            .configs
            .iter()
            .map(|c| SensorGains {
                sensor: c.sensor + 1,
                dim: c.dim,
                theta: c.theta,
                gain: c.gain.clone(),
                eta: c.eta,
                eps: c.eps,
                reset_radius: c.reset_radius,
            })
            .collect(),
        gamma0: env.gamma0(),
        delta0: env.delta(0.0),
        eps: env.eps_global,
        windows: compute_windows(&bank.configs, WINDOW_MARGIN).ok(),
    })
}

/// Window constants and scenario check for a config. `validation` is `None`
/// when the windows are undefined (noiseless observers).
pub fn validate_config(cfg: &ScenarioConfig) -> Result<(Option<WindowConstants>, Option<ValidationReport>)> {
    let reg = catalog::lookup::<f64>(&cfg.model)?;
    let p = reg.model.p();
    let scn = cfg.scenario(p)?;
    let bank = build_bank(cfg, &reg.model)?;
    let windows = compute_windows(&bank.configs, WINDOW_MARGIN).ok();
    let validation = windows.map(|w| validate_scenario(&scn, p, &w, &cfg.grid()));
    Ok((windows, validation))
}

/// A run in progress, advanced one sample at a time.
pub struct Simulation<T> {
    pub model: PlantModel<T>,
    pub inverses: InverseSet<T>,
    pub lambda: SubsetEnumeration,
    pub bank: ObserverBank<T>,
    pub env: EnvelopeParams<T>,
    pub lip: LipschitzEstimates<T>,
    pub coeffs: Vec<T>,
    pub scenario: AttackScenario,
    pub windows: Option<WindowConstants>,
    pub validation: Option<ValidationReport>,
    noise: NoiseSource,
    dt: f64,
    steps: usize,
    k: usize,
    x: Vec<T>,
    y: Vec<T>,
    a: Vec<f64>,
    switch: SwitchState<T>,
    state_left_box: bool,
}

impl<T: Scalar> Simulation<T> {
    /// Sets up a run. Fails on an invalid scenario unless `force` is set.
    pub fn new(cfg: &ScenarioConfig, force: bool) -> Result<Self> {
        let RegisteredModel { model, inverses } = catalog::lookup::<T>(&cfg.model)?;
        let p = model.p();
        let scenario = cfg.scenario(p)?;
        let bank = build_bank(cfg, &model)?;
        let env = bank.envelope();
        let lambda = SubsetEnumeration::new(&model.dims(), cfg.q, &cfg.estimator.lambda_order)?;
        for s in &lambda.subsets {
            inverses.get(s)?;
        }
        let coeffs: Vec<T> = from_f64_vec(&cfg.detector.coeff.expand(lambda.len(), "detector.coeff")?);
        if coeffs.iter().any(|c| !(*c >= T::one())) {
            return Err(Error::ScenarioInvalid("threshold coefficients must be >= 1".into()));
        }

        let windows = compute_windows(&bank.configs, WINDOW_MARGIN).ok();
        let validation = windows.map(|w| validate_scenario(&scenario, p, &w, &cfg.grid()));
        match (&validation, force) {
            (Some(v), false) if !v.pass => {
                return Err(Error::ScenarioInvalid(format!(
                    "|U(t)| drops to {} at t = {} (need {}), {} sensors attacked at once",
                    v.min_attack_free,
                    v.min_attack_free_at,
                    p - cfg.q,
                    v.max_attacked
                )))
            }
            (None, false) if !scenario.signals.is_empty() => {
                return Err(Error::ScenarioInvalid(
                    "attack windows undefined with a zero noise bound".into(),
                ))
            }
            _ => {}
        }

        let size = p.saturating_sub(2 * cfg.q);
        let lower_subsets = if size == 0 {
            Vec::new()
        } else {
            combinations(p, size)
                .into_iter()
                .map(|c| model.subset(c))
                .collect::<Result<Vec<SubsetIndex>>>()?
        };
        let threshold_coeff = lambda.subsets.iter().cloned().zip(coeffs.iter().copied()).collect();
        let mut lip = LipschitzEstimates::for_bound(
            &model,
            threshold_coeff,
            &lower_subsets,
            cfg.detector.lip_samples,
            cfg.seed,
        );
        if let Some(c) = cfg.detector.lip_lower {
            lip = lip.with_lower_override(T::lit(c));
        }

        let x = match &cfg.x0 {
            Some(x0) if x0.len() == model.n => from_f64_vec(x0),
            Some(x0) => {
                return Err(Error::ScenarioInvalid(format!(
                    "x0 has length {}, expected {}",
                    x0.len(),
                    model.n
                )))
            }
            None => vec![T::zero(); model.n],
        };
        let steps = (cfg.horizon / cfg.dt).round() as usize;
        Ok(Self {
            noise: scenario.noise(),
            model,
            inverses,
            lambda,
            bank,
            env,
            lip,
            coeffs,
            scenario,
            windows,
            validation,
            dt: cfg.dt,
            steps,
            k: 0,
            x,
            y: Vec::new(),
            a: Vec::new(),
            switch: SwitchState::default(),
            state_left_box: false,
        })
    }

    /// Time of the current sample.
    pub fn t(&self) -> f64 {
        self.k as f64 * self.dt
    }

    pub fn state(&self) -> &[T] {
        &self.x
    }

    pub fn switch_state(&self) -> &SwitchState<T> {
        &self.switch
    }

    /// Number of samples still to come.
    pub fn remaining(&self) -> usize {
        (self.steps + 1).saturating_sub(self.k + usize::from(!self.y.is_empty()))
    }

    /// Detector test of `Λ(sigma)` on the current observer estimates.
    pub fn detect(&self, sigma: usize) -> DetectionRecord<T> {
        let subset = self.lambda.get(sigma);
        let inv = self.inverses.get(subset).expect("inverse checked at setup");
        detect_subset(
            &self.model,
            inv,
            &self.bank.stacked(),
            self.coeffs[sigma - 1],
            &self.env,
            T::lit(self.t()),
        )
    }

    fn measure(&mut self) -> Vec<T> {
        let t = self.t();
        self.a = self.scenario.attack_vector(t, self.model.p());
        let v = self.noise.sample();
        self.model
            .measure(&self.x, &from_f64_vec(&self.a), &from_f64_vec(&v))
    }

    /// Produces the next sample: the initial one on the first call, then one
    /// step of `dt` per call.
    pub fn step(&mut self) -> Result<TraceRow> {
        if self.y.is_empty() {
            self.y = self.measure();
        } else {
            let t = T::lit(self.t());
            let dt = T::lit(self.dt);
            let x = self.model.integrate_step(&self.x, t, dt)?;
            self.x = x;
            self.k += 1;
            let y1 = self.measure();
            self.bank.step(&self.model, t, dt, &self.y, &y1)?;
            self.y = y1;
        }
        if !self.state_left_box && !self.model.in_state_box(&self.x) {
            self.state_left_box = true;
            log::warn!("true state left the state box at t = {}", self.t());
        }

        let t = T::lit(self.t());
        let before = self.detect(self.switch.sigma);
        let next = sigma_update(&self.switch, self.lambda.len(), t, |s| self.detect(s).fired);
        self.switch = next;
        let bound = error_bound(&self.env, &self.lip, t);
        let zhat = self.bank.stacked();
        let est = estimate_state(t, &self.switch, &self.lambda, &self.inverses, &zhat, bound)?;

        Ok(TraceRow {
            t: self.t(),
            x: to_f64_vec(&self.x),
            y: to_f64_vec(&self.y),
            a: self.a.clone(),
            zhat: to_f64_vec(&zhat),
            sigma: self.switch.sigma,
            residual_active: before.residual.as_f64(),
            threshold_active: before.threshold.as_f64(),
            fired: before.fired,
            err_inf: inf_dist(&est.xhat, &self.x).as_f64(),
            xhat: to_f64_vec(&est.xhat),
            err_bound: bound.as_f64(),
            in_transient: est.in_transient,
            resets_cum: self.bank.total_resets(),
            violation: self.switch.violation,
        })
    }

    /// Runs to the horizon.
    pub fn run_to_end(mut self, cfg: &ScenarioConfig) -> Result<(SimulationTrace, RunReport)> {
        let started = Instant::now();
        let mut rows = Vec::with_capacity(self.steps + 1);
        let mut switch_events = Vec::new();
        let mut prev_sigma = 1;
        while self.remaining() > 0 {
            let row = self.step()?;
            let mut s = prev_sigma;
            for _ in 0..self.switch.cycles_this_sample {
                let to = s % self.lambda.len() + 1;
                switch_events.push(SwitchEvent { t: row.t, from: s, to });
                s = to;
            }
            prev_sigma = row.sigma;
            rows.push(row);
        }
        let trace = SimulationTrace {
            n: self.model.n,
            dims: self.model.dims(),
            rows,
        };

        let mut detection_onsets = Vec::new();
        let mut last_fired = false;
        for r in &trace.rows {
            if r.fired && !last_fired {
                detection_onsets.push(r.t);
            }
            last_fired = r.fired;
        }
        let max_steady_error = trace
            .rows
            .iter()
            .enumerate()
            .filter(|(k, r)| r.t >= STEADY_FROM && !trace.near_switch(*k, SWITCH_GUARD))
            .fold(0.0_f64, |m, (_, r)| m.max(r.err_inf));
        let report = RunReport {
            model: self.model.name.clone(),
            samples: trace.rows.len(),
            dt: cfg.dt,
            horizon: cfg.horizon,
            seed: cfg.seed,
            switch_events,
            detection_onsets,
            violation_times: trace.rows.iter().filter(|r| r.violation).map(|r| r.t).collect(),
            max_steady_error,
            total_resets: self.bank.total_resets(),
            state_left_box: self.state_left_box,
            windows: self.windows,
            validation: self.validation.clone(),
            lip_lower_min: self.lip.min_lower().as_f64(),
            wall_clock_s: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "{} samples, {} switches, {} resets in {:.3} s",
            report.samples,
            report.switch_events.len(),
            report.total_resets,
            report.wall_clock_s
        );
        Ok((trace, report))
    }
}

/// Full run in `f64`.
pub fn run(cfg: &ScenarioConfig, force: bool) -> Result<(SimulationTrace, RunReport)> {
    run_with::<f64>(cfg, force)
}

/// Full run in the scalar type `T`.
pub fn run_with<T: Scalar>(cfg: &ScenarioConfig, force: bool) -> Result<(SimulationTrace, RunReport)> {
    Simulation::<T>::new(cfg, force)?.run_to_end(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::BENCHMARK_NAME;
    use crate::scenario::{AttackKind, AttackSignal};

    fn short(horizon: f64) -> ScenarioConfig {
        let mut c = ScenarioConfig::from_json(&format!(r#"{{"model": "{BENCHMARK_NAME}"}}"#)).unwrap();
        c.horizon = horizon;
        c.detector.lip_samples = 1000;
        c
    }

    #[test]
    fn header_names() {
        let (trace, _) = run(&short(0.1), false).unwrap();
        let h = trace.header();
        assert_eq!(h.len(), 1 + 3 + 4 + 4 + 7 + 4 + 3 + 4);
        assert_eq!(h[12], "zhat1_1");
        assert_eq!(h[18], "zhat4_1");
        assert_eq!(h.last().unwrap(), "resets_cum");
    }

    #[test]
    fn row_count_and_uniform_grid() {
        let (trace, report) = run(&short(1.0), false).unwrap();
        assert_eq!(trace.rows.len(), 51);
        assert_eq!(report.samples, 51);
        for (k, r) in trace.rows.iter().enumerate() {
            assert_eq!(r.t, k as f64 * 0.02);
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        let trace = SimulationTrace {
            n: 3,
            dims: vec![2, 2, 2, 1],
            rows: vec![],
        };
        let mut buf = Vec::new();
        write_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("t,x1,x2,x3,y1"));
    }

    #[test]
    fn overlapping_attacks_need_force() {
        let mut c = short(25.0);
        let sq = |sensor, t_on, t_off| AttackSignal {
            sensor,
            t_on,
            t_off,
            kind: AttackKind::Square {
                amplitude: 0.5,
                period: 0.5,
            },
        };
        c.attacks = vec![sq(3, 6.0, 8.0), sq(2, 13.0, 16.0)];
        assert!(matches!(Simulation::<f64>::new(&c, false), Err(Error::ScenarioInvalid(_))));
        assert!(Simulation::<f64>::new(&c, true).is_ok());
    }

    #[test]
    fn runs_in_single_precision() {
        let (trace, _) = run_with::<f32>(&short(2.0), false).unwrap();
        assert!(trace.rows.iter().all(|r| r.xhat.iter().all(|v| v.abs() <= 0.5)));
    }

    #[test]
    fn gains_report_lists_every_sensor() {
        let g = gains_report(&short(1.0)).unwrap();
        assert_eq!(g.sensors.len(), 4);
        assert_eq!(g.sensors[0].gain, vec![64.0, 1024.0]);
        assert_eq!(g.sensors[3].gain, vec![32.0]);
        assert!(g.windows.is_some());
    }
}
