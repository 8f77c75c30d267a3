//! Residual-versus-threshold attack detection on stacked observer estimates.
//!
//! For a subset `I` the residual is the distance from `ẑ_I` to the image of
//! `Φ_I`, measured through the left inverse: `‖ẑ_I − Φ_I(Ψ^I(ẑ_I))‖_∞`. An
//! attack-free subset keeps it below `coeff·δ(t)`.

use crate::error::Result;
use crate::inversion::{InverseSet, LeftInverse, SubsetIndex};
use crate::model::PlantModel;
use crate::observer::EnvelopeParams;
use crate::scalar::{inf_dist, Scalar};

/// Default threshold coefficient for every benchmark subset.
pub const BENCHMARK_COEFF: f64 = 5391.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord<T> {
    pub t: T,
    pub subset: SubsetIndex,
    pub residual: T,
    pub threshold: T,
    pub coeff: T,
    /// `residual > threshold`.
    pub fired: bool,
}

/// `‖ẑ_I − Φ_I(Ψ^I(ẑ_I))‖_∞`.
pub fn residual<T: Scalar>(model: &PlantModel<T>, inv: &LeftInverse<T>, zhat_subset: &[T]) -> T {
    let xhat = inv.psi_eval(zhat_subset);
    inf_dist(zhat_subset, &model.phi_eval(inv.subset(), &xhat))
}

/// `coeff·δ(t)`.
pub fn threshold<T: Scalar>(env: &EnvelopeParams<T>, coeff: T, t: T) -> T {
    coeff * env.delta(t)
}

/// Tests the subset of `inv` against the full stacked estimate `zhat`.
pub fn detect_subset<T: Scalar>(
    model: &PlantModel<T>,
    inv: &LeftInverse<T>,
    zhat: &[T],
    coeff: T,
    env: &EnvelopeParams<T>,
    t: T,
) -> DetectionRecord<T> {
    let zi = inv.subset().project(zhat);
    let r = residual(model, inv, &zi);
    let thr = threshold(env, coeff, t);
    DetectionRecord {
        t,
        subset: inv.subset().clone(),
        residual: r,
        threshold: thr,
        coeff,
        fired: r > thr,
    }
}

/// The same test on all sensors at once, through the full-stack inverse.
pub fn detect_global<T: Scalar>(
    model: &PlantModel<T>,
    inverses: &InverseSet<T>,
    zhat: &[T],
    coeff: T,
    env: &EnvelopeParams<T>,
    t: T,
) -> Result<DetectionRecord<T>> {
    let full = inverses.require_full()?;
    Ok(detect_subset(model, full, zhat, coeff, env, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{benchmark, benchmark_inverses};
    use crate::observer::ObserverConfig;

    fn env() -> EnvelopeParams<f64> {
        let m = benchmark::<f64>();
        let cfgs: Vec<_> = m
            .sensors
            .iter()
            .enumerate()
            .map(|(i, c)| ObserverConfig::design(i, c.dim, 32.0, c.m_z, 1e-6).unwrap())
            .collect();
        EnvelopeParams::from_configs(&cfgs)
    }

    #[test]
    fn image_points_have_zero_residual() {
        let m = benchmark::<f64>();
        let inv = benchmark_inverses::<f64>();
        let x = [0.2, -0.3, 0.1];
        for psi in inv.iter().chain(inv.full()) {
            let z = m.phi_eval(psi.subset(), &x);
            assert!(residual(&m, psi, &z) < 1e-9);
        }
    }

    #[test]
    fn small_perturbation_bounded_by_coefficient() {
        let m = benchmark::<f64>();
        let inv = benchmark_inverses::<f64>();
        let x = [0.1, 0.2, -0.1];
        for psi in inv.iter() {
            let mut z = m.phi_eval(psi.subset(), &x);
            for (k, v) in z.iter_mut().enumerate() {
                *v += if k % 2 == 0 { 1e-4 } else { -1e-4 };
            }
            let r = residual(&m, psi, &z);
            assert!(r > 0.0 && r <= BENCHMARK_COEFF * 1e-4);
        }
    }

    #[test]
    fn threshold_values() {
        let e = env();
        assert!((threshold(&e, BENCHMARK_COEFF, 100.0) - 2.555).abs() < 0.01);
        assert!((threshold(&e, BENCHMARK_COEFF, 0.0) / 3.613e6 - 1.0).abs() < 1e-3);
        let mut quiet = e.clone();
        quiet.eps_global = 0.0;
        assert!(threshold(&quiet, 1.0, 1e4) < 1e-12);
        for k in 0..100 {
            let t = k as f64 * 0.1;
            assert!(threshold(&e, 1.0, t + 0.1) <= threshold(&e, 1.0, t));
        }
    }

    #[test]
    fn equality_does_not_fire() {
        let m = benchmark::<f64>();
        let inv = benchmark_inverses::<f64>();
        let psi = inv.iter().next().unwrap();
        let mut z = m.phi_full(&[0.0; 3]);
        z[2] = 0.3;
        let unit = EnvelopeParams {
            amplitude: vec![],
            rate: vec![],
            eps_global: 1.0,
        };
        let r = residual(&m, psi, &psi.subset().project(&z));
        assert!(r > 0.0);
        let rec = detect_subset(&m, psi, &z, r, &unit, 3.0);
        assert_eq!(rec.threshold, rec.residual);
        assert!(!rec.fired);
        assert!(detect_subset(&m, psi, &z, 0.999 * r, &unit, 3.0).fired);
    }

    #[test]
    fn global_detector_fires_on_inconsistent_block() {
        let m = benchmark::<f64>();
        let inv = benchmark_inverses::<f64>();
        let e = env();
        let mut z = m.phi_full(&[0.1, 0.1, 0.1]);
        let clean = detect_global(&m, &inv, &z, BENCHMARK_COEFF, &e, 50.0).unwrap();
        assert!(!clean.fired);
        z[6] += 10.0;
        let hit = detect_global(&m, &inv, &z, BENCHMARK_COEFF, &e, 50.0).unwrap();
        assert!(hit.fired);
        let none: InverseSet<f64> = InverseSet::new(vec![], None);
        assert!(detect_global(&m, &none, &z, 1.0, &e, 0.0).is_err());
    }
}
