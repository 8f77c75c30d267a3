use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resilient_est::catalog::benchmark;
use resilient_est::scalar::{inf_dist, inf_norm};

fn state() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.5..=0.5_f64, 3)
}

fn to_dmatrix(m: &resilient_est::linalg::Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.row(i)[j])
}

#[test]
fn stacked_map_stays_within_its_bound() {
    let m = benchmark::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..=0.5)).collect();
        worst = worst.max(inf_norm(&m.phi_full(&x)));
    }
    assert!(worst <= 2.0, "max |Phi| = {worst}");
}

fn integrate(m: &resilient_est::model::PlantModel<f64>, x0: &[f64], horizon: f64, dt: f64) -> Vec<f64> {
    let steps = (horizon / dt).round() as usize;
    let mut x = x0.to_vec();
    for k in 0..steps {
        x = m.integrate_step(&x, k as f64 * dt, dt).unwrap();
    }
    x
}

#[test]
fn integrator_is_fourth_order() {
    let m = benchmark::<f64>();
    let x0 = [0.3, -0.2, 0.1];
    let reference = integrate(&m, &x0, 2.0, 1e-3);
    let coarse = inf_dist(&integrate(&m, &x0, 2.0, 0.2), &reference);
    let fine = inf_dist(&integrate(&m, &x0, 2.0, 0.1), &reference);
    assert!(coarse / fine >= 14.0, "error ratio {}", coarse / fine);
}

#[test]
fn integrate_step_matches_extrapolated_euler() {
    let m = benchmark::<f64>();
    let x0 = [0.05, -0.1, 0.2];
    let t0 = 1.3;
    let dt = 0.02;
    let rk = m.integrate_step(&x0, t0, dt).unwrap();

    let euler = |h: f64| {
        let mut x = x0.to_vec();
        for k in 0..(dt / h).round() as usize {
            let f = m.vector_field(t0 + k as f64 * h, &x);
            x.iter_mut().zip(&f).for_each(|(xi, fi)| *xi += h * fi);
        }
        x
    };
    // Richardson extrapolation of two Euler runs cancels the first-order term
    let (coarse, fine) = (euler(1e-5), euler(5e-6));
    let x: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| 2.0 * f - c).collect();
    let err = inf_dist(&rk, &x);
    assert!(err <= 1e-8, "RK4 vs Euler {err:e}");
}

#[test]
fn trajectory_stays_in_state_box() {
    let m = benchmark::<f64>();
    let dt = 0.02;
    let mut x = vec![0.05; 3];
    for k in 0..1500 {
        x = m.integrate_step(&x, k as f64 * dt, dt).unwrap();
        assert!(m.in_state_box(&x), "left the box at t = {}: {x:?}", (k + 1) as f64 * dt);
    }
}

#[test]
fn sensors_one_and_two_determine_the_state() {
    let m = benchmark::<f64>();
    let s = m.subset(vec![0, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..=0.5)).collect();
        let jac = to_dmatrix(&m.phi_jacobian(&s, &x));
        let sv = jac.svd(false, false).singular_values;
        let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(sv.len(), 3);
        assert!(smallest > 1e-6, "rank drop at {x:?}: {smallest}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_jacobians_match_finite_differences(x in state()) {
        let m = benchmark::<f64>();
        for (i, ch) in m.sensors.iter().enumerate() {
            let closed = (ch.phi_jacobian.as_ref().unwrap())(&x);
            let fd = m.phi_block_jacobian_fd(i, &x);
            for r in 0..closed.rows() {
                for c in 0..closed.cols() {
                    prop_assert!((closed.row(r)[c] - fd.row(r)[c]).abs() <= 1e-5);
                }
            }
        }
    }

    #[test]
    fn outputs_are_first_observable_coordinates(x in state()) {
        let m = benchmark::<f64>();
        let y = m.outputs(&x);
        for (i, ch) in m.sensors.iter().enumerate() {
            prop_assert!((y[i] - (ch.phi)(&x)[0]).abs() <= 1e-15);
        }
    }

    #[test]
    fn measurement_adds_attack_and_noise(
        x in state(),
        a in prop::collection::vec(-1.0..1.0_f64, 4),
        v in prop::collection::vec(-1e-6..1e-6_f64, 4),
    ) {
        let m = benchmark::<f64>();
        let y = m.measure(&x, &a, &v);
        let clean = m.outputs(&x);
        for i in 0..4 {
            prop_assert!((y[i] - clean[i] - a[i] - v[i]).abs() <= 1e-14);
        }
    }
}
