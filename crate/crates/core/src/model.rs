//! Plant description `ẋ = f(x) + g(x)u`, `y_i = h_i(x) + a_i + v_i`, together
//! with each sensor's observable-coordinate map `Φ_i` and the normal-form
//! nonlinearities `α_i`, `β_{i,j}` the partial observers run on.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::inversion::SubsetIndex;
use crate::linalg::Matrix;
use crate::ode::rk4_step;
use crate::scalar::{all_finite, Scalar};

/// `ℝᵐ → ℝᵏ`.
pub type VectorMap<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
/// `ℝᵐ → ℝ`.
pub type ScalarMap<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
/// `t ↦ u(t)`.
pub type Signal<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
/// `ℝⁿ → ℝ^{k×n}`.
pub type JacobianMap<T> = Arc<dyn Fn(&[T]) -> Matrix<T> + Send + Sync>;

/// Central-difference step used when a sensor has no closed-form Jacobian.
pub const FD_STEP: f64 = 1e-6;

/// One sensor: its output map and the observable decomposition it induces.
#[derive(Clone)]
pub struct SensorChannel<T> {
    /// `n_i`.
    pub dim: usize,
    /// `h_i`.
    pub output: ScalarMap<T>,
    /// `Φ_i = (h_i, L_f h_i, …, L_f^{n_i-1} h_i)`.
    pub phi: VectorMap<T>,
    /// Closed-form `DΦ_i`, if registered.
    pub phi_jacobian: Option<JacobianMap<T>>,
    /// `α_i : ℝ^{n_i} → ℝ`.
    pub alpha: ScalarMap<T>,
    /// `β_{i,j}`; entry `j` is called with the prefix `z[..=j]` only, which
    /// makes the triangular structure hold by construction.
    pub beta: Vec<ScalarMap<T>>,
    /// `M_{z,i}`: bound on `‖Φ_i(x)‖_∞` over the state box.
    pub m_z: T,
}

impl<T: Scalar> SensorChannel<T> {
    pub fn alpha_at(&self, z: &[T]) -> T {
        (self.alpha)(z)
    }

    /// `(β_{i,1}(z_1), β_{i,2}(z_1, z_2), …)`.
    pub fn beta_at(&self, z: &[T]) -> Vec<T> {
        self.beta
            .iter()
            .enumerate()
            .map(|(j, b)| b(&z[..=j]))
            .collect()
    }
}

impl<T> fmt::Debug for SensorChannel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensorChannel")
            .field("dim", &self.dim)
            .field("closed_form_jacobian", &self.phi_jacobian.is_some())
            .finish_non_exhaustive()
    }
}

/// Everything needed to simulate the true plant and to build observers for it.
#[derive(Clone)]
pub struct PlantModel<T> {
    pub name: String,
    /// State dimension `n`.
    pub n: usize,
    /// Drift `f`.
    pub drift: VectorMap<T>,
    /// Input vector field `g`.
    pub input_field: VectorMap<T>,
    /// Input `u(t)`.
    pub input: Signal<T>,
    /// `M_x`, the ∞-norm radius of the state box `𝒳`.
    pub m_x: T,
    pub sensors: Vec<SensorChannel<T>>,
}

impl<T> fmt::Debug for PlantModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlantModel")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("sensors", &self.sensors)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> PlantModel<T> {
    /// Sensor count `p`.
    pub fn p(&self) -> usize {
        self.sensors.len()
    }

    /// `𝒩 = (n_1, …, n_p)`.
    pub fn dims(&self) -> Vec<usize> {
        self.sensors.iter().map(|s| s.dim).collect()
    }

    /// `Σ n_i`.
    pub fn stack_dim(&self) -> usize {
        self.sensors.iter().map(|s| s.dim).sum()
    }

    pub fn subset(&self, indices: Vec<usize>) -> Result<SubsetIndex> {
        SubsetIndex::new(indices, &self.dims())
    }

    pub fn full_subset(&self) -> SubsetIndex {
        SubsetIndex::full(&self.dims())
    }

    pub fn input_at(&self, t: T) -> T {
        (self.input)(t)
    }

    /// `f(x) + g(x)u(t)`.
    pub fn vector_field(&self, t: T, x: &[T]) -> Vec<T> {
        let u = self.input_at(t);
        let f = (self.drift)(x);
        let g = (self.input_field)(x);
        f.iter().zip(&g).map(|(fi, gi)| *fi + *gi * u).collect()
    }

    /// Advances the true state by one RK4 step, `u` evaluated at stage times.
    pub fn integrate_step(&self, x: &[T], t: T, dt: T) -> Result<Vec<T>> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let next = rk4_step(|s, w| self.vector_field(s, w), t, x, dt);
        if !all_finite(&next) {
            return Err(Error::IntegrationDiverged {
                t: (t + dt).as_f64(),
            });
        }
        Ok(next)
    }

    /// `h(x)` without attack or noise.
    pub fn outputs(&self, x: &[T]) -> Vec<T> {
        self.sensors.iter().map(|s| (s.output)(x)).collect()
    }

    /// `y_i = h_i(x) + a_i + v_i`.
    pub fn measure(&self, x: &[T], attack: &[T], noise: &[T]) -> Vec<T> {
        debug_assert_eq!(attack.len(), self.p());
        debug_assert_eq!(noise.len(), self.p());
        self.sensors
            .iter()
            .zip(attack.iter().zip(noise))
            .map(|(s, (a, v))| (s.output)(x) + *a + *v)
            .collect()
    }

    /// Full stack `Φ(x) ∈ ℝ^𝒩`.
    pub fn phi_full(&self, x: &[T]) -> Vec<T> {
        self.sensors.iter().flat_map(|s| (s.phi)(x)).collect()
    }

    /// `π_I(Φ(x))`, blocks in ascending sensor order.
    pub fn phi_eval(&self, subset: &SubsetIndex, x: &[T]) -> Vec<T> {
        subset
            .indices()
            .iter()
            .flat_map(|&i| (self.sensors[i].phi)(x))
            .collect()
    }

    /// Checked variant of [`PlantModel::phi_eval`] taking raw zero-based indices.
    pub fn phi_eval_indices(&self, indices: &[usize], x: &[T]) -> Result<Vec<T>> {
        let subset = self.subset(indices.to_vec())?;
        Ok(self.phi_eval(&subset, x))
    }

    /// `DΦ_I(x)`: closed form per block where registered, otherwise central
    /// differences with step [`FD_STEP`].
    pub fn phi_jacobian(&self, subset: &SubsetIndex, x: &[T]) -> Matrix<T> {
        let mut jac = Matrix::zeros(0, self.n);
        for &i in subset.indices() {
            let block = match &self.sensors[i].phi_jacobian {
                Some(j) => j(x),
                None => self.phi_block_jacobian_fd(i, x),
            };
            jac = jac.vstack(&block);
        }
        jac
    }

    /// Finite-difference `DΦ_i(x)` regardless of any registered closed form.
    pub fn phi_block_jacobian_fd(&self, sensor: usize, x: &[T]) -> Matrix<T> {
        let ch = &self.sensors[sensor];
        let h = T::lit(FD_STEP);
        let mut jac = Matrix::zeros(ch.dim, self.n);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for j in 0..self.n {
            xp[j] = x[j] + h;
            xm[j] = x[j] - h;
            let fp = (ch.phi)(&xp);
            let fm = (ch.phi)(&xm);
            let width = xp[j] - xm[j];
            for r in 0..ch.dim {
                jac[(r, j)] = (fp[r] - fm[r]) / width;
            }
            xp[j] = x[j];
            xm[j] = x[j];
        }
        jac
    }

    pub fn in_state_box(&self, x: &[T]) -> bool {
        x.iter().all(|v| v.abs() <= self.m_x)
    }

    pub fn truth_sample(&self, t: T, x: &[T]) -> TruthSample<T> {
        TruthSample {
            t,
            x: x.to_vec(),
            z: self.phi_full(x),
        }
    }
}

/// True state and its stacked observable coordinates at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSample<T> {
    pub t: T,
    pub x: Vec<T>,
    pub z: Vec<T>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::benchmark;

    fn zero_field<T: Scalar>() -> VectorMap<T> {
        Arc::new(|x: &[T]| vec![T::zero(); x.len()])
    }

    #[test]
    fn zero_vector_field_leaves_state_unchanged() {
        let mut m = benchmark::<f64>();
        m.drift = zero_field();
        m.input_field = zero_field();
        let x = [0.1, 0.2, -0.1];
        assert_eq!(m.integrate_step(&x, 0.0, 0.02).unwrap(), x.to_vec());
    }

    #[test]
    fn integrate_rejects_nonpositive_dt() {
        let m = benchmark::<f64>();
        assert!(m.integrate_step(&[0.0; 3], 0.0, 0.0).is_err());
    }

    #[test]
    fn diverging_field_reports_error() {
        let mut m = benchmark::<f64>();
        m.drift = Arc::new(|x: &[f64]| x.iter().map(|v| v * 1e308).collect());
        let err = m.integrate_step(&[1e10; 3], 0.0, 0.02).unwrap_err();
        assert!(matches!(err, Error::IntegrationDiverged { .. }));
    }

    #[test]
    fn clean_output_of_second_sensor() {
        let m = benchmark::<f64>();
        let y = m.measure(&[0.1, 0.2, -0.1], &[0.0; 4], &[0.0; 4]);
        assert!((y[1] - 0.390_669_3).abs() <= 1e-6, "{}", y[1]);
    }

    #[test]
    fn measurement_adds_attack_and_noise() {
        let m = benchmark::<f64>();
        let x = [0.1, 0.2, -0.1];
        let clean = m.measure(&x, &[0.0; 4], &[0.0; 4]);
        // h2 = x1 + sin x2 - x2^3 - x3
        let h2 = 0.1 + 0.2f64.sin() - 0.008 + 0.1;
        assert!((clean[1] - h2).abs() < 1e-15);
        assert!((clean[1] - 0.390_669_330).abs() < 1e-6);

        let attacked = m.measure(&x, &[0.0, 0.0, 0.5, 0.0], &[0.0; 4]);
        assert_eq!(attacked[2], clean[2] + 0.5);

        let noisy = m.measure(&x, &[0.0; 4], &[1e-6; 4]);
        for (n, c) in noisy.iter().zip(&clean) {
            assert_eq!(*n, c + 1e-6);
        }
    }

    #[test]
    fn phi_eval_blocks_and_errors() {
        let m = benchmark::<f64>();
        let x = [0.1, 0.2, -0.1];
        let s4 = m.subset(vec![3]).unwrap();
        let v = m.phi_eval(&s4, &x);
        assert_eq!(v.len(), 1);
        assert!((v[0] - (-0.2 - 0.2f64.sin() - 0.1)).abs() < 1e-15);
        assert!((v[0] + 0.498_669_33).abs() < 1e-7);

        let s234 = m.subset(vec![1, 2, 3]).unwrap();
        let v = m.phi_eval(&s234, &x);
        let full = m.phi_full(&x);
        assert_eq!(v, full[2..].to_vec());

        assert!(m.phi_eval_indices(&[], &x).is_err());
        assert!(m.phi_eval_indices(&[7], &x).is_err());
        assert!(m.phi_full(&[0.0; 3]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn jacobian_of_sensor_three_at_origin() {
        let m = benchmark::<f64>();
        let s3 = m.subset(vec![2]).unwrap();
        let j = m.phi_jacobian(&s3, &[0.0; 3]);
        assert_eq!(j.row(0), &[-1.0, 1.0, 0.0]);
        assert_eq!(j.row(1), &[2.0, -1.0, 0.0]);
        let fd = m.phi_block_jacobian_fd(2, &[0.0; 3]);
        for r in 0..2 {
            for c in 0..3 {
                assert!((fd[(r, c)] - j[(r, c)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn linear_phi_has_constant_jacobian() {
        let t = vec![vec![1.0, 2.0, 0.0], vec![0.0, -1.0, 3.0]];
        let rows = t.clone();
        let mut m = benchmark::<f64>();
        m.sensors.truncate(1);
        m.sensors[0].phi = Arc::new(move |x: &[f64]| {
            rows.iter()
                .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect()
        });
        m.sensors[0].phi_jacobian = None;
        let s = m.subset(vec![0]).unwrap();
        for x in [[0.0, 0.0, 0.0], [0.3, -0.2, 0.45]] {
            let j = m.phi_jacobian(&s, &x);
            for r in 0..2 {
                for c in 0..3 {
                    assert!((j[(r, c)] - t[r][c]).abs() < 1e-9);
                }
            }
        }
    }
}
