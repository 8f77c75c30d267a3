//! High-gain partial observers, one per sensor, on the normal form
//!
//! ```text
//! ż_j = z_{j+1} + β_j(z_1..z_j) u − k_j (ẑ_1 − y)      j < n_i
//! ż_n = α(z) + β_n(z) u − k_n (ẑ_1 − y)
//! ```
//!
//! with `k = P⁻¹Cᵀ`, `0 = −θP − AᵀP − PA + CᵀC`, and the reset rule that
//! keeps every estimate inside a certified ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::saturate;
use crate::linalg::{solve, symmetric_eigenvalues, Matrix};
use crate::model::{PlantModel, SensorChannel};
use crate::ode::rk4_step;
use crate::scalar::{all_finite, inf_norm, Scalar};

/// How the measurement is reconstructed between two samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleHold {
    /// `y` held at the sample taken at the start of the step.
    Zero,
    /// Linear interpolation between the samples at both ends of the step.
    #[default]
    Linear,
}

impl SampleHold {
    pub fn value<T: Scalar>(self, y0: T, y1: T, frac: T) -> T {
        match self {
            SampleHold::Zero => y0,
            SampleHold::Linear => y0 + (y1 - y0) * frac,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `P` solving `θP + AᵀP + PA = CᵀC` for the `n`-dimensional shift pair, via
/// a dense solve over the `n(n+1)/2` upper-triangular unknowns.
#[allow(clippy::needless_range_loop)]
pub fn solve_riccati_p<T: Scalar>(n: usize, theta: T) -> Result<Matrix<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("observer dimension must be positive".into()));
    }
    let mut slot = vec![vec![usize::MAX; n]; n];
    let mut m = 0;
    for i in 0..n {
        for j in i..n {
            slot[i][j] = m;
            slot[j][i] = m;
            m += 1;
        }
    }
    // entry (i, j): θP_ij + P_{i-1,j} + P_{i,j-1} = [i = j = 0]
    let mut a = Matrix::zeros(m, m);
    let mut b = vec![T::zero(); m];
    for i in 0..n {
        for j in i..n {
            let r = slot[i][j];
            a[(r, slot[i][j])] += theta;
            if i > 0 {
                a[(r, slot[i - 1][j])] += T::one();
            }
            if j > 0 {
                a[(r, slot[i][j - 1])] += T::one();
            }
        }
    }
    b[0] = T::one();
    let sol = solve(&a, &b)
        .ok_or_else(|| Error::NumericalFailure(format!("singular gain system (n = {n})")))?;
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = sol[slot[i][j]];
        }
    }
    Ok(p)
}

/// Output-injection gain `P⁻¹Cᵀ`.
///
/// Closed form `k_j = C(n, j) θ^j` up to `n = 3`, beyond that a solve at
/// `θ = 1` rescaled by powers of `θ`.
pub fn solve_gain<T: Scalar>(n: usize, theta: T) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("observer dimension must be positive".into()));
    }
    if !(theta >= T::one()) {
        return Err(Error::InvalidParameter(format!("theta = {theta} must be >= 1")));
    }
    if n <= 3 {
        return Ok((1..=n)
            .map(|j| T::lit(binomial(n, j)) * theta.powi(j as i32))
            .collect());
    }
    // P_ij = θ^{-(i+j+1)} P̃_ij, so the gain follows from the θ = 1 solution
    let p = solve_riccati_p(n, T::one())?;
    let eig = symmetric_eigenvalues(&p);
    if !(eig[0] > T::zero()) {
        return Err(Error::NumericalFailure(format!(
            "gain equation solution not positive definite (n = {n})"
        )));
    }
    let mut c = vec![T::zero(); n];
    c[0] = T::one();
    let w = solve(&p, &c).ok_or_else(|| Error::NumericalFailure("P is singular".into()))?;
    Ok(w.iter()
        .enumerate()
        .map(|(i, wi)| *wi * theta.powi(i as i32 + 1))
        .collect())
}

/// Extreme eigenvalues `(λ₁, λ₂)` of `P̃`, the `θ = 1` solution.
pub fn ptilde_eigenvalues<T: Scalar>(n: usize) -> Result<(T, T)> {
    match n {
        0 => Err(Error::InvalidParameter("observer dimension must be positive".into())),
        1 => Ok((T::one(), T::one())),
        2 => {
            let r5 = T::lit(5.0).sqrt();
            let two = T::lit(2.0);
            Ok(((T::lit(3.0) - r5) / two, (T::lit(3.0) + r5) / two))
        }
        _ => {
            let e = symmetric_eigenvalues(&solve_riccati_p(n, T::one())?);
            Ok((e[0], e[n - 1]))
        }
    }
}

/// `(η, ε)` with `η = √(2nλ₂/λ₁)·θ^{n−1}` and `ε = 4√2·M_v/λ₁·θ^{n−1}`.
pub fn envelope_constants<T: Scalar>(n: usize, theta: T, m_v: T) -> Result<(T, T)> {
    let (l1, l2) = ptilde_eigenvalues::<T>(n)?;
    let scale = theta.powi(n as i32 - 1);
    let eta = (T::lit(2.0 * n as f64) * l2 / l1).sqrt() * scale;
    let eps = T::lit(4.0) * T::SQRT_2() * m_v / l1 * scale;
    Ok((eta, eps))
}

/// Design data of one partial observer.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverConfig<T> {
    /// Zero-based sensor index.
    pub sensor: usize,
    pub dim: usize,
    pub theta: T,
    pub m_z: T,
    pub m_v: T,
    pub gain: Vec<T>,
    pub eta: T,
    pub eps: T,
    /// `max{2ηM_z, ε} + M_z`.
    pub reset_radius: T,
    pub reset_target: Vec<T>,
    /// RK4 sub-steps per sample step.
    pub substeps: usize,
}

impl<T: Scalar> ObserverConfig<T> {
    pub fn design(sensor: usize, dim: usize, theta: T, m_z: T, m_v: T) -> Result<Self> {
        if !(m_v >= T::zero()) {
            return Err(Error::InvalidParameter(format!("noise bound {m_v} must be >= 0")));
        }
        let gain = solve_gain(dim, theta)?;
        let (eta, eps) = envelope_constants(dim, theta, m_v)?;
        Ok(Self {
            sensor,
            dim,
            theta,
            m_z,
            m_v,
            gain,
            eta,
            eps,
            reset_radius: (T::lit(2.0) * eta * m_z).max(eps) + m_z,
            reset_target: vec![T::zero(); dim],
            substeps: 1,
        })
    }

    pub fn with_reset_target(mut self, target: Vec<T>) -> Result<Self> {
        if target.len() != self.dim || inf_norm(&target) > self.m_z {
            return Err(Error::InvalidParameter(format!(
                "reset target for sensor {} must have length {} and norm <= {}",
                self.sensor + 1,
                self.dim,
                self.m_z
            )));
        }
        self.reset_target = target;
        Ok(self)
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps.max(1);
        self
    }

    /// Decay exponent `θ/8` of the error envelope.
    pub fn rate(&self) -> T {
        self.theta / T::lit(8.0)
    }

    /// `max{η e^{−θt/8} e0, ε}`, the bound on `‖ẑ(t) − z(t)‖_∞` for an
    /// attack-free sensor whose error at time 0 was `e0`.
    pub fn error_envelope(&self, t: T, e0: T) -> T {
        (self.eta * (-self.rate() * t).exp() * e0).max(self.eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState<T> {
    pub zhat: Vec<T>,
    pub resets: usize,
    pub last_reset_time: Option<T>,
}

impl<T: Scalar> ObserverState<T> {
    pub fn new(zhat: Vec<T>) -> Self {
        Self {
            zhat,
            resets: 0,
            last_reset_time: None,
        }
    }
}

/// Right-hand side of the partial observer at time `t`.
pub fn observer_rhs<T: Scalar>(
    cfg: &ObserverConfig<T>,
    channel: &SensorChannel<T>,
    zhat: &[T],
    u: T,
    y: T,
) -> Vec<T> {
    let n = cfg.dim;
    let zs = saturate(zhat, cfg.m_z);
    let beta = channel.beta_at(&zs);
    let innov = zhat[0] - y;
    (0..n)
        .map(|j| {
            let drift = if j + 1 < n { zhat[j + 1] } else { channel.alpha_at(&zs) };
            drift + beta[j] * u - cfg.gain[j] * innov
        })
        .collect()
}

/// Advances one observer from `t` to `t + dt`, then applies the reset rule.
///
/// `u` and `y` give the input and the reconstructed measurement at any time in
/// the step.
#[allow(clippy::too_many_arguments)]
pub fn step_observer<T, U, Y>(
    cfg: &ObserverConfig<T>,
    st: &ObserverState<T>,
    channel: &SensorChannel<T>,
    u: U,
    y: Y,
    t: T,
    dt: T,
) -> Result<ObserverState<T>>
where
    T: Scalar,
    U: Fn(T) -> T,
    Y: Fn(T) -> T,
{
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter(format!("step {dt} must be positive")));
    }
    let m = cfg.substeps.max(1);
    let h = dt / T::lit(m as f64);
    let mut next = st.zhat.clone();
    for k in 0..m {
        next = rk4_step(
            |s, z: &[T]| observer_rhs(cfg, channel, z, u(s), y(s)),
            t + h * T::lit(k as f64),
            &next,
            h,
        );
    }
    if !all_finite(&next) {
        return Err(Error::ObserverDiverged {
            sensor: cfg.sensor + 1,
            t: (t + dt).as_f64(),
        });
    }
    let stepped = ObserverState {
        zhat: next,
        resets: st.resets,
        last_reset_time: st.last_reset_time,
    };
    Ok(apply_reset(cfg, stepped, t + dt))
}

/// Re-initialises `ẑ` to the reset target when `‖ẑ‖_∞` exceeds the reset radius.
pub fn apply_reset<T: Scalar>(cfg: &ObserverConfig<T>, mut st: ObserverState<T>, t: T) -> ObserverState<T> {
    if inf_norm(&st.zhat) > cfg.reset_radius {
        st.zhat = cfg.reset_target.clone();
        st.resets += 1;
        st.last_reset_time = Some(t);
    }
    st
}

/// Constants of the bank-wide error envelope `δ(t) = max{γ(t), ε}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeParams<T> {
    /// `2M_{z,i}η_i` per sensor.
    pub amplitude: Vec<T>,
    /// `θ_i/8` per sensor.
    pub rate: Vec<T>,
    /// `ε = max_i ε_i`.
    pub eps_global: T,
}

impl<T: Scalar> EnvelopeParams<T> {
    pub fn from_configs(cfgs: &[ObserverConfig<T>]) -> Self {
        Self {
            amplitude: cfgs.iter().map(|c| T::lit(2.0) * c.m_z * c.eta).collect(),
            rate: cfgs.iter().map(ObserverConfig::rate).collect(),
            eps_global: cfgs.iter().fold(T::zero(), |a, c| a.max(c.eps)),
        }
    }

    /// `γ(0) = max_i 2M_{z,i}η_i`.
    pub fn gamma0(&self) -> T {
        self.amplitude.iter().fold(T::zero(), |a, v| a.max(*v))
    }

    pub fn gamma(&self, t: T) -> T {
        self.amplitude
            .iter()
            .zip(&self.rate)
            .fold(T::zero(), |a, (m, r)| a.max(*m * (-*r * t).exp()))
    }

    pub fn delta(&self, t: T) -> T {
        self.gamma(t).max(self.eps_global)
    }
}

/// The `p` partial observers of a model, stepped together.
#[derive(Debug, Clone)]
pub struct ObserverBank<T> {
    pub configs: Vec<ObserverConfig<T>>,
    pub states: Vec<ObserverState<T>>,
    pub hold: SampleHold,
}

impl<T: Scalar> ObserverBank<T> {
    /// `theta`, `m_v` and `z0` are per sensor.
    pub fn new(
        model: &PlantModel<T>,
        theta: &[T],
        m_v: &[T],
        z0: &[Vec<T>],
        hold: SampleHold,
    ) -> Result<Self> {
        let p = model.p();
        if theta.len() != p || m_v.len() != p || z0.len() != p {
            return Err(Error::InvalidParameter(format!(
                "observer bank needs {p} entries per parameter"
            )));
        }
        let mut configs = Vec::with_capacity(p);
        let mut states = Vec::with_capacity(p);
        for (i, ch) in model.sensors.iter().enumerate() {
            if z0[i].len() != ch.dim {
                return Err(Error::InvalidParameter(format!(
                    "initial estimate for sensor {} has length {}, expected {}",
                    i + 1,
                    z0[i].len(),
                    ch.dim
                )));
            }
            configs.push(ObserverConfig::design(i, ch.dim, theta[i], ch.m_z, m_v[i])?);
            states.push(ObserverState::new(z0[i].clone()));
        }
        Ok(Self {
            configs,
            states,
            hold,
        })
    }

    pub fn envelope(&self) -> EnvelopeParams<T> {
        EnvelopeParams::from_configs(&self.configs)
    }

    /// Steps every observer from `t` to `t + dt` given the samples `y0` at `t`
    /// and `y1` at `t + dt`.
    pub fn step(&mut self, model: &PlantModel<T>, t: T, dt: T, y0: &[T], y1: &[T]) -> Result<()> {
        let hold = self.hold;
        for (i, (cfg, st)) in self.configs.iter().zip(self.states.iter_mut()).enumerate() {
            let (a, b) = (y0[i], y1[i]);
            *st = step_observer(
                cfg,
                st,
                &model.sensors[i],
                |s| model.input_at(s),
                |s| hold.value(a, b, (s - t) / dt),
                t,
                dt,
            )?;
        }
        Ok(())
    }

    /// `ẑ` stacked in sensor order.
    pub fn stacked(&self) -> Vec<T> {
        self.states.iter().flat_map(|s| s.zhat.iter().copied()).collect()
    }

    pub fn total_resets(&self) -> usize {
        self.states.iter().map(|s| s.resets).sum()
    }
}
