//! Fixed-step classical Runge–Kutta.

use crate::scalar::Scalar;

/// One RK4 step of `ẋ = rhs(t, x)` from `t` to `t + dt`.
pub fn rk4_step<T, F>(rhs: F, t: T, x: &[T], dt: T) -> Vec<T>
where
    T: Scalar,
    F: Fn(T, &[T]) -> Vec<T>,
{
    let two = T::lit(2.0);
    let half = dt / two;
    let axpy = |base: &[T], k: &[T], h: T| -> Vec<T> {
        base.iter().zip(k).map(|(b, d)| *b + h * *d).collect()
    };

    let k1 = rhs(t, x);
    let k2 = rhs(t + half, &axpy(x, &k1, half));
    let k3 = rhs(t + half, &axpy(x, &k2, half));
    let k4 = rhs(t + dt, &axpy(x, &k3, dt));

    let sixth = dt / T::lit(6.0);
    x.iter()
        .enumerate()
        .map(|(i, xi)| *xi + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let x = rk4_step(|_, x: &[f64]| vec![-x[0]], 0.0, &[1.0], 0.02);
        assert!((x[0] - (-0.02f64).exp()).abs() <= 1e-10);
        assert!((x[0] - 0.980_198_67).abs() < 1e-8);
    }

    #[test]
    fn time_dependent_rhs_uses_stage_times() {
        // ẋ = t² integrates exactly under RK4 (Simpson's rule)
        let x = rk4_step(|t: f64, _| vec![t * t], 1.0, &[0.0], 0.5);
        let exact = (1.5f64.powi(3) - 1.0) / 3.0;
        assert!((x[0] - exact).abs() < 1e-14);
    }
}
