//! Built-in models, looked up by name from scenario configs.
//!
//! The only entry is the three-state, four-sensor benchmark:
//!
//! ```text
//! ẋ1 = -2x1 - x2³            + (1 + 3x2²) u
//! ẋ2 = -x2                   + u
//! ẋ3 = -x2 cos x2 + sin x2 - x3 + (cos x2) u        u(t) = 0.25 sin(0.2πt) - 0.1
//!
//! y1 = x1 + x2 - x2³ - sin x2 + x3
//! y2 = x1 + sin x2 - x2³ - x3
//! y3 = -x1 + x2³ + x2
//! y4 = -x2 - sin x2 + x3
//! ```
//!
//! In observable coordinates every channel is linear:
//! `α_i(z) = -2z1 - 3z2` for the three second-order sensors and `α_4(z) = -z1`,
//! with constant input gains `β_1 = (2, -3)`, `β_2 = (1, -2)`, `β_3 = (0, 1)`,
//! `β_4 = (-1)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::inversion::{InverseSet, LeftInverse};
use crate::linalg::Matrix;
use crate::model::{PlantModel, ScalarMap, SensorChannel};
use crate::scalar::Scalar;

pub const BENCHMARK_NAME: &str = "benchmark-siso-3state-4sensor";

/// Radius of the state box for the benchmark.
pub const BENCHMARK_M_X: f64 = 0.5;
/// Radius of the observable-coordinate box for every benchmark sensor.
pub const BENCHMARK_M_Z: f64 = 2.0;

/// A model together with the left inverses registered for it.
#[derive(Clone)]
pub struct RegisteredModel<T> {
    pub model: PlantModel<T>,
    pub inverses: InverseSet<T>,
}

pub fn names() -> &'static [&'static str] {
    &[BENCHMARK_NAME]
}

pub fn lookup<T: Scalar>(name: &str) -> Result<RegisteredModel<T>> {
    match name {
        BENCHMARK_NAME => Ok(RegisteredModel {
            model: benchmark(),
            inverses: benchmark_inverses(),
        }),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

fn constant<T: Scalar>(c: f64) -> ScalarMap<T> {
    Arc::new(move |_: &[T]| T::lit(c))
}

fn second_order_alpha<T: Scalar>() -> ScalarMap<T> {
    Arc::new(|z: &[T]| -T::lit(2.0) * z[0] - T::lit(3.0) * z[1])
}

pub fn benchmark<T: Scalar>() -> PlantModel<T> {
    let c = T::lit;
    let m_z = c(BENCHMARK_M_Z);

    let sensor1 = SensorChannel {
        dim: 2,
        output: Arc::new(|x: &[T]| x[0] + x[1] - x[1].powi(3) - x[1].sin() + x[2]),
        phi: Arc::new(|x: &[T]| {
            let (x1, x2, x3) = (x[0], x[1], x[2]);
            vec![
                x1 + x2 - x2.powi(3) - x2.sin() + x3,
                -T::lit(2.0) * x1 + x2.sin() - x2 + T::lit(2.0) * x2.powi(3) - x3,
            ]
        }),
        phi_jacobian: Some(Arc::new(|x: &[T]| {
            let x2 = x[1];
            let sq = x2 * x2;
            Matrix::from_rows(&[
                vec![T::one(), T::one() - T::lit(3.0) * sq - x2.cos(), T::one()],
                vec![-T::lit(2.0), x2.cos() - T::one() + T::lit(6.0) * sq, -T::one()],
            ])
        })),
        alpha: second_order_alpha(),
        beta: vec![constant(2.0), constant(-3.0)],
        m_z,
    };

    let sensor2 = SensorChannel {
        dim: 2,
        output: Arc::new(|x: &[T]| x[0] + x[1].sin() - x[1].powi(3) - x[2]),
        phi: Arc::new(|x: &[T]| {
            let (x1, x2, x3) = (x[0], x[1], x[2]);
            vec![
                x1 + x2.sin() - x2.powi(3) - x3,
                -T::lit(2.0) * x1 - x2.sin() + T::lit(2.0) * x2.powi(3) + x3,
            ]
        }),
        phi_jacobian: Some(Arc::new(|x: &[T]| {
            let x2 = x[1];
            let sq = x2 * x2;
            Matrix::from_rows(&[
                vec![T::one(), x2.cos() - T::lit(3.0) * sq, -T::one()],
                vec![-T::lit(2.0), -x2.cos() + T::lit(6.0) * sq, T::one()],
            ])
        })),
        alpha: second_order_alpha(),
        beta: vec![constant(1.0), constant(-2.0)],
        m_z,
    };

    let sensor3 = SensorChannel {
        dim: 2,
        output: Arc::new(|x: &[T]| -x[0] + x[1].powi(3) + x[1]),
        phi: Arc::new(|x: &[T]| {
            let (x1, x2) = (x[0], x[1]);
            vec![
                -x1 + x2.powi(3) + x2,
                T::lit(2.0) * x1 - x2 - T::lit(2.0) * x2.powi(3),
            ]
        }),
        phi_jacobian: Some(Arc::new(|x: &[T]| {
            let sq = x[1] * x[1];
            Matrix::from_rows(&[
                vec![-T::one(), T::lit(3.0) * sq + T::one(), T::zero()],
                vec![T::lit(2.0), -T::one() - T::lit(6.0) * sq, T::zero()],
            ])
        })),
        alpha: second_order_alpha(),
        beta: vec![constant(0.0), constant(1.0)],
        m_z,
    };

    let sensor4 = SensorChannel {
        dim: 1,
        output: Arc::new(|x: &[T]| -x[1] - x[1].sin() + x[2]),
        phi: Arc::new(|x: &[T]| vec![-x[1] - x[1].sin() + x[2]]),
        phi_jacobian: Some(Arc::new(|x: &[T]| {
            Matrix::from_rows(&[vec![T::zero(), -T::one() - x[1].cos(), T::one()]])
        })),
        alpha: Arc::new(|z: &[T]| -z[0]),
        beta: vec![constant(-1.0)],
        m_z,
    };

    PlantModel {
        name: BENCHMARK_NAME.to_string(),
        n: 3,
        drift: Arc::new(|x: &[T]| {
            let (x1, x2, x3) = (x[0], x[1], x[2]);
            vec![
                -T::lit(2.0) * x1 - x2.powi(3),
                -x2,
                -x2 * x2.cos() + x2.sin() - x3,
            ]
        }),
        input_field: Arc::new(|x: &[T]| {
            let x2 = x[1];
            vec![T::one() + T::lit(3.0) * x2 * x2, T::one(), x2.cos()]
        }),
        input: Arc::new(|t: T| T::lit(0.25) * (T::lit(0.2) * T::PI() * t).sin() - T::lit(0.1)),
        m_x: c(BENCHMARK_M_X),
        sensors: vec![sensor1, sensor2, sensor3, sensor4],
    }
}

/// Closed-form left inverses for the four subsets `[4] − {i}` plus the full
/// stack. Arguments are the stacked coordinates of the subset, in ascending
/// sensor order (`z1, z2, …` below index into that stack).
pub fn benchmark_inverses<T: Scalar>() -> InverseSet<T> {
    let dims = [2, 2, 2, 1];
    let m_z = T::lit(BENCHMARK_M_Z);
    let m_x = T::lit(BENCHMARK_M_X);
    let two = || T::lit(2.0);
    let half = || T::lit(0.5);

    // {2,3,4}: z = (Φ2, Φ3, Φ4)
    let drop1 = LeftInverse::new(
        crate::inversion::SubsetIndex::from_one_based(&[2, 3, 4], &dims).unwrap(),
        Arc::new(move |z: &[T]| {
            let s = two() * z[2] + z[3];
            vec![z[2] + z[3] + s.powi(3), s, -two() * z[0] - z[1] + s.sin()]
        }),
        m_z,
        m_x,
    );
    // {1,3,4}: z = (Φ1, Φ3, Φ4)
    let drop2 = LeftInverse::new(
        crate::inversion::SubsetIndex::from_one_based(&[1, 3, 4], &dims).unwrap(),
        Arc::new(move |z: &[T]| {
            let s = two() * z[2] + z[3];
            vec![
                -z[0] - z[1] + s.powi(3),
                s,
                half() * (two() * z[0] + z[1] + z[4]) + s.sin(),
            ]
        }),
        m_z,
        m_x,
    );
    // {1,2,4}: z = (Φ1, Φ2, Φ4)
    let drop3 = LeftInverse::new(
        crate::inversion::SubsetIndex::from_one_based(&[1, 2, 4], &dims).unwrap(),
        Arc::new(move |z: &[T]| {
            let s = two() * z[2] + z[3] + z[4];
            vec![-z[0] - z[1] - s.powi(3), -s, -two() * z[2] - z[3] - s.sin()]
        }),
        m_z,
        m_x,
    );
    // {1,2,3}: z = (Φ1, Φ2, Φ3)
    let row4 = move |z: &[T]| {
        let s = two() * z[4] + z[5];
        vec![-z[0] - z[1] + s.powi(3), s, -two() * z[2] - z[3] + s.sin()]
    };
    let drop4 = LeftInverse::new(
        crate::inversion::SubsetIndex::from_one_based(&[1, 2, 3], &dims).unwrap(),
        Arc::new(row4),
        m_z,
        m_x,
    );
    // [4]: the {1,2,3} inverse ignores the Φ4 block
    let full = LeftInverse::new(
        crate::inversion::SubsetIndex::full(&dims),
        Arc::new(move |z: &[T]| row4(&z[..6])),
        m_z,
        m_x,
    );

    InverseSet::new(vec![drop1, drop2, drop3, drop4], Some(full))
}
