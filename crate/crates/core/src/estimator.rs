//! Switching resilient estimator.
//!
//! The subsets of size `p − q` are enumerated as `Λ(1), …, Λ(C)`. Whenever
//! the detector fires on the active subset `Λ(σ)`, `σ` advances cyclically and
//! the new subset is tested again at the same sample. The estimate is
//! `Ψ^{Λ(σ)}(ẑ_{Λ(σ)})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::{combinations, InverseSet, LipschitzEstimates, SubsetIndex};
use crate::observer::EnvelopeParams;
use crate::scalar::Scalar;

/// Order of the subset enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaOrder {
    /// Sorted index lists in lexicographic order.
    Lexicographic,
    /// Lexicographic in the removed sensors, so `Λ(i) = [p] − {i}` for `q = 1`.
    #[default]
    Complement,
    /// One-based subsets, listed explicitly.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetEnumeration {
    pub q: usize,
    pub subsets: Vec<SubsetIndex>,
}

impl SubsetEnumeration {
    pub fn new(dims: &[usize], q: usize, order: &LambdaOrder) -> Result<Self> {
        let p = dims.len();
        if q >= p {
            return Err(Error::InvalidParameter(format!(
                "sparsity q = {q} must be below the sensor count {p}"
            )));
        }
        let size = p - q;
        let subsets = match order {
            LambdaOrder::Lexicographic => combinations(p, size)
                .into_iter()
                .map(|c| SubsetIndex::new(c, dims))
                .collect::<Result<Vec<_>>>()?,
            LambdaOrder::Complement => combinations(p, q)
                .into_iter()
                .map(|removed| {
                    let keep = (0..p).filter(|i| !removed.contains(i)).collect();
                    SubsetIndex::new(keep, dims)
                })
                .collect::<Result<Vec<_>>>()?,
            LambdaOrder::Explicit(list) => {
                let subsets = list
                    .iter()
                    .map(|l| SubsetIndex::from_one_based(l, dims))
                    .collect::<Result<Vec<_>>>()?;
                let expected = combinations(p, size).len();
                if subsets.iter().any(|s| s.len() != size) {
                    return Err(Error::InvalidSubset(format!(
                        "every listed subset must have {size} sensors"
                    )));
                }
                for (k, s) in subsets.iter().enumerate() {
                    if subsets[..k].contains(s) {
                        return Err(Error::InvalidSubset(format!("subset {s} listed twice")));
                    }
                }
                if subsets.len() != expected {
                    return Err(Error::InvalidSubset(format!(
                        "expected all {expected} subsets of size {size}, got {}",
                        subsets.len()
                    )));
                }
                subsets
            }
        };
        Ok(Self { q, subsets })
    }

    /// `C(p, p − q)`.
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    /// `Λ(sigma)` with one-based `sigma`.
    pub fn get(&self, sigma: usize) -> &SubsetIndex {
        &self.subsets[sigma - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchState<T> {
    /// One-based index into the enumeration.
    pub sigma: usize,
    pub switch_count: usize,
    pub last_switch: Option<T>,
    /// Updates made at the most recent sample.
    pub cycles_this_sample: usize,
    /// Every subset fired at the most recent sample.
    pub violation: bool,
}

impl<T: Scalar> Default for SwitchState<T> {
    fn default() -> Self {
        Self {
            sigma: 1,
            switch_count: 0,
            last_switch: None,
            cycles_this_sample: 0,
            violation: false,
        }
    }
}

/// Applies the update rule at time `t`. `fires(s)` tests `Λ(s)` at this sample.
///
/// Stops at the first subset that does not fire. After one full cycle with
/// every subset firing, the violation flag is raised and `σ` is left where it
/// started.
pub fn sigma_update<T, F>(state: &SwitchState<T>, count: usize, t: T, mut fires: F) -> SwitchState<T>
where
    T: Scalar,
    F: FnMut(usize) -> bool,
{
    let mut s = SwitchState {
        cycles_this_sample: 0,
        violation: false,
        ..state.clone()
    };
    while fires(s.sigma) {
        if s.cycles_this_sample == count {
            s.violation = true;
            break;
        }
        s.sigma = s.sigma % count + 1;
        s.cycles_this_sample += 1;
        s.switch_count += 1;
        s.last_switch = Some(t);
    }
    s
}

/// Per-sample reference: the first subset, in enumeration order, that does
/// not fire. `None` means every subset fires.
pub fn brute_force_select<F: FnMut(usize) -> bool>(count: usize, mut fires: F) -> Option<usize> {
    (1..=count).find(|&s| !fires(s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub t: T,
    pub sigma: usize,
    pub xhat: Vec<T>,
    pub bound: T,
    /// `σ` changed at this sample.
    pub in_transient: bool,
}

/// `x̂ = Ψ^{Λ(σ)}(ẑ_{Λ(σ)})` for the settled `σ`.
pub fn estimate_state<T: Scalar>(
    t: T,
    state: &SwitchState<T>,
    lambda: &SubsetEnumeration,
    inverses: &InverseSet<T>,
    zhat: &[T],
    bound: T,
) -> Result<Estimate<T>> {
    let subset = lambda.get(state.sigma);
    let inv = inverses.get(subset)?;
    Ok(Estimate {
        t,
        sigma: state.sigma,
        xhat: inv.psi_eval(&subset.project(zhat)),
        bound,
        in_transient: state.cycles_this_sample > 0,
    })
}

/// `((max_I coeff_I + 1) / min_J ‗Lip(Φ_J))·δ(t)`; infinite when no positive
/// lower constant is available.
pub fn error_bound<T: Scalar>(env: &EnvelopeParams<T>, lip: &LipschitzEstimates<T>, t: T) -> T {
    let c = lip.min_lower();
    if !(c > T::zero()) {
        return T::infinity();
    }
    (lip.max_coeff() + T::one()) / c * env.delta(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::benchmark_inverses;

    const DIMS: [usize; 4] = [2, 2, 2, 1];

    fn labels(e: &SubsetEnumeration) -> Vec<Vec<usize>> {
        e.subsets.iter().map(SubsetIndex::one_based).collect()
    }

    #[test]
    fn complement_order_drops_one_sensor_each() {
        let e = SubsetEnumeration::new(&DIMS, 1, &LambdaOrder::Complement).unwrap();
        assert_eq!(
            labels(&e),
            vec![vec![2, 3, 4], vec![1, 3, 4], vec![1, 2, 4], vec![1, 2, 3]]
        );
        let lex = SubsetEnumeration::new(&DIMS, 1, &LambdaOrder::Lexicographic).unwrap();
        let mut rev = labels(&lex);
        rev.reverse();
        assert_eq!(labels(&e), rev);
        assert_eq!(SubsetEnumeration::new(&DIMS, 2, &LambdaOrder::Complement).unwrap().len(), 6);
    }

    #[test]
    fn explicit_order_must_be_a_bijection() {
        let ok = LambdaOrder::Explicit(vec![vec![1, 2, 3], vec![2, 3, 4], vec![1, 3, 4], vec![1, 2, 4]]);
        assert!(SubsetEnumeration::new(&DIMS, 1, &ok).is_ok());
        let dup = LambdaOrder::Explicit(vec![vec![1, 2, 3], vec![1, 2, 3], vec![1, 3, 4], vec![1, 2, 4]]);
        assert!(SubsetEnumeration::new(&DIMS, 1, &dup).is_err());
        let short = LambdaOrder::Explicit(vec![vec![1, 2, 3]]);
        assert!(SubsetEnumeration::new(&DIMS, 1, &short).is_err());
        let wrong = LambdaOrder::Explicit(vec![vec![1, 2], vec![2, 3, 4], vec![1, 3, 4], vec![1, 2, 4]]);
        assert!(SubsetEnumeration::new(&DIMS, 1, &wrong).is_err());
        assert!(SubsetEnumeration::new(&DIMS, 4, &LambdaOrder::Complement).is_err());
    }

    #[test]
    fn order_serializes_as_lowercase_names() {
        assert_eq!(serde_json::to_string(&LambdaOrder::Complement).unwrap(), "\"complement\"");
        let e: LambdaOrder = serde_json::from_str(r#"{"explicit": [[1,2,3]]}"#).unwrap();
        assert_eq!(e, LambdaOrder::Explicit(vec![vec![1, 2, 3]]));
    }

    #[test]
    fn quiet_sample_leaves_sigma() {
        let s = sigma_update(&SwitchState::<f64>::default(), 4, 1.0, |_| false);
        assert_eq!((s.sigma, s.cycles_this_sample, s.switch_count), (1, 0, 0));
    }

    #[test]
    fn consecutive_updates_within_one_sample() {
        // sensor 3 attacked: every subset containing it fires
        let e = SubsetEnumeration::new(&DIMS, 1, &LambdaOrder::Complement).unwrap();
        let fires = |s: usize| e.get(s).contains(2);
        let s = sigma_update(&SwitchState::<f64>::default(), 4, 6.02, fires);
        assert_eq!((s.sigma, s.cycles_this_sample, s.last_switch), (3, 2, Some(6.02)));

        let fires = |s: usize| e.get(s).contains(1);
        let s = sigma_update(&s, 4, 17.02, fires);
        assert_eq!((s.sigma, s.cycles_this_sample, s.switch_count), (2, 3, 5));
        assert!(!s.violation);
    }

    #[test]
    fn full_cycle_flags_violation() {
        let s = sigma_update(
            &SwitchState::<f64> {
                sigma: 3,
                ..Default::default()
            },
            4,
            2.0,
            |_| true,
        );
        assert!(s.violation);
        assert_eq!((s.sigma, s.cycles_this_sample), (3, 4));
        assert_eq!(brute_force_select(4, |_| true), None);
        assert_eq!(brute_force_select(4, |s| s < 3), Some(3));
    }

    #[test]
    fn estimate_lands_in_state_box() {
        let e = SubsetEnumeration::new(&DIMS, 1, &LambdaOrder::Complement).unwrap();
        let inv = benchmark_inverses::<f64>();
        let zhat = [40.0, -3.0, 7.0, 0.5, -9.0, 1.0, 100.0];
        for sigma in 1..=4 {
            let st = SwitchState {
                sigma,
                ..Default::default()
            };
            let est = estimate_state(0.0, &st, &e, &inv, &zhat, 1.0).unwrap();
            assert!(est.xhat.iter().all(|v| v.abs() <= 0.5));
            assert!(!est.in_transient);
        }
    }

    #[test]
    fn error_bound_is_linear_in_delta() {
        let dims = DIMS;
        let j = SubsetIndex::from_one_based(&[1, 2], &dims).unwrap();
        let lip = LipschitzEstimates {
            lip_upper_phi: Some(7.0_f64),
            lip_upper_psi: vec![],
            lip_lower: vec![(j.clone(), 0.5)],
            threshold_coeff: vec![(j, 5391.0)],
        };
        let env = EnvelopeParams {
            amplitude: vec![],
            rate: vec![],
            eps_global: 4.739e-4,
        };
        let b = error_bound(&env, &lip, 10.0);
        assert!((b - 5392.0 * 4.739e-4 / 0.5).abs() < 1e-9);
        let env2 = EnvelopeParams {
            eps_global: 2.0 * 4.739e-4,
            ..env.clone()
        };
        assert!((error_bound(&env2, &lip, 10.0) - 2.0 * b).abs() < 1e-9);
        let quiet = EnvelopeParams {
            eps_global: 0.0,
            ..env
        };
        assert_eq!(error_bound(&quiet, &lip, 10.0), 0.0);
    }
}
