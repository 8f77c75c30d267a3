//! Subset projections, saturation, Lipschitz-extended left inverses and the
//! redundancy auditor.

mod audit;
mod lipschitz;
mod subset;

use std::fmt;

pub use audit::{check_redundant_observability, AuditOptions, RedundancyReport, SubsetAudit};
pub use lipschitz::{
    estimate_lip_lower, estimate_lip_upper, BoxDomain, LipschitzEstimates, LowerLipschitz,
    PairSet, DEGENERATE_TOL,
};
pub use subset::{combinations, SubsetIndex};

use crate::error::{Error, Result};
use crate::model::VectorMap;
use crate::scalar::Scalar;

/// Component-wise clamp to `[-m, m]`.
pub fn saturate<T: Scalar>(w: &[T], m: T) -> Vec<T> {
    w.iter().map(|v| v.max(-m).min(m)).collect()
}

/// `Ψ^I(z) = sat(Φ_I'^{-1}(sat(z, M_z)), M_x)`: a left inverse of `Φ_I` on its
/// image, extended to all of `ℝ^{𝒩_I}` and mapping into the state box.
#[derive(Clone)]
pub struct LeftInverse<T> {
    subset: SubsetIndex,
    inner: VectorMap<T>,
    m_z: T,
    m_x: T,
}

impl<T: Scalar> LeftInverse<T> {
    /// `inner` only has to agree with `Φ_I^{-1}` on `Φ_I(𝒳)` and be smooth on
    /// the `m_z` box.
    pub fn new(subset: SubsetIndex, inner: VectorMap<T>, m_z: T, m_x: T) -> Self {
        Self {
            subset,
            inner,
            m_z,
            m_x,
        }
    }

    pub fn subset(&self) -> &SubsetIndex {
        &self.subset
    }

    pub fn m_z(&self) -> T {
        self.m_z
    }

    pub fn m_x(&self) -> T {
        self.m_x
    }

    /// The unsaturated inner map `Φ_I'^{-1}`.
    pub fn inner(&self, z_subset: &[T]) -> Vec<T> {
        (self.inner)(z_subset)
    }

    pub fn psi_eval(&self, z_subset: &[T]) -> Vec<T> {
        debug_assert_eq!(z_subset.len(), self.subset.total());
        let inner = (self.inner)(&saturate(z_subset, self.m_z));
        saturate(&inner, self.m_x)
    }
}

impl<T> fmt::Debug for LeftInverse<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LeftInverse")
            .field("subset", &self.subset.to_string())
            .finish_non_exhaustive()
    }
}

/// Registered left inverses of a model, keyed by subset.
#[derive(Clone, Debug)]
pub struct InverseSet<T> {
    subsets: Vec<LeftInverse<T>>,
    full: Option<LeftInverse<T>>,
}

impl<T: Scalar> InverseSet<T> {
    pub fn new(subsets: Vec<LeftInverse<T>>, full: Option<LeftInverse<T>>) -> Self {
        Self { subsets, full }
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LeftInverse<T>> {
        self.subsets.iter()
    }

    pub fn get(&self, subset: &SubsetIndex) -> Result<&LeftInverse<T>> {
        self.subsets
            .iter()
            .chain(self.full.iter())
            .find(|inv| inv.subset() == subset)
            .ok_or_else(|| Error::UnsupportedSubset(subset.to_string()))
    }

    /// The full-stack inverse `Ψ` used by the global detector.
    pub fn full(&self) -> Option<&LeftInverse<T>> {
        self.full.as_ref()
    }

    pub fn require_full(&self) -> Result<&LeftInverse<T>> {
        self.full
            .as_ref()
            .ok_or_else(|| Error::UnsupportedSubset("[p] (full stack)".into()))
    }
}

/// Looks up `Ψ^I` and evaluates it.
pub fn psi_eval<T: Scalar>(
    inverses: &InverseSet<T>,
    subset: &SubsetIndex,
    z_subset: &[T],
) -> Result<Vec<T>> {
    Ok(inverses.get(subset)?.psi_eval(z_subset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{benchmark, benchmark_inverses};
    use crate::scalar::inf_dist;

    #[test]
    fn saturate_cases() {
        assert_eq!(saturate(&[0.1, -0.2], 0.5), vec![0.1, -0.2]);
        assert_eq!(saturate(&[3.0, -7.0], 2.0), vec![2.0, -2.0]);
        assert_eq!(saturate(&[2.0, 1.0], 2.0), vec![2.0, 1.0]);
    }

    #[test]
    fn table_rows_invert_phi() {
        let m = benchmark::<f64>();
        let inv = benchmark_inverses::<f64>();
        let x = [0.1, 0.2, -0.1];
        for psi in inv.iter().chain(inv.full()) {
            let z = m.phi_eval(psi.subset(), &x);
            let back = psi.psi_eval(&z);
            assert!(inf_dist(&back, &x) < 1e-12, "subset {}", psi.subset());
        }
    }

    #[test]
    fn huge_inputs_stay_in_state_box() {
        let inv = benchmark_inverses::<f64>();
        for psi in inv.iter() {
            let z = vec![1e6; psi.subset().total()];
            let x = psi.psi_eval(&z);
            assert!(x.iter().all(|v| v.abs() <= 0.5));
        }
    }

    #[test]
    fn unregistered_subset_is_unsupported() {
        let m = benchmark::<f64>();
        let inv = benchmark_inverses::<f64>();
        let s = m.subset(vec![0, 1]).unwrap();
        assert!(matches!(
            psi_eval(&inv, &s, &[0.0; 4]),
            Err(Error::UnsupportedSubset(_))
        ));
        let empty: InverseSet<f64> = InverseSet::new(vec![], None);
        assert!(empty.require_full().is_err());
    }
}
