//! k-redundant observability audit: every `Φ_I` with `|I| = p − k` must be an
//! injective immersion on the state box. Checked numerically through the
//! Jacobian's smallest singular value on a regular grid and a sampled lower
//! Lipschitz constant.

use std::fmt::Write as _;

use serde::Serialize;

use super::lipschitz::{sampled_lower, BoxDomain, PairSet};
use super::subset::combinations;
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::model::PlantModel;
use crate::scalar::{to_f64_vec, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    /// Grid points per state axis.
    pub grid_per_axis: usize,
    pub pair_samples: usize,
    pub seed: u64,
    /// Rank tolerance on the smallest singular value.
    pub sv_tol: f64,
    /// Injectivity tolerance on the sampled lower Lipschitz constant.
    pub lip_tol: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            grid_per_axis: 21,
            pair_samples: 10_000,
            seed: 0,
            sv_tol: 1e-6,
            lip_tol: super::DEGENERATE_TOL,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsetAudit {
    /// One-based sensor labels.
    pub subset: Vec<usize>,
    pub min_singular_value: f64,
    /// Grid point attaining the smallest singular value.
    pub min_singular_at: Vec<f64>,
    pub lip_lower: f64,
    pub lip_lower_witness: (Vec<f64>, Vec<f64>),
    pub immersion_ok: bool,
    pub injective_ok: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RedundancyReport {
    pub k: usize,
    pub subset_size: usize,
    pub grid_points: usize,
    pub pair_samples: usize,
    pub entries: Vec<SubsetAudit>,
    pub pass: bool,
}

impl RedundancyReport {
    pub fn failures(&self) -> impl Iterator<Item = &SubsetAudit> {
        self.entries.iter().filter(|e| !e.pass)
    }

    /// Human-readable table, one subset per line.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{}-redundant observability: {} subsets of size {} ({} grid points, {} pairs)",
            self.k,
            self.entries.len(),
            self.subset_size,
            self.grid_points,
            self.pair_samples
        );
        let _ = writeln!(s, "{:<14} {:>14} {:>14}  result", "subset", "min sv", "lower Lip");
        for e in &self.entries {
            let label = format!(
                "{{{}}}",
                e.subset
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            let _ = writeln!(
                s,
                "{:<14} {:>14.6e} {:>14.6e}  {}",
                label,
                e.min_singular_value,
                e.lip_lower,
                if e.pass { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(s, "overall: {}", if self.pass { "pass" } else { "FAIL" });
        s
    }
}

fn grid<T: Scalar>(dim: usize, per_axis: usize, radius: T) -> Vec<Vec<T>> {
    let ticks: Vec<T> = if per_axis <= 1 {
        vec![T::zero()]
    } else {
        (0..per_axis)
            .map(|k| -radius + T::lit(2.0 * k as f64 / (per_axis - 1) as f64) * radius)
            .collect()
    };
    let mut pts: Vec<Vec<T>> = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                ticks.iter().map(move |t| {
                    let mut q = p.clone();
                    q.push(*t);
                    q
                })
            })
            .collect();
    }
    pts
}

/// Audits every subset of size `p − k`. Failures are report entries.
pub fn check_redundant_observability<T: Scalar>(
    model: &PlantModel<T>,
    k: usize,
    opts: &AuditOptions,
) -> Result<RedundancyReport> {
    let p = model.p();
    if k >= p {
        return Err(Error::InvalidParameter(format!(
            "redundancy k = {k} must be below the sensor count {p}"
        )));
    }
    let size = p - k;
    let points = grid(model.n, opts.grid_per_axis, model.m_x);
    let pairs = PairSet::generate(
        &BoxDomain::cube(model.n, model.m_x),
        opts.pair_samples,
        opts.seed,
    );

    let mut entries = Vec::new();
    for idx in combinations(p, size) {
        let subset = model.subset(idx)?;

        let mut min_sv = T::infinity();
        let mut min_at = points[0].clone();
        for x in &points {
            let jac = model.phi_jacobian(&subset, x);
            let sv = singular_values(&jac)[0];
            if sv < min_sv {
                min_sv = sv;
                min_at = x.clone();
            }
        }
        let lower = sampled_lower(model, &subset, &pairs);

        let immersion_ok = min_sv.as_f64() > opts.sv_tol;
        let injective_ok = lower.value.as_f64() > opts.lip_tol;
        entries.push(SubsetAudit {
            subset: subset.one_based(),
            min_singular_value: min_sv.as_f64(),
            min_singular_at: to_f64_vec(&min_at),
            lip_lower: lower.value.as_f64(),
            lip_lower_witness: (to_f64_vec(&lower.witness.0), to_f64_vec(&lower.witness.1)),
            immersion_ok,
            injective_ok,
            pass: immersion_ok && injective_ok,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(RedundancyReport {
        k,
        subset_size: size,
        grid_points: points.len(),
        pair_samples: pairs.len(),
        entries,
        pass,
    })
}
