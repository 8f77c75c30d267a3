//! Sampled Lipschitz constants.
//!
//! These are estimates from finitely many difference quotients, not
//! certificates: an upper estimate can sit below the true constant. Detector
//! thresholds therefore take configured coefficients; the sampled values feed
//! diagnostics, the redundancy audit and the error-bound denominator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LeftInverse, SubsetIndex};
use crate::error::{Error, Result};
use crate::model::{PlantModel, FD_STEP};
use crate::scalar::{inf_dist, Scalar};

/// A sampled lower Lipschitz constant at or below this is treated as an
/// injectivity failure.
pub const DEGENERATE_TOL: f64 = 1e-6;

const MIN_SAMPLES: usize = 1_000;
const MAX_CORNER_DIM: usize = 12;
/// Relative size of the "near" half of a [`PairSet`].
const NEAR_STEP: f64 = 1e-4;

/// Axis-aligned box `[lo, hi] ⊂ ℝᵈ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Scalar> BoxDomain<T> {
    /// `{w : ‖w‖_∞ ≤ radius}`.
    pub fn cube(dim: usize, radius: T) -> Self {
        Self {
            lo: vec![-radius; dim],
            hi: vec![radius; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn clamp(&self, w: &mut [T]) {
        for ((v, lo), hi) in w.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.max(*lo).min(*hi);
        }
    }

    pub fn uniform<R: Rng>(&self, rng: &mut R) -> Vec<T> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(lo, hi)| *lo + (*hi - *lo) * T::lit(rng.gen::<f64>()))
            .collect()
    }

    /// Latin-hypercube sample of `count` points.
    pub fn latin_hypercube<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<Vec<T>> {
        let d = self.dim();
        let mut pts = vec![vec![T::zero(); d]; count];
        let mut strata: Vec<usize> = (0..count).collect();
        for j in 0..d {
            strata.shuffle(rng);
            let width = self.hi[j] - self.lo[j];
            for (k, pt) in pts.iter_mut().enumerate() {
                let u = (strata[k] as f64 + rng.gen::<f64>()) / count as f64;
                pt[j] = self.lo[j] + width * T::lit(u);
            }
        }
        pts
    }

    /// All `2ᵈ` vertices; empty for `d > 12`.
    pub fn corners(&self) -> Vec<Vec<T>> {
        let d = self.dim();
        if d > MAX_CORNER_DIM {
            return Vec::new();
        }
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|j| if mask >> j & 1 == 1 { self.hi[j] } else { self.lo[j] })
                    .collect()
            })
            .collect()
    }
}

/// A reproducible set of point pairs inside a box: half spread out (Latin
/// hypercube against a shuffled copy), half close together along random
/// directions. Using one `PairSet` for several maps makes their quotients
/// directly comparable.
#[derive(Debug, Clone)]
pub struct PairSet<T> {
    pairs: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Scalar> PairSet<T> {
    pub fn generate(domain: &BoxDomain<T>, samples: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let far = samples / 2;
        let near = samples - far;

        let a = domain.latin_hypercube(far.max(1), &mut rng);
        let mut b = a.clone();
        b.shuffle(&mut rng);
        let mut pairs: Vec<(Vec<T>, Vec<T>)> = a
            .into_iter()
            .zip(b)
            .filter(|(p, q)| p != q)
            .take(far)
            .collect();

        let width = domain
            .lo
            .iter()
            .zip(&domain.hi)
            .fold(T::zero(), |acc, (lo, hi)| acc.max(*hi - *lo));
        let step = width * T::lit(NEAR_STEP);
        for _ in 0..near {
            let p = domain.uniform(&mut rng);
            let mut q: Vec<T> = p
                .iter()
                .map(|v| *v + step * T::lit(rng.gen_range(-1.0..1.0)))
                .collect();
            domain.clamp(&mut q);
            if p != q {
                pairs.push((p, q));
            }
        }
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Vec<T>, Vec<T>)] {
        &self.pairs
    }

    fn quotients<'a, F>(&'a self, map: F) -> impl Iterator<Item = (usize, T)> + 'a
    where
        F: Fn(&[T]) -> Vec<T> + 'a,
    {
        self.pairs.iter().enumerate().map(move |(k, (p, q))| {
            (k, inf_dist(&map(p), &map(q)) / inf_dist(p, q))
        })
    }

    /// Smallest difference quotient and the index of the pair attaining it.
    pub fn min_ratio<F: Fn(&[T]) -> Vec<T>>(&self, map: F) -> (T, usize) {
        self.quotients(map)
            .fold((T::infinity(), 0), |best, (k, r)| if r < best.0 { (r, k) } else { best })
    }

    /// Largest difference quotient and the index of the pair attaining it.
    pub fn max_ratio<F: Fn(&[T]) -> Vec<T>>(&self, map: F) -> (T, usize) {
        self.quotients(map)
            .fold((T::zero(), 0), |best, (k, r)| if r > best.0 { (r, k) } else { best })
    }
}

/// Finite-difference Jacobian's induced ∞-norm at `x`. Each column is a chord
/// quotient over the actually representable step, so linear maps come out
/// exact.
fn fd_jacobian_inf_norm<T: Scalar, F: Fn(&[T]) -> Vec<T>>(map: &F, x: &[T]) -> T {
    let h = T::lit(FD_STEP);
    let mut row_sums: Vec<T> = Vec::new();
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        let fp = map(&xp);
        let fm = map(&xm);
        let width = xp[j] - xm[j];
        if row_sums.is_empty() {
            row_sums = vec![T::zero(); fp.len()];
        }
        for (r, s) in row_sums.iter_mut().enumerate() {
            *s += ((fp[r] - fm[r]) / width).abs();
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    row_sums.into_iter().fold(T::zero(), T::max)
}

/// Sampled upper Lipschitz constant (∞-norms) of `map` on `domain`.
///
/// Maximum of chord quotients over a Latin-hypercube pair set and of the
/// finite-difference Jacobian norm at every sample point and box corner.
/// This is a lower estimate of the true constant.
pub fn estimate_lip_upper<T, F>(map: F, domain: &BoxDomain<T>, samples: usize, seed: u64) -> Result<T>
where
    T: Scalar,
    F: Fn(&[T]) -> Vec<T>,
{
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = domain.latin_hypercube(samples, &mut rng);
    let mut partners = points.clone();
    partners.shuffle(&mut rng);

    let mut best = T::zero();
    for (p, q) in points.iter().zip(&partners) {
        let dx = inf_dist(p, q);
        if dx > T::zero() {
            best = best.max(inf_dist(&map(p), &map(q)) / dx);
        }
    }
    points.extend(domain.corners());
    for p in &points {
        best = best.max(fd_jacobian_inf_norm(&map, p));
    }
    Ok(best)
}

/// Sampled lower Lipschitz constant with the pair attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerLipschitz<T> {
    pub value: T,
    pub witness: (Vec<T>, Vec<T>),
}

pub(crate) fn sampled_lower<T: Scalar>(
    model: &PlantModel<T>,
    subset: &SubsetIndex,
    pairs: &PairSet<T>,
) -> LowerLipschitz<T> {
    let (value, k) = pairs.min_ratio(|x| model.phi_eval(subset, x));
    let witness = pairs
        .pairs()
        .get(k)
        .cloned()
        .unwrap_or_else(|| (Vec::new(), Vec::new()));
    LowerLipschitz { value, witness }
}

/// Sampled `inf ‖Φ_J(x₁) − Φ_J(x₂)‖_∞ / ‖x₁ − x₂‖_∞` over the state box.
/// A value at or below [`DEGENERATE_TOL`] is reported as a degenerate subset.
pub fn estimate_lip_lower<T: Scalar>(
    model: &PlantModel<T>,
    subset: &SubsetIndex,
    samples: usize,
    seed: u64,
) -> Result<LowerLipschitz<T>> {
    let domain = BoxDomain::cube(model.n, model.m_x);
    let pairs = PairSet::generate(&domain, samples, seed);
    let lower = sampled_lower(model, subset, &pairs);
    if !(lower.value > T::lit(DEGENERATE_TOL)) {
        return Err(Error::DegenerateSubset {
            subset: subset.to_string(),
            value: lower.value.as_f64(),
        });
    }
    Ok(lower)
}

/// Lipschitz data the detector and estimator consume.
#[derive(Debug, Clone)]
pub struct LipschitzEstimates<T> {
    /// Sampled `⎯Lip(Φ)` on the state box, when sampled.
    pub lip_upper_phi: Option<T>,
    /// Sampled `⎯Lip(Φ_I'^{-1})` on `𝒵^I`, per registered subset.
    pub lip_upper_psi: Vec<(SubsetIndex, T)>,
    /// Sampled `‗Lip(Φ_J)` for the subsets entering the error bound.
    pub lip_lower: Vec<(SubsetIndex, T)>,
    /// Threshold coefficient per detection subset.
    pub threshold_coeff: Vec<(SubsetIndex, T)>,
}

impl<T: Scalar> LipschitzEstimates<T> {
    /// Samples every constant. `lower_subsets` are the `J` of the error-bound
    /// denominator; `coeffs` are the configured threshold coefficients, one
    /// per inverse in `inverses`.
    pub fn sample(
        model: &PlantModel<T>,
        inverses: &[&LeftInverse<T>],
        coeffs: &[T],
        lower_subsets: &[SubsetIndex],
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        assert_eq!(inverses.len(), coeffs.len(), "one coefficient per inverse");
        let state_box = BoxDomain::cube(model.n, model.m_x);
        let full = model.full_subset();
        let lip_upper_phi =
            estimate_lip_upper(|x| model.phi_eval(&full, x), &state_box, samples, seed)?;

        let mut lip_upper_psi = Vec::with_capacity(inverses.len());
        for inv in inverses {
            let zbox = BoxDomain::cube(inv.subset().total(), inv.m_z());
            let l = estimate_lip_upper(|z| inv.inner(z), &zbox, samples, seed)?;
            lip_upper_psi.push((inv.subset().clone(), l));
        }

        let pairs = PairSet::generate(&state_box, samples, seed);
        let lip_lower = lower_subsets
            .iter()
            .map(|j| (j.clone(), sampled_lower(model, j, &pairs).value))
            .collect();

        let threshold_coeff = inverses
            .iter()
            .zip(coeffs)
            .map(|(inv, c)| (inv.subset().clone(), *c))
            .collect();

        Ok(Self {
            lip_upper_phi: Some(lip_upper_phi),
            lip_upper_psi,
            lip_lower,
            threshold_coeff,
        })
    }

    /// Only the lower constants, on a shared pair set, with the given
    /// coefficients. Upper constants are left unsampled.
    pub fn for_bound(
        model: &PlantModel<T>,
        threshold_coeff: Vec<(SubsetIndex, T)>,
        lower_subsets: &[SubsetIndex],
        samples: usize,
        seed: u64,
    ) -> Self {
        let pairs = PairSet::generate(&BoxDomain::cube(model.n, model.m_x), samples, seed);
        Self {
            lip_upper_phi: None,
            lip_upper_psi: Vec::new(),
            lip_lower: lower_subsets
                .iter()
                .map(|j| (j.clone(), sampled_lower(model, j, &pairs).value))
                .collect(),
            threshold_coeff,
        }
    }

    /// Replaces every sampled lower constant with a certified value.
    pub fn with_lower_override(mut self, value: T) -> Self {
        for (_, v) in &mut self.lip_lower {
            *v = value;
        }
        self
    }

    /// `min_J ‗Lip(Φ_J)`; zero when no subsets were sampled.
    pub fn min_lower(&self) -> T {
        self.lip_lower
            .iter()
            .map(|(_, v)| *v)
            .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.min(v))))
            .unwrap_or(T::zero())
    }

    pub fn max_coeff(&self) -> T {
        self.threshold_coeff
            .iter()
            .fold(T::zero(), |acc, (_, c)| acc.max(*c))
    }

    pub fn coeff_for(&self, subset: &SubsetIndex) -> Option<T> {
        self.threshold_coeff
            .iter()
            .find(|(s, _)| s == subset)
            .map(|(_, c)| *c)
    }

    /// Sampled version of the conservative coefficient
    /// `1 + ⎯Lip(Φ)·max_I ⎯Lip(Φ_I'^{-1})`; `None` if the upper constants
    /// were not sampled.
    pub fn sampled_surrogate_coeff(&self) -> Option<T> {
        let psi = self
            .lip_upper_psi
            .iter()
            .fold(T::zero(), |acc, (_, v)| acc.max(*v));
        self.lip_upper_phi.map(|phi| T::one() + phi * psi)
    }
}
