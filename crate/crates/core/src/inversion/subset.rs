use std::fmt;

use crate::error::{Error, Result};

/// Ordered set of sensor indices `I ⊂ [p]` together with the block layout of
/// the stacked observable coordinates it selects.
///
/// Indices are zero-based internally; `Display` prints them one-based to match
/// the usual `{1, …, p}` labelling.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetIndex {
    indices: Vec<usize>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl SubsetIndex {
    /// `indices` must be nonempty, strictly increasing and `< dims_all.len()`.
    pub fn new(indices: Vec<usize>, dims_all: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSubset("empty index set".into()));
        }
        if let Some(bad) = indices.iter().find(|&&i| i >= dims_all.len()) {
            return Err(Error::InvalidSubset(format!(
                "sensor {} out of range 1..={}",
                bad + 1,
                dims_all.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(format!(
                "indices not strictly increasing: {:?}",
                indices.iter().map(|i| i + 1).collect::<Vec<_>>()
            )));
        }
        let dims: Vec<usize> = indices.iter().map(|&i| dims_all[i]).collect();
        let total = dims.iter().sum();

        let mut offsets = Vec::with_capacity(dims_all.len());
        let mut acc = 0;
        for d in dims_all {
            offsets.push(acc);
            acc += d;
        }
        Ok(Self {
            indices,
            dims,
            offsets,
            total,
        })
    }

    /// Same as [`SubsetIndex::new`] but with one-based sensor labels.
    pub fn from_one_based(labels: &[usize], dims_all: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::InvalidSubset("sensor labels start at 1".into()));
        }
        Self::new(labels.iter().map(|l| l - 1).collect(), dims_all)
    }

    /// All sensors `[p]`.
    pub fn full(dims_all: &[usize]) -> Self {
        Self::new((0..dims_all.len()).collect(), dims_all).expect("full set is valid")
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    /// `𝒩_I`, the block sizes of the selected sensors.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `Σ_{i∈I} n_i`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, sensor: usize) -> bool {
        self.indices.binary_search(&sensor).is_ok()
    }

    pub fn is_subset_of(&self, other: &SubsetIndex) -> bool {
        self.indices.iter().all(|i| other.contains(*i))
    }

    /// `π_I`: selects the blocks of `I` out of a full stacked vector in `ℝ^𝒩`.
    pub fn project<T: Copy>(&self, stack: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.total);
        for (&i, &d) in self.indices.iter().zip(&self.dims) {
            let o = self.offsets[i];
            out.extend_from_slice(&stack[o..o + d]);
        }
        out
    }

    /// Splits a vector in `ℝ^{𝒩_I}` into its per-sensor blocks.
    pub fn blocks<'a, T>(&self, z_subset: &'a [T]) -> Vec<&'a [T]> {
        let mut out = Vec::with_capacity(self.len());
        let mut start = 0;
        for &d in &self.dims {
            out.push(&z_subset[start..start + d]);
            start += d;
        }
        out
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}


/// All `r`-element subsets of `{0, …, n-1}` in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        // rightmost position that can still advance
        let Some(pos) = (0..r).rev().find(|&k| idx[k] != k + n - r) else {
            return out;
        };
        idx[pos] += 1;
        for k in pos + 1..r {
            idx[k] = idx[k - 1] + 1;
        }
    }
}
