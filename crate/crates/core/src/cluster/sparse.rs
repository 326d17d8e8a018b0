use std::cmp::Ordering;

use crate::kg::RelationId;

/// Sorted sparse vector of non-negative weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVec(Vec<(u32, f64)>);

impl SparseVec {
    /// L2-normalised indicator vector of a binary support.
    pub fn unit_binary(dims: &[RelationId]) -> Self {
        if dims.is_empty() {
            return SparseVec::default();
        }
        let w = 1.0 / (dims.len() as f64).sqrt();
        SparseVec(dims.iter().map(|r| (r.0, w)).collect())
    }

    /// Builds from arbitrary pairs; duplicates are summed.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut out: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (d, v) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == d => last.1 += v,
                _ => out.push((d, v)),
            }
        }
        SparseVec(out)
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_dim(&self) -> Option<u32> {
        self.0.last().map(|p| p.0)
    }

    pub fn add(&self, other: &SparseVec) -> SparseVec {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        SparseVec(out)
    }

    pub fn dot(&self, other: &SparseVec) -> f64 {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub(crate) fn write_dense(&self, row: &mut [f64]) {
        for &(d, v) in &self.0 {
            row[d as usize] += v;
        }
    }
}

/// Average linkage from cluster sums of unit vectors:
/// `<ΣA, ΣB> / (|A|·|B|)` equals the mean pairwise cosine.
pub(crate) fn linkage_from_sums(sum_a: f64, size_a: usize, size_b: usize) -> f64 {
    clamp_linkage(sum_a / (size_a as f64 * size_b as f64))
}

pub(crate) fn clamp_linkage(x: f64) -> f64 {
    if x >= 1.0 - 1e-12 {
        1.0
    } else if x <= 0.0 {
        0.0
    } else {
        x
    }
}
