//! Contract sensitivities and their stacked-vector representation.

use crate::linalg::Mat;
use crate::scalar::Real;

/// A candidate (or optimal) sensitivity pair.
///
/// Row `i` of `z_q` holds contract i's loadings on signals 1..n, so the
/// diagonal entry is the own-signal loading that drives agent i's action;
/// `z_s[i]` is contract i's tilt on the traded factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivities<T> {
    pub z_q: Mat<T>,
    pub z_s: Vec<T>,
}

impl<T: Real> Sensitivities<T> {
    pub fn zeros(n: usize) -> Self {
        Sensitivities {
            z_q: Mat::zeros(n, n),
            z_s: vec![T::zero(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.z_s.len()
    }

    /// Position of `z_q[i][j]` in the stacked vector. The matrix block is
    /// stacked column by column, followed by the factor tilts; every linear
    /// system in this crate shares this layout.
    #[inline]
    pub fn q_index(n: usize, i: usize, j: usize) -> usize {
        j * n + i
    }

    /// Position of `z_s[k]` in the stacked vector.
    #[inline]
    pub fn s_index(n: usize, k: usize) -> usize {
        n * n + k
    }

    /// Stack into a single vector of length n^2 + n.
    pub fn to_stacked(&self) -> Vec<T> {
        let n = self.n();
        let mut x = vec![T::zero(); n * n + n];
        for j in 0..n {
            for i in 0..n {
                x[Self::q_index(n, i, j)] = self.z_q[(i, j)];
            }
        }
        x[n * n..].copy_from_slice(&self.z_s);
        x
    }

    pub fn from_stacked(n: usize, x: &[T]) -> Self {
        assert_eq!(x.len(), n * n + n, "stacked vector has wrong length");
        let z_q = Mat::from_fn(n, n, |i, j| x[Self::q_index(n, i, j)]);
        let z_s = x[n * n..].to_vec();
        Sensitivities { z_q, z_s }
    }

    /// Column sums of the signal-loading matrix (total loading per signal).
    pub fn column_sums(&self) -> Vec<T> {
        let n = self.n();
        (0..n)
            .map(|j| (0..n).map(|i| self.z_q[(i, j)]).sum())
            .collect()
    }

    /// Aggregate factor tilt across contracts.
    pub fn total_tilt(&self) -> T {
        self.z_s.iter().copied().sum()
    }

    /// Largest entrywise difference across both blocks.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let q = self.z_q.max_abs_diff(&other.z_q);
        let s = self
            .z_s
            .iter()
            .zip(&other.z_s)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
        q.max(s)
    }
}
