//! Small dense linear algebra.
//!
//! Everything here targets the desk-scale systems of this crate (dimension
//! n^2 + n + extras, with n <= 8 or so): direct LU solves with a round of
//! iterative refinement, a cyclic Jacobi eigensolver for symmetric matrices,
//! and a spectral-radius bound for nonnegative matrices. No sparsity, no
//! blocking, no BLAS.

use crate::error::Error;
use crate::scalar::{real, to_f64, Real};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// A^T x without forming the transpose.
    pub fn matvec_t(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.rows, x.len(), "matvec_t dimension mismatch");
        let mut y = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += self[(i, j)] * xi;
            }
        }
        y
    }

    pub fn matmul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Largest entrywise |a - b|.
    pub fn max_abs_diff(&self, other: &Mat<T>) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Maximum row sum of absolute values (operator infinity norm).
    pub fn norm_inf(&self) -> T {
        (0..self.rows).fold(T::zero(), |acc, i| {
            acc.max(self.row(i).iter().map(|v| v.abs()).sum())
        })
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

pub fn norm_inf_vec<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

pub fn norm2<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

pub fn sub_vec<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(&a, &b)| a - b).collect()
}

/// LU factorization with partial pivoting.
pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    /// Factorize a square matrix. Fails on an exactly/near-exactly singular pivot.
    pub fn factor(a: &Mat<T>, context: &'static str) -> Result<Self, Error> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = T::epsilon() * real::<T>(1e-3) * a.max_abs().max(T::one());
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny {
                return Err(Error::Singular { context });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    let delta = factor * lu[(k, j)];
                    lu[(i, j)] -= delta;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    /// Rough condition estimate from the pivot spread. Only used for
    /// diagnostics in non-convergence reports.
    pub fn condition_estimate(&self) -> T {
        let n = self.lu.rows;
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for i in 0..n {
            let p = self.lu[(i, i)].abs();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        if lo == T::zero() {
            T::infinity()
        } else {
            hi / lo
        }
    }
}

/// Solve `a x = b` by LU with partial pivoting plus two rounds of iterative
/// refinement. Refinement keeps the forward error near machine precision for
/// the badly-scaled systems that appear at large penalty weights.
pub fn solve<T: Real>(a: &Mat<T>, b: &[T], context: &'static str) -> Result<Vec<T>, Error> {
    let lu = Lu::factor(a, context)?;
    let mut x = lu.solve(b);
    for _ in 0..2 {
        let ax = a.matvec(&x);
        let resid: Vec<T> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
        if norm_inf_vec(&resid) == T::zero() {
            break;
        }
        let dx = lu.solve(&resid);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += *di;
        }
    }
    Ok(x)
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
pub fn sym_eigenvalues<T: Real>(a: &Mat<T>) -> Vec<T> {
    assert_eq!(a.rows, a.cols, "eigenvalues need a square matrix");
    let n = a.rows;
    let mut m = a.clone();
    // Work on the symmetrized copy so tiny asymmetries cannot stall rotations.
    for i in 0..n {
        for j in 0..i {
            let avg = (m[(i, j)] + m[(j, i)]) / real(2.0);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let scale = m.max_abs().max(T::one());
    let tol = T::epsilon() * scale;
    for _sweep in 0..60 {
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * real(1e-3) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (real::<T>(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues must be comparable"));
    eigs
}

/// Singular values of a rectangular matrix via the eigenvalues of A A^T
/// (cheap because all our operators are short and wide), descending.
pub fn singular_values<T: Real>(a: &Mat<T>) -> Vec<T> {
    let gram = a.matmul(&a.transpose());
    let mut svals: Vec<T> = sym_eigenvalues(&gram)
        .into_iter()
        .map(|l| l.max(T::zero()).sqrt())
        .collect();
    svals.reverse();
    svals
}

/// Spectral radius of an entrywise-nonnegative matrix.
///
/// Uses the characterization: for `l >= 0`, `s > spr(l)` exactly when
/// `s I - l` has all leading principal minors positive (it is then a
/// nonsingular M-matrix). Bisection on `s` is robust for reducible and
/// non-symmetric matrices where the power method can stall.
pub fn spectral_radius_nonneg<T: Real>(l: &Mat<T>) -> T {
    assert_eq!(l.rows, l.cols);
    debug_assert!(l.data.iter().all(|&v| v >= T::zero()));
    let n = l.rows;
    let mut hi = l.norm_inf();
    if hi == T::zero() {
        return T::zero();
    }
    hi *= T::one() + real(1e-12);
    let mut lo = T::zero();
    let all_minors_positive = |s: T| -> bool {
        let mut m = Mat::from_fn(n, n, |i, j| if i == j { s - l[(i, j)] } else { -l[(i, j)] });
        for k in 0..n {
            let pivot = m[(k, k)];
            if pivot <= T::zero() {
                return false;
            }
            for i in k + 1..n {
                let factor = m[(i, k)] / pivot;
                for j in k + 1..n {
                    let delta = factor * m[(k, j)];
                    m[(i, j)] -= delta;
                }
            }
        }
        true
    };
    for _ in 0..200 {
        if hi - lo <= real::<T>(1e-14) * hi.max(T::one()) {
            break;
        }
        let mid = (lo + hi) / real(2.0);
        if all_minors_positive(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) / real(2.0)
}

/// Pretty-print helper for diagnostics.
pub fn fmt_vec<T: Real>(x: &[T]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{:.6}", to_f64(*v))).collect();
    format!("[{}]", parts.join(", "))
}
