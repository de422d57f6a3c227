//! Central finite differences for quadratic objectives.
//!
//! The objective is exactly quadratic, so central differences carry no
//! truncation error at all; the only error source is roundoff. That drives
//! the step choices: a small step (1e-6) is best for first derivatives,
//! while second differences divide by h^2 and need a much larger step
//! (1e-2) to keep cancellation noise around 1e-12 instead of 1e-4.

use crate::linalg::Mat;
use crate::scalar::{real, Real};

pub const GRADIENT_STEP: f64 = 1e-6;
pub const HESSIAN_STEP: f64 = 1e-2;

/// Central-difference gradient with the default first-derivative step.
pub fn gradient<T: Real>(f: impl Fn(&[T]) -> T, x: &[T]) -> Vec<T> {
    gradient_with_step(f, x, real(GRADIENT_STEP))
}

pub fn gradient_with_step<T: Real>(f: impl Fn(&[T]) -> T, x: &[T], h: T) -> Vec<T> {
    let mut xp = x.to_vec();
    let two_h = real::<T>(2.0) * h;
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            xp[i] = xi + h;
            let up = f(&xp);
            xp[i] = xi - h;
            let dn = f(&xp);
            xp[i] = xi;
            (up - dn) / two_h
        })
        .collect()
}

/// Central-difference Hessian (four-point mixed formula), symmetrized.
pub fn hessian<T: Real>(f: impl Fn(&[T]) -> T, x: &[T]) -> Mat<T> {
    hessian_with_step(f, x, real(HESSIAN_STEP))
}

pub fn hessian_with_step<T: Real>(f: impl Fn(&[T]) -> T, x: &[T], h: T) -> Mat<T> {
    let n = x.len();
    let mut m = Mat::zeros(n, n);
    let mut xp = x.to_vec();
    let h2 = h * h;
    let four_h2 = real::<T>(4.0) * h2;
    let two = real::<T>(2.0);
    let f0 = f(x);
    for i in 0..n {
        let xi = x[i];
        xp[i] = xi + h;
        let up = f(&xp);
        xp[i] = xi - h;
        let dn = f(&xp);
        xp[i] = xi;
        m[(i, i)] = (up - two * f0 + dn) / h2;
        for j in i + 1..n {
            let xj = x[j];
            xp[i] = xi + h;
            xp[j] = xj + h;
            let pp = f(&xp);
            xp[j] = xj - h;
            let pm = f(&xp);
            xp[i] = xi - h;
            let mm = f(&xp);
            xp[j] = xj + h;
            let mp = f(&xp);
            xp[i] = xi;
            xp[j] = xj;
            let v = (pp - pm - mp + mm) / four_h2;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_a_known_quadratic() {
        // f(x, y) = 3x^2 - 2xy + 5y^2 + 4x - y + 7
        let f = |x: &[f64]| {
            3.0 * x[0] * x[0] - 2.0 * x[0] * x[1] + 5.0 * x[1] * x[1] + 4.0 * x[0] - x[1] + 7.0
        };
        let x = [0.3, -1.2];
        let g = gradient(f, &x);
        assert!((g[0] - (6.0 * x[0] - 2.0 * x[1] + 4.0)).abs() < 1e-8);
        assert!((g[1] - (-2.0 * x[0] + 10.0 * x[1] - 1.0)).abs() < 1e-8);
        let h = hessian(f, &x);
        assert!((h[(0, 0)] - 6.0).abs() < 1e-10);
        assert!((h[(0, 1)] + 2.0).abs() < 1e-10);
        assert!((h[(1, 1)] - 10.0).abs() < 1e-10);
    }
}
