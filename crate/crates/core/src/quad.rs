//! Adaptive Simpson quadrature for the 1-D integrals behind σ, Ψ and the
//! profile oracles.

use crate::error::{AcError, Result};

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut achieved = 0.0;
    let v = recurse(
        f, a, b, fa, fm, fb, whole, tol, max_depth, &mut achieved,
    );
    if achieved > tol * 8.0 {
        return Err(AcError::QuadratureNonConvergence {
            achieved,
            requested: tol,
        });
    }
    Ok(v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    achieved: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || depth == 0 {
        if depth == 0 {
            *achieved = achieved.max(err.abs() / 15.0);
        }
        return left + right + err / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, achieved)
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, achieved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = adaptive_simpson(&|x| x * x * x - x, -1.0, 1.0, 1e-14, 40).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn integrates_sine() {
        let v = adaptive_simpson(&|x| x.sin(), 0.0, PI, 1e-12, 50).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-11);
    }
}
