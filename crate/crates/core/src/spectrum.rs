//! Morse index via the lowest eigenvalues of the linearized operator
//! L_u = −εΔ + W''(u)/ε.
//!
//! The solver is a block Rayleigh–Ritz iteration in the style of LOBPCG:
//! the subspace [X, R, P] (current block, preconditioned residuals, and
//! previous search directions) is orthonormalized, the operator is
//! projected, and the small dense problem is solved by cyclic Jacobi. Only
//! operator applications are needed — the matrix is never materialized.
//!
//! Eigenvalues inside (−threshold, 0) count as zero modes, not negative:
//! translational zero modes on the torus sit numerically near 0 and must
//! not inflate the index. The report flags whenever that dead zone is hit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::hessian_apply;
use crate::error::{AcError, Result};
use crate::geometry::{fast_marching_signed, ScalarField};
use crate::linalg::{dot, jacobi_eigh};
use crate::potential::DoubleWell;

/// Result of a lowest-eigenpair computation.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Lowest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// ‖Lφ − λφ‖/‖φ‖ per eigenpair.
    pub residual_norms: Vec<f64>,
    pub eigenvectors: Vec<ScalarField>,
    /// Count of eigenvalues below −index_threshold.
    pub morse_index: usize,
    /// Dead-zone half width (default 1e−8/ε).
    pub index_threshold: f64,
    /// Set when an eigenvalue landed inside (−threshold, 0).
    pub dead_zone_hit: bool,
}

/// Gershgorin-flavored magnitude of L_u (used to scale tolerances).
pub fn operator_scale(u: &ScalarField, well: &DoubleWell, eps: f64) -> f64 {
    let d = u.domain();
    let lap = eps
        * (0..d.dim())
            .map(|a| 4.0 / d.spacing(a).powi(2))
            .sum::<f64>();
    let pot = u
        .values()
        .iter()
        .fold(0.0f64, |m, &v| m.max(well.ddw(v).abs()))
        / eps;
    lap + pot
}

const MAX_BLOCK_ITERS: usize = 3000;
const RESIDUAL_FACTOR: f64 = 1e-6;

/// Lowest k eigenpairs of −εΔ + W''(u)/ε by seeded block iteration.
pub fn lowest_eigenpairs(
    u: &ScalarField,
    well: &DoubleWell,
    eps: f64,
    k: usize,
    seed: u64,
) -> Result<SpectrumReport> {
    if k < 2 {
        return Err(AcError::InvalidParams("need k >= 2 eigenpairs".into()));
    }
    let n = u.len();
    if k * 8 >= n {
        return Err(AcError::InvalidParams(format!(
            "k = {k} too large for {n} cells"
        )));
    }
    let apply = |v: &[f64]| -> Vec<f64> {
        let phi = ScalarField::new(*u.domain(), v.to_vec()).expect("finite");
        hessian_apply(u, well, eps, &phi)
            .expect("same domain")
            .values()
            .to_vec()
    };
    let scale = operator_scale(u, well, eps);
    let tol = RESIDUAL_FACTOR * scale;
    let (vals, vecs, residuals) = block_lowest(&apply, n, k, seed, tol, MAX_BLOCK_ITERS)?;

    let index_threshold = 1e-8 / eps;
    let morse_index = vals.iter().filter(|&&l| l < -index_threshold).count();
    let dead_zone_hit = vals
        .iter()
        .any(|&l| l > -index_threshold && l < 0.0);
    let eigenvectors = vecs
        .into_iter()
        .map(|v| ScalarField::new(*u.domain(), v).expect("finite"))
        .collect();
    Ok(SpectrumReport {
        eigenvalues: vals,
        residual_norms: residuals,
        eigenvectors,
        morse_index,
        index_threshold,
        dead_zone_hit,
    })
}

/// Block Rayleigh–Ritz on an abstract symmetric operator; returns the k
/// smallest (values, vectors, residual norms).
fn block_lowest(
    apply: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    n: usize,
    k: usize,
    seed: u64,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let nb = (k + 2).min(n / 4).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<f64>> = (0..nb)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut x);
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut best_residuals = vec![f64::INFINITY; k];

    for _ in 0..max_iters {
        let ax: Vec<Vec<f64>> = x.par_iter().map(|c| apply(c)).collect();
        let lam: Vec<f64> = x.iter().zip(&ax).map(|(c, a)| dot(c, a)).collect();
        let r: Vec<Vec<f64>> = x
            .iter()
            .zip(&ax)
            .zip(&lam)
            .map(|((c, a), &l)| a.iter().zip(c).map(|(ai, ci)| ai - l * ci).collect())
            .collect();
        let rnorm: Vec<f64> = r.iter().map(|c| dot(c, c).sqrt()).collect();
        best_residuals = rnorm[..k].to_vec();
        if rnorm[..k].iter().all(|&v| v <= tol) {
            let mut pairs: Vec<(f64, usize)> =
                lam.iter().cloned().zip(0..nb).map(|(l, i)| (l, i)).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let vals = pairs.iter().take(k).map(|p| p.0).collect();
            let vecs = pairs.iter().take(k).map(|&(_, i)| x[i].clone()).collect();
            let res = pairs.iter().take(k).map(|&(_, i)| rnorm[i]).collect();
            return Ok((vals, vecs, res));
        }

        // Subspace [X, R, P] -> orthonormal basis S.
        let mut s: Vec<Vec<f64>> = Vec::with_capacity(3 * nb);
        s.extend(x.iter().cloned());
        s.extend(r);
        s.extend(p.iter().cloned());
        orthonormalize(&mut s);
        let m = s.len();

        let as_: Vec<Vec<f64>> = s.par_iter().map(|c| apply(c)).collect();
        let mut t = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let v = dot(&s[i], &as_[j]);
                t[i][j] = v;
                t[j][i] = v;
            }
        }
        let (_, tvecs) = jacobi_eigh(&t);

        let old_x = x.clone();
        x = (0..nb)
            .map(|col| {
                let y = &tvecs[col];
                let mut out = vec![0.0; n];
                for (ci, basis) in y.iter().zip(&s) {
                    for (o, b) in out.iter_mut().zip(basis) {
                        *o += ci * b;
                    }
                }
                out
            })
            .collect();
        // Direction block: new X minus its projection onto the old X.
        p = x
            .iter()
            .map(|xi| {
                let mut d = xi.clone();
                for ox in &old_x {
                    let c = dot(&d, ox);
                    for (v, o) in d.iter_mut().zip(ox) {
                        *v -= c * o;
                    }
                }
                d
            })
            .collect();
        orthonormalize(&mut p);
        orthonormalize(&mut x);
    }
    Err(AcError::EigenNonConvergence(best_residuals))
}

fn orthonormalize(cols: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut c in cols.drain(..) {
        for b in &out {
            let coef = dot(&c, b);
            for (x, y) in c.iter_mut().zip(b) {
                *x -= coef * y;
            }
        }
        // Second pass keeps the basis orthogonal at roundoff level.
        for b in &out {
            let coef = dot(&c, b);
            for (x, y) in c.iter_mut().zip(b) {
                *x -= coef * y;
            }
        }
        let nrm = dot(&c, &c).sqrt();
        if nrm > 1e-10 {
            for x in &mut c {
                *x /= nrm;
            }
            out.push(c);
        }
    }
    *cols = out;
}

/// Minimal Rayleigh quotient of the second variation over test functions
/// supported in the masked subdomain.
///
/// The mask (values > 1/2 are inside) is turned into a squared-cosine
/// cutoff ramping over 4·max hᵢ from the mask boundary; test functions are
/// multiples of the cutoff, which reduces to the smallest eigenvalue of the
/// operator restricted to the cutoff's support.
pub fn stability_on_subdomain(
    u: &ScalarField,
    well: &DoubleWell,
    eps: f64,
    mask: &ScalarField,
) -> Result<f64> {
    crate::geometry::same_domain(u, mask)?;
    let d = *u.domain();
    let inside: Vec<bool> = mask.values().iter().map(|&v| v > 0.5).collect();
    let inside_count = inside.iter().filter(|&&b| b).count();
    if inside_count == 0 {
        return Err(AcError::EmptyMask);
    }
    // Distance into the mask; whole-mask (or whole-complement) cases skip
    // the ramp.
    let ramp_width = 4.0 * d.max_spacing();
    let cutoff: Vec<f64> = if inside_count == mask.len() {
        vec![1.0; mask.len()]
    } else {
        let indicator = ScalarField::new(
            d,
            inside.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect(),
        )?;
        let dist = fast_marching_signed(&indicator, 0.0)?;
        dist.values()
            .iter()
            .map(|&v| {
                if v <= 0.0 {
                    0.0
                } else if v >= ramp_width {
                    1.0
                } else {
                    let s = (std::f64::consts::FRAC_PI_2 * v / ramp_width).sin();
                    s * s
                }
            })
            .collect()
    };
    let support: Vec<usize> = (0..mask.len()).filter(|&i| cutoff[i] > 0.0).collect();
    if support.is_empty() {
        return Err(AcError::EmptyMask);
    }
    let m = support.len();
    let apply = |v: &[f64]| -> Vec<f64> {
        // Zero-extend, apply L, restrict: the principal submatrix of L on
        // the support (symmetric).
        let mut full = vec![0.0; mask.len()];
        for (slot, &val) in support.iter().zip(v) {
            full[*slot] = val;
        }
        let phi = ScalarField::new(d, full).expect("finite");
        let lphi = hessian_apply(u, well, eps, &phi).expect("same domain");
        support.iter().map(|&i| lphi.values()[i]).collect()
    };
    let scale = operator_scale(u, well, eps);
    if m <= 24 {
        // Tiny supports: dense solve.
        let mut a = vec![vec![0.0; m]; m];
        for j in 0..m {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            let col = apply(&e);
            for i in 0..m {
                a[i][j] = col[i];
            }
        }
        for i in 0..m {
            for j in 0..i {
                let v = 0.5 * (a[i][j] + a[j][i]);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        let (vals, _) = jacobi_eigh(&a);
        return Ok(vals[0]);
    }
    let (vals, _, _) = block_lowest(&apply, m, 2, 1234, RESIDUAL_FACTOR * scale, MAX_BLOCK_ITERS)?;
    Ok(vals[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{inner, TorusDomain};
    use crate::potential::Profile;
    use approx::assert_relative_eq;

    fn quartic() -> DoubleWell {
        DoubleWell::quartic()
    }

    #[test]
    fn constant_phase_spectrum() {
        // u ≡ +1 on the circle L = 1, ε = 0.1: λ_min = W''(1)/ε = 20
        // (constant mode), index 0.
        let d = TorusDomain::circle(1.0, 64).unwrap();
        let w = quartic();
        let u = ScalarField::constant(d, 1.0);
        let rep = lowest_eigenpairs(&u, &w, 0.1, 3, 7).unwrap();
        assert_relative_eq!(rep.eigenvalues[0], 20.0, max_relative = 1e-6);
        assert_eq!(rep.morse_index, 0);
    }

    #[test]
    fn gamma_constant_matches_stencil_fourier_spectrum() {
        // u ≡ 0, circle L = 1, ε = 0.1, n = 256: λ₀ = −10,
        // λ₁ = λ₂ = ε(2/h²)(1 − cos 2πh) − 10 ≈ −6.05,
        // λ₃ = λ₄ ≈ +5.79; Morse index 3.
        let n = 256;
        let d = TorusDomain::circle(1.0, n).unwrap();
        let h = d.spacing(0);
        let w = quartic();
        let eps = 0.1;
        let u = ScalarField::constant(d, 0.0);
        let rep = lowest_eigenpairs(&u, &w, eps, 6, 3).unwrap();
        let lam = |m: f64| eps * (2.0 / (h * h)) * (1.0 - (std::f64::consts::TAU * m * h).cos()) - 10.0;
        let expect = [-10.0, lam(1.0), lam(1.0), lam(2.0), lam(2.0), lam(3.0)];
        for (got, want) in rep.eigenvalues.iter().zip(expect) {
            assert_relative_eq!(got, &want, epsilon = 2e-4 * 20.0);
        }
        assert_relative_eq!(rep.eigenvalues[1], -6.0523564, epsilon = 1e-3);
        assert_relative_eq!(rep.eigenvalues[3], 5.7881964, epsilon = 1e-3);
        assert_eq!(rep.morse_index, 3);
    }

    #[test]
    fn rayleigh_quotient_consistency_and_symmetry() {
        let d = TorusDomain::circle(4.0, 128).unwrap();
        let w = quartic();
        let eps = 0.2;
        let p = Profile::standard(&w).unwrap();
        let u = ScalarField::from_fn(d, |x| {
            p.eval((x[0] - 1.0) / eps) * (-p.eval((x[0] - 3.0) / eps))
        });
        let rep = lowest_eigenpairs(&u, &w, eps, 4, 11).unwrap();
        for (lam, phi) in rep.eigenvalues.iter().zip(&rep.eigenvectors) {
            let q = inner(phi, &hessian_apply(&u, &w, eps, phi).unwrap()) / inner(phi, phi);
            assert_relative_eq!(q, *lam, max_relative = 1e-8);
        }
        // Operator symmetry on the eigenvector pairs.
        let a = &rep.eigenvectors[0];
        let b = &rep.eigenvectors[1];
        let lhs = inner(a, &hessian_apply(&u, &w, eps, b).unwrap());
        let rhs = inner(b, &hessian_apply(&u, &w, eps, a).unwrap());
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        // Eigenvalues ascending.
        for pair in rep.eigenvalues.windows(2) {
            assert!(pair[0] <= pair[1] + 1e-12);
        }
    }

    #[test]
    fn subdomain_stability_basics() {
        let d = TorusDomain::circle(20.0, 256).unwrap();
        let w = quartic();
        let eps = 0.5;
        // Pure phase: positive quotient on any mask.
        let u1 = ScalarField::constant(d, 1.0);
        let mask = ScalarField::from_fn(d, |x| if x[0] < 8.0 { 1.0 } else { 0.0 });
        let q = stability_on_subdomain(&u1, &w, eps, &mask).unwrap();
        assert!(q > 0.0);

        // Two-kink (solved, so the translation modes sit at their pinned
        // near-zero values): disjoint arc masks, each containing one kink;
        // at most one mask can be unstable (index ≤ 1 forces stability in
        // at least one of any disjoint pair).
        let p = Profile::standard(&w).unwrap();
        let ansatz = ScalarField::from_fn(d, |x| {
            p.eval((x[0] - 5.0) / eps) * (-p.eval((x[0] - 15.0) / eps))
        });
        let params = crate::minmax::SolverParams::default();
        let (u, _) =
            crate::minmax::refine_to_critical(&ansatz, &w, eps, params.saddle_tol(&d), &params)
                .unwrap();
        let mask1 = ScalarField::from_fn(d, |x| if (2.0..8.0).contains(&x[0]) { 1.0 } else { 0.0 });
        let mask2 =
            ScalarField::from_fn(d, |x| if (12.0..18.0).contains(&x[0]) { 1.0 } else { 0.0 });
        let q1 = stability_on_subdomain(&u, &w, eps, &mask1).unwrap();
        let q2 = stability_on_subdomain(&u, &w, eps, &mask2).unwrap();
        assert!(
            (q1 >= -1e-10) || (q2 >= -1e-10),
            "both masks unstable: {q1:.3e}, {q2:.3e}"
        );

        // Shrinking the mask never decreases the minimal quotient.
        let smaller =
            ScalarField::from_fn(d, |x| if (3.0..7.0).contains(&x[0]) { 1.0 } else { 0.0 });
        let q_small = stability_on_subdomain(&u, &w, eps, &smaller).unwrap();
        assert!(q_small >= q1 - 1e-10);

        // Empty mask errors.
        let empty = ScalarField::constant(d, 0.0);
        assert!(matches!(
            stability_on_subdomain(&u, &w, eps, &empty),
            Err(AcError::EmptyMask)
        ));
    }
}
