//! Small internal linear-algebra kernels: MINRES for the symmetric
//! (possibly indefinite) Newton systems, and a cyclic Jacobi eigensolver
//! for the small dense Rayleigh–Ritz problems of the spectrum module.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::geometry::pairwise_dot(a, b)
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) struct MinresOutcome {
    pub x: Vec<f64>,
    #[allow(dead_code)]
    pub iterations: usize,
    /// ‖b − Ax‖ / ‖b‖ estimate at exit.
    #[allow(dead_code)]
    pub rel_residual: f64,
    /// Number of negative eigenvalues of the Lanczos tridiagonal seen so
    /// far (inertia via the LDLᵀ recurrence). Two or more independent
    /// negative-curvature directions abort the solve.
    pub negative_directions: usize,
    pub aborted_on_curvature: bool,
}

/// MINRES on a symmetric operator, x₀ = 0 (Paige–Saunders recurrences).
/// Stops on the relative residual, the iteration cap, or when the Krylov
/// tridiagonal shows ≥ `max_negative` negative eigenvalues.
pub(crate) fn minres(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
    max_negative: usize,
    neg_floor: f64,
) -> MinresOutcome {
    let n = b.len();
    let beta1 = norm(b);
    if beta1 == 0.0 {
        return MinresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
            negative_directions: 0,
            aborted_on_curvature: false,
        };
    }
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut oldb = 0.0f64;
    let mut beta = beta1;
    let mut dbar = 0.0f64;
    let mut epsln = 0.0f64;
    let mut phibar = beta1;
    let mut cs = -1.0f64;
    let mut sn = 0.0f64;

    // LDLᵀ inertia of the Lanczos tridiagonal.
    let mut d_last = f64::NAN;
    let mut negatives = 0usize;
    let mut aborted = false;
    let mut scale = 1e-300f64;

    let mut iterations = 0;
    for k in 1..=max_iter {
        iterations = k;
        let v: Vec<f64> = r2.iter().map(|&t| t / beta).collect();
        let mut y = apply(&v);
        if k >= 2 {
            let s = beta / oldb;
            for i in 0..n {
                y[i] -= s * r1[i];
            }
        }
        let alfa = dot(&v, &y);
        let s = alfa / beta;
        for i in 0..n {
            y[i] -= s * r2[i];
        }
        r1 = std::mem::replace(&mut r2, y);
        let off = if k == 1 { 0.0 } else { beta }; // T off-diagonal β_k
        oldb = beta;
        beta = norm(&r2); // β_{k+1}

        // Inertia update: d_k = α_k − β_k²/d_{k−1}. Pivots are counted as
        // negative only beyond a floor tied to the operator scale, so
        // roundoff-level pivots from numerically-zero modes do not register
        // as curvature directions.
        let d = if k == 1 {
            alfa
        } else {
            alfa - off * off / d_last
        };
        scale = scale.max(alfa.abs()).max(beta);
        if d < -neg_floor * scale {
            negatives += 1;
        }
        d_last = if d == 0.0 { 1e-300 } else { d };
        if negatives >= max_negative {
            aborted = true;
            break;
        }

        // Previous rotation applied to the new column.
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;

        // Next rotation.
        let gamma = (gbar * gbar + beta * beta).sqrt().max(1e-300);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = (0..n)
            .map(|i| (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma)
            .collect();
        for i in 0..n {
            x[i] += phi * w[i];
        }

        if phibar <= rel_tol * beta1 || beta <= 1e-300 {
            break;
        }
    }

    MinresOutcome {
        x,
        iterations,
        rel_residual: phibar / beta1,
        negative_directions: negatives,
        aborted_on_curvature: aborted,
    }
}

/// Cyclic Jacobi eigensolver for small dense symmetric matrices.
/// Returns eigenvalues ascending with matching eigenvector columns.
pub(crate) fn jacobi_eigh(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = a.len();
    let mut w: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; m]; m];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..m {
            for q in (p + 1)..m {
                off += w[p][q] * w[p][q];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&w)) {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = w[p][q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (w[q][q] - w[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (wkp, wkq) = (w[k][p], w[k][q]);
                    w[k][p] = c * wkp - s * wkq;
                    w[k][q] = s * wkp + c * wkq;
                }
                for k in 0..m {
                    let (wpk, wqk) = (w[p][k], w[q][k]);
                    w[p][k] = c * wpk - s * wqk;
                    w[q][k] = s * wpk + c * wqk;
                }
                for k in 0..m {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..m).map(|i| (w[i][i], i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let eigenvectors: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(_, col)| (0..m).map(|r| v[r][col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}


#[cfg(test)]
mod dense_check {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn minres_matches_dense_solve_on_random_symmetric() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let m = 40;
        let mut a = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let x = rng.gen_range(-1.0..1.0);
                a[i][j] = x;
                a[j][i] = x;
            }
            a[i][i] += 3.0; // keep it invertible, possibly indefinite-ish
        }
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = minres(
            |v| {
                (0..m)
                    .map(|r| (0..m).map(|c| a[r][c] * v[c]).sum())
                    .collect()
            },
            &b,
            1e-12,
            500,
            m + 1,
            1e-10,
        );
        assert!(!out.aborted_on_curvature);
        // Residual check directly.
        let mut res = 0.0f64;
        for r in 0..m {
            let av: f64 = (0..m).map(|c| a[r][c] * out.x[c]).sum();
            res += (av - b[r]) * (av - b[r]);
        }
        let bn: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(res.sqrt() / bn < 1e-9, "relative residual {}", res.sqrt() / bn);
    }
}
