//! The double-well potential W, the energy constant σ = ∫₋₁¹√(W/2), the
//! normalization Ψ with Ψ(±1) = ±σ/2, and the 1-D heteroclinic profile ψ
//! solving ψ' = √(2W(ψ)), ψ(0) = γ.
//!
//! For the standard quartic W(s) = (1−s²)²/4 everything has closed forms
//! (σ = √2/3, ψ = tanh(s/√2)); those are used as test oracles only — the
//! code paths below are generic in the well.

use crate::error::{AcError, Result};
use crate::quad::adaptive_simpson;

const SIGMA_TOL: f64 = 1e-12;
/// Resolution of the tabulated Ψ on [−1, 1].
const PSI_BIG_NODES: usize = 8193;

/// Double-well potential with wells pinned at ±1 and interior maximum γ.
///
/// Stores the polynomial coefficients (ascending), the location γ of the
/// interior critical point, the energy constant σ and a dense table of Ψ.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    coeffs: Vec<f64>,
    gamma: f64,
    sigma: f64,
    /// Ψ sampled on PSI_BIG_NODES uniform nodes over [−1, 1].
    psi_big: Vec<f64>,
}

impl DoubleWell {
    /// The standard quartic W(s) = (1 − s²)²/4.
    pub fn quartic() -> Self {
        // (1 - s²)²/4 = 1/4 - s²/2 + s⁴/4
        Self::custom(&[0.25, 0.0, -0.5, 0.0, 0.25])
            .expect("standard quartic satisfies the well assumptions")
    }

    /// A user-supplied polynomial well (coefficients ascending). The well
    /// must vanish at ±1 with W''(±1) > 0, be nonnegative, and have exactly
    /// one interior critical point γ ∈ (−1, 1).
    pub fn custom(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(AcError::InvalidPotential("bad coefficient list".into()));
        }
        let w = |s: f64| poly_eval(coeffs, s);
        let dw = |s: f64| poly_eval_deriv(coeffs, s, 1);

        for s in [-1.0, 1.0] {
            if w(s).abs() > 1e-10 {
                return Err(AcError::InvalidPotential(format!(
                    "W({s}) = {} must vanish",
                    w(s)
                )));
            }
            if poly_eval_deriv(coeffs, s, 2) <= 0.0 {
                return Err(AcError::InvalidPotential(format!(
                    "W''({s}) must be positive"
                )));
            }
        }

        // Interior critical points of W by sign changes of W' on a dense scan.
        let mut roots = Vec::new();
        let scan = 4096;
        let interior = |s: f64| s > -1.0 + 1e-9 && s < 1.0 - 1e-9;
        for i in 0..scan {
            let a = -1.0 + 2.0 * i as f64 / scan as f64;
            let b = -1.0 + 2.0 * (i + 1) as f64 / scan as f64;
            if !interior(a) || !interior(b) {
                continue;
            }
            if dw(a) == 0.0 {
                roots.push(a);
            } else if dw(a) * dw(b) < 0.0 {
                roots.push(bisect(&dw, a, b));
            }
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
        if roots.len() != 1 {
            return Err(AcError::InvalidPotential(format!(
                "expected exactly one interior critical point, found {}",
                roots.len()
            )));
        }
        let gamma = roots[0];

        // Nonnegativity and positivity away from the wells.
        for i in 1..scan {
            let s = -1.0 + 2.0 * i as f64 / scan as f64;
            if w(s) < -1e-12 {
                return Err(AcError::InvalidPotential(format!("W({s}) = {} < 0", w(s))));
            }
            if s.abs() < 1.0 - 1e-3 && w(s) <= 0.0 {
                return Err(AcError::InvalidPotential(format!(
                    "W vanishes at interior point {s}"
                )));
            }
        }

        let integrand = move |s: f64| (w(s).max(0.0) / 2.0).sqrt();
        let sigma = adaptive_simpson(&integrand, -1.0, 1.0, SIGMA_TOL, 48)?;
        if sigma <= 0.0 {
            return Err(AcError::InvalidPotential("sigma must be positive".into()));
        }

        // Cumulative table of F(t) = ∫₋₁ᵗ √(W/2), then Ψ = F − σ/2 so that
        // Ψ(±1) = ±σ/2.
        let mut psi_big = vec![0.0; PSI_BIG_NODES];
        let mut acc = 0.0;
        let dt = 2.0 / (PSI_BIG_NODES - 1) as f64;
        for i in 1..PSI_BIG_NODES {
            let a = -1.0 + (i - 1) as f64 * dt;
            let b = -1.0 + i as f64 * dt;
            // Simpson on the subinterval keeps the cumulative table at ~dt⁴.
            let m = 0.5 * (a + b);
            acc += (b - a) / 6.0 * (integrand(a) + 4.0 * integrand(m) + integrand(b));
            psi_big[i] = acc;
        }
        // Normalize the tail so the table endpoint matches σ exactly.
        let correction = sigma / acc;
        for v in &mut psi_big {
            *v = *v * correction - sigma / 2.0;
        }

        Ok(Self {
            coeffs: coeffs.to_vec(),
            gamma,
            sigma,
            psi_big,
        })
    }

    pub fn w(&self, s: f64) -> f64 {
        poly_eval(&self.coeffs, s)
    }

    pub fn dw(&self, s: f64) -> f64 {
        poly_eval_deriv(&self.coeffs, s, 1)
    }

    pub fn ddw(&self, s: f64) -> f64 {
        poly_eval_deriv(&self.coeffs, s, 2)
    }

    /// Location of the interior local maximum.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// σ = ∫₋₁¹ √(W/2), cached at construction.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Ψ(t) = ∫_{s₀}^t √(W/2) with Ψ(±1) = ±σ/2. Arguments outside [−1, 1]
    /// are clamped; the flag reports whether clamping happened.
    pub fn psi_big_checked(&self, t: f64) -> (f64, bool) {
        let clamped = !(-1.0..=1.0).contains(&t);
        let tc = t.clamp(-1.0, 1.0);
        let dt = 2.0 / (PSI_BIG_NODES - 1) as f64;
        let pos = (tc + 1.0) / dt;
        let i = (pos.floor() as usize).min(PSI_BIG_NODES - 2);
        let frac = pos - i as f64;
        let (a, b) = (self.psi_big[i], self.psi_big[i + 1]);
        // Hermite interpolation: derivative Ψ' = √(W/2) is known exactly.
        let ta = -1.0 + i as f64 * dt;
        let tb = ta + dt;
        let da = (self.w(ta).max(0.0) / 2.0).sqrt() * dt;
        let db = (self.w(tb).max(0.0) / 2.0).sqrt() * dt;
        let t2 = frac * frac;
        let t3 = t2 * frac;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * a
            + (t3 - 2.0 * t2 + frac) * da
            + (-2.0 * t3 + 3.0 * t2) * b
            + (t3 - t2) * db;
        (v, clamped)
    }

    /// Ψ(t), clamping out-of-range arguments.
    pub fn psi_big(&self, t: f64) -> f64 {
        self.psi_big_checked(t).0
    }

    /// Inverse of Ψ on [−σ/2, σ/2] (binary search on the monotone table).
    pub fn psi_big_inv(&self, w: f64) -> f64 {
        let wc = w.clamp(-self.sigma / 2.0, self.sigma / 2.0);
        let (mut lo, mut hi) = (-1.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.psi_big(mid) < wc {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// min W over [−1+δ, 1−δ]: the constant C_δ of the volume lemmas.
    /// Dense scan (257 points) plus local golden-section refinement.
    pub fn c_delta(&self, delta: f64) -> f64 {
        let lo = -1.0 + delta;
        let hi = 1.0 - delta;
        let scan = 257;
        let mut best = f64::INFINITY;
        let mut best_s = lo;
        for i in 0..scan {
            let s = lo + (hi - lo) * i as f64 / (scan - 1) as f64;
            let v = self.w(s);
            if v < best {
                best = v;
                best_s = s;
            }
        }
        // Local refinement around the scan minimum.
        let step = (hi - lo) / (scan - 1) as f64;
        let (mut a, mut b) = ((best_s - step).max(lo), (best_s + step).min(hi));
        for _ in 0..60 {
            let m1 = a + (b - a) * 0.382;
            let m2 = a + (b - a) * 0.618;
            if self.w(m1) < self.w(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        self.w(0.5 * (a + b)).min(best)
    }
}

fn poly_eval(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * s + k)
}

fn poly_eval_deriv(c: &[f64], s: f64, order: usize) -> f64 {
    let mut d: Vec<f64> = c.to_vec();
    for _ in 0..order {
        d = d
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &k)| i as f64 * k)
            .collect();
    }
    poly_eval(&d, s)
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Tabulated heteroclinic profile ψ on [−S, S].
///
/// Integrated outward from ψ(0) = γ by fixed-step RK4; once |ψ| reaches
/// 1 − 1e−6 the tabulation switches to the linearized decay toward ±1 with
/// rate √(W''(±1)) (the ODE ψ' = √(2W) is not Lipschitz at the wells, so
/// RK4 would stall there). Beyond ±S evaluation continues with the same
/// asymptotics.
#[derive(Debug, Clone)]
pub struct Profile {
    halfwidth: f64,
    step: f64,
    /// ψ at nodes −S, −S+step, …, S.
    values: Vec<f64>,
    /// ψ' = √(2W(ψ)) at the same nodes.
    derivs: Vec<f64>,
    gamma: f64,
    /// (s*, amplitude, rate) of the two linearized tails.
    tail_plus: (f64, f64, f64),
    tail_minus: (f64, f64, f64),
}

pub const PROFILE_DEFAULT_HALFWIDTH: f64 = 12.0;
pub const PROFILE_DEFAULT_STEP: f64 = 1e-3;
const SWITCH_GAP: f64 = 1e-6;

impl Profile {
    pub fn new(well: &DoubleWell, halfwidth: f64, step: f64) -> Result<Self> {
        if !(halfwidth > 0.0 && step > 0.0 && step < halfwidth) {
            return Err(AcError::InvalidPotential(
                "profile halfwidth/step must be positive".into(),
            ));
        }
        let n_side = (halfwidth / step).round() as usize;
        let step = halfwidth / n_side as f64;
        let gamma = well.gamma();
        let rate_plus = well.ddw(1.0).sqrt();
        let rate_minus = well.ddw(-1.0).sqrt();

        let f = |y: f64| (2.0 * well.w(y)).max(0.0).sqrt();

        // March in +s; the −s side integrates dψ/ds = −√(2W) backwards,
        // which is the same march with the sign flipped at the end for
        // symmetric wells — but wells may be asymmetric, so both directions
        // are integrated explicitly.
        let mut plus = vec![gamma];
        let mut tail_plus = None;
        let mut y = gamma;
        for i in 0..n_side {
            if 1.0 - y <= SWITCH_GAP {
                let s_star = i as f64 * step;
                tail_plus = Some((s_star, 1.0 - y, rate_plus));
                break;
            }
            y = rk4_step(&f, y, step);
            plus.push(y.min(1.0));
        }
        let tail_plus = tail_plus.unwrap_or((n_side as f64 * step, 1.0 - y, rate_plus));
        while plus.len() < n_side + 1 {
            let s = plus.len() as f64 * step;
            plus.push(1.0 - tail_plus.1 * (-(s - tail_plus.0) * tail_plus.2).exp());
        }

        let g = |y: f64| -(2.0 * well.w(y)).max(0.0).sqrt();
        let mut minus = vec![gamma];
        let mut tail_minus = None;
        let mut y = gamma;
        for i in 0..n_side {
            if y + 1.0 <= SWITCH_GAP {
                let s_star = i as f64 * step;
                tail_minus = Some((s_star, y + 1.0, rate_minus));
                break;
            }
            y = rk4_step(&g, y, step);
            minus.push(y.max(-1.0));
        }
        let tail_minus = tail_minus.unwrap_or((n_side as f64 * step, y + 1.0, rate_minus));
        while minus.len() < n_side + 1 {
            let s = minus.len() as f64 * step;
            minus.push(-1.0 + tail_minus.1 * (-(s - tail_minus.0) * tail_minus.2).exp());
        }

        let mut values = Vec::with_capacity(2 * n_side + 1);
        values.extend(minus.iter().rev());
        values.extend(plus.iter().skip(1));
        let derivs: Vec<f64> = values.iter().map(|&v| f(v)).collect();

        Ok(Self {
            halfwidth,
            step,
            values,
            derivs,
            gamma,
            tail_plus,
            tail_minus,
        })
    }

    pub fn standard(well: &DoubleWell) -> Result<Self> {
        Self::new(well, PROFILE_DEFAULT_HALFWIDTH, PROFILE_DEFAULT_STEP)
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// ψ(s). Inside [−S, S]: cubic Hermite on the table (the node
    /// derivatives are exact from the ODE). Outside: linearized decay.
    pub fn eval(&self, s: f64) -> f64 {
        if s > self.halfwidth {
            let (s0, amp, rate) = self.tail_plus;
            return 1.0 - amp * (-(s - s0) * rate).exp();
        }
        if s < -self.halfwidth {
            let (s0, amp, rate) = self.tail_minus;
            return -1.0 + amp * (-(-s - s0) * rate).exp();
        }
        let pos = (s + self.halfwidth) / self.step;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - i as f64;
        let (a, b) = (self.values[i], self.values[i + 1]);
        let (da, db) = (self.derivs[i] * self.step, self.derivs[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * a
            + (t3 - 2.0 * t2 + t) * da
            + (-2.0 * t3 + 3.0 * t2) * b
            + (t3 - t2) * db
    }

    /// ψ'(s) = √(2W(ψ(s))) evaluated through the tabulation.
    pub fn eval_deriv(&self, s: f64) -> f64 {
        if s.abs() > self.halfwidth {
            let (s0, amp, rate) = if s > 0.0 { self.tail_plus } else { self.tail_minus };
            return amp * rate * (-(s.abs() - s0) * rate).exp();
        }
        let pos = (s + self.halfwidth) / self.step;
        let i = (pos.floor() as usize).min(self.derivs.len() - 2);
        let t = pos - i as f64;
        (1.0 - t) * self.derivs[i] + t * self.derivs[i + 1]
    }

    /// ∫ over ℝ of (ψ')²/2 + W(ψ) by Simpson on the tabulation plus the
    /// analytic tail ∫ 2W ≈ ∫ rate²·(amp e^{−rate(s−s*)})² on each side.
    pub fn energy(&self, well: &DoubleWell) -> f64 {
        let n = self.values.len();
        let integrand: Vec<f64> = self
            .values
            .iter()
            .zip(&self.derivs)
            .map(|(&v, &d)| d * d / 2.0 + well.w(v))
            .collect();
        // Composite Simpson (n is odd by construction).
        let mut acc = integrand[0] + integrand[n - 1];
        for (i, v) in integrand.iter().enumerate().take(n - 1).skip(1) {
            acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        let body = acc * self.step / 3.0;
        // Tails: with ψ = ±1 ∓ amp·e^{−rate·(s−S)}, equipartition gives the
        // integrand 2W ≈ rate²·amp²·e^{−2·rate·(s−S)}, integrating to
        // rate·amp²/2.
        let tail = |amp: f64, rate: f64| rate * amp * amp / 2.0;
        let gap_p = 1.0 - self.values[n - 1];
        let gap_m = self.values[0] + 1.0;
        body + tail(gap_p, self.tail_plus.2) + tail(gap_m, self.tail_minus.2)
    }
}

fn rk4_step(f: &dyn Fn(f64) -> f64, y: f64, h: f64) -> f64 {
    let k1 = f(y);
    let k2 = f(y + 0.5 * h * k1);
    let k3 = f(y + 0.5 * h * k2);
    let k4 = f(y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}
