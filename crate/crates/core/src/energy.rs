//! The ε-energy E_ε(u) = ∫ ε|∇u|²/2 + W(u)/ε, its first and second
//! variations, the associated varifold mass, and the scalar identities used
//! as numerical certificates: the discrepancy ξ_ε = ε|∇u|²/2 − W(u)/ε, the
//! first-variation (integration by parts) identity, and the local
//! monotonicity profile.
//!
//! All report quantities share one discrete |∇u|² (the cell-centered
//! average of forward/backward difference energies). With that choice
//! `euler_lagrange` is the exact gradient of `energy`, and the pointwise
//! algebra e_ε − 2|∇w| = (ε|∇u|² − 2|∇w|) − ξ_ε makes the mass-comparison
//! inequality |E/(2σ) − mass| ≤ (‖ξ‖₁ + equipartition)/(2σ) exact.

use crate::error::{AcError, Result};
use crate::geometry::{
    derivative_centered, grad_squared_cellavg, gradient_field, integrate, laplacian,
    same_domain, ScalarField,
};
use crate::io::fmt_g17;
use crate::potential::DoubleWell;

/// Energy bookkeeping for one field at one ε.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub eps: f64,
    pub total: f64,
    pub dirichlet: f64,
    pub potential: f64,
    /// L² norm of the Euler–Lagrange defect.
    pub residual: f64,
    /// (1/σ)∫|∇(Ψ∘u)| via the chain rule √(W(u)/2)·|∇u|.
    pub varifold_mass: f64,
    /// ∫|ξ_ε|.
    pub discrepancy_l1: f64,
    /// ∫|ε|∇u|² − 2|∇w||.
    pub equipartition_l1: f64,
    /// Set when ε < 2·max hᵢ (under-resolved interface).
    pub warn_resolution: bool,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str =
        "eps,total,dirichlet,potential,residual,varifold_mass,discrepancy_l1,equipartition_l1,warn_resolution";

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            fmt_g17(self.eps),
            fmt_g17(self.total),
            fmt_g17(self.dirichlet),
            fmt_g17(self.potential),
            fmt_g17(self.residual),
            fmt_g17(self.varifold_mass),
            fmt_g17(self.discrepancy_l1),
            fmt_g17(self.equipartition_l1),
            (self.warn_resolution as u8).to_string(),
        ]
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(AcError::NonPositiveEps(eps));
    }
    Ok(())
}

/// E_ε(u). Cheap mode: no residual, no diagnostics.
pub fn energy(u: &ScalarField, well: &DoubleWell, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let g2 = grad_squared_cellavg(u);
    let e = u.zip_map(&g2, |v, g| eps * g / 2.0 + well.w(v) / eps)?;
    Ok(integrate(&e))
}

/// Full energy report: parts, residual, varifold mass, discrepancy and
/// equipartition L¹ norms.
pub fn energy_report(u: &ScalarField, well: &DoubleWell, eps: f64) -> Result<EnergyReport> {
    check_eps(eps)?;
    let d = u.domain();
    let g2 = grad_squared_cellavg(u);
    let dirichlet = integrate(&g2.map(|g| eps * g / 2.0));
    let potential = integrate(&u.map(|v| well.w(v) / eps));
    let residual = euler_lagrange(u, well, eps)?.l2_norm();

    let sigma = well.sigma();
    let mut mass_terms = vec![0.0; u.len()];
    let mut disc_terms = vec![0.0; u.len()];
    let mut equi_terms = vec![0.0; u.len()];
    for i in 0..u.len() {
        let v = u.values()[i];
        let gsq = g2.values()[i];
        let g = gsq.sqrt();
        let grad_w = (well.w(v).max(0.0) / 2.0).sqrt() * g; // |∇(Ψ∘u)|
        mass_terms[i] = grad_w;
        disc_terms[i] = (eps * gsq / 2.0 - well.w(v) / eps).abs();
        equi_terms[i] = (eps * gsq - 2.0 * grad_w).abs();
    }
    let dv = ScalarField::new(*d, mass_terms)?;
    let varifold_mass = integrate(&dv) / sigma;
    let discrepancy_l1 = integrate(&ScalarField::new(*d, disc_terms)?);
    let equipartition_l1 = integrate(&ScalarField::new(*d, equi_terms)?);

    Ok(EnergyReport {
        eps,
        total: dirichlet + potential,
        dirichlet,
        potential,
        residual,
        varifold_mass,
        discrepancy_l1,
        equipartition_l1,
        warn_resolution: eps < 2.0 * d.max_spacing(),
    })
}

/// The L²-gradient of E_ε: −ε·Δu + W'(u)/ε. Zero iff u is a discrete
/// critical point.
pub fn euler_lagrange(u: &ScalarField, well: &DoubleWell, eps: f64) -> Result<ScalarField> {
    check_eps(eps)?;
    let mut out = laplacian(u);
    out.scale(-eps);
    for (o, &v) in out.values_mut().iter_mut().zip(u.values()) {
        *o += well.dw(v) / eps;
    }
    Ok(out)
}

/// Linearized operator at u applied to φ: −ε·Δφ + W''(u)·φ/ε.
pub fn hessian_apply(
    u: &ScalarField,
    well: &DoubleWell,
    eps: f64,
    phi: &ScalarField,
) -> Result<ScalarField> {
    check_eps(eps)?;
    same_domain(u, phi)?;
    let mut out = laplacian(phi);
    out.scale(-eps);
    for ((o, &v), &p) in out.values_mut().iter_mut().zip(u.values()).zip(phi.values()) {
        *o += well.ddw(v) * p / eps;
    }
    Ok(out)
}

/// Associated varifold mass (1/σ)∫|∇(Ψ∘u)|, chain-rule form.
pub fn varifold_mass(u: &ScalarField, well: &DoubleWell, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let g2 = grad_squared_cellavg(u);
    let t = u.zip_map(&g2, |v, g| (well.w(v).max(0.0) / 2.0).sqrt() * g.sqrt())?;
    Ok(integrate(&t) / well.sigma())
}

/// Cross-check: compose w = Ψ∘u first, then take the same discrete |∇w|.
pub fn varifold_mass_composed(u: &ScalarField, well: &DoubleWell) -> Result<f64> {
    let w = u.map(|v| well.psi_big(v));
    let g2 = grad_squared_cellavg(&w);
    Ok(integrate(&g2.map(f64::sqrt)) / well.sigma())
}

/// The discrepancy field ξ_ε with its L¹ norm and the equipartition L¹ norm
/// ∫|ε|∇u|² − 2|∇w||.
pub fn discrepancy(
    u: &ScalarField,
    well: &DoubleWell,
    eps: f64,
) -> Result<(ScalarField, f64, f64)> {
    check_eps(eps)?;
    let g2 = grad_squared_cellavg(u);
    let xi = u.zip_map(&g2, |v, g| eps * g / 2.0 - well.w(v) / eps)?;
    let l1 = integrate(&xi.map(f64::abs));
    let equi = u.zip_map(&g2, |v, g| {
        (eps * g - 2.0 * (well.w(v).max(0.0) / 2.0).sqrt() * g.sqrt()).abs()
    })?;
    let equi_l1 = integrate(&equi);
    Ok((xi, l1, equi_l1))
}

/// Both sides of the first-variation identity for a critical point u and a
/// test vector field g.
#[derive(Debug, Clone, Copy)]
pub struct FirstVariationReport {
    /// ∫_{|∇u|>0} (div g − ∇_ν g·ν)·ε|∇u|².
    pub lhs: f64,
    /// ∫ (ε|∇u|²/2 − W(u)/ε)·div g.
    pub rhs: f64,
    pub residual: f64,
}

/// Checks the integrated-by-parts stationarity identity. Requires u to be a
/// certified critical point (residual ≤ `residual_tol`); the normal
/// ν = ∇u/|∇u| is only evaluated where |∇u| > 1e−12.
pub fn first_variation_residual(
    u: &ScalarField,
    well: &DoubleWell,
    eps: f64,
    g: &[ScalarField],
    residual_tol: f64,
) -> Result<FirstVariationReport> {
    check_eps(eps)?;
    let d = u.domain();
    if g.len() != d.dim() {
        return Err(AcError::InvalidDomain(format!(
            "test field has {} components for dim {}",
            g.len(),
            d.dim()
        )));
    }
    for comp in g {
        same_domain(u, comp)?;
    }
    let res = euler_lagrange(u, well, eps)?.l2_norm();
    if res > residual_tol {
        return Err(AcError::NotCritical {
            residual: res,
            tol: residual_tol,
        });
    }

    // Centered-difference discretization throughout this diagnostic.
    let grad_u = gradient_field(u);
    let mut div_g = ScalarField::constant(*d, 0.0);
    for (a, comp) in g.iter().enumerate() {
        div_g.axpy(1.0, &derivative_centered(comp, a))?;
    }
    // ∂_a g_b for all a, b.
    let n = u.len();
    let dim = d.dim();
    let mut dg = Vec::with_capacity(dim * dim);
    for comp in g {
        for a in 0..dim {
            dg.push(derivative_centered(comp, a));
        }
    }
    let mut lhs_terms = vec![0.0; n];
    let mut rhs_terms = vec![0.0; n];
    for i in 0..n {
        let mut gsq = 0.0;
        for gc in &grad_u {
            gsq += gc.values()[i] * gc.values()[i];
        }
        let gnorm = gsq.sqrt();
        let xi = eps * gsq / 2.0 - well.w(u.values()[i]) / eps;
        rhs_terms[i] = xi * div_g.values()[i];
        if gnorm > 1e-12 {
            // ∇_ν g · ν = Σ_{a,b} ν_a (∂_a g_b) ν_b
            let mut nu_dg_nu = 0.0;
            for b in 0..dim {
                for a in 0..dim {
                    let nu_a = grad_u[a].values()[i] / gnorm;
                    let nu_b = grad_u[b].values()[i] / gnorm;
                    nu_dg_nu += nu_a * dg[b * dim + a].values()[i] * nu_b;
                }
            }
            lhs_terms[i] = (div_g.values()[i] - nu_dg_nu) * eps * gsq;
        }
    }
    let lhs = integrate(&ScalarField::new(*d, lhs_terms)?);
    let rhs = integrate(&ScalarField::new(*d, rhs_terms)?);
    Ok(FirstVariationReport {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Normalized local energy ρ ↦ ρ^{1−n}·∫_{B_ρ} e_ε around `center`. Flat
/// ambient, so no exponential curvature prefactor.
pub fn monotonicity_profile(
    u: &ScalarField,
    well: &DoubleWell,
    eps: f64,
    center: [f64; 3],
    radii: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_eps(eps)?;
    let d = u.domain();
    let inj = d.min_length() / 2.0;
    let mut rs: Vec<f64> = radii.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if let Some(&rmax) = rs.last() {
        if rmax > inj {
            return Err(AcError::BallTooLarge(rmax));
        }
    }
    let g2 = grad_squared_cellavg(u);
    let e = u.zip_map(&g2, |v, g| eps * g / 2.0 + well.w(v) / eps)?;
    let dv = d.cell_volume();
    let n_exp = d.dim() as i32;
    let mut dist_e: Vec<(f64, f64)> = (0..u.len())
        .map(|i| (d.torus_distance(d.cell_center(i), center), e.values()[i]))
        .collect();
    dist_e.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out = Vec::with_capacity(rs.len());
    let mut acc = 0.0;
    let mut k = 0;
    for &rho in &rs {
        while k < dist_e.len() && dist_e[k].0 <= rho {
            acc += dist_e[k].1;
            k += 1;
        }
        out.push((rho, rho.powi(1 - n_exp) * acc * dv));
    }
    Ok(out)
}
