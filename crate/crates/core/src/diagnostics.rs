//! Inequality certificates: the De Giorgi isoperimetric lower bound, the
//! volume-continuity lemmas behind the discrete sweepout, the discrete
//! slice extraction with mass and neighbor-volume control, and ladder-level
//! decay tables.
//!
//! The flat distance of the current-space argument is replaced throughout
//! by its upper surrogate: the volumes of the regions whose boundaries are
//! the slice differences (the same regions the original argument bounds).

use crate::energy::EnergyReport;
use crate::error::{AcError, Result};
use crate::geometry::{gradient_modulus_centered, integrate, ScalarField, TorusDomain};
use crate::io::fmt_g17;
use crate::minmax::PathInH1;
use crate::potential::DoubleWell;
use crate::sweepout::{extract_zero_set, InterfaceSlice};

/// Closed-form lower bound for the isoperimetric profile of a flat torus:
/// the minimum over axis slabs, balls, and (in 3-D) axis cylinders,
/// symmetrized about half the volume. Candidates that do not embed only
/// lower the bound, which keeps it valid.
#[derive(Debug, Clone)]
pub struct IsoperimetricProfile {
    domain: TorusDomain,
}

impl IsoperimetricProfile {
    pub fn new(domain: TorusDomain) -> Self {
        Self { domain }
    }

    /// I(t) for enclosed volume t ∈ [0, Vol(M)].
    pub fn lower_bound(&self, t: f64) -> f64 {
        let d = &self.domain;
        let vol = d.total_volume();
        let m = t.min(vol - t).max(0.0);
        if m == 0.0 {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        // Axis slabs: perimeter 2·∏_{i≠a} L_i, any volume.
        for a in 0..d.dim() {
            let transverse: f64 = (0..d.dim())
                .filter(|&b| b != a)
                .map(|b| d.length(b))
                .product();
            best = best.min(2.0 * transverse);
        }
        match d.dim() {
            1 => best = best.min(2.0),
            2 => {
                // Disk nucleation: perimeter 2√(π m).
                best = best.min(2.0 * (std::f64::consts::PI * m).sqrt());
            }
            _ => {
                // Ball: (36π)^{1/3} m^{2/3}; cylinders along each axis:
                // 2√(π m L_a).
                best = best.min((36.0 * std::f64::consts::PI).cbrt() * m.powf(2.0 / 3.0));
                for a in 0..3 {
                    best = best.min(2.0 * (std::f64::consts::PI * m * d.length(a)).sqrt());
                }
            }
        }
        best
    }

    /// min of I over a volume window (monotone in min(t, Vol−t), so the
    /// endpoint closer to the boundary decides).
    pub fn min_over(&self, t0: f64, t1: f64) -> f64 {
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        self.lower_bound(lo).min(self.lower_bound(hi))
    }
}

/// Both sides of the De Giorgi inequality plus the coarea cross-check.
#[derive(Debug, Clone)]
pub struct DeGiorgiReport {
    /// C·(b − a) with C the isoperimetric minimum over the realized window.
    pub lhs: f64,
    /// Vol({a ≤ u ≤ b})^{1/2}·‖∇u‖_{L²}.
    pub rhs: f64,
    pub satisfied: bool,
    /// Smaller of the two outer volumes (the realized δ).
    pub delta: f64,
    /// ∫_a^b H^{n−1}(∂Ω_s) ds via a 33-level scan.
    pub coarea_levels: f64,
    /// ∫_{a ≤ u ≤ b} |∇u|.
    pub coarea_gradient: f64,
}

const LEVEL_SCAN: usize = 33;

/// De Giorgi isoperimetric check: C(b−a) ≤ Vol({a≤u≤b})^{1/2}·‖∇u‖_{L²},
/// with C read off the isoperimetric profile over the realized volume
/// window.
pub fn de_giorgi_check(u: &ScalarField, a: f64, b: f64) -> Result<DeGiorgiReport> {
    if !(a < b) {
        return Err(AcError::InvalidParams(format!("need a < b, got {a}, {b}")));
    }
    let d = u.domain();
    let vol = d.total_volume();
    let below = vol - u.superlevel_volume(a); // Vol({u ≤ a}) ≈ Vol({u < a})
    let above = u.superlevel_volume(b);
    let delta = below.min(above);
    if delta <= 1e-6 * vol {
        return Err(AcError::DegenerateLevelSplit(delta));
    }
    let iso = IsoperimetricProfile::new(*d);
    // Ω_s = {u ≤ s} for s ∈ (a, b) has volume in [below, vol − above].
    let c = iso.min_over(below, vol - above);
    let band = u.band_volume(a, b);
    let grad = gradient_modulus_centered(u);
    let grad_l2 = grad.map(|g| g * g);
    let rhs = band.sqrt() * integrate(&grad_l2).sqrt();
    let lhs = c * (b - a);

    // Coarea cross-check on the grid.
    let mut levels_integral = 0.0;
    let scale = (u.max() - u.min()).max(1e-300);
    for k in 0..LEVEL_SCAN {
        let mut s = a + (b - a) * (k as f64 + 0.5) / LEVEL_SCAN as f64;
        // Levels that hit grid values exactly are perturbed.
        if u.values().iter().any(|&v| v == s) {
            s += 1e-12 * scale;
        }
        let perim = extract_zero_set(u, s).map(|sl| sl.measure).unwrap_or(0.0);
        levels_integral += perim * (b - a) / LEVEL_SCAN as f64;
    }
    let coarea_gradient = integrate(&u.zip_map(&grad, |uv, g| {
        if uv >= a && uv <= b {
            g
        } else {
            0.0
        }
    })?);

    Ok(DeGiorgiReport {
        lhs,
        rhs,
        satisfied: lhs <= rhs,
        delta,
        coarea_levels: levels_integral,
        coarea_gradient,
    })
}

/// Energy lower bound assembled from measured quantities.
#[derive(Debug, Clone)]
pub struct LowerBoundCertificate {
    /// Certified positive lower bound on the node's energy.
    pub value: f64,
    pub node_index: usize,
    /// Potential-part bound C_a·Vol({−a ≤ u ≤ a})/ε.
    pub potential_bound: f64,
    /// Combined De Giorgi bound 2√(D̂·P̂), when the volume split allows it.
    pub de_giorgi_bound: Option<f64>,
    /// Node energy, for the sanity check value ≤ E.
    pub node_energy: f64,
}

/// Reproduce the lower-bound chain on the path node of near-zero average:
/// the potential term forces the transition band to be small, the zero
/// average forces both phases to occupy volume, and the isoperimetric
/// inequality then forces gradient mass.
pub fn lower_bound_certificate(
    path: &PathInH1,
    well: &DoubleWell,
    a: f64,
) -> Result<LowerBoundCertificate> {
    if !(0.0 < a && a < 1.0) {
        return Err(AcError::InvalidParams(format!("need 0 < a < 1, got {a}")));
    }
    let eps = path.eps();
    // Node of smallest |average|, located at a sign change of the averages.
    let means: Vec<f64> = path.nodes().iter().map(|u| u.mean()).collect();
    let mut candidate: Option<usize> = None;
    let mut worst_jump = 0.0f64;
    for j in 0..means.len() - 1 {
        if means[j] == 0.0 {
            candidate = Some(j);
            break;
        }
        if means[j] * means[j + 1] < 0.0 {
            let jump = (means[j + 1] - means[j]).abs();
            worst_jump = worst_jump.max(jump);
            if jump <= 0.5 {
                let pick = if means[j].abs() <= means[j + 1].abs() {
                    j
                } else {
                    j + 1
                };
                candidate = Some(pick);
                break;
            }
        }
    }
    let node_index = match candidate {
        Some(j) => j,
        None => return Err(AcError::PathTooCoarse(worst_jump)),
    };
    let u = &path.nodes()[node_index];
    let d = u.domain();
    let vol = d.total_volume();

    // C_a = min W on [−a, a].
    let c_a = well.c_delta(1.0 - a);
    let mid = u.band_volume(-a, a);
    let potential_bound = c_a * mid / eps;

    let below = vol - u.superlevel_volume(-a); // Vol({u ≤ −a})
    let above = u.superlevel_volume(a);
    let de_giorgi_bound = if below.min(above) > 1e-6 * vol && mid > 0.0 {
        let iso = IsoperimetricProfile::new(*d);
        let c = iso.min_over(below, vol - above);
        // D ≥ ε(2aC)²/(2·Vol_mid), P ≥ C_a·Vol_mid/ε, E ≥ 2√(D·P).
        let d_hat = eps * (2.0 * a * c).powi(2) / (2.0 * mid);
        let p_hat = c_a * mid / eps;
        Some(2.0 * (d_hat * p_hat).sqrt())
    } else {
        None
    };
    let value = de_giorgi_bound
        .unwrap_or(0.0)
        .max(potential_bound);
    let node_energy = crate::energy::energy(u, well, eps)?;
    Ok(LowerBoundCertificate {
        value,
        node_index,
        potential_bound,
        de_giorgi_bound,
        node_energy,
    })
}

/// Measured transition volume vs the bound C_δ^{-1}·ε·(c_ε + ε).
#[derive(Debug, Clone, Copy)]
pub struct VanishingVolumeReport {
    pub measured: f64,
    pub bound: f64,
    pub satisfied: bool,
}

pub fn vanishing_volume_check(
    u: &ScalarField,
    well: &DoubleWell,
    eps: f64,
    delta: f64,
    c_eps: f64,
) -> Result<VanishingVolumeReport> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(AcError::InvalidParams(format!(
            "delta {delta} outside (0,1)"
        )));
    }
    let c_delta = well.c_delta(delta);
    let measured = u.band_volume(-(1.0 - delta), 1.0 - delta);
    let bound = eps * (c_eps + eps) / c_delta;
    Ok(VanishingVolumeReport {
        measured,
        bound,
        satisfied: measured <= bound,
    })
}

/// Max symmetric-difference superlevel volume over adjacent path nodes vs
/// the bound 2·C_δ^{-1}·ε·(c_ε + ε); the lemma's ρ is realized as the node
/// spacing and the margin reported.
#[derive(Debug, Clone)]
pub struct VolumeContinuityReport {
    pub max_volume: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub per_pair: Vec<f64>,
}

pub fn volume_continuity_check(
    path: &PathInH1,
    well: &DoubleWell,
    alpha: f64,
    delta: f64,
    c_eps: f64,
) -> Result<VolumeContinuityReport> {
    if !(alpha > -1.0 + delta && alpha < 1.0 - delta) {
        return Err(AcError::InvalidParams(format!(
            "alpha {alpha} outside (-1+delta, 1-delta)"
        )));
    }
    let eps = path.eps();
    let dv = path.domain().cell_volume();
    let mut per_pair = Vec::with_capacity(path.len() - 1);
    for pair in path.nodes().windows(2) {
        let (s, t) = (&pair[0], &pair[1]);
        let mut fwd = 0usize;
        let mut bwd = 0usize;
        for (x, y) in s.values().iter().zip(t.values()) {
            let in_s = *x > alpha;
            let in_t = *y > alpha;
            if in_t && !in_s {
                fwd += 1;
            }
            if in_s && !in_t {
                bwd += 1;
            }
        }
        per_pair.push(fwd.max(bwd) as f64 * dv);
    }
    let max_volume = per_pair.iter().cloned().fold(0.0, f64::max);
    let c_delta = well.c_delta(delta);
    let bound = 2.0 * eps * (c_eps + eps) / c_delta;
    Ok(VolumeContinuityReport {
        max_volume,
        bound,
        satisfied: max_volume <= bound,
        per_pair,
    })
}

/// The extracted discrete sweepout: 3^k + 1 slices with controlled masses
/// and neighbor volumes.
#[derive(Debug)]
pub struct DiscreteSweepout {
    pub slices: Vec<InterfaceSlice>,
    /// Chosen w-levels s(t_j).
    pub levels: Vec<f64>,
    pub masses: Vec<f64>,
    /// Volume surrogate for the flat distance between neighbors:
    /// Vol(B_j) + Vol(A_j) + Vol(B_{j+1}).
    pub neighbor_volumes: Vec<f64>,
    pub mass_bound: f64,
    pub neighbor_bound: f64,
}

/// Extract the discrete sweepout of Prop.-9.13 shape from a relaxed path:
/// for each t_j = j·3^{−k}, scan w-levels in [−δ̃, δ̃] (w = Ψ∘u, 33-point
/// scan), keep the level of least slice mass, and certify
/// (1) empty endpoint slices,
/// (4) every mass < (c_ε + ε)/(4δ̃),
/// (2′) neighbor volume surrogate ≤ 6·C_δ^{-1}·ε·(c_ε + ε).
pub fn discrete_sweepout_extract(
    path: &PathInH1,
    well: &DoubleWell,
    delta_tilde: f64,
    k: u32,
    c_eps: f64,
) -> Result<DiscreteSweepout> {
    let sigma = well.sigma();
    if !(0.0 < delta_tilde && delta_tilde < sigma / 2.0) {
        return Err(AcError::InvalidParams(format!(
            "delta_tilde {delta_tilde} outside (0, sigma/2)"
        )));
    }
    let eps = path.eps();
    let dv = path.domain().cell_volume();
    let n_slices = 3usize.pow(k) + 1;

    // u-level band corresponding to the w-scan: δ for C_δ.
    let u_hi = well.psi_big_inv(delta_tilde);
    let delta_u = 1.0 - u_hi;
    let c_delta = well.c_delta(delta_u);
    let alpha = well.psi_big_inv(0.0);

    let mass_bound = (c_eps + eps) / (4.0 * delta_tilde);
    let neighbor_bound = 6.0 * eps * (c_eps + eps) / c_delta;

    let mut slices = Vec::with_capacity(n_slices);
    let mut levels = Vec::with_capacity(n_slices);
    let mut masses = Vec::with_capacity(n_slices);
    let mut chosen_u_levels = Vec::with_capacity(n_slices);

    for j in 0..n_slices {
        let t = j as f64 / (n_slices - 1) as f64;
        let u = path.sample(t);
        let w = u.map(|v| well.psi_big(v));
        // 33-level scan of [−δ̃, δ̃]; grid-coincident levels perturbed.
        let mut best: Option<(f64, f64, InterfaceSlice)> = None;
        let scale = (w.max() - w.min()).max(1e-300);
        for m in 0..LEVEL_SCAN {
            let mut s =
                -delta_tilde + 2.0 * delta_tilde * (m as f64 + 0.5) / LEVEL_SCAN as f64;
            if w.values().iter().any(|&v| v == s) {
                s += 1e-12 * scale;
            }
            let sl = match extract_zero_set(&w, s) {
                Ok(sl) => sl,
                Err(AcError::EmptyLevelSet { .. }) => InterfaceSlice {
                    geometry: crate::sweepout::SliceGeometry::Points(vec![]),
                    measure: 0.0,
                    level: s,
                },
                Err(e) => return Err(e),
            };
            if best.as_ref().map(|(m0, _, _)| sl.measure < *m0).unwrap_or(true) {
                best = Some((sl.measure, s, sl));
            }
        }
        let (mass, s_w, sl) = best.expect("scan nonempty");
        slices.push(sl);
        levels.push(s_w);
        masses.push(mass);
        chosen_u_levels.push(well.psi_big_inv(s_w));
    }

    // Clause (1): endpoint slices empty.
    for &j in &[0, n_slices - 1] {
        if masses[j] != 0.0 {
            return Err(AcError::SweepoutClauseFailed {
                clause: "(1) empty endpoints",
                lhs: masses[j],
                rhs: 0.0,
            });
        }
    }
    // Clause (4): every mass below (c_ε + ε)/(4δ̃).
    for &m in &masses {
        if m >= mass_bound {
            return Err(AcError::SweepoutClauseFailed {
                clause: "(4) mass bound",
                lhs: m,
                rhs: mass_bound,
            });
        }
    }
    // Clause (2'): neighbor symmetric-difference volumes. B_j is the region
    // between the chosen level set and the α-superlevel set of the same
    // node; A_j between the α-superlevel sets of adjacent nodes.
    let mut neighbor_volumes = Vec::with_capacity(n_slices - 1);
    let sym_diff = |u: &ScalarField, la: f64, v: &ScalarField, lb: f64| -> f64 {
        let count = u
            .values()
            .iter()
            .zip(v.values())
            .filter(|(&x, &y)| (x > la) != (y > lb))
            .count();
        count as f64 * dv
    };
    for j in 0..n_slices - 1 {
        let t0 = j as f64 / (n_slices - 1) as f64;
        let t1 = (j + 1) as f64 / (n_slices - 1) as f64;
        let u0 = path.sample(t0);
        let u1 = path.sample(t1);
        let b_j = sym_diff(&u0, chosen_u_levels[j], &u0, alpha);
        let b_j1 = sym_diff(&u1, chosen_u_levels[j + 1], &u1, alpha);
        let a_j = sym_diff(&u0, alpha, &u1, alpha);
        let total = b_j + a_j + b_j1;
        if total > neighbor_bound {
            return Err(AcError::SweepoutClauseFailed {
                clause: "(2') neighbor volume bound",
                lhs: total,
                rhs: neighbor_bound,
            });
        }
        neighbor_volumes.push(total);
    }

    Ok(DiscreteSweepout {
        slices,
        levels,
        masses,
        neighbor_volumes,
        mass_bound,
        neighbor_bound,
    })
}

/// One rung's decay-table row.
#[derive(Debug, Clone)]
pub struct DecayRow {
    pub eps: f64,
    pub discrepancy_l1: f64,
    pub equipartition_l1: f64,
    /// |E/(2σ) − varifold mass|.
    pub mass_gap: f64,
    pub zero_set_measure: f64,
}

/// Decay table across a ladder, with consecutive-rung ratios.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// (discrepancy ratio, equipartition ratio, mass-gap ratio) per step.
    pub ratios: Vec<(f64, f64, f64)>,
}

impl DecayReport {
    pub const CSV_HEADER: &'static str =
        "eps,discrepancy_l1,equipartition_l1,mass_gap,zero_set_measure";

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    fmt_g17(r.eps),
                    fmt_g17(r.discrepancy_l1),
                    fmt_g17(r.equipartition_l1),
                    fmt_g17(r.mass_gap),
                    fmt_g17(r.zero_set_measure),
                ]
            })
            .collect()
    }
}

pub fn ladder_decay_report(
    reports: &[EnergyReport],
    zero_measures: &[f64],
    sigma: f64,
) -> DecayReport {
    let rows: Vec<DecayRow> = reports
        .iter()
        .zip(zero_measures)
        .map(|(r, &z)| DecayRow {
            eps: r.eps,
            discrepancy_l1: r.discrepancy_l1,
            equipartition_l1: r.equipartition_l1,
            mass_gap: (r.total / (2.0 * sigma) - r.varifold_mass).abs(),
            zero_set_measure: z,
        })
        .collect();
    let ratios = rows
        .windows(2)
        .map(|w| {
            let safe = |a: f64, b: f64| if b > 0.0 { a / b } else { f64::NAN };
            (
                safe(w[1].discrepancy_l1, w[0].discrepancy_l1),
                safe(w[1].equipartition_l1, w[0].equipartition_l1),
                safe(w[1].mass_gap, w[0].mass_gap),
            )
        })
        .collect();
    DecayReport { rows, ratios }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_report;
    use crate::geometry::gradient_field;
    use crate::minmax::SolverParams;
    use crate::potential::Profile;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    fn quartic() -> DoubleWell {
        DoubleWell::quartic()
    }

    #[test]
    fn isoperimetric_profile_shapes() {
        let d2 = TorusDomain::rect(1.0, 1.0, 16, 16).unwrap();
        let iso = IsoperimetricProfile::new(d2);
        assert_eq!(iso.lower_bound(0.0), 0.0);
        assert_eq!(iso.lower_bound(1.0), 0.0);
        // Unit T²: min(2√(πt), 2), symmetric about 1/2.
        assert_relative_eq!(iso.lower_bound(0.01), 2.0 * (PI * 0.01).sqrt());
        assert_relative_eq!(iso.lower_bound(0.5), 2.0);
        assert_relative_eq!(iso.lower_bound(0.99), iso.lower_bound(0.01));
        let d1 = TorusDomain::circle(7.0, 16).unwrap();
        let iso1 = IsoperimetricProfile::new(d1);
        assert_relative_eq!(iso1.lower_bound(3.0), 2.0);
    }

    #[test]
    fn de_giorgi_cosine_closed_forms() {
        // u = cos(2πx₁) on unit T², (a, b) = (−1/2, 1/2): each outer volume
        // is 1/3, ‖∇u‖_{L²} = π√2, C = 2 from the two-line slab bound.
        let d = TorusDomain::rect(1.0, 1.0, 256, 256).unwrap();
        let u = ScalarField::from_fn(d, |x| (TAU * x[0]).cos());
        let rep = de_giorgi_check(&u, -0.5, 0.5).unwrap();
        assert_relative_eq!(rep.delta, 1.0 / 3.0, epsilon = 0.01);
        assert_relative_eq!(rep.lhs, 2.0, epsilon = 1e-12);
        let rhs_exact = (1.0f64 / 3.0).sqrt() * PI * f64::sqrt(2.0);
        assert_relative_eq!(rep.rhs, rhs_exact, max_relative = 0.01);
        assert!(rep.satisfied);
        // Coarea consistency within 5%.
        assert_relative_eq!(rep.coarea_levels, rep.coarea_gradient, max_relative = 0.05);
    }

    #[test]
    fn de_giorgi_rejects_bad_inputs() {
        let d = TorusDomain::rect(1.0, 1.0, 32, 32).unwrap();
        let u = ScalarField::from_fn(d, |x| (TAU * x[0]).cos());
        assert!(de_giorgi_check(&u, 0.5, -0.5).is_err());
        // Degenerate split: u ≡ 1 has no mass below a.
        let c = ScalarField::constant(d, 1.0);
        assert!(matches!(
            de_giorgi_check(&c, -0.5, 0.5),
            Err(AcError::DegenerateLevelSplit(_))
        ));
    }

    #[test]
    fn lower_bound_certificate_on_constant_midpoint_path() {
        // Path constants −1, 0, +1 (padded to 9 nodes): the certificate
        // evaluates on the zero node and equals the closed form C_a·Vol/ε.
        let d = TorusDomain::circle(20.0, 128).unwrap();
        let w = quartic();
        let eps = 0.5;
        let p = PathInH1::linear_constants(d, eps, 9).unwrap();
        let cert = lower_bound_certificate(&p, &w, 0.5).unwrap();
        assert_eq!(cert.node_index, 4); // the constant-0 node
        let c_a = w.w(0.5); // min W on [−1/2, 1/2] = W(±1/2)
        assert_relative_eq!(cert.potential_bound, c_a * 20.0 / eps, epsilon = 1e-10);
        // Constant node: no volume split, De Giorgi part unavailable.
        assert!(cert.de_giorgi_bound.is_none());
        assert_relative_eq!(cert.value, c_a * 20.0 / eps, epsilon = 1e-10);
        assert!(cert.value <= cert.node_energy + 1e-12);
    }

    #[test]
    fn lower_bound_certificate_on_relaxed_path() {
        let d = TorusDomain::circle(20.0, 256).unwrap();
        let w = quartic();
        let eps = 0.25;
        let profile = Profile::standard(&w).unwrap();
        let mut nodes = vec![ScalarField::constant(d, -1.0)];
        for j in 1..32 {
            let t = j as f64 / 32.0;
            let wd = t * 10.0;
            nodes.push(ScalarField::from_fn(d, |x| {
                let pd = d.axis_distance(0, x[0], 10.0);
                -profile.eval((pd - wd) / eps)
            }));
        }
        nodes.push(ScalarField::constant(d, 1.0));
        let path = PathInH1::from_nodes(nodes, eps).unwrap();
        let relaxed = crate::minmax::relax_path(&path, &w, &SolverParams::default())
            .unwrap()
            .path;
        let cert = lower_bound_certificate(&relaxed, &w, 0.5).unwrap();
        assert!(cert.value > 0.0);
        assert!(cert.de_giorgi_bound.is_some());
        assert!(cert.value <= relaxed.max_energy(&w).unwrap());
    }

    #[test]
    fn vanishing_volume_examples() {
        let w = quartic();
        let d = TorusDomain::circle(20.0, 1024).unwrap();
        // Pure phase: measured 0.
        let rep =
            vanishing_volume_check(&ScalarField::constant(d, 1.0), &w, 0.125, 0.5, 1.9).unwrap();
        assert_eq!(rep.measured, 0.0);
        assert!(rep.satisfied);
        // Two-kink at ε = 0.125: transition band is O(ε); tanh inverse
        // gives the profile band width.
        let eps = 0.125;
        let p = Profile::standard(&w).unwrap();
        let u = ScalarField::from_fn(d, |x| {
            p.eval((x[0] - 5.0) / eps) * (-p.eval((x[0] - 15.0) / eps))
        });
        let c_eps = 4.0 * w.sigma();
        let rep = vanishing_volume_check(&u, &w, eps, 0.5, c_eps).unwrap();
        // Width of {|ψ| ≤ 1/2} in profile units is 2·artanh(1/2)·√2.
        let width = 2.0 * f64::sqrt(2.0) * 0.5f64.atanh();
        assert_relative_eq!(rep.measured, 2.0 * eps * width, max_relative = 0.1);
        assert!(rep.satisfied, "measured {} bound {}", rep.measured, rep.bound);
        // Bound scales linearly in ε.
        let rep2 = vanishing_volume_check(&u, &w, 2.0 * eps, 0.5, c_eps).unwrap();
        assert_relative_eq!(rep2.bound / rep.bound, 2.0 * (c_eps + 0.25) / (c_eps + 0.125), max_relative = 1e-12);
    }

    #[test]
    fn volume_continuity_basics() {
        let d = TorusDomain::circle(20.0, 128).unwrap();
        let w = quartic();
        let eps = 0.5;
        // Identical adjacent nodes: zero.
        let nodes: Vec<ScalarField> = std::iter::once(ScalarField::constant(d, -1.0))
            .chain((0..7).map(|_| ScalarField::constant(d, 0.5)))
            .chain(std::iter::once(ScalarField::constant(d, 1.0)))
            .collect();
        let p = PathInH1::from_nodes(nodes, eps).unwrap();
        let rep = volume_continuity_check(&p, &w, 0.0, 0.5, 10.0).unwrap();
        // Interior pairs identical; only the endpoint joins can differ.
        assert_eq!(rep.per_pair[3], 0.0);
        assert!(rep.bound > 0.0);
    }

    #[test]
    fn volume_continuity_improves_under_path_refinement() {
        // Doubling the node count of a sweepout path does not increase the
        // max adjacent superlevel volume.
        let d = TorusDomain::circle(20.0, 256).unwrap();
        let w = quartic();
        let profile = Profile::standard(&w).unwrap();
        let eps = 0.25;
        let spec = crate::sweepout::SweepoutSpec::band(0, 10.0);
        let c_eps = 4.0 * w.sigma();
        let mut maxima = Vec::new();
        for n in [17usize, 33] {
            let (path, _) =
                crate::sweepout::build_sweepout_path(&d, &spec, &w, &profile, eps, 1.25, n)
                    .unwrap();
            let rep = volume_continuity_check(&path, &w, 0.0, 0.5, c_eps).unwrap();
            maxima.push(rep.max_volume);
        }
        assert!(
            maxima[1] <= maxima[0] + 1e-12,
            "refining the path raised the adjacent volume: {maxima:?}"
        );
    }

    #[test]
    fn discrete_sweepout_from_relaxed_path() {
        let d = TorusDomain::circle(20.0, 256).unwrap();
        let w = quartic();
        let eps = 0.25;
        let profile = Profile::standard(&w).unwrap();
        let mut nodes = vec![ScalarField::constant(d, -1.0)];
        for j in 1..32 {
            let t = j as f64 / 32.0;
            let wd = t * 10.0;
            nodes.push(ScalarField::from_fn(d, |x| {
                let pd = d.axis_distance(0, x[0], 10.0);
                -profile.eval((pd - wd) / eps)
            }));
        }
        nodes.push(ScalarField::constant(d, 1.0));
        let path = PathInH1::from_nodes(nodes, eps).unwrap();
        let relaxed = crate::minmax::relax_path(&path, &w, &SolverParams::default())
            .unwrap()
            .path;
        let c_eps = relaxed.max_energy(&w).unwrap();
        let swo = discrete_sweepout_extract(&relaxed, &w, 0.2, 2, c_eps).unwrap();
        assert_eq!(swo.slices.len(), 10);
        assert_eq!(swo.masses[0], 0.0);
        assert_eq!(swo.masses[9], 0.0);
        for &m in &swo.masses {
            assert!(m < swo.mass_bound);
        }
        for &v in &swo.neighbor_volumes {
            assert!(v <= swo.neighbor_bound);
        }
        // Determinism.
        let swo2 = discrete_sweepout_extract(&relaxed, &w, 0.2, 2, c_eps).unwrap();
        assert_eq!(swo.levels, swo2.levels);
        assert_eq!(swo.masses, swo2.masses);
    }

    #[test]
    fn discrete_sweepout_is_translation_invariant() {
        // Translating every node by whole cells leaves the chosen levels
        // and masses unchanged.
        let d = TorusDomain::circle(20.0, 128).unwrap();
        let w = quartic();
        let eps = 0.5;
        let profile = Profile::standard(&w).unwrap();
        let build = |shift: isize| {
            let mut nodes = vec![ScalarField::constant(d, -1.0)];
            for j in 1..16 {
                let t = j as f64 / 16.0;
                let wd = t * 10.0;
                let base = ScalarField::from_fn(d, |x| {
                    let pd = d.axis_distance(0, x[0], 10.0);
                    -profile.eval((pd - wd) / eps)
                });
                nodes.push(base.translate_cells(0, shift));
            }
            nodes.push(ScalarField::constant(d, 1.0));
            PathInH1::from_nodes(nodes, eps).unwrap()
        };
        let a = discrete_sweepout_extract(&build(0), &w, 0.2, 2, 2.0).unwrap();
        let b = discrete_sweepout_extract(&build(17), &w, 0.2, 2, 2.0).unwrap();
        assert_eq!(a.levels, b.levels);
        for (ma, mb) in a.masses.iter().zip(&b.masses) {
            assert!((ma - mb).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_report_on_synthetic_profiles() {
        // Exact profile fields: discrepancy ≈ 0 at every rung; all
        // reported quantities nonnegative.
        let w = quartic();
        let d = TorusDomain::circle(20.0, 2048).unwrap();
        let p = Profile::standard(&w).unwrap();
        let mut reports = Vec::new();
        let mut zeros = Vec::new();
        for &eps in &[1.0, 0.5] {
            let u = ScalarField::from_fn(d, |x| {
                p.eval((x[0] - 5.0) / eps) * (-p.eval((x[0] - 15.0) / eps))
            });
            reports.push(energy_report(&u, &w, eps).unwrap());
            zeros.push(2.0);
        }
        let table = ladder_decay_report(&reports, &zeros, w.sigma());
        for row in &table.rows {
            assert!(row.discrepancy_l1 >= 0.0 && row.discrepancy_l1 < 1e-3);
            assert!(row.equipartition_l1 >= 0.0);
            assert!(row.mass_gap >= 0.0);
        }
        assert_eq!(table.ratios.len(), 1);
    }

    #[test]
    fn coarea_consistency_for_smooth_fields() {
        let d = TorusDomain::rect(1.0, 1.0, 256, 256).unwrap();
        let u = ScalarField::from_fn(d, |x| (TAU * x[0]).cos() * (TAU * x[1]).sin());
        let rep = de_giorgi_check(&u, -0.4, 0.4).unwrap();
        assert_relative_eq!(rep.coarea_levels, rep.coarea_gradient, max_relative = 0.05);
        let _ = gradient_field(&u);
    }
}
