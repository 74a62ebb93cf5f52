//! Sweepout families on the torus, the profile path construction with end
//! caps, the resulting energy upper bound, level-set extraction, and
//! parallel-area checks.
//!
//! The shipped family is the band family along a chosen axis: at parameter
//! t the slice is the pair of hyperplanes {x_a = c ∓ t·L_a/2}, degenerating
//! to the single plane {x_a = c} at t = 0 and merging (by periodicity) at
//! t = 1. The positive side of the signed distance is the shrinking
//! complement of the band, so the t = 0 distance is nonnegative and the
//! t = 1 distance nonpositive — exactly the cap preconditions.

mod marching;
pub(crate) mod mc_tables;

pub use marching::{extract_zero_set, InterfaceSlice, SliceGeometry};


use crate::error::{AcError, Result};
use crate::geometry::{grad_squared_cellavg, integrate, PointSet, ScalarField, TorusDomain};
use crate::minmax::PathInH1;
use crate::potential::{DoubleWell, Profile};

/// One-parameter sweepout family.
#[derive(Debug, Clone, Copy)]
pub enum SweepoutSpec {
    /// Σ_t = {x_axis = center − t·L/2} ∪ {x_axis = center + t·L/2}.
    Band { axis: usize, center: f64 },
}

impl SweepoutSpec {
    pub fn band(axis: usize, center: f64) -> Self {
        Self::Band { axis, center }
    }

    fn axis(&self) -> usize {
        match self {
            Self::Band { axis, .. } => *axis,
        }
    }

    /// Transverse (n−1)-measure of a single hyperplane of the family.
    pub fn plane_measure(&self, domain: &TorusDomain) -> f64 {
        let a = self.axis();
        (0..domain.dim())
            .filter(|&b| b != a)
            .map(|b| domain.length(b))
            .product()
    }

    /// Distinct plane offsets at parameter t (one at the degenerate ends,
    /// two in between).
    pub fn plane_offsets(&self, domain: &TorusDomain, t: f64) -> Vec<f64> {
        let Self::Band { axis, center } = *self;
        let l = domain.length(axis);
        let w = t.clamp(0.0, 1.0) * l / 2.0;
        if w == 0.0 {
            vec![center.rem_euclid(l)]
        } else if (w - l / 2.0).abs() < 1e-15 * l {
            vec![(center + l / 2.0).rem_euclid(l)]
        } else {
            vec![(center - w).rem_euclid(l), (center + w).rem_euclid(l)]
        }
    }

    /// H^{n−1} of the slice Σ_t.
    pub fn slice_measure(&self, domain: &TorusDomain, t: f64) -> f64 {
        self.plane_offsets(domain, t).len() as f64 * self.plane_measure(domain)
    }

    /// max_t H^{n−1}(Σ_t) = 2·∏_{i≠a} L_i.
    pub fn max_slice_measure(&self, domain: &TorusDomain) -> f64 {
        2.0 * self.plane_measure(domain)
    }

    /// Exact signed distance to Σ_t: positive on the shrinking complement
    /// of the band.
    pub fn signed_distance(&self, domain: &TorusDomain, t: f64) -> ScalarField {
        let Self::Band { axis, center } = *self;
        let w = t.clamp(0.0, 1.0) * domain.length(axis) / 2.0;
        ScalarField::from_fn(*domain, |x| domain.axis_distance(axis, x[axis], center) - w)
    }

    /// Point sampling of Σ_t (for Hausdorff-continuity checks).
    pub fn sample(&self, domain: &TorusDomain, t: f64, per_axis: usize) -> PointSet {
        let offsets = self.plane_offsets(domain, t);
        let mut pts = Vec::new();
        for off in offsets {
            pts.extend(
                PointSet::hyperplane(domain, self.axis(), off, per_axis)
                    .points()
                    .iter()
                    .copied(),
            );
        }
        PointSet::new(domain, pts)
    }
}

/// Slice geometry plus its exact signed distance field.
pub fn slice(
    domain: &TorusDomain,
    spec: &SweepoutSpec,
    t: f64,
) -> Result<(InterfaceSlice, ScalarField)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(AcError::InvalidParams(format!(
            "sweepout parameter {t} outside [0,1]"
        )));
    }
    let offs = spec.plane_offsets(domain, t);
    let axis = spec.axis();
    let geometry = hyperplane_geometry(domain, axis, &offs);
    let measure = spec.slice_measure(domain, t);
    Ok((
        InterfaceSlice {
            geometry,
            measure,
            level: t,
        },
        spec.signed_distance(domain, t),
    ))
}

fn hyperplane_geometry(domain: &TorusDomain, axis: usize, offsets: &[f64]) -> SliceGeometry {
    match domain.dim() {
        1 => SliceGeometry::Points(
            offsets
                .iter()
                .map(|&c| {
                    let mut p = [0.0; 3];
                    p[axis] = c;
                    p
                })
                .collect(),
        ),
        2 => {
            let b = 1 - axis;
            let lb = domain.length(b);
            SliceGeometry::Segments(
                offsets
                    .iter()
                    .map(|&c| {
                        let mut p0 = [0.0; 3];
                        let mut p1 = [0.0; 3];
                        p0[axis] = c;
                        p1[axis] = c;
                        p1[b] = lb;
                        [p0, p1]
                    })
                    .collect(),
            )
        }
        _ => {
            let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
            let (lb, lc) = (domain.length(others[0]), domain.length(others[1]));
            let mut tris = Vec::new();
            for &c in offsets {
                let corner = |u: f64, v: f64| -> [f64; 3] {
                    let mut p = [0.0; 3];
                    p[axis] = c;
                    p[others[0]] = u * lb;
                    p[others[1]] = v * lc;
                    p
                };
                tris.push([corner(0.0, 0.0), corner(1.0, 0.0), corner(1.0, 1.0)]);
                tris.push([corner(0.0, 0.0), corner(1.0, 1.0), corner(0.0, 1.0)]);
            }
            SliceGeometry::Triangles(tris)
        }
    }
}

/// v_{ε,δ}(Σ_t): the 1-D profile across the slice, frozen outside the
/// δ-tube. Values lie strictly inside (−1, 1).
pub fn profile_function(
    domain: &TorusDomain,
    spec: &SweepoutSpec,
    profile: &Profile,
    t: f64,
    eps: f64,
    delta: f64,
) -> Result<ScalarField> {
    if !(eps > 0.0) {
        return Err(AcError::NonPositiveEps(eps));
    }
    if !(delta > 0.0 && delta <= domain.min_length() / 4.0) {
        return Err(AcError::InvalidParams(format!(
            "delta {delta} outside (0, min L/4]"
        )));
    }
    let d = spec.signed_distance(domain, t);
    Ok(d.map(|v| profile.eval(v.clamp(-delta, delta) / eps)))
}

/// Linear homotopies joining the constants to the endpoint profiles:
/// prefix from +1 down to v(Σ_0), suffix from v(Σ_1) down to −1, each in
/// `m` nodes (junctions included). Cap energies never exceed the junction
/// energy: the gradient only shrinks and W decreases monotonically toward
/// the wells on the single-signed range.
pub fn cap_paths(
    domain: &TorusDomain,
    spec: &SweepoutSpec,
    profile: &Profile,
    eps: f64,
    delta: f64,
    m: usize,
) -> Result<(Vec<ScalarField>, Vec<ScalarField>)> {
    if m < 2 {
        return Err(AcError::InvalidParams("caps need at least 2 nodes".into()));
    }
    let d0 = spec.signed_distance(domain, 0.0);
    if d0.min() < -1e-12 {
        return Err(AcError::CapPrecondition);
    }
    let d1 = spec.signed_distance(domain, 1.0);
    if d1.max() > 1e-12 {
        return Err(AcError::CapPrecondition);
    }
    let v0 = profile_function(domain, spec, profile, 0.0, eps, delta)?;
    let v1 = profile_function(domain, spec, profile, 1.0, eps, delta)?;
    let mut prefix = Vec::with_capacity(m);
    for j in 0..m {
        let s = j as f64 / (m - 1) as f64;
        // f_s = (1 − s)·1 + s·v(Σ_0); exactly the constant +1 at s = 0.
        if j == 0 {
            prefix.push(ScalarField::constant(*domain, 1.0));
        } else {
            prefix.push(v0.map(|v| (1.0 - s) + s * v));
        }
    }
    let mut suffix = Vec::with_capacity(m);
    for j in 0..m {
        let s = j as f64 / (m - 1) as f64;
        // f̄_s = (1 − s)·v(Σ_1) − s; exactly the constant −1 at s = 1.
        if j == m - 1 {
            suffix.push(ScalarField::constant(*domain, -1.0));
        } else {
            suffix.push(v1.map(|v| (1.0 - s) * v - s));
        }
    }
    Ok((prefix, suffix))
}

/// Bound bookkeeping for a built sweepout path.
#[derive(Debug, Clone)]
pub struct SweepoutBuildReport {
    pub max_node_energy: f64,
    /// F({Σ_t}) = max slice measure.
    pub max_slice_measure: f64,
    /// Paper-style blanket tail bound Vol(M)·(W(ψ(−δ/ε)) + W(ψ(δ/ε)))/ε.
    pub tail_bound: f64,
    /// Largest measured far-field energy ∫_{|d_Σ|>δ} e_ε(v) over the
    /// profile nodes (the quantity the blanket bound dominates).
    pub tail_measured: f64,
    /// Parallel-area inflation: max over profile nodes of the banded
    /// energy over 2σ·H^{n−1}(Σ_t), minus 1. Exactly the quadrature error
    /// for flat band families.
    pub eta: f64,
}

/// Concatenate cap ∘ profile family ∘ cap into a path, ordered from the
/// constant −1 to the constant +1, and report the upper-bound pieces.
pub fn build_sweepout_path(
    domain: &TorusDomain,
    spec: &SweepoutSpec,
    well: &DoubleWell,
    profile: &Profile,
    eps: f64,
    delta: f64,
    n: usize,
) -> Result<(PathInH1, SweepoutBuildReport)> {
    if n < 9 {
        return Err(AcError::InvalidParams(format!(
            "sweepout path needs at least 9 nodes (got {n})"
        )));
    }
    let cap_nodes = (n / 8).max(2);
    let mid_nodes = n - 2 * (cap_nodes - 1);
    let (prefix, suffix) = cap_paths(domain, spec, profile, eps, delta, cap_nodes)?;

    let mut nodes: Vec<ScalarField> = Vec::with_capacity(n);
    nodes.extend(prefix.into_iter().take(cap_nodes - 1));
    let mut tail_measured = 0.0f64;
    let mut eta = f64::NEG_INFINITY;
    let sigma = well.sigma();
    for j in 0..mid_nodes {
        let t = j as f64 / (mid_nodes - 1) as f64;
        let v = profile_function(domain, spec, profile, t, eps, delta)?;
        // Far-field and banded energy split for the report.
        let dfield = spec.signed_distance(domain, t);
        let g2 = grad_squared_cellavg(&v);
        let e = v.zip_map(&g2, |val, g| eps * g / 2.0 + well.w(val) / eps)?;
        let far = integrate(&e.zip_map(&dfield, |ev, dv| if dv.abs() > delta { ev } else { 0.0 })?);
        let band = integrate(&e.zip_map(&dfield, |ev, dv| if dv.abs() <= delta { ev } else { 0.0 })?);
        tail_measured = tail_measured.max(far);
        let slice_m = spec.slice_measure(domain, t);
        eta = eta.max(band / (2.0 * sigma * slice_m) - 1.0);
        nodes.push(v);
    }
    nodes.extend(suffix.into_iter().skip(1));

    // The construction naturally runs +1 → −1 (the t = 0 slice has
    // nonnegative distance); the path type pins −1 at node 0, so reverse.
    nodes.reverse();
    let path = PathInH1::from_nodes(nodes, eps)?;
    let path = crate::minmax::truncate_path(&path);

    let tail_bound = domain.total_volume()
        * (well.w(profile.eval(-delta / eps)) + well.w(profile.eval(delta / eps)))
        / eps;
    let max_node_energy = path.max_energy(well)?;
    Ok((
        path,
        SweepoutBuildReport {
            max_node_energy,
            max_slice_measure: spec.max_slice_measure(domain),
            tail_bound,
            tail_measured,
            eta,
        },
    ))
}

/// Areas of the parallel level sets {d = δ} of a signed distance field.
pub fn parallel_area(distance: &ScalarField, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
    deltas
        .iter()
        .map(|&del| Ok((del, extract_zero_set(distance, del)?.measure)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy;
    use crate::geometry::hausdorff_distance;
    use approx::assert_relative_eq;

    fn setup() -> (TorusDomain, DoubleWell, Profile) {
        let d = TorusDomain::rect(1.0, 1.0, 128, 128).unwrap();
        let w = DoubleWell::quartic();
        let p = Profile::standard(&w).unwrap();
        (d, w, p)
    }

    #[test]
    fn band_slices_on_unit_t2() {
        let (d, _, _) = setup();
        let spec = SweepoutSpec::band(0, 0.5);
        // t = 0.5: two lines, total measure 2.
        let (s, _) = slice(&d, &spec, 0.5).unwrap();
        assert_relative_eq!(s.measure, 2.0);
        match s.geometry {
            SliceGeometry::Segments(ref segs) => assert_eq!(segs.len(), 2),
            _ => panic!("expected segments"),
        }
        // t = 0: single degenerate slice with nonnegative distance.
        let (s0, d0) = slice(&d, &spec, 0.0).unwrap();
        assert_relative_eq!(s0.measure, 1.0);
        assert!(d0.min() >= 0.0);
        // t = 1: merged plane, nonpositive distance.
        let (_, d1) = slice(&d, &spec, 1.0).unwrap();
        assert!(d1.max() <= 0.0);
    }

    #[test]
    fn band_distance_satisfies_eikonal() {
        let (d, _, _) = setup();
        let spec = SweepoutSpec::band(0, 0.5);
        for &t in &[0.1, 0.3, 0.5, 0.8] {
            let sd = spec.signed_distance(&d, t);
            let g = crate::geometry::gradient_modulus_centered(&sd);
            // |∇d| = 1 away from the ridge/plane layers.
            let ok = g
                .values()
                .iter()
                .filter(|&&v| (v - 1.0).abs() < 1e-9)
                .count();
            assert!(ok * 10 >= 9 * g.len(), "eikonal holds a.e.: {ok}/{}", g.len());
        }
    }

    #[test]
    fn hausdorff_continuity_of_band_family() {
        // d_H(Σ_t, Σ_s) ≤ (L/2)·|t − s|, with equality for small moves.
        let (d, _, _) = setup();
        let spec = SweepoutSpec::band(0, 0.5);
        for &(t, s) in &[(0.2, 0.25), (0.5, 0.52), (0.7, 0.8)] {
            let a = spec.sample(&d, t, 64);
            let b = spec.sample(&d, s, 64);
            let dh = hausdorff_distance(&a, &b, &d).unwrap();
            let bound = 0.5 * (t - s).abs() + 1e-12;
            assert!(dh <= bound, "{dh} > {bound}");
        }
    }

    #[test]
    fn profile_function_values() {
        let (d, w, p) = setup();
        let spec = SweepoutSpec::band(0, 0.5);
        let eps = 0.05;
        let delta = 0.25;
        let v = profile_function(&d, &spec, &p, 0.5, eps, delta).unwrap();
        // Strictly inside (−1, 1).
        assert!(v.max() < 1.0 && v.min() > -1.0);
        // On Σ_t the value is ψ(0) = γ = 0: cells at x₁ = 0.25 (i = 32).
        for j in 0..d.grid(1) {
            let val = v.values()[d.index([32, j, 0])];
            assert!(val.abs() < 1e-10, "on-slice value {val}");
        }
        // Far field at t = 0 freezes at ψ(δ/ε) = 1 − O(e^{−δ/ε}).
        let v0 = profile_function(&d, &spec, &p, 0.0, eps, delta).unwrap();
        let frozen = p.eval(delta / eps);
        let far = v0.values()[d.index([0, 0, 0])]; // x₁ = 0, distance 1/2
        assert_relative_eq!(far, frozen, epsilon = 1e-12);
        // 1 − ψ(δ/ε) = O(e^{−δ/ε}).
        let gap = 1.0 - frozen;
        assert!(gap > 0.0 && gap < 2.0 * (-delta / eps).exp(), "gap {gap:.3e}");
        // Mid-slice energy within 5% of 2σ·2.
        let e = energy(&v, &w, eps).unwrap();
        assert_relative_eq!(e, 2.0 * w.sigma() * 2.0, max_relative = 0.05);
    }

    #[test]
    fn caps_are_monotone_and_below_junction_energy() {
        let (d, w, p) = setup();
        let spec = SweepoutSpec::band(0, 0.5);
        let eps = 0.05;
        let delta = 0.25;
        let (prefix, suffix) = cap_paths(&d, &spec, &p, eps, delta, 9).unwrap();
        // First prefix node is exactly +1.
        assert!(prefix[0].values().iter().all(|&v| v == 1.0));
        assert!(suffix[8].values().iter().all(|&v| v == -1.0));
        let e_j0 = energy(&prefix[8], &w, eps).unwrap();
        for f in &prefix {
            assert!(energy(f, &w, eps).unwrap() <= e_j0 + 1e-12);
        }
        let e_j1 = energy(&suffix[0], &w, eps).unwrap();
        for f in &suffix {
            assert!(energy(f, &w, eps).unwrap() <= e_j1 + 1e-12);
        }
        // Pointwise monotone in the cap parameter.
        for i in (0..prefix[0].len()).step_by(977) {
            for pair in prefix.windows(2) {
                assert!(pair[1].values()[i] <= pair[0].values()[i] + 1e-14);
            }
        }
    }

    #[test]
    fn sweepout_path_upper_bound() {
        let (d, w, p) = setup();
        let spec = SweepoutSpec::band(0, 0.5);
        let eps = 0.05;
        let delta = 0.25;
        let (path, report) = build_sweepout_path(&d, &spec, &w, &p, eps, delta, 33).unwrap();
        // Endpoints exactly ∓1 in path order.
        assert!(path.nodes()[0].values().iter().all(|&v| v == -1.0));
        assert!(path.nodes()[32].values().iter().all(|&v| v == 1.0));
        // Max-node energy ≤ 2σ·F·(1 + 5%).
        let bound = 2.0 * w.sigma() * report.max_slice_measure * 1.05;
        assert!(
            report.max_node_energy <= bound,
            "max energy {} vs bound {}",
            report.max_node_energy,
            bound
        );
        // Far-field tail small; measured below the blanket bound.
        assert!(report.tail_measured <= report.tail_bound);
        assert!(report.tail_measured < 1e-4);
        // Flat parallels: η is pure quadrature error.
        assert!(report.eta.abs() < 0.05);
    }

    #[test]
    fn parallel_area_ratios() {
        let (d, _, _) = setup();
        let h = d.spacing(0);
        // Hyperplane slice: ratio exactly 1 (± extraction tolerance).
        let spec = SweepoutSpec::band(0, 0.5);
        let sd = spec.signed_distance(&d, 0.5);
        let base = spec.slice_measure(&d, 0.5);
        for (del, area) in parallel_area(&sd, &[-0.1, -0.05, 0.05, 0.1]).unwrap() {
            let expected = if del > 0.0 { base } else { base };
            assert_relative_eq!(area / expected, 1.0, epsilon = 2.0 * h);
            let _ = del;
        }
        // δ = 0 reproduces the slice measure exactly.
        let at0 = parallel_area(&sd, &[0.0]).unwrap()[0].1;
        assert_relative_eq!(at0, base, epsilon = 1e-9);

        // Circle of radius r: parallel length ratio 2π(r+δ)/(2πr).
        let r = 0.2;
        let circ = ScalarField::from_fn(d, |x| d.torus_distance(x, [0.5, 0.5, 0.0]) - r);
        let got = parallel_area(&circ, &[0.05]).unwrap()[0].1;
        let base_len = extract_zero_set(&circ, 0.0).unwrap().measure;
        assert_relative_eq!(got / base_len, 1.25, max_relative = 0.02);
    }
}
