//! Distance functions on flat tori: exact hyperplane forms, first-order
//! fast marching for general level-set sources, Hausdorff distance and the
//! W¹,¹ convergence probe.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{
    derivative_centered, integrate, PointSet, ScalarField, TorusDomain,
};
use crate::error::{AcError, Result};

/// A distance source: either an axis-hyperplane union with a declared
/// positive side, or the zero level set of a field.
#[derive(Debug, Clone)]
pub enum DistanceSource<'a> {
    /// Planes {x_axis = offset}. The side containing `positive_point` is
    /// declared positive; signs alternate across the planes. A single plane
    /// produces the periodic sawtooth whose sign flips at the antipodal
    /// ridge; odd counts ≥ 3 cannot alternate consistently on a circle and
    /// are rejected.
    Hyperplanes {
        axis: usize,
        offsets: Vec<f64>,
        positive_point: [f64; 3],
    },
    /// Zero set of `field − level`, sign inherited from the field.
    LevelSet { field: &'a ScalarField, level: f64 },
}

/// Signed distance field d_K with |∇d| = 1 a.e.
///
/// Hyperplane unions use exact closed forms; level-set sources use a
/// first-order upwind fast-marching solve (accuracy O(h)).
pub fn signed_distance(domain: &TorusDomain, source: &DistanceSource) -> Result<ScalarField> {
    match source {
        DistanceSource::Hyperplanes {
            axis,
            offsets,
            positive_point,
        } => hyperplane_signed_distance(domain, *axis, offsets, *positive_point),
        DistanceSource::LevelSet { field, level } => {
            if field.domain() != domain {
                return Err(AcError::DomainMismatch);
            }
            fast_marching_signed(field, *level)
        }
    }
}

fn hyperplane_signed_distance(
    domain: &TorusDomain,
    axis: usize,
    offsets: &[f64],
    positive_point: [f64; 3],
) -> Result<ScalarField> {
    if offsets.is_empty() {
        return Err(AcError::EmptyDistanceSource);
    }
    if axis >= domain.dim() {
        return Err(AcError::InvalidDomain(format!(
            "axis {axis} out of range for dim {}",
            domain.dim()
        )));
    }
    let l = domain.length(axis);
    let mut cuts: Vec<f64> = offsets.iter().map(|c| c.rem_euclid(l)).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * l);

    let p = domain.wrap_point(positive_point)[axis];

    if cuts.len() == 1 {
        // Periodic sawtooth: d = signed offset from the plane, sign chosen
        // so the declared point is positive; the sign flips at the antipode.
        let c = cuts[0];
        let po = domain.axis_offset(axis, p, c);
        if po.abs() < 1e-12 * l {
            return Err(AcError::InconsistentSide(
                "declared positive point lies on the plane".into(),
            ));
        }
        let flip = if po > 0.0 { 1.0 } else { -1.0 };
        let out = ScalarField::from_fn(*domain, |x| flip * domain.axis_offset(axis, x[axis], c));
        return Ok(out);
    }

    if cuts.len() % 2 != 0 {
        return Err(AcError::InconsistentSide(format!(
            "{} planes cannot carry alternating sides on a circle",
            cuts.len()
        )));
    }

    // Even count: arcs between consecutive planes alternate sign, anchored
    // at the arc containing the declared positive point.
    let arc_of = |coord: f64| -> usize {
        // Index of the arc [cuts[i], cuts[i+1}) (periodic) containing coord.
        match cuts.binary_search_by(|c| c.partial_cmp(&coord).unwrap()) {
            Ok(i) => i,
            Err(0) => cuts.len() - 1, // before first cut = wrap arc
            Err(i) => i - 1,
        }
    };
    let anchor = arc_of(p);
    let unsigned = |coord: f64| -> f64 {
        cuts.iter()
            .map(|&c| domain.axis_distance(axis, coord, c))
            .fold(f64::INFINITY, f64::min)
    };
    let out = ScalarField::from_fn(*domain, |x| {
        let coord = x[axis].rem_euclid(l);
        let sign = if (arc_of(coord) + anchor) % 2 == 0 { 1.0 } else { -1.0 };
        sign * unsigned(coord)
    });
    Ok(out)
}

/// Unsigned distance to a finite point set (exact, periodic metric).
pub fn point_set_distance(domain: &TorusDomain, k: &PointSet) -> Result<ScalarField> {
    if k.is_empty() {
        return Err(AcError::EmptyDistanceSource);
    }
    Ok(ScalarField::from_fn(*domain, |x| {
        k.torus_distance_to(domain, x)
    }))
}

/// Hausdorff distance between point sets in the flat-torus metric.
pub fn hausdorff_distance(a: &PointSet, b: &PointSet, domain: &TorusDomain) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(AcError::EmptyDistanceSource);
    }
    let one_sided = |from: &PointSet, to: &PointSet| -> f64 {
        from.points()
            .iter()
            .map(|&p| to.torus_distance_to(domain, p))
            .fold(0.0, f64::max)
    };
    Ok(one_sided(a, b).max(one_sided(b, a)))
}

/// Gaps reported by [`distance_convergence_probe`].
#[derive(Debug, Clone, Copy)]
pub struct ProbeGap {
    pub hausdorff: f64,
    /// ‖d_{K_n} − d_K‖_{L¹} + ‖∇d_{K_n} − ∇d_K‖_{L¹}.
    pub w11: f64,
    /// sup over grid cells of |d_{K_n} − d_K| (≤ hausdorff).
    pub sup: f64,
}

/// For each perturbed set K_n, the Hausdorff gap d_H(K_n, K) together with
/// the W¹,¹ gap of the distance functions.
pub fn distance_convergence_probe(
    domain: &TorusDomain,
    base: &PointSet,
    perturbations: &[PointSet],
) -> Result<Vec<ProbeGap>> {
    let d_base = point_set_distance(domain, base)?;
    let g_base: Vec<ScalarField> = (0..domain.dim())
        .map(|a| derivative_centered(&d_base, a))
        .collect();
    let mut out = Vec::with_capacity(perturbations.len());
    for k in perturbations {
        let dk = point_set_distance(domain, k)?;
        let diff = dk.zip_map(&d_base, |a, b| a - b)?;
        let l1 = integrate(&diff.map(f64::abs));
        let sup = diff.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut grad_l1 = 0.0;
        for (a, gb) in g_base.iter().enumerate() {
            let gk = derivative_centered(&dk, a);
            grad_l1 += integrate(&gk.zip_map(gb, |x, y| (x - y).abs())?);
        }
        out.push(ProbeGap {
            hausdorff: hausdorff_distance(k, base, domain)?,
            w11: l1 + grad_l1,
            sup,
        });
    }
    Ok(out)
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    idx: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, idx); the index tiebreak keeps the order of
        // processing deterministic.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Signed distance to the `level` set of `u` by first-order upwind fast
/// marching on the periodic grid. Cells adjacent to the interface are
/// initialized from linear interpolation along grid lines; the sign is
/// inherited from `u − level`.
pub fn fast_marching_signed(u: &ScalarField, level: f64) -> Result<ScalarField> {
    let d = *u.domain();
    let n = u.len();
    let vals = u.values();
    let (min, max) = (u.min(), u.max());
    if !(min < level && level < max) {
        return Err(AcError::EmptyLevelSet { level, min, max });
    }

    let mut dist = vec![f64::INFINITY; n];
    let mut frozen = vec![false; n];
    let mut heap = BinaryHeap::new();

    // Initialize the band of cells whose sign differs from a neighbor.
    for i in 0..n {
        let fi = vals[i] - level;
        if fi == 0.0 {
            dist[i] = 0.0;
            continue;
        }
        let mut best = f64::INFINITY;
        for a in 0..d.dim() {
            let h = d.spacing(a);
            for step in [-1isize, 1] {
                let j = d.neighbor(i, a, step);
                let fj = vals[j] - level;
                if fi * fj < 0.0 {
                    // Linear root between cell centers.
                    let theta = fi / (fi - fj);
                    best = best.min(theta.abs() * h);
                }
            }
        }
        if best.is_finite() {
            dist[i] = best;
        }
    }
    for i in 0..n {
        if dist[i].is_finite() {
            frozen[i] = true;
            heap.push(HeapEntry { dist: dist[i], idx: i });
        }
    }

    // March outward, first-order upwind update.
    let mut trial: Vec<bool> = vec![false; n];
    while let Some(HeapEntry { dist: dcur, idx }) = heap.pop() {
        if dcur > dist[idx] {
            continue; // stale entry
        }
        frozen[idx] = true;
        for a in 0..d.dim() {
            for step in [-1isize, 1] {
                let j = d.neighbor(idx, a, step);
                if frozen[j] {
                    continue;
                }
                let cand = upwind_update(&d, &dist, &frozen, j);
                if cand < dist[j] {
                    dist[j] = cand;
                    trial[j] = true;
                    heap.push(HeapEntry { dist: cand, idx: j });
                }
            }
        }
    }

    let signed: Vec<f64> = (0..n)
        .map(|i| {
            let s = if vals[i] - level >= 0.0 { 1.0 } else { -1.0 };
            s * dist[i]
        })
        .collect();
    ScalarField::new(d, signed)
}

/// Solve Σ_a max((d − m_a)/h_a, 0)² = 1 for d, using the frozen upwind
/// neighbor minimum m_a per axis.
fn upwind_update(d: &TorusDomain, dist: &[f64], frozen: &[bool], idx: usize) -> f64 {
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(3); // (m_a, h_a)
    for a in 0..d.dim() {
        let mut m = f64::INFINITY;
        for step in [-1isize, 1] {
            let j = d.neighbor(idx, a, step);
            if frozen[j] {
                m = m.min(dist[j]);
            }
        }
        if m.is_finite() {
            pairs.push((m, d.spacing(a)));
        }
    }
    if pairs.is_empty() {
        return f64::INFINITY;
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    // Incrementally include axes while the solution exceeds the next value.
    let mut best = f64::INFINITY;
    for k in 1..=pairs.len() {
        let used = &pairs[..k];
        // Σ ((d − m_a)/h_a)² = 1 with all terms active:
        //   d = (Σ m_a w_a + sqrt((Σ m_a w_a)² − (Σ w_a)(Σ m_a² w_a − 1))) / Σ w_a,
        // with w_a = 1/h_a².
        let sw: f64 = used.iter().map(|(_, h)| 1.0 / (h * h)).sum();
        let smw: f64 = used.iter().map(|(m, h)| m / (h * h)).sum();
        let sm2w: f64 = used.iter().map(|(m, h)| m * m / (h * h)).sum();
        let disc = smw * smw - sw * (sm2w - 1.0);
        if disc < 0.0 {
            continue;
        }
        let cand = (smw + disc.sqrt()) / sw;
        // Valid if the solution dominates every value actually used and not
        // the next (sorted) one.
        if cand + 1e-15 >= used[k - 1].0 && (k == pairs.len() || cand <= pairs[k].0 + 1e-15) {
            best = best.min(cand);
        }
    }
    if best.is_finite() {
        best
    } else {
        // Fall back to the one-axis update from the smallest neighbor.
        pairs[0].0 + pairs[0].1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::gradient_modulus_centered;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn single_plane_is_periodic_sawtooth() {
        // K = {x₁ = 1/2} on [0,1), positive side (1/2, 1): d(1/2) = 0 and
        // d(0) = −1/2.
        let d = TorusDomain::circle(1.0, 64).unwrap();
        let sd = signed_distance(
            &d,
            &DistanceSource::Hyperplanes {
                axis: 0,
                offsets: vec![0.5],
                positive_point: [0.75, 0.0, 0.0],
            },
        )
        .unwrap();
        assert_relative_eq!(sd.values()[32], 0.0, epsilon = 1e-12); // x = 1/2
        assert_relative_eq!(sd.values()[0], -0.5, epsilon = 1e-12); // x = 0
        assert_relative_eq!(sd.values()[48], 0.25, epsilon = 1e-12); // x = 3/4
    }

    #[test]
    fn distance_vanishes_on_the_source() {
        let d = TorusDomain::rect(1.0, 1.0, 32, 32).unwrap();
        let sd = signed_distance(
            &d,
            &DistanceSource::Hyperplanes {
                axis: 0,
                offsets: vec![0.25, 0.75],
                positive_point: [0.0, 0.0, 0.0],
            },
        )
        .unwrap();
        // Cells on the planes x₁ = 0.25 (i = 8) and x₁ = 0.75 (i = 24).
        for j in 0..32 {
            assert!(sd.values()[8 * 32 + j].abs() < 1e-12);
            assert!(sd.values()[24 * 32 + j].abs() < 1e-12);
        }
        // Between the planes the sign must be opposite to the declared side.
        assert!(sd.values()[16 * 32] < 0.0);
        assert!(sd.values()[0] > 0.0);
    }

    #[test]
    fn empty_source_is_rejected() {
        let d = TorusDomain::circle(1.0, 16).unwrap();
        let r = signed_distance(
            &d,
            &DistanceSource::Hyperplanes {
                axis: 0,
                offsets: vec![],
                positive_point: [0.0; 3],
            },
        );
        assert!(matches!(r, Err(AcError::EmptyDistanceSource)));
    }

    #[test]
    fn inconsistent_side_is_rejected() {
        let d = TorusDomain::circle(1.0, 16).unwrap();
        let r = signed_distance(
            &d,
            &DistanceSource::Hyperplanes {
                axis: 0,
                offsets: vec![0.1, 0.4, 0.8],
                positive_point: [0.0; 3],
            },
        );
        assert!(matches!(r, Err(AcError::InconsistentSide(_))));
    }

    #[test]
    fn fast_marching_circle_matches_radial_distance() {
        let n = 128;
        let d = TorusDomain::rect(1.0, 1.0, n, n).unwrap();
        let h = d.spacing(0);
        let r = 0.3;
        let level_fn = ScalarField::from_fn(d, |x| {
            d.torus_distance(x, [0.5, 0.5, 0.0]) - r
        });
        let sd = fast_marching_signed(&level_fn, 0.0).unwrap();
        // Compare against the exact signed radial distance.
        let mut errs: Vec<f64> = Vec::new();
        for i in 0..sd.len() {
            let x = d.cell_center(i);
            let exact = d.torus_distance(x, [0.5, 0.5, 0.0]) - r;
            errs.push((sd.values()[i] - exact).abs());
        }
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = errs[errs.len() / 2];
        assert!(median <= 2.0 * h, "median distance error {median:.3e} vs 2h = {:.3e}", 2.0 * h);

        // Eikonal residual: median over cells of ||∇d| − 1| ≤ 2h.
        let gm = gradient_modulus_centered(&sd);
        let mut res: Vec<f64> = gm.values().iter().map(|g| (g - 1.0).abs()).collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(res[res.len() / 2] <= 2.0 * h);
    }

    #[test]
    fn hausdorff_basics() {
        let d = TorusDomain::rect(1.0, 1.0, 32, 32).unwrap();
        let a = PointSet::hyperplane(&d, 0, 0.2, 32);
        let b = PointSet::hyperplane(&d, 0, 0.3, 32);
        assert_relative_eq!(hausdorff_distance(&a, &a, &d).unwrap(), 0.0);
        assert_relative_eq!(hausdorff_distance(&a, &b, &d).unwrap(), 0.1, epsilon = 1e-12);

        let c1 = TorusDomain::circle(1.0, 16).unwrap();
        let p = PointSet::new(&c1, vec![[0.1, 0.0, 0.0]]);
        let q = PointSet::new(&c1, vec![[0.9, 0.0, 0.0]]);
        assert_relative_eq!(hausdorff_distance(&p, &q, &c1).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn probe_identical_sets_give_zero() {
        let d = TorusDomain::rect(1.0, 1.0, 32, 32).unwrap();
        let k = PointSet::hyperplane(&d, 0, 0.5, 32);
        let gaps = distance_convergence_probe(&d, &k, &[k.clone()]).unwrap();
        assert!(gaps[0].hausdorff < 1e-12);
        assert!(gaps[0].w11 < 1e-12);
    }

    #[test]
    fn probe_hyperplane_family_shrinks() {
        // K_n = {x₁ = 1/2 + 1/n}: sup gap = 1/n exactly (grid-aligned
        // shifts) and the W¹,¹ gap decreases to 0.
        let n = 128;
        let d = TorusDomain::rect(1.0, 1.0, n, n).unwrap();
        let base = PointSet::hyperplane(&d, 0, 0.5, n);
        let shifts = [8, 4, 2, 1]; // cells; offsets 1/16, 1/32, 1/64, 1/128
        let perts: Vec<PointSet> = shifts
            .iter()
            .map(|&c| PointSet::hyperplane(&d, 0, 0.5 + c as f64 / n as f64, n))
            .collect();
        let gaps = distance_convergence_probe(&d, &base, &perts).unwrap();
        for (g, &c) in gaps.iter().zip(&shifts) {
            let shift = c as f64 / n as f64;
            assert_relative_eq!(g.sup, shift, epsilon = 1e-10);
            assert!(g.sup <= g.hausdorff + 1e-12);
        }
        for w in gaps.windows(2) {
            assert!(w[1].w11 < w[0].w11);
        }
    }

    proptest! {
        #[test]
        fn hausdorff_triangle_inequality(
            xs in prop::collection::vec(0.0f64..1.0, 3..6),
            ys in prop::collection::vec(0.0f64..1.0, 3..6),
            zs in prop::collection::vec(0.0f64..1.0, 3..6),
        ) {
            let d = TorusDomain::circle(1.0, 16).unwrap();
            let mk = |v: &Vec<f64>| PointSet::new(&d, v.iter().map(|&x| [x, 0.0, 0.0]).collect());
            let (a, b, c) = (mk(&xs), mk(&ys), mk(&zs));
            let ab = hausdorff_distance(&a, &b, &d).unwrap();
            let bc = hausdorff_distance(&b, &c, &d).unwrap();
            let ac = hausdorff_distance(&a, &c, &d).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn signed_distance_is_one_lipschitz(center in 0.05f64..0.45, halfwidth in 0.05f64..0.2) {
            // Band sources (two planes) separate the circle, so the signed
            // distance itself is 1-Lipschitz on all sampled pairs. (A
            // single plane does not separate the torus and its sawtooth
            // necessarily jumps at the antipodal ridge; only the unsigned
            // distance is Lipschitz there.)
            let d = TorusDomain::circle(1.0, 64).unwrap();
            let sd = signed_distance(&d, &DistanceSource::Hyperplanes {
                axis: 0,
                offsets: vec![center - halfwidth, center + halfwidth],
                positive_point: [(center + 0.5).rem_euclid(1.0), 0.0, 0.0],
            }).unwrap();
            for i in 0..sd.len() {
                for j in (i + 1)..sd.len().min(i + 8) {
                    let xi = d.cell_center(i);
                    let xj = d.cell_center(j);
                    let lhs = (sd.values()[i] - sd.values()[j]).abs();
                    prop_assert!(lhs <= d.torus_distance(xi, xj) + 1e-12);
                }
            }
        }
    }
}
