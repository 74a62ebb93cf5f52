//! Flat periodic domains, fields, differential operators and quadrature.
//!
//! The domain is a flat torus `[0,L₁) × … × [0,L_d)` sampled on a uniform
//! grid with per-axis spacing `h_i = L_i / n_i`. Cell values are stored in
//! row-major order with the last axis fastest: `index = (i₁·n₂ + i₂)·n₃ + i₃`
//! (absent axes contribute a factor 1).
//!
//! Two discrete gradients coexist on purpose:
//!
//! - `gradient_field` is the second-order centered difference, used by the
//!   diagnostics (eikonal residuals, first-variation identity, normals).
//! - The Dirichlet energy pairs forward differences with their adjoint, so
//!   that discrete integration by parts is exact and the Euler–Lagrange
//!   field is the exact algebraic gradient of the discrete energy. See
//!   [`dirichlet_inner`] and [`grad_squared_cellavg`].

mod distance;

pub use distance::{
    distance_convergence_probe, fast_marching_signed, hausdorff_distance, point_set_distance,
    signed_distance, DistanceSource, ProbeGap,
};

use crate::error::{AcError, Result};

/// Flat periodic box with a uniform grid.
///
/// Unused axes carry length 1 and a single cell so that products over all
/// three slots give the right cell volume in every dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusDomain {
    dim: usize,
    lengths: [f64; 3],
    grid: [usize; 3],
}

impl TorusDomain {
    pub fn new(dim: usize, lengths: &[f64], grid: &[usize]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(AcError::InvalidDomain(format!(
                "dim must be 1, 2 or 3 (got {dim})"
            )));
        }
        if lengths.len() != dim || grid.len() != dim {
            return Err(AcError::InvalidDomain(format!(
                "expected {dim} lengths and grid sizes, got {} and {}",
                lengths.len(),
                grid.len()
            )));
        }
        let mut ls = [1.0; 3];
        let mut ns = [1usize; 3];
        let mut cells: usize = 1;
        for a in 0..dim {
            if !(lengths[a].is_finite() && lengths[a] > 0.0) {
                return Err(AcError::InvalidDomain(format!(
                    "length {} on axis {a} must be positive",
                    lengths[a]
                )));
            }
            if grid[a] < 8 {
                return Err(AcError::InvalidDomain(format!(
                    "grid {} on axis {a} is below the minimum of 8",
                    grid[a]
                )));
            }
            cells = cells
                .checked_mul(grid[a])
                .ok_or_else(|| AcError::InvalidDomain("cell count overflows".into()))?;
            ls[a] = lengths[a];
            ns[a] = grid[a];
        }
        if cells > (1usize << 31) {
            return Err(AcError::InvalidDomain(format!(
                "cell count {cells} exceeds addressable budget"
            )));
        }
        Ok(Self {
            dim,
            lengths: ls,
            grid: ns,
        })
    }

    /// 1-D circle of the given circumference.
    pub fn circle(length: f64, n: usize) -> Result<Self> {
        Self::new(1, &[length], &[n])
    }

    /// 2-D rectangular torus.
    pub fn rect(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(2, &[lx, ly], &[nx, ny])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn grid(&self, axis: usize) -> usize {
        self.grid[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.grid[axis] as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    pub fn min_length(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.lengths[a])
            .fold(f64::INFINITY, f64::min)
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.grid[0] * self.grid[1] * self.grid[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume dV = ∏ h_i.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Vol(M) = ∏ L_i.
    pub fn total_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.lengths[a]).product()
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[0] * self.grid[1] + c[1]) * self.grid[2] + c[2]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i3 = idx % self.grid[2];
        let rest = idx / self.grid[2];
        let i2 = rest % self.grid[1];
        let i1 = rest / self.grid[1];
        [i1, i2, i3]
    }

    /// Center of cell `idx` (values on unused axes are 0).
    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = c[a] as f64 * self.spacing(a);
        }
        x
    }

    /// Shift of a flat index by ±1 along `axis` with periodic wrap.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, step: isize) -> usize {
        let mut c = self.coords(idx);
        let n = self.grid[axis] as isize;
        c[axis] = ((c[axis] as isize + step).rem_euclid(n)) as usize;
        self.index(c)
    }

    /// Periodic distance between two coordinates on one axis.
    #[inline]
    pub fn axis_distance(&self, axis: usize, a: f64, b: f64) -> f64 {
        let l = self.lengths[axis];
        let d = (a - b).rem_euclid(l);
        d.min(l - d)
    }

    /// Signed offset a − b wrapped to [−L/2, L/2).
    #[inline]
    pub fn axis_offset(&self, axis: usize, a: f64, b: f64) -> f64 {
        let l = self.lengths[axis];
        let d = (a - b).rem_euclid(l);
        if d >= l / 2.0 {
            d - l
        } else {
            d
        }
    }

    /// Flat-torus distance between two points.
    pub fn torus_distance(&self, p: [f64; 3], q: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim {
            let d = self.axis_distance(a, p[a], q[a]);
            s += d * d;
        }
        s.sqrt()
    }

    /// Reduce a point into the fundamental domain [0, L_i).
    pub fn wrap_point(&self, p: [f64; 3]) -> [f64; 3] {
        let mut q = [0.0; 3];
        for a in 0..self.dim {
            q[a] = p[a].rem_euclid(self.lengths[a]);
        }
        q
    }
}

/// Values of a scalar function sampled at cell centers of a [`TorusDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    domain: TorusDomain,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: TorusDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(AcError::InvalidDomain(format!(
                "value count {} does not match cell count {}",
                values.len(),
                domain.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AcError::InvalidDomain("non-finite field value".into()));
        }
        Ok(Self { domain, values })
    }

    pub fn constant(domain: TorusDomain, c: f64) -> Self {
        Self {
            domain,
            values: vec![c; domain.len()],
        }
    }

    /// Sample a function of the cell-center coordinates.
    pub fn from_fn(domain: TorusDomain, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..domain.len()).map(|i| f(domain.cell_center(i))).collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean value (1/Vol)·∫u.
    pub fn mean(&self) -> f64 {
        integrate(self) / self.domain.total_volume()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            domain: self.domain,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_domain(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            domain: self.domain,
            values,
        })
    }

    /// self += c · other.
    pub fn axpy(&mut self, c: f64, other: &Self) -> Result<()> {
        same_domain(self, other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// Clamp all values into [lo, hi].
    pub fn clamp(&self, lo: f64, hi: f64) -> Self {
        self.map(|v| v.clamp(lo, hi))
    }

    /// L² norm √∫u².
    pub fn l2_norm(&self) -> f64 {
        inner(self, self).sqrt()
    }

    /// Volume of the superlevel set {u > level}.
    pub fn superlevel_volume(&self, level: f64) -> f64 {
        let dv = self.domain.cell_volume();
        self.values.iter().filter(|&&v| v > level).count() as f64 * dv
    }

    /// Volume of {lo ≤ u ≤ hi}.
    pub fn band_volume(&self, lo: f64, hi: f64) -> f64 {
        let dv = self.domain.cell_volume();
        self.values
            .iter()
            .filter(|&&v| v >= lo && v <= hi)
            .count() as f64
            * dv
    }

    /// Translate the field by whole cells along an axis (periodic).
    pub fn translate_cells(&self, axis: usize, cells: isize) -> Self {
        let d = &self.domain;
        let mut out = vec![0.0; self.values.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.values[d.neighbor(i, axis, -cells)];
        }
        Self {
            domain: self.domain,
            values: out,
        }
    }
}

pub(crate) fn same_domain(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.domain != b.domain {
        return Err(AcError::DomainMismatch);
    }
    Ok(())
}

/// Fixed-topology pairwise sum: deterministic independently of threading.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Fixed-topology pairwise dot product (same determinism guarantee).
pub(crate) fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= 64 {
        return a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    }
    let mid = a.len() / 2;
    pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
}

/// Volume quadrature dV·Σu. Trapezoid = midpoint on a periodic grid, so this
/// is spectrally accurate for smooth periodic integrands.
pub fn integrate(u: &ScalarField) -> f64 {
    u.domain.cell_volume() * pairwise_sum(&u.values)
}

/// ∫ u·v.
pub fn inner(u: &ScalarField, v: &ScalarField) -> f64 {
    debug_assert_eq!(u.domain, v.domain);
    let prods: Vec<f64> = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(&a, &b)| a * b)
        .collect();
    u.domain.cell_volume() * pairwise_sum(&prods)
}

/// Second-order centered periodic finite-difference Laplacian.
///
/// Linear, annihilates constants, and symmetric with respect to [`inner`].
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let d = u.domain;
    let n = u.values.len();
    let mut out = vec![0.0; n];
    for a in 0..d.dim() {
        let h2 = d.spacing(a) * d.spacing(a);
        add_second_difference(&d, &u.values, &mut out, a, 1.0 / h2);
    }
    ScalarField { domain: d, values: out }
}

fn add_second_difference(
    d: &TorusDomain,
    src: &[f64],
    dst: &mut [f64],
    axis: usize,
    scale: f64,
) {
    // Specialized stride walk: periodic (u₊ − 2u + u₋) along `axis`.
    let n_axis = d.grid(axis);
    let stride = match axis {
        0 => d.grid(1) * d.grid(2),
        1 => d.grid(2),
        _ => 1,
    };
    let outer = src.len() / n_axis;
    for line in 0..outer {
        // Base index of this grid line.
        let base = line_base(d, axis, line);
        for i in 0..n_axis {
            let here = base + i * stride;
            let up = base + ((i + 1) % n_axis) * stride;
            let dn = base + ((i + n_axis - 1) % n_axis) * stride;
            dst[here] += scale * (src[up] - 2.0 * src[here] + src[dn]);
        }
    }
}

/// Flat index of the first cell of the `line`-th grid line along `axis`.
fn line_base(d: &TorusDomain, axis: usize, line: usize) -> usize {
    let (n2, n3) = (d.grid(1), d.grid(2));
    match axis {
        0 => {
            // lines indexed by (i2, i3)
            let i2 = line / n3;
            let i3 = line % n3;
            i2 * n3 + i3
        }
        1 => {
            // lines indexed by (i1, i3)
            let i1 = line / n3;
            let i3 = line % n3;
            (i1 * n2) * n3 + i3
        }
        _ => {
            // lines indexed by (i1, i2)
            let i1 = line / n2;
            let i2 = line % n2;
            (i1 * n2 + i2) * n3
        }
    }
}

/// Centered periodic difference along one axis.
pub fn derivative_centered(u: &ScalarField, axis: usize) -> ScalarField {
    let d = u.domain;
    let h2 = 2.0 * d.spacing(axis);
    let n_axis = d.grid(axis);
    let stride = match axis {
        0 => d.grid(1) * d.grid(2),
        1 => d.grid(2),
        _ => 1,
    };
    let mut out = vec![0.0; u.values.len()];
    let outer = u.values.len() / n_axis;
    for line in 0..outer {
        let base = line_base(&d, axis, line);
        for i in 0..n_axis {
            let here = base + i * stride;
            let up = base + ((i + 1) % n_axis) * stride;
            let dn = base + ((i + n_axis - 1) % n_axis) * stride;
            out[here] = (u.values[up] - u.values[dn]) / h2;
        }
    }
    ScalarField { domain: d, values: out }
}

/// Centered periodic gradient, one field per axis.
pub fn gradient_field(u: &ScalarField) -> Vec<ScalarField> {
    (0..u.domain.dim()).map(|a| derivative_centered(u, a)).collect()
}

/// Pointwise |∇u| from the centered gradient.
pub fn gradient_modulus_centered(u: &ScalarField) -> ScalarField {
    let g = gradient_field(u);
    let mut out = vec![0.0; u.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        let s: f64 = g.iter().map(|c| c.values[i] * c.values[i]).sum();
        *slot = s.sqrt();
    }
    ScalarField { domain: u.domain, values: out }
}

/// Cell-centered average of forward/backward difference energies:
/// |∇u|²_i = ½ Σ_a [(D⁺_a u)² + (D⁻_a u)²].
///
/// Summed over the grid this equals the forward-difference Dirichlet form,
/// so the discrete energy built on it has [`crate::energy::euler_lagrange`]
/// as its exact gradient.
pub fn grad_squared_cellavg(u: &ScalarField) -> ScalarField {
    let d = u.domain;
    let mut out = vec![0.0; u.values.len()];
    for a in 0..d.dim() {
        let h = d.spacing(a);
        let n_axis = d.grid(a);
        let stride = match a {
            0 => d.grid(1) * d.grid(2),
            1 => d.grid(2),
            _ => 1,
        };
        let outer = u.values.len() / n_axis;
        for line in 0..outer {
            let base = line_base(&d, a, line);
            for i in 0..n_axis {
                let here = base + i * stride;
                let up = base + ((i + 1) % n_axis) * stride;
                let dn = base + ((i + n_axis - 1) % n_axis) * stride;
                let fp = (u.values[up] - u.values[here]) / h;
                let fm = (u.values[here] - u.values[dn]) / h;
                out[here] += 0.5 * (fp * fp + fm * fm);
            }
        }
    }
    ScalarField { domain: d, values: out }
}

/// Forward-difference pairing ∫∇u·∇v = Σ_a ∫ D⁺_a u · D⁺_a v.
///
/// Matched to [`laplacian`] so that ∫v·Δu = −dirichlet_inner(u, v) holds to
/// rounding, not just to O(h²).
pub fn dirichlet_inner(u: &ScalarField, v: &ScalarField) -> Result<f64> {
    same_domain(u, v)?;
    let d = u.domain;
    let mut terms: Vec<f64> = Vec::with_capacity(u.len());
    let mut total = 0.0;
    for a in 0..d.dim() {
        let h = d.spacing(a);
        let n_axis = d.grid(a);
        let stride = match a {
            0 => d.grid(1) * d.grid(2),
            1 => d.grid(2),
            _ => 1,
        };
        terms.clear();
        let outer = u.values.len() / n_axis;
        for line in 0..outer {
            let base = line_base(&d, a, line);
            for i in 0..n_axis {
                let here = base + i * stride;
                let up = base + ((i + 1) % n_axis) * stride;
                let du = (u.values[up] - u.values[here]) / h;
                let dv = (v.values[up] - v.values[here]) / h;
                terms.push(du * dv);
            }
        }
        total += pairwise_sum(&terms);
    }
    Ok(total * d.cell_volume())
}

/// Points on the torus, coordinates reduced to the fundamental domain.
#[derive(Debug, Clone)]
pub struct PointSet {
    dim: usize,
    points: Vec<[f64; 3]>,
}

impl PointSet {
    pub fn new(domain: &TorusDomain, points: Vec<[f64; 3]>) -> Self {
        let pts = points.into_iter().map(|p| domain.wrap_point(p)).collect();
        Self {
            dim: domain.dim(),
            points: pts,
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sample a hyperplane {x_axis = offset} with `per_axis` points per
    /// transverse axis.
    pub fn hyperplane(domain: &TorusDomain, axis: usize, offset: f64, per_axis: usize) -> Self {
        let mut pts = Vec::new();
        match domain.dim() {
            1 => pts.push([offset, 0.0, 0.0]),
            2 => {
                let b = 1 - axis;
                for i in 0..per_axis {
                    let mut p = [0.0; 3];
                    p[axis] = offset;
                    p[b] = i as f64 * domain.length(b) / per_axis as f64;
                    pts.push(p);
                }
            }
            _ => {
                let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
                for i in 0..per_axis {
                    for j in 0..per_axis {
                        let mut p = [0.0; 3];
                        p[axis] = offset;
                        p[others[0]] = i as f64 * domain.length(others[0]) / per_axis as f64;
                        p[others[1]] = j as f64 * domain.length(others[1]) / per_axis as f64;
                        pts.push(p);
                    }
                }
            }
        }
        Self::new(domain, pts)
    }

    pub(crate) fn torus_distance_to(&self, domain: &TorusDomain, x: [f64; 3]) -> f64 {
        self.points
            .iter()
            .map(|&p| domain.torus_distance(x, p))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit_t2(n: usize) -> TorusDomain {
        TorusDomain::rect(1.0, 1.0, n, n).unwrap()
    }

    #[test]
    fn integrate_constant_is_exact() {
        let d = unit_t2(32);
        assert_relative_eq!(integrate(&ScalarField::constant(d, 1.0)), 1.0, epsilon = 1e-15);
        let d3 = TorusDomain::new(3, &[2.0, 1.0, 0.5], &[16, 8, 8]).unwrap();
        assert_relative_eq!(integrate(&ScalarField::constant(d3, 1.0)), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn integrate_cosine_cancels() {
        let d = unit_t2(64);
        let u = ScalarField::from_fn(d, |x| (2.0 * PI * x[0]).cos());
        assert!(integrate(&u).abs() < 1e-13);
    }

    #[test]
    fn laplacian_annihilates_constants() {
        let d = unit_t2(16);
        let u = ScalarField::constant(d, 7.0);
        assert!(laplacian(&u).values().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn laplacian_cosine_matches_stencil_eigenvalue() {
        // u = cos(2πx/L) is an exact eigenfunction of the periodic stencil
        // with eigenvalue −(2/h²)(1 − cos(2πh/L)); that in turn matches the
        // continuum −(2π/L)² to relative 1e−3 at n = 256.
        let l = 2.0;
        let n = 256;
        let d = TorusDomain::circle(l, n).unwrap();
        let h = d.spacing(0);
        let u = ScalarField::from_fn(d, |x| (2.0 * PI * x[0] / l).cos());
        let lu = laplacian(&u);
        let stencil = -(2.0 / (h * h)) * (1.0 - (2.0 * PI * h / l).cos());
        for i in 0..n {
            assert_relative_eq!(lu.values()[i], stencil * u.values()[i], epsilon = 1e-10);
        }
        let continuum = -(2.0 * PI / l) * (2.0 * PI / l);
        assert!((stencil - continuum).abs() / continuum.abs() < 1e-3);
    }

    #[test]
    fn laplacian_is_symmetric() {
        // Overlapping Fourier content so both inner products are O(1).
        let d = unit_t2(24);
        let u = ScalarField::from_fn(d, |x| (2.0 * PI * x[0]).sin() + 0.3 * (4.0 * PI * x[1]).cos());
        let v = ScalarField::from_fn(d, |x| {
            0.7 * (2.0 * PI * x[0]).sin() - 1.3 * (4.0 * PI * x[1]).cos()
                + 0.2 * (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos()
        });
        let a = inner(&v, &laplacian(&u));
        let b = inner(&u, &laplacian(&v));
        assert!(a.abs() > 1.0, "test fields should produce O(1) pairings");
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn integration_by_parts_exact_with_matched_stencils() {
        let d = unit_t2(24);
        let u = ScalarField::from_fn(d, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos());
        let v = ScalarField::from_fn(d, |x| {
            (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos() + 0.4 * (2.0 * PI * x[0]).cos()
        });
        let lhs = inner(&v, &laplacian(&u));
        let rhs = -dirichlet_inner(&u, &v).unwrap();
        assert!(lhs.abs() > 1.0);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn integration_by_parts_centered_is_second_order() {
        let check = |n: usize| -> f64 {
            let d = unit_t2(n);
            let u = ScalarField::from_fn(d, |x| (2.0 * PI * x[0]).sin());
            let v = ScalarField::from_fn(d, |x| (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos());
            let gu = gradient_field(&u);
            let gv = gradient_field(&v);
            let mut dot = 0.0;
            for a in 0..2 {
                dot += inner(&gu[a], &gv[a]);
            }
            (inner(&v, &laplacian(&u)) + dot).abs()
        };
        let e1 = check(16);
        let e2 = check(32);
        // O(h²): quarters when the grid doubles (allow slack).
        assert!(e2 < e1 / 3.0, "e1={e1:.3e} e2={e2:.3e}");
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let d = TorusDomain::new(3, &[1.0, 1.0, 1.0], &[8, 8, 8]).unwrap();
        let u = ScalarField::constant(d, 4.2);
        for g in gradient_field(&u) {
            assert!(g.values().iter().all(|&v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn gradient_matches_shift_quotient() {
        let d = unit_t2(16);
        let u = ScalarField::from_fn(d, |x| (2.0 * PI * x[0]).sin() + (2.0 * PI * x[1]).cos());
        let g = gradient_field(&u);
        let h = d.spacing(0);
        for i in 0..u.len() {
            let up = u.values()[d.neighbor(i, 0, 1)];
            let dn = u.values()[d.neighbor(i, 0, -1)];
            assert_relative_eq!(g[0].values()[i], (up - dn) / (2.0 * h), epsilon = 1e-14);
        }
    }

    #[test]
    fn sawtooth_gradient_has_unit_modulus_away_from_ridges() {
        // signed distance to the plane {x₁ = 1/2}: d(x) = x − 1/2 on [0,1),
        // with the wrap jump at x = 0.
        let n = 64;
        let d = TorusDomain::circle(1.0, n).unwrap();
        let u = ScalarField::from_fn(d, |x| x[0] - 0.5);
        let g = derivative_centered(&u, 0);
        for i in 2..n - 2 {
            assert_relative_eq!(g.values()[i].abs(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn field_construction_rejects_non_finite() {
        let d = unit_t2(8);
        assert!(ScalarField::new(d, vec![f64::NAN; d.len()]).is_err());
    }

    #[test]
    fn domain_rejects_small_grid() {
        assert!(TorusDomain::circle(1.0, 4).is_err());
        assert!(TorusDomain::new(2, &[1.0, -1.0], &[8, 8]).is_err());
    }

    #[test]
    fn band_integrand_matches_1d_quadrature_oracle() {
        // ∫ tanh²(d/(√2 ε)) over T² with d = signed distance to {x₁ = 1/2}:
        // separable, so compare against adaptive 1-D quadrature × transverse
        // length.
        let eps = 0.05;
        let n = 512;
        let d = TorusDomain::rect(1.0, 1.0, n, 8).unwrap();
        let u = ScalarField::from_fn(d, |x| {
            let dist = x[0] - 0.5; // signed distance, |d| ≤ 1/2
            (dist / (f64::sqrt(2.0) * eps)).tanh().powi(2)
        });
        let grid_value = integrate(&u);
        let oracle = crate::quad::adaptive_simpson(
            &|x: f64| ((x - 0.5) / (f64::sqrt(2.0) * eps)).tanh().powi(2),
            0.0,
            1.0,
            1e-12,
            60,
        )
        .unwrap();
        assert_relative_eq!(grid_value, oracle, max_relative = 1e-6);
    }

    proptest! {
        #[test]
        fn laplacian_linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
            let d = TorusDomain::circle(2.0, 32).unwrap();
            let u = ScalarField::from_fn(d, |x| ((seed as f64 + 1.0) * x[0]).sin());
            let v = ScalarField::from_fn(d, |x| (x[0] * 3.0 + seed as f64).cos());
            let mut lin = u.clone();
            lin.scale(a);
            lin.axpy(b, &v).unwrap();
            let lhs = laplacian(&lin);
            let mut rhs = laplacian(&u);
            rhs.scale(a);
            rhs.axpy(b, &laplacian(&v)).unwrap();
            for i in 0..lhs.len() {
                prop_assert!((lhs.values()[i] - rhs.values()[i]).abs() <= 1e-9 * (1.0 + rhs.values()[i].abs()));
            }
        }
    }
}
