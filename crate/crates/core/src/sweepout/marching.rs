//! Level-set extraction: root interpolation in 1-D, marching squares in
//! 2-D (saddle cells resolved by the cell-center average), marching cubes
//! in 3-D with the classic case table. All traversals are in index order,
//! so the output is deterministic.

use super::mc_tables::{CORNER_OFFSETS, EDGE_CORNERS, TRIANGLE_TABLE};
use crate::error::{AcError, Result};
use crate::geometry::ScalarField;

/// Dimension-dependent geometry of one extracted level set.
#[derive(Debug, Clone)]
pub enum SliceGeometry {
    /// 1-D: crossing points.
    Points(Vec<[f64; 3]>),
    /// 2-D: line segments.
    Segments(Vec<[[f64; 3]; 2]>),
    /// 3-D: triangles.
    Triangles(Vec<[[f64; 3]; 3]>),
}

/// A level set of a field with its (n−1)-measure: point count in 1-D,
/// length in 2-D, area in 3-D.
#[derive(Debug, Clone)]
pub struct InterfaceSlice {
    pub geometry: SliceGeometry,
    pub measure: f64,
    pub level: f64,
}

impl InterfaceSlice {
    /// All vertices, wrapped into the fundamental domain.
    pub fn sample_points(&self, domain: &crate::geometry::TorusDomain) -> Vec<[f64; 3]> {
        let raw: Vec<[f64; 3]> = match &self.geometry {
            SliceGeometry::Points(p) => p.clone(),
            SliceGeometry::Segments(s) => s.iter().flatten().copied().collect(),
            SliceGeometry::Triangles(t) => t.iter().flatten().copied().collect(),
        };
        raw.into_iter().map(|p| domain.wrap_point(p)).collect()
    }

    pub fn is_empty(&self) -> bool {
        match &self.geometry {
            SliceGeometry::Points(p) => p.is_empty(),
            SliceGeometry::Segments(s) => s.is_empty(),
            SliceGeometry::Triangles(t) => t.is_empty(),
        }
    }
}

/// Extract the `level` set of `u` by marching.
pub fn extract_zero_set(u: &ScalarField, level: f64) -> Result<InterfaceSlice> {
    let (min, max) = (u.min(), u.max());
    if !(min < level && level < max) {
        return Err(AcError::EmptyLevelSet { level, min, max });
    }
    // Corner values exactly on the level are nudged so every cell has a
    // well-defined sign configuration.
    let scale = (max - min).max(1e-300);
    let g = |v: f64| {
        let t = v - level;
        if t == 0.0 {
            1e-12 * scale
        } else {
            t
        }
    };
    match u.domain().dim() {
        1 => extract_1d(u, level, &g),
        2 => extract_2d(u, level, &g),
        _ => extract_3d(u, level, &g),
    }
}

fn extract_1d(
    u: &ScalarField,
    level: f64,
    g: &dyn Fn(f64) -> f64,
) -> Result<InterfaceSlice> {
    let d = u.domain();
    let n = d.grid(0);
    let h = d.spacing(0);
    let mut pts = Vec::new();
    for i in 0..n {
        let a = g(u.values()[i]);
        let b = g(u.values()[(i + 1) % n]);
        if a * b < 0.0 {
            let theta = a / (a - b);
            pts.push([(i as f64 + theta) * h, 0.0, 0.0]);
        }
    }
    let measure = pts.len() as f64;
    Ok(InterfaceSlice {
        geometry: SliceGeometry::Points(pts),
        measure,
        level,
    })
}

fn extract_2d(
    u: &ScalarField,
    level: f64,
    g: &dyn Fn(f64) -> f64,
) -> Result<InterfaceSlice> {
    let d = u.domain();
    let (n1, n2) = (d.grid(0), d.grid(1));
    let (h1, h2) = (d.spacing(0), d.spacing(1));
    let mut segments: Vec<[[f64; 3]; 2]> = Vec::new();
    let val = |i: usize, j: usize| g(u.values()[d.index([i % n1, j % n2, 0])]);

    for i in 0..n1 {
        for j in 0..n2 {
            // Corners counterclockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
            let c = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
            let mut case = 0usize;
            for (b, &v) in c.iter().enumerate() {
                if v > 0.0 {
                    case |= 1 << b;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            let x0 = i as f64 * h1;
            let y0 = j as f64 * h2;
            // Edge midcrossings: 0 bottom (c0-c1), 1 right (c1-c2),
            // 2 top (c3-c2), 3 left (c0-c3).
            let cross = |a: f64, b: f64| a / (a - b);
            let e = |k: usize| -> [f64; 3] {
                match k {
                    0 => [x0 + h1 * cross(c[0], c[1]), y0, 0.0],
                    1 => [x0 + h1, y0 + h2 * cross(c[1], c[2]), 0.0],
                    2 => [x0 + h1 * cross(c[3], c[2]), y0 + h2, 0.0],
                    _ => [x0, y0 + h2 * cross(c[0], c[3]), 0.0],
                }
            };
            let mut push = |a: usize, b: usize| segments.push([e(a), e(b)]);
            match case {
                1 | 14 => push(3, 0),
                2 | 13 => push(0, 1),
                3 | 12 => push(3, 1),
                4 | 11 => push(1, 2),
                6 | 9 => push(0, 2),
                7 | 8 => push(2, 3),
                5 | 10 => {
                    // Saddle: disambiguate by the cell-center average.
                    let center = (c[0] + c[1] + c[2] + c[3]) / 4.0;
                    let positive_center = center > 0.0;
                    // case 5: corners 0 and 2 positive; case 10: 1 and 3.
                    let connect_03_12 = (case == 5) == positive_center;
                    if connect_03_12 {
                        push(3, 2);
                        push(0, 1);
                    } else {
                        push(3, 0);
                        push(1, 2);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    let measure = segments
        .iter()
        .map(|s| {
            let dx = s[1][0] - s[0][0];
            let dy = s[1][1] - s[0][1];
            (dx * dx + dy * dy).sqrt()
        })
        .sum();
    Ok(InterfaceSlice {
        geometry: SliceGeometry::Segments(segments),
        measure,
        level,
    })
}

fn extract_3d(
    u: &ScalarField,
    level: f64,
    g: &dyn Fn(f64) -> f64,
) -> Result<InterfaceSlice> {
    let d = u.domain();
    let (n1, n2, n3) = (d.grid(0), d.grid(1), d.grid(2));
    let (h1, h2, h3) = (d.spacing(0), d.spacing(1), d.spacing(2));
    let val = |i: usize, j: usize, k: usize| g(u.values()[d.index([i % n1, j % n2, k % n3])]);
    let mut triangles: Vec<[[f64; 3]; 3]> = Vec::new();

    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                // Table convention: x and y span the cube base, z the
                // vertical axis; map (x, y, z) -> (axis0, axis1, axis2).
                let corner = |c: usize| {
                    let [ox, oy, oz] = CORNER_OFFSETS[c];
                    val(i + ox, j + oy, k + oz)
                };
                let vals: Vec<f64> = (0..8).map(corner).collect();
                let mut case = 0usize;
                for (b, &v) in vals.iter().enumerate() {
                    if v > 0.0 {
                        case |= 1 << b;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let base = [i as f64 * h1, j as f64 * h2, k as f64 * h3];
                let vertex = |edge: usize| -> [f64; 3] {
                    let [a, b] = EDGE_CORNERS[edge];
                    let (va, vb) = (vals[a], vals[b]);
                    let t = va / (va - vb);
                    let oa = CORNER_OFFSETS[a];
                    let ob = CORNER_OFFSETS[b];
                    [
                        base[0] + h1 * (oa[0] as f64 + t * (ob[0] as f64 - oa[0] as f64)),
                        base[1] + h2 * (oa[1] as f64 + t * (ob[1] as f64 - oa[1] as f64)),
                        base[2] + h3 * (oa[2] as f64 + t * (ob[2] as f64 - oa[2] as f64)),
                    ]
                };
                let row = &TRIANGLE_TABLE[case];
                let mut m = 0;
                while m < 16 && row[m] >= 0 {
                    triangles.push([
                        vertex(row[m] as usize),
                        vertex(row[m + 1] as usize),
                        vertex(row[m + 2] as usize),
                    ]);
                    m += 3;
                }
            }
        }
    }
    let measure = triangles.iter().map(|t| triangle_area(t)).sum();
    Ok(InterfaceSlice {
        geometry: SliceGeometry::Triangles(triangles),
        measure,
        level,
    })
}

fn triangle_area(t: &[[f64; 3]; 3]) -> f64 {
    let u = [t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]];
    let v = [t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]];
    let c = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TorusDomain;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    #[test]
    fn cosine_zero_set_measures_two_lines() {
        let d = TorusDomain::rect(1.0, 1.0, 128, 128).unwrap();
        let h = d.spacing(0);
        let u = ScalarField::from_fn(d, |x| (TAU * x[0]).cos());
        let s = extract_zero_set(&u, 0.0).unwrap();
        assert_relative_eq!(s.measure, 2.0, epsilon = 2.0 * h);
    }

    #[test]
    fn two_kink_gives_exactly_two_points() {
        let d = TorusDomain::circle(20.0, 256).unwrap();
        let u = ScalarField::from_fn(d, |x| {
            ((x[0] - 5.0) / 0.5).tanh() * (-((x[0] - 15.0) / 0.5).tanh())
        });
        let s = extract_zero_set(&u, 0.0).unwrap();
        match &s.geometry {
            SliceGeometry::Points(p) => assert_eq!(p.len(), 2),
            _ => panic!("expected points"),
        }
        assert_relative_eq!(s.measure, 2.0);
    }

    #[test]
    fn level_outside_range_errors() {
        let d = TorusDomain::circle(1.0, 16).unwrap();
        let u = ScalarField::from_fn(d, |x| (TAU * x[0]).sin());
        assert!(matches!(
            extract_zero_set(&u, 2.0),
            Err(AcError::EmptyLevelSet { .. })
        ));
    }

    #[test]
    fn translation_equivariance_of_measure() {
        let d = TorusDomain::rect(2.0, 1.0, 64, 32).unwrap();
        let u = ScalarField::from_fn(d, |x| {
            (TAU * x[0] / 2.0).cos() + 0.3 * (TAU * x[1]).sin()
        });
        let m0 = extract_zero_set(&u, 0.1).unwrap().measure;
        for cells in [1isize, 7, 16] {
            let v = u.translate_cells(0, cells);
            let m = extract_zero_set(&v, 0.1).unwrap().measure;
            assert_relative_eq!(m, m0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sphere_area_from_marching_cubes() {
        let n = 48;
        let d = TorusDomain::new(3, &[1.0, 1.0, 1.0], &[n, n, n]).unwrap();
        let r = 0.3;
        let u = ScalarField::from_fn(d, |x| {
            let dx = x[0] - 0.5;
            let dy = x[1] - 0.5;
            let dz = x[2] - 0.5;
            (dx * dx + dy * dy + dz * dz).sqrt() - r
        });
        let s = extract_zero_set(&u, 0.0).unwrap();
        let exact = 4.0 * std::f64::consts::PI * r * r;
        assert_relative_eq!(s.measure, exact, max_relative = 0.02);
    }

    #[test]
    fn saddle_cells_produce_consistent_topology() {
        // A checkerboard-like field exercises the ambiguous cases; the
        // extraction must stay finite and deterministic.
        let d = TorusDomain::rect(1.0, 1.0, 16, 16).unwrap();
        let u = ScalarField::from_fn(d, |x| (TAU * 4.0 * x[0]).sin() * (TAU * 4.0 * x[1]).sin());
        let a = extract_zero_set(&u, 0.0).unwrap();
        let b = extract_zero_set(&u, 0.0).unwrap();
        assert_eq!(a.measure.to_bits(), b.measure.to_bits());
        assert!(a.measure > 0.0);
    }
}
