use std::collections::HashMap;

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space wavelength in meters.
pub fn wavelength(frequency: f64) -> f64 {
    SPEED_OF_LIGHT / frequency
}

fn check_frequency(frequency: f64) -> Result<()> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(Error::InvalidArgument(format!("frequency must be positive, got {frequency}")));
    }
    Ok(())
}

fn check_size(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_density(epw: u32) -> Result<()> {
    if epw < 5 {
        return Err(Error::InvalidArgument(format!(
            "elements per wavelength must be at least 5, got {epw}"
        )));
    }
    Ok(())
}

fn cells(size_wl: f64, epw: u32) -> usize {
    ((size_wl * epw as f64).round() as usize).max(1)
}

/// Structured triangulation of a `width x height` rectangle in the z = 0 plane,
/// centered at the origin. Every cell is split along its (i,j)-(i+1,j+1) diagonal.
pub fn generate_plate(
    width_wavelengths: f64,
    height_wavelengths: f64,
    elements_per_wavelength: u32,
    frequency: f64,
) -> Result<TriangleMesh> {
    check_size("plate width", width_wavelengths)?;
    check_size("plate height", height_wavelengths)?;
    check_density(elements_per_wavelength)?;
    check_frequency(frequency)?;
    let lam = wavelength(frequency);
    let (w, h) = (width_wavelengths * lam, height_wavelengths * lam);
    let nx = cells(width_wavelengths, elements_per_wavelength);
    let ny = cells(height_wavelengths, elements_per_wavelength);

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = -0.5 * w + w * i as f64 / nx as f64;
            let y = -0.5 * h + h * j as f64 / ny as f64;
            vertices.push(Vec3::new(x, y, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, triangles, Some(frequency))
}

/// Closed, outward-oriented surface mesh of an axis-aligned cube centered at the origin.
pub fn generate_cube(
    side_wavelengths: f64,
    elements_per_wavelength: u32,
    frequency: f64,
) -> Result<TriangleMesh> {
    check_size("cube side", side_wavelengths)?;
    check_density(elements_per_wavelength)?;
    check_frequency(frequency)?;
    let side = side_wavelengths * wavelength(frequency);
    let n = cells(side_wavelengths, elements_per_wavelength);

    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vertex = |p: [usize; 3]| -> usize {
        *index.entry(p).or_insert_with(|| {
            let c = |k: usize| -0.5 * side + side * p[k] as f64 / n as f64;
            vertices.push(Vec3::new(c(0), c(1), c(2)));
            vertices.len() - 1
        })
    };

    let mut triangles = Vec::with_capacity(12 * n * n);
    for d in 0..3 {
        // (u, v, d) is a right-handed frame, so u x v points along +d.
        let (u, v) = ((d + 1) % 3, (d + 2) % 3);
        for outer in [false, true] {
            let level = if outer { n } else { 0 };
            for j in 0..n {
                for i in 0..n {
                    let mut at = |di: usize, dj: usize| {
                        let mut p = [0; 3];
                        p[d] = level;
                        p[u] = i + di;
                        p[v] = j + dj;
                        vertex(p)
                    };
                    let (a, b, c, e) = (at(0, 0), at(1, 0), at(1, 1), at(0, 1));
                    if outer {
                        triangles.push([a, b, c]);
                        triangles.push([a, c, e]);
                    } else {
                        triangles.push([a, c, b]);
                        triangles.push([a, e, c]);
                    }
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles, Some(frequency))
}

const MAX_SPHERE_REFINEMENT: u32 = 9;

/// Icosphere: an icosahedron refined `refinement_level` times by 4-to-1
/// splitting, with every vertex projected onto the sphere.
pub fn generate_sphere(
    radius_wavelengths: f64,
    refinement_level: u32,
    frequency: f64,
) -> Result<TriangleMesh> {
    check_size("sphere radius", radius_wavelengths)?;
    check_frequency(frequency)?;
    if refinement_level > MAX_SPHERE_REFINEMENT {
        return Err(Error::InvalidArgument(format!(
            "sphere refinement {refinement_level} exceeds the supported maximum {MAX_SPHERE_REFINEMENT}"
        )));
    }
    let radius = radius_wavelengths * wavelength(frequency);

    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut unit: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..refinement_level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, unit: &mut Vec<Vec3>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                unit.push(((unit[a] + unit[b]) * 0.5).normalized());
                unit.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for &[a, b, c] in &triangles {
            let ab = mid(a, b, &mut unit);
            let bc = mid(b, c, &mut unit);
            let ca = mid(c, a, &mut unit);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }

    let vertices = unit.into_iter().map(|p| p * radius).collect();
    TriangleMesh::new(vertices, triangles, Some(frequency))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plate_counts_and_area() {
        let f = 3e8;
        let m = generate_plate(1.0, 1.0, 10, f).unwrap();
        assert_eq!(m.triangles().len(), 200);
        assert_eq!(m.vertices().len(), 121);
        let lam = wavelength(f);
        assert!((m.total_area() - lam * lam).abs() < 1e-12 * lam * lam);
    }

    #[test]
    fn plate_rejects_bad_input() {
        assert!(generate_plate(0.0, 1.0, 10, 1e9).is_err());
        assert!(generate_plate(1.0, -1.0, 10, 1e9).is_err());
        assert!(generate_plate(1.0, 1.0, 4, 1e9).is_err());
        assert!(generate_plate(1.0, 1.0, 10, 0.0).is_err());
    }

    #[test]
    fn cube_is_closed_with_sphere_topology() {
        let m = generate_cube(1.0, 5, 3e8).unwrap();
        assert!(m.is_closed());
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.triangles().len(), 12 * 25);
    }

    #[test]
    fn cube_normals_point_outward() {
        let m = generate_cube(1.0, 5, 3e8).unwrap();
        for t in 0..m.triangles().len() {
            let [a, b, c] = m.corners(t);
            let n = (b - a).cross(c - a);
            let centroid = (a + b + c) / 3.0;
            assert!(n.dot(centroid) > 0.0, "triangle {t} faces inward");
        }
    }

    #[test]
    fn icosphere_counts() {
        for level in 0..4 {
            let m = generate_sphere(0.5, level, 3e8).unwrap();
            assert_eq!(m.triangles().len(), 20 * 4usize.pow(level));
            assert!(m.is_closed());
            assert_eq!(m.euler_characteristic(), 2);
        }
        assert_eq!(generate_sphere(0.5, 0, 3e8).unwrap().vertices().len(), 12);
    }

    #[test]
    fn icosphere_vertices_on_sphere() {
        let f = 3e8;
        let r = 0.5 * wavelength(f);
        let m = generate_sphere(0.5, 3, f).unwrap();
        for v in m.vertices() {
            assert!((v.norm() - r).abs() < 1e-12 * r);
        }
    }
}
