//! Triangulated conductor surfaces and the RWG basis built on them.

mod generate;
mod io;
mod rwg;

use std::collections::BTreeMap;

pub use generate::{generate_cube, generate_plate, generate_sphere, wavelength, SPEED_OF_LIGHT};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use rwg::{build_rwg, RwgBasis, RwgFunction, Triangle, TriangleSupport};

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// A triangulated surface. Vertices are in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    frequency_hint: Option<f64>,
}

impl TriangleMesh {
    /// Builds a mesh after checking index ranges and triangle areas.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        frequency_hint: Option<f64>,
    ) -> Result<Self> {
        let mesh = Self { vertices, triangles, frequency_hint };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if let Some(v) = self.vertices.iter().position(|v| !v.to_array().iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {v} has a non-finite coordinate")));
        }
        let scale = self.vertices.iter().map(|v| v.max_abs()).fold(0.0, f64::max).max(1e-300);
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references vertex {bad} but the mesh has {nv} vertices"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            if self.area(t) <= 1e-14 * scale * scale {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate")));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn frequency_hint(&self) -> Option<f64> {
        self.frequency_hint
    }

    pub fn with_frequency_hint(mut self, f: Option<f64>) -> Self {
        self.frequency_hint = f;
        self
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(c - a).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Map from each undirected edge (sorted vertex pair) to its incident triangles.
    pub fn edge_map(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.edge_map().len()
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// True when every edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        self.edge_map().values().all(|ts| ts.len() == 2)
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for v in &self.vertices {
            lo = Vec3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
            hi = Vec3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
        }
        (lo, hi)
    }
}
