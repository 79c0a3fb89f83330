use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Cached geometry of one mesh triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    /// Mesh vertex indices.
    pub vertices: [usize; 3],
    pub corners: [Vec3; 3],
    pub area: f64,
    pub centroid: Vec3,
    /// Unit normal following the vertex winding.
    pub normal: Vec3,
    /// Longest edge length.
    pub diameter: f64,
}

impl Triangle {
    pub fn new(vertices: [usize; 3], corners: [Vec3; 3]) -> Self {
        let [a, b, c] = corners;
        let n = (b - a).cross(c - a);
        let area = 0.5 * n.norm();
        Self {
            vertices,
            corners,
            area,
            centroid: (a + b + c) / 3.0,
            normal: n / (2.0 * area),
            diameter: a.distance(b).max(b.distance(c)).max(c.distance(a)),
        }
    }

    /// True when the two triangles share at least one mesh vertex.
    pub fn touches(&self, other: &Triangle) -> bool {
        self.vertices.iter().any(|v| other.vertices.contains(v))
    }

    /// Point with barycentric coordinates `(l0, l1, l2)`.
    pub fn point(&self, l: [f64; 3]) -> Vec3 {
        let [a, b, c] = self.corners;
        a * l[0] + b * l[1] + c * l[2]
    }
}

/// One RWG function: the edge it lives on and its two supporting triangles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RwgFunction {
    /// Sorted mesh vertex indices of the defining edge.
    pub edge: (usize, usize),
    pub plus: usize,
    pub minus: usize,
    /// Vertex of the plus triangle opposite the edge.
    pub plus_vertex: Vec3,
    /// Vertex of the minus triangle opposite the edge.
    pub minus_vertex: Vec3,
    pub length: f64,
    pub midpoint: Vec3,
}

/// A basis function restricted to one triangle of its support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleSupport {
    pub basis: usize,
    /// `+1` on the plus triangle, `-1` on the minus triangle.
    pub sign: f64,
    /// Vertex opposite the defining edge.
    pub free_vertex: Vec3,
}

/// RWG functions over the interior edges of a mesh.
#[derive(Clone, Debug)]
pub struct RwgBasis {
    triangles: Vec<Triangle>,
    functions: Vec<RwgFunction>,
    supports: Vec<Vec<TriangleSupport>>,
    frequency_hint: Option<f64>,
}

/// One basis per edge shared by two triangles, numbered in lexicographic order
/// of the sorted vertex pair. The lower-index triangle is the plus triangle.
pub fn build_rwg(mesh: &TriangleMesh) -> Result<RwgBasis> {
    let triangles: Vec<Triangle> = (0..mesh.triangles().len())
        .map(|t| Triangle::new(mesh.triangles()[t], mesh.corners(t)))
        .collect();
    let mut functions = Vec::new();
    let mut supports = vec![Vec::new(); triangles.len()];
    let verts = mesh.vertices();

    for ((a, b), ts) in mesh.edge_map() {
        match ts.len() {
            1 => continue,
            2 => {}
            n => return Err(Error::NonManifoldEdge(a, b, n)),
        }
        let (plus, minus) = (ts[0].min(ts[1]), ts[0].max(ts[1]));
        if plus == minus {
            return Err(Error::InvalidMesh(format!("triangle {plus} uses edge ({a}, {b}) twice")));
        }
        let opposite = |t: usize| -> Result<Vec3> {
            let tri = mesh.triangles()[t];
            let others: Vec<usize> = tri.iter().copied().filter(|&v| v != a && v != b).collect();
            match others[..] {
                [v] => Ok(verts[v]),
                _ => Err(Error::InvalidMesh(format!("triangle {t} does not contain edge ({a}, {b})"))),
            }
        };
        let (pa, pb) = (verts[a], verts[b]);
        let f = RwgFunction {
            edge: (a, b),
            plus,
            minus,
            plus_vertex: opposite(plus)?,
            minus_vertex: opposite(minus)?,
            length: pa.distance(pb),
            midpoint: (pa + pb) * 0.5,
        };
        let n = functions.len();
        supports[plus].push(TriangleSupport { basis: n, sign: 1.0, free_vertex: f.plus_vertex });
        supports[minus].push(TriangleSupport { basis: n, sign: -1.0, free_vertex: f.minus_vertex });
        functions.push(f);
    }
    Ok(RwgBasis { triangles, functions, supports, frequency_hint: mesh.frequency_hint() })
}

impl RwgBasis {
    /// Number of unknowns N.
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[RwgFunction] {
        &self.functions
    }

    pub fn function(&self, i: usize) -> &RwgFunction {
        &self.functions[i]
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> &Triangle {
        &self.triangles[t]
    }

    /// Basis functions supported on triangle `t`.
    pub fn supports(&self, t: usize) -> &[TriangleSupport] {
        &self.supports[t]
    }

    pub fn frequency_hint(&self) -> Option<f64> {
        self.frequency_hint
    }

    /// Edge midpoints, used as cluster positions.
    pub fn midpoints(&self) -> Vec<Vec3> {
        self.functions.iter().map(|f| f.midpoint).collect()
    }

    /// The two (triangle, sign, free vertex) halves of basis `i`.
    pub fn halves(&self, i: usize) -> [(usize, f64, Vec3); 2] {
        let f = &self.functions[i];
        [(f.plus, 1.0, f.plus_vertex), (f.minus, -1.0, f.minus_vertex)]
    }

    /// `f_i(r)` for a point `r` on triangle `t` (zero off the support).
    pub fn eval(&self, i: usize, t: usize, r: Vec3) -> Vec3 {
        let f = &self.functions[i];
        let (sign, p) = if t == f.plus {
            (1.0, f.plus_vertex)
        } else if t == f.minus {
            (-1.0, f.minus_vertex)
        } else {
            return Vec3::ZERO;
        };
        (r - p) * (sign * f.length / (2.0 * self.triangles[t].area))
    }

    /// Surface divergence of `f_i` on triangle `t`.
    pub fn divergence(&self, i: usize, t: usize) -> f64 {
        let f = &self.functions[i];
        let a = self.triangles[t].area;
        if t == f.plus {
            f.length / a
        } else if t == f.minus {
            -f.length / a
        } else {
            0.0
        }
    }

    /// Largest triangle diameter in the mesh.
    pub fn max_diameter(&self) -> f64 {
        self.triangles.iter().map(|t| t.diameter).fold(0.0, f64::max)
    }
}
