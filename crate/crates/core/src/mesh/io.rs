//! Plain-text mesh format.
//!
//! ```text
//! ntri nvert
//! x y z          (nvert lines)
//! i j k          (ntri lines, zero-based vertex indices)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::geom::Vec3;

/// Renders a mesh in the text format. Coordinates keep full `f64` precision.
pub fn write_mesh(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", mesh.triangles().len(), mesh.vertices().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

/// Parses the text format; `path` is only used in error messages.
pub fn parse_mesh(text: &str, path: &Path) -> Result<TriangleMesh> {
    let err = |line: usize, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty mesh file".into()))?;
    let counts = fields::<usize>(header).map_err(|m| err(hline, m))?;
    let [ntri, nvert] = counts[..] else {
        return Err(err(hline, format!("expected `ntri nvert`, found {} fields", counts.len())));
    };

    let mut last = hline;
    let mut vertices = Vec::with_capacity(nvert);
    for k in 0..nvert {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("missing vertex {k} of {nvert}")))?;
        last = ln;
        let v = fields::<f64>(l).map_err(|m| err(ln, m))?;
        let [x, y, z] = v[..] else {
            return Err(err(ln, format!("vertex line needs 3 coordinates, found {}", v.len())));
        };
        vertices.push(Vec3::new(x, y, z));
    }
    let mut triangles = Vec::with_capacity(ntri);
    for k in 0..ntri {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(last + 1, format!("missing triangle {k} of {ntri}")))?;
        last = ln;
        let t = fields::<usize>(l).map_err(|m| err(ln, m))?;
        let [a, b, c] = t[..] else {
            return Err(err(ln, format!("triangle line needs 3 indices, found {}", t.len())));
        };
        triangles.push([a, b, c]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln, "unexpected trailing content".into()));
    }
    TriangleMesh::new(vertices, triangles, None)
}

fn fields<T: std::str::FromStr>(line: &str) -> std::result::Result<Vec<T>, String> {
    line.split_whitespace()
        .map(|f| f.parse::<T>().map_err(|_| format!("cannot parse `{f}`")))
        .collect()
}
