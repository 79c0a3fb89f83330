//! Geometry specs: `plate:WxH:epw`, `cube:side:epw`, `sphere:radius:level`
//! and `file:path`. Sizes are in wavelengths.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hschur::mesh::{generate_cube, generate_plate, generate_sphere, load_mesh, TriangleMesh};

use crate::error::{BenchError, BenchResult};

#[derive(Clone, Debug, PartialEq)]
pub enum GeometrySpec {
    Plate { width: f64, height: f64, epw: u32 },
    Cube { side: f64, epw: u32 },
    Sphere { radius: f64, level: u32 },
    File(PathBuf),
}

impl GeometrySpec {
    pub fn mesh(&self, frequency: f64) -> BenchResult<TriangleMesh> {
        Ok(match self {
            GeometrySpec::Plate { width, height, epw } => generate_plate(*width, *height, *epw, frequency)?,
            GeometrySpec::Cube { side, epw } => generate_cube(*side, *epw, frequency)?,
            GeometrySpec::Sphere { radius, level } => generate_sphere(*radius, *level, frequency)?,
            GeometrySpec::File(p) => load_mesh(p)?,
        })
    }

    /// Mesh density, where the spec has one.
    pub fn elements_per_wavelength(&self) -> Option<u32> {
        match self {
            GeometrySpec::Plate { epw, .. } | GeometrySpec::Cube { epw, .. } => Some(*epw),
            _ => None,
        }
    }
}

impl fmt::Display for GeometrySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometrySpec::Plate { width, height, epw } => write!(f, "plate:{width}x{height}:{epw}"),
            GeometrySpec::Cube { side, epw } => write!(f, "cube:{side}:{epw}"),
            GeometrySpec::Sphere { radius, level } => write!(f, "sphere:{radius}:{level}"),
            GeometrySpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

fn num<T: FromStr>(s: &str, what: &str, spec: &str) -> BenchResult<T> {
    s.trim().parse().map_err(|_| BenchError::Config(format!("geometry `{spec}`: cannot parse {what} `{s}`")))
}

impl FromStr for GeometrySpec {
    type Err = BenchError;

    fn from_str(spec: &str) -> BenchResult<Self> {
        let spec = spec.trim();
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| BenchError::Config(format!("geometry `{spec}`: expected `kind:...`")))?;
        if kind == "file" {
            if rest.is_empty() {
                return Err(BenchError::Config("geometry `file:` needs a path".into()));
            }
            return Ok(GeometrySpec::File(PathBuf::from(rest)));
        }
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || BenchError::Config(format!("geometry `{spec}`: wrong number of fields"));
        let g = match (kind, parts.as_slice()) {
            ("plate", [size, epw]) => {
                let (w, h) = size.split_once('x').unwrap_or((size, size));
                GeometrySpec::Plate { width: num(w, "width", spec)?, height: num(h, "height", spec)?, epw: num(epw, "density", spec)? }
            }
            ("cube", [side, epw]) => GeometrySpec::Cube { side: num(side, "side", spec)?, epw: num(epw, "density", spec)? },
            ("sphere", [r, level]) => GeometrySpec::Sphere { radius: num(r, "radius", spec)?, level: num(level, "level", spec)? },
            ("plate" | "cube" | "sphere", _) => return Err(bad()),
            _ => return Err(BenchError::Config(format!("geometry `{spec}`: unknown kind `{kind}`"))),
        };
        let positive = match &g {
            GeometrySpec::Plate { width, height, epw } => *width > 0.0 && *height > 0.0 && *epw > 0,
            GeometrySpec::Cube { side, epw } => *side > 0.0 && *epw > 0,
            GeometrySpec::Sphere { radius, .. } => *radius > 0.0,
            GeometrySpec::File(_) => true,
        };
        if !positive {
            return Err(BenchError::Config(format!("geometry `{spec}`: sizes must be positive")));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_round_trip() {
        for s in ["plate:5x5:9", "plate:2x3.5:10", "cube:1:10", "sphere:0.5:4", "file:meshes/a.txt"] {
            let g: GeometrySpec = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
            assert_eq!(g.to_string().parse::<GeometrySpec>().unwrap(), g);
        }
        assert_eq!("plate:3:10".parse::<GeometrySpec>().unwrap(), GeometrySpec::Plate { width: 3.0, height: 3.0, epw: 10 });
    }

    #[test]
    fn bad_specs_are_rejected() {
        for s in ["", "plate", "plate:3", "plate:axb:10", "cube:1", "cube:-1:10", "torus:1:2", "sphere:1:x", "file:", "plate:0x1:10"] {
            assert!(s.parse::<GeometrySpec>().is_err(), "{s}");
        }
    }
}
