//! Experiment configuration: a flat `key = value` file, overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hschur::cluster::{DEFAULT_ETA, DEFAULT_LEAF_SIZE, DEFAULT_MAX_LEVEL};
use hschur::hmatrix::HOptions;
use hschur::ordering::OrderingKind;
use hschur::schur::{SchurOptions, DEFAULT_FILL_TOL};
use hschur::solver::{GmresOptions, PreconditionerKind};

use crate::error::{BenchError, BenchResult};
use crate::geometry::GeometrySpec;

/// Incidence angles `theta` in degrees: `start:end:count`, evenly spaced
/// with both ends included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Sweep {
    pub fn thetas_deg(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count).map(|i| self.start + (self.end - self.start) * i as f64 / (self.count - 1) as f64).collect()
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.count)
    }
}

impl FromStr for Sweep {
    type Err = BenchError;

    fn from_str(s: &str) -> BenchResult<Self> {
        let bad = || BenchError::Config(format!("sweep `{s}`: expected `start:end:count` in degrees"));
        let p: Vec<&str> = s.trim().split(':').collect();
        let [a, b, n] = p[..] else { return Err(bad()) };
        let sweep = Sweep {
            start: a.parse().map_err(|_| bad())?,
            end: b.parse().map_err(|_| bad())?,
            count: n.parse().map_err(|_| bad())?,
        };
        if sweep.count == 0 || !sweep.start.is_finite() || !sweep.end.is_finite() {
            return Err(bad());
        }
        Ok(sweep)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: GeometrySpec,
    pub freq_ghz: f64,
    pub leaf_size: usize,
    pub max_level: usize,
    pub eta: f64,
    pub tol_aca: f64,
    pub fill_tol: f64,
    pub ordering: OrderingKind,
    /// Orderings visited by `compare` and `pattern`.
    pub orderings: Vec<OrderingKind>,
    pub pc: PreconditionerKind,
    pub gmres_tol: f64,
    /// Krylov dimension before restart; 0 runs full GMRES.
    pub restart: usize,
    pub max_iter: usize,
    pub sweep: Sweep,
    pub phi_deg: f64,
    /// Plate sides (wavelengths) for `scaling`.
    pub ladder: Vec<f64>,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: GeometrySpec::Plate { width: 3.0, height: 3.0, epw: 10 },
            freq_ghz: 0.3,
            leaf_size: DEFAULT_LEAF_SIZE,
            max_level: DEFAULT_MAX_LEVEL,
            eta: DEFAULT_ETA,
            tol_aca: HOptions::default().tol_aca,
            fill_tol: DEFAULT_FILL_TOL,
            ordering: OrderingKind::Sloan,
            orderings: vec![OrderingKind::None, OrderingKind::Sloan],
            pc: PreconditionerKind::Schur,
            gmres_tol: 1e-6,
            restart: 0,
            max_iter: 2000,
            sweep: Sweep { start: 0.0, end: 0.0, count: 1 },
            phi_deg: 0.0,
            ladder: vec![2.0, 3.0, 4.0, 6.0, 8.0],
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Every recognised key, in the order `to_kv` writes them.
pub const KEYS: [&str; 18] = [
    "geometry", "freq_ghz", "leaf_size", "max_level", "eta", "tol_aca", "fill_tol", "ordering", "orderings", "pc",
    "gmres_tol", "restart", "max_iter", "sweep", "phi_deg", "ladder", "out_dir", "seed",
];

fn parse<T: FromStr>(key: &str, value: &str) -> BenchResult<T> {
    value.parse().map_err(|_| BenchError::Config(format!("{key}: cannot parse `{value}`")))
}

fn list<T: FromStr>(key: &str, value: &str) -> BenchResult<Vec<T>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn frequency(&self) -> f64 {
        self.freq_ghz * 1e9
    }

    pub fn h_options(&self) -> HOptions {
        HOptions { tol_aca: self.tol_aca }
    }

    pub fn schur_options(&self) -> SchurOptions {
        SchurOptions { fill_tol: self.fill_tol }
    }

    pub fn gmres_options(&self) -> GmresOptions {
        GmresOptions { tol: self.gmres_tol, restart: (self.restart > 0).then_some(self.restart), max_iter: self.max_iter }
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> BenchResult<()> {
        let value = value.trim();
        match key {
            "geometry" => self.geometry = value.parse()?,
            "freq_ghz" => self.freq_ghz = parse(key, value)?,
            "leaf_size" => self.leaf_size = parse(key, value)?,
            "max_level" => self.max_level = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "tol_aca" => self.tol_aca = parse(key, value)?,
            "fill_tol" => self.fill_tol = parse(key, value)?,
            "ordering" => self.ordering = parse(key, value)?,
            "orderings" => self.orderings = list(key, value)?,
            "pc" => self.pc = parse(key, value)?,
            "gmres_tol" => self.gmres_tol = parse(key, value)?,
            "restart" => self.restart = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "sweep" => self.sweep = value.parse()?,
            "phi_deg" => self.phi_deg = parse(key, value)?,
            "ladder" => self.ladder = list(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(BenchError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "geometry" => self.geometry.to_string(),
            "freq_ghz" => self.freq_ghz.to_string(),
            "leaf_size" => self.leaf_size.to_string(),
            "max_level" => self.max_level.to_string(),
            "eta" => self.eta.to_string(),
            "tol_aca" => self.tol_aca.to_string(),
            "fill_tol" => self.fill_tol.to_string(),
            "ordering" => self.ordering.to_string(),
            "orderings" => join(&self.orderings),
            "pc" => self.pc.to_string(),
            "gmres_tol" => self.gmres_tol.to_string(),
            "restart" => self.restart.to_string(),
            "max_iter" => self.max_iter.to_string(),
            "sweep" => self.sweep.to_string(),
            "phi_deg" => self.phi_deg.to_string(),
            "ladder" => join(&self.ladder),
            "out_dir" => self.out_dir.display().to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// `key = value` lines; parsing them back gives an equal config.
    pub fn to_kv(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k).expect("known key"))).collect()
    }

    /// Applies the `key = value` lines of `text` on top of `self`. Blank lines
    /// and `#` comments are skipped.
    pub fn apply_kv(&mut self, text: &str, path: &Path) -> BenchResult<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| BenchError::ConfigFile { path: path.to_path_buf(), line: i + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
            self.set(k.trim(), v).map_err(|e| err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> BenchResult<Self> {
        let mut c = Self::default();
        c.apply_kv(text, Path::new("<string>"))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> BenchResult<Self> {
        let mut c = Self::default();
        c.apply_kv(&std::fs::read_to_string(path)?, path)?;
        Ok(c)
    }

    pub fn validate(&self) -> BenchResult<()> {
        let positive = [("freq_ghz", self.freq_ghz), ("eta", self.eta), ("tol_aca", self.tol_aca), ("gmres_tol", self.gmres_tol)];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BenchError::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if !(self.fill_tol >= 0.0 && self.fill_tol.is_finite()) {
            return Err(BenchError::Config(format!("fill_tol must be >= 0, got {}", self.fill_tol)));
        }
        if self.leaf_size == 0 || self.max_iter == 0 {
            return Err(BenchError::Config("leaf_size and max_iter must be >= 1".into()));
        }
        if self.orderings.is_empty() {
            return Err(BenchError::Config("orderings must not be empty".into()));
        }
        if self.ladder.is_empty() || self.ladder.iter().any(|s| !(*s > 0.0)) {
            return Err(BenchError::Config("ladder needs positive plate sides".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_kv(&c.to_kv()).unwrap(), c);
    }

    #[test]
    fn edited_config_round_trips() {
        let mut c = ExperimentConfig::default();
        for (k, v) in [
            ("geometry", "cube:1.5:12"),
            ("freq_ghz", "1.25"),
            ("fill_tol", "0"),
            ("tol_aca", "1e-5"),
            ("orderings", "cm,rcm,king"),
            ("pc", "nullfield"),
            ("sweep", "0:90:51"),
            ("ladder", "2,2.5,3"),
            ("restart", "50"),
            ("seed", "17"),
        ] {
            c.set(k, v).unwrap();
        }
        let back = ExperimentConfig::from_kv(&c.to_kv()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.gmres_options().restart, Some(50));
    }

    #[test]
    fn file_syntax() {
        let mut c = ExperimentConfig::default();
        c.apply_kv("# study\n\nleaf_size = 40  # smaller leaves\nordering=rcm\n", Path::new("x.cfg")).unwrap();
        assert_eq!((c.leaf_size, c.ordering), (40, OrderingKind::ReverseCuthillMcKee));
        let e = c.apply_kv("leaf_size = 4\nbogus = 1\n", Path::new("x.cfg")).unwrap_err();
        assert!(e.to_string().starts_with("x.cfg:2:"), "{e}");
        assert!(c.apply_kv("no equals sign", Path::new("x.cfg")).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for (k, v) in [("gmres_tol", "0"), ("tol_aca", "-1"), ("fill_tol", "-0.1"), ("leaf_size", "0"), ("eta", "nan")] {
            let mut c = ExperimentConfig::default();
            c.set(k, v).unwrap();
            assert!(c.validate().is_err(), "{k}={v}");
        }
        let mut c = ExperimentConfig::default();
        assert!(c.set("pc", "ilu").is_err());
        assert!(c.set("sweep", "0:90").is_err());
        assert!(c.set("ordering", "amd").is_err());
    }

    #[test]
    fn sweep_angles() {
        let s: Sweep = "0:90:4".parse().unwrap();
        assert_eq!(s.thetas_deg(), vec![0.0, 30.0, 60.0, 90.0]);
        assert_eq!("10:80:1".parse::<Sweep>().unwrap().thetas_deg(), vec![10.0]);
    }
}
