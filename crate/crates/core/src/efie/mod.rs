//! Electric field integral equation: Galerkin entries with RWG testing,
//! plane-wave excitation, and far-field post-processing.

mod fields;
mod kernel;
pub(crate) mod quadrature;
mod singular;

pub use fields::{
    bistatic_rcs, excitation_vector, far_field, monostatic_rcs, rcs_dbsm, Polarization, RCS_FLOOR_DBSM,
};
pub use kernel::{assemble_dense, matrix_entry, EfieOperator, PairCache, DEFAULT_DENSE_CAP};
pub use quadrature::QuadratureRule;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::linalg::C64;

/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity (F/m), from `1 / (mu0 c^2)`.
pub const EPS0: f64 = 1.0 / (MU0 * crate::mesh::SPEED_OF_LIGHT * crate::mesh::SPEED_OF_LIGHT);

/// Homogeneous background medium at one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Medium {
    pub frequency: f64,
    pub omega: f64,
    pub k: f64,
    pub mu: f64,
    pub eps: f64,
}

impl Medium {
    pub fn vacuum(frequency: f64) -> Result<Self> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::InvalidArgument(format!("frequency must be positive, got {frequency}")));
        }
        let omega = 2.0 * std::f64::consts::PI * frequency;
        Ok(Self { frequency, omega, k: omega * (MU0 * EPS0).sqrt(), mu: MU0, eps: EPS0 })
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k
    }

    /// Wave impedance `sqrt(mu / eps)`.
    pub fn impedance(&self) -> f64 {
        (self.mu / self.eps).sqrt()
    }
}

/// Incident plane wave `E0 p exp(-j k d.r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWave {
    pub direction: Vec3,
    pub polarization: Vec3,
    pub amplitude: C64,
}

impl PlaneWave {
    pub fn new(direction: Vec3, polarization: Vec3, amplitude: C64) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-12 || (polarization.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("plane-wave direction and polarization must be unit vectors".into()));
        }
        if direction.dot(polarization).abs() > 1e-12 {
            return Err(Error::InvalidArgument("plane-wave polarization must be orthogonal to its direction".into()));
        }
        Ok(Self { direction, polarization, amplitude })
    }

    /// Wave arriving from the spherical direction `(theta, phi)`, i.e.
    /// travelling along `-r_hat(theta, phi)`.
    pub fn arriving_from(theta: f64, phi: f64, pol: Polarization, amplitude: C64) -> Self {
        let p = match pol {
            Polarization::Theta => Vec3::theta_hat(theta, phi),
            Polarization::Phi => Vec3::phi_hat(phi),
        };
        Self { direction: -Vec3::from_spherical(theta, phi), polarization: p, amplitude }
    }

    pub fn field(&self, k: f64, r: Vec3) -> [C64; 3] {
        let phase = C64::from_polar(1.0, -k * self.direction.dot(r)) * self.amplitude;
        [phase * self.polarization.x, phase * self.polarization.y, phase * self.polarization.z]
    }
}
