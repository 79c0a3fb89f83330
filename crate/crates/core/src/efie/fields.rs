//! Excitation vectors and far-field post-processing.

use super::{Medium, PlaneWave, QuadratureRule};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::linalg::{C64, ZERO};
use crate::mesh::RwgBasis;

/// Reported RCS for a field that vanishes identically.
pub const RCS_FLOOR_DBSM: f64 = -300.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarization {
    Theta,
    Phi,
}

impl QuadratureRule {
    /// Rule used for excitation vectors and radiated fields (degree 10).
    pub fn field_default() -> Self {
        QuadratureRule::gauss(6).expect("six-point Gauss rule")
    }
}

/// `b_i = integral of f_i . E_inc` over the support of each basis.
pub fn excitation_vector(basis: &RwgBasis, wave: &PlaneWave, medium: &Medium, rule: &QuadratureRule) -> Vec<C64> {
    let mut b = vec![ZERO; basis.len()];
    for (t, tri) in basis.triangles().iter().enumerate() {
        for (l, &w) in rule.points().iter().zip(rule.weights()) {
            let r = tri.point(*l);
            let e = wave.field(medium.k, r);
            for s in basis.supports(t) {
                let f = basis.function(s.basis);
                // area * l/(2 area) (r - p) = l/2 (r - p)
                let d = (r - s.free_vertex) * (0.5 * s.sign * f.length * w);
                b[s.basis] += e[0] * d.x + e[1] * d.y + e[2] * d.z;
            }
        }
    }
    b
}

/// Radiation vector `F(r_hat) = sum_i x_i integral f_i exp(j k r_hat . r)`.
pub fn far_field(
    currents: &[C64],
    basis: &RwgBasis,
    medium: &Medium,
    direction: Vec3,
    rule: &QuadratureRule,
) -> Result<[C64; 3]> {
    if currents.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: currents.len() });
    }
    let mut f = [ZERO; 3];
    for (t, tri) in basis.triangles().iter().enumerate() {
        for (l, &w) in rule.points().iter().zip(rule.weights()) {
            let r = tri.point(*l);
            let phase = C64::from_polar(1.0, medium.k * direction.dot(r));
            let mut acc = [ZERO; 3];
            for s in basis.supports(t) {
                let fb = basis.function(s.basis);
                let d = (r - s.free_vertex) * (0.5 * s.sign * fb.length * w);
                let x = currents[s.basis];
                acc[0] += x * d.x;
                acc[1] += x * d.y;
                acc[2] += x * d.z;
            }
            for k in 0..3 {
                f[k] += acc[k] * phase;
            }
        }
    }
    Ok(f)
}

/// Converts a cross section in m^2 to dBsm, clamped at [`RCS_FLOOR_DBSM`].
pub fn rcs_dbsm(sigma: f64) -> f64 {
    if sigma > 0.0 {
        (10.0 * sigma.log10()).max(RCS_FLOOR_DBSM)
    } else {
        RCS_FLOOR_DBSM
    }
}

/// Scattering cross section (m^2) toward `direction` for an incident
/// amplitude `|E0|`, all polarizations included.
pub fn bistatic_rcs(
    currents: &[C64],
    basis: &RwgBasis,
    medium: &Medium,
    direction: Vec3,
    incident_amplitude: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let f = far_field(currents, basis, medium, direction, rule)?;
    let rd = [C64::new(direction.x, 0.0), C64::new(direction.y, 0.0), C64::new(direction.z, 0.0)];
    let radial = f[0] * rd[0] + f[1] * rd[1] + f[2] * rd[2];
    let perp: f64 = (0..3).map(|k| (f[k] - radial * rd[k]).norm_sqr()).sum();
    let wm = medium.omega * medium.mu;
    Ok(wm * wm * perp / (4.0 * std::f64::consts::PI * incident_amplitude * incident_amplitude))
}

/// Backscatter RCS in dBsm; `solutions[n]` is the current excited by a wave
/// arriving from `directions[n]`.
pub fn monostatic_rcs(
    solutions: &[Vec<C64>],
    basis: &RwgBasis,
    medium: &Medium,
    directions: &[Vec3],
    incident_amplitude: f64,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    if solutions.len() != directions.len() {
        return Err(Error::DimensionMismatch { expected: directions.len(), got: solutions.len() });
    }
    solutions
        .iter()
        .zip(directions)
        .map(|(x, d)| Ok(rcs_dbsm(bistatic_rcs(x, basis, medium, *d, incident_amplitude, rule)?)))
        .collect()
}
