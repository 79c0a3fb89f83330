//! Closed-form integrals of `1/R` and `(r' - rho)/R` over a flat triangle.

use crate::geom::Vec3;
use crate::mesh::Triangle;

/// Static potential integrals seen from an observation point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StaticPotential {
    /// Integral of `1/|r - r'|` over the triangle.
    pub scalar: f64,
    /// Integral of `(r' - c)/|r - r'|` for the reference point `c` given to
    /// [`static_potential`].
    pub vector: Vec3,
}

/// Evaluates both integrals for observation point `r`. The vector integral is
/// taken relative to `reference`.
pub(crate) fn static_potential(tri: &Triangle, r: Vec3, reference: Vec3) -> StaticPotential {
    let n = tri.normal;
    let c = tri.corners;
    let h = n.dot(r - c[0]);
    let rho = r - n * h;
    let ah = h.abs();
    let scale = tri.diameter;
    let tiny = 1e-12 * scale;

    let mut scalar = 0.0;
    let mut vector = Vec3::ZERO;
    for e in 0..3 {
        let (a, b) = (c[e], c[(e + 1) % 3]);
        let len = a.distance(b);
        let l_hat = (b - a) / len;
        // Outward in-plane normal of this edge.
        let u_hat = l_hat.cross(n);
        let lp = (b - rho).dot(l_hat);
        let lm = (a - rho).dot(l_hat);
        let p0 = (a - rho).dot(u_hat);
        let r0sq = p0 * p0 + h * h;
        let rp = (lp * lp + r0sq).sqrt();
        let rm = (lm * lm + r0sq).sqrt();

        // ln((R+ + l+)/(R- + l-)) in a form free of cancellation.
        // Every use of the log is weighted by P0 or R0^2, so it can be dropped
        // when the projected point sits on the edge line.
        let log = if r0sq.sqrt() <= tiny {
            0.0
        } else if lm >= 0.0 {
            ((rp + lp) / (rm + lm)).ln()
        } else if lp <= 0.0 {
            ((rm - lm) / (rp - lp)).ln()
        } else {
            ((rp + lp) * (rm - lm) / r0sq).ln()
        };

        if p0.abs() > tiny {
            scalar += p0 * log;
            if ah > tiny {
                let beta = (p0 * lp / (r0sq + ah * rp)).atan() - (p0 * lm / (r0sq + ah * rm)).atan();
                scalar -= ah * beta;
            }
        }
        vector += u_hat * (0.5 * (r0sq * log + lp * rp - lm * rm));
    }
    StaticPotential { scalar, vector: vector + (rho - reference) * scalar }
}
