//! Mie series for the backscatter of a perfectly conducting sphere.

use num_complex::Complex64;

/// Monostatic radar cross section (m^2) of a PEC sphere of radius `radius` at
/// wavenumber `k`.
pub fn pec_backscatter(radius: f64, k: f64) -> f64 {
    let x = k * radius;
    let nmax = (x + 4.0 * x.cbrt() + 2.0).ceil() as usize + 2;
    let psi = riccati_bessel_j(x, nmax);
    let chi = riccati_bessel_y(x, nmax);

    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=nmax {
        let nf = n as f64;
        let xi = Complex64::new(psi[n], chi[n]);
        let xi_prev = Complex64::new(psi[n - 1], chi[n - 1]);
        let dpsi = psi[n - 1] - nf * psi[n] / x;
        let dxi = xi_prev - xi * (nf / x);
        let a = dpsi / dxi;
        let b = psi[n] / xi;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += (a - b) * (sign * (2.0 * nf + 1.0));
    }
    std::f64::consts::PI * radius * radius / (x * x) * sum.norm_sqr()
}

/// `psi_n(x) = x j_n(x)` for `n = 0..=nmax` by downward recurrence.
fn riccati_bessel_j(x: f64, nmax: usize) -> Vec<f64> {
    let start = nmax + 20 + (x as usize);
    let mut out = vec![0.0; nmax + 1];
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    for n in (1..=start).rev() {
        let prev = (2 * n + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if n - 1 <= nmax {
            out[n - 1] = cur;
        }
        if cur.abs() > 1e200 {
            for v in out.iter_mut() {
                *v *= 1e-200;
            }
            next *= 1e-200;
            cur *= 1e-200;
        }
    }
    let scale = x.sin() / out[0];
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// `chi_n(x) = x y_n(x)` for `n = 0..=nmax` by upward recurrence.
fn riccati_bessel_y(x: f64, nmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    out[0] = -x.cos();
    if nmax >= 1 {
        out[1] = -x.cos() / x - x.sin();
    }
    for n in 1..nmax {
        out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
    }
    out
}
