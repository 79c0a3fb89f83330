use crate::error::{Error, Result};

/// Triangle quadrature rule in barycentric coordinates. Weights sum to 1,
/// so `area * sum(w f(x))` approximates the integral over a triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    order: u32,
}

impl QuadratureRule {
    pub fn new(points: Vec<[f64; 3]>, weights: Vec<f64>, order: u32) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidArgument("quadrature needs matching, non-empty points and weights".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("quadrature weights sum to {s}, expected 1")));
        }
        Ok(Self { points, weights, order })
    }

    /// One point at the centroid; exact for degree 1.
    pub fn centroid() -> Self {
        Self { points: vec![[1.0 / 3.0; 3]], weights: vec![1.0], order: 1 }
    }

    /// Three interior points; exact for degree 2.
    pub fn three_point() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        Self {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
            order: 2,
        }
    }

    /// Dunavant's seven-point rule; exact for degree 5.
    pub fn seven_point() -> Self {
        let (a1, b1) = (0.059_715_871_789_770, 0.470_142_064_105_115);
        let (a2, b2) = (0.797_426_985_353_087, 0.101_286_507_323_456);
        let (w1, w2) = (0.132_394_152_788_506, 0.125_939_180_544_827);
        Self {
            points: vec![
                [1.0 / 3.0; 3],
                [a1, b1, b1],
                [b1, a1, b1],
                [b1, b1, a1],
                [a2, b2, b2],
                [b2, a2, b2],
                [b2, b2, a2],
            ],
            weights: vec![0.225, w1, w1, w1, w2, w2, w2],
            order: 5,
        }
    }

    /// Collapsed-square Gauss-Legendre product rule with `n * n` points;
    /// exact for degree `2n - 2`.
    pub fn gauss(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("Gauss rule needs at least one point".into()));
        }
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            // Map [-1, 1] to [0, 1].
            let u = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let v = 0.5 * (x[j] + 1.0);
                let (l1, l2) = (u, (1.0 - u) * v);
                points.push([1.0 - l1 - l2, l1, l2]);
                // Reference area 1/2 is normalized away.
                weights.push(2.0 * 0.25 * w[i] * w[j] * (1.0 - u));
            }
        }
        Ok(Self { points, weights, order: (2 * n - 2) as u32 })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The same rule applied on each of the `4^levels` triangles of a uniform
    /// midpoint subdivision.
    pub fn subdivided(&self, levels: u32) -> Self {
        let mut tris: Vec<[[f64; 3]; 3]> = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
        for _ in 0..levels {
            let mut next = Vec::with_capacity(tris.len() * 4);
            for [a, b, c] in tris {
                let mid = |p: [f64; 3], q: [f64; 3]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])];
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                next.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            }
            tris = next;
        }
        let scale = 1.0 / tris.len() as f64;
        let mut points = Vec::with_capacity(tris.len() * self.len());
        let mut weights = Vec::with_capacity(tris.len() * self.len());
        for [a, b, c] in &tris {
            for (l, &w) in self.points.iter().zip(&self.weights) {
                let p = |k: usize| l[0] * a[k] + l[1] * b[k] + l[2] * c[k];
                points.push([p(0), p(1), p(2)]);
                weights.push(w * scale);
            }
        }
        Self { points, weights, order: self.order }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n and its derivative.
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}
