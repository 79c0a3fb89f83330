//! Galerkin matrix entries.
//!
//! Entries are built from per-triangle-pair moments of the Green's function,
//! normalized by both areas and taken about the triangle centroids:
//!
//! ```text
//! g0  = <G>            ga = <(r - ca) G>
//! gab = <(r - ca).(r' - cb) G>   gb = <(r' - cb) G>
//! ```
//!
//! Any RWG pair on those triangles then follows in closed form, so a pair of
//! triangles is integrated once no matter how many bases share it.

use super::singular::static_potential;
use super::{Medium, QuadratureRule};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::linalg::{Matrix, C64, ZERO};
use crate::mesh::RwgBasis;

/// Largest N accepted by [`assemble_dense`].
pub const DEFAULT_DENSE_CAP: usize = 6000;

/// Pairs closer than this many (larger) triangle diameters use singularity extraction.
const NEAR_FACTOR: f64 = 2.0;

/// Gauss order of the outer rule for pairs sharing a vertex. The outer
/// integrand has log-type edge singularities there, and the seven-point rule
/// leaves errors near 1%.
const TOUCHING_GAUSS: usize = 6;

#[derive(Clone, Copy, Debug)]
pub(crate) struct PairMoments {
    g0: C64,
    ga: [C64; 3],
    gb: [C64; 3],
    gab: C64,
}

impl PairMoments {
    const ZERO: Self = Self { g0: ZERO, ga: [ZERO; 3], gb: [ZERO; 3], gab: ZERO };

    /// Moments of the pair with test and source roles exchanged.
    fn swapped(self) -> Self {
        Self { g0: self.g0, ga: self.gb, gb: self.ga, gab: self.gab }
    }
}

fn cdot(v: Vec3, c: &[C64; 3]) -> C64 {
    c[0] * v.x + c[1] * v.y + c[2] * v.z
}

/// Column set prepared once for repeated row evaluations.
pub struct PairCache {
    cols: Vec<usize>,
    tris: Vec<usize>,
    /// Position in `tris` of the plus and minus triangle of each column.
    halves: Vec<[usize; 2]>,
}

impl PairCache {
    pub fn new(basis: &RwgBasis, cols: &[usize]) -> Self {
        let mut tris: Vec<usize> = cols
            .iter()
            .flat_map(|&j| {
                let f = basis.function(j);
                [f.plus, f.minus]
            })
            .collect();
        tris.sort_unstable();
        tris.dedup();
        let pos = |t: usize| tris.binary_search(&t).expect("triangle collected above");
        let halves = cols
            .iter()
            .map(|&j| {
                let f = basis.function(j);
                [pos(f.plus), pos(f.minus)]
            })
            .collect();
        Self { cols: cols.to_vec(), tris, halves }
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }
}

/// EFIE matrix entries over an RWG basis.
#[derive(Clone, Debug)]
pub struct EfieOperator<'a> {
    basis: &'a RwgBasis,
    medium: Medium,
    far_rule: QuadratureRule,
    near_rule: QuadratureRule,
    touch_rule: QuadratureRule,
    far_points: Vec<Vec3>,
    near_points: Vec<Vec3>,
    touch_points: Vec<Vec3>,
    /// `j omega mu / (16 pi)`, the vector-potential factor including the `1/4`
    /// from the two RWG normalizations.
    coef_a: C64,
    /// `1 / (j omega 4 pi eps)`.
    coef_phi: C64,
}

impl<'a> EfieOperator<'a> {
    /// Three-point rules for separated pairs; seven-point rules with analytic
    /// extraction for near pairs, with a finer outer rule when they touch.
    pub fn new(basis: &'a RwgBasis, medium: Medium) -> Self {
        Self::with_rules(basis, medium, QuadratureRule::three_point(), QuadratureRule::seven_point())
    }

    pub fn with_rules(
        basis: &'a RwgBasis,
        medium: Medium,
        far_rule: QuadratureRule,
        near_rule: QuadratureRule,
    ) -> Self {
        let points = |rule: &QuadratureRule| -> Vec<Vec3> {
            basis
                .triangles()
                .iter()
                .flat_map(|t| rule.points().iter().map(move |l| t.point(*l)))
                .collect()
        };
        let pi = std::f64::consts::PI;
        let touch_rule = QuadratureRule::gauss(TOUCHING_GAUSS).expect("valid Gauss order");
        Self {
            basis,
            medium,
            far_points: points(&far_rule),
            near_points: points(&near_rule),
            touch_points: points(&touch_rule),
            far_rule,
            near_rule,
            touch_rule,
            coef_a: C64::new(0.0, medium.omega * medium.mu / (16.0 * pi)),
            coef_phi: C64::new(0.0, -1.0 / (4.0 * pi * medium.omega * medium.eps)),
        }
    }

    pub fn basis(&self) -> &'a RwgBasis {
        self.basis
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn is_near(&self, ta: usize, tb: usize) -> bool {
        if ta == tb {
            return true;
        }
        let (a, b) = (self.basis.triangle(ta), self.basis.triangle(tb));
        a.centroid.distance(b.centroid) < NEAR_FACTOR * a.diameter.max(b.diameter)
    }

    /// Moments with `ta` as the test triangle. Always integrated in canonical
    /// (lower index first) orientation so both orientations agree bitwise.
    pub(crate) fn pair_moments(&self, ta: usize, tb: usize) -> PairMoments {
        if ta <= tb {
            self.canonical_moments(ta, tb)
        } else {
            self.canonical_moments(tb, ta).swapped()
        }
    }

    fn canonical_moments(&self, ta: usize, tb: usize) -> PairMoments {
        if self.is_near(ta, tb) {
            self.near_moments(ta, tb)
        } else {
            self.far_moments(ta, tb)
        }
    }

    fn far_moments(&self, ta: usize, tb: usize) -> PairMoments {
        let k = self.medium.k;
        let n = self.far_rule.len();
        let w = self.far_rule.weights();
        let (ca, cb) = (self.basis.triangle(ta).centroid, self.basis.triangle(tb).centroid);
        let pa = &self.far_points[ta * n..(ta + 1) * n];
        let pb = &self.far_points[tb * n..(tb + 1) * n];
        let mut m = PairMoments::ZERO;
        for (r, &wm) in pa.iter().zip(w) {
            let dr = *r - ca;
            for (rp, &wn) in pb.iter().zip(w) {
                let dr2 = *rp - cb;
                let dist = r.distance(*rp);
                let (s, c) = (k * dist).sin_cos();
                let g = C64::new(c, -s) * (wm * wn / dist);
                m.g0 += g;
                for d in 0..3 {
                    m.ga[d] += g * dr[d];
                    m.gb[d] += g * dr2[d];
                }
                m.gab += g * dr.dot(dr2);
            }
        }
        m
    }

    fn near_moments(&self, ta: usize, tb: usize) -> PairMoments {
        let k = self.medium.k;
        let n = self.near_rule.len();
        let w = self.near_rule.weights();
        let tri_a = self.basis.triangle(ta);
        let tri_b = self.basis.triangle(tb);
        let (ca, cb) = (tri_a.centroid, tri_b.centroid);
        let (pa, wa) = if tri_a.touches(tri_b) {
            let n = self.touch_rule.len();
            (&self.touch_points[ta * n..(ta + 1) * n], self.touch_rule.weights())
        } else {
            (&self.near_points[ta * n..(ta + 1) * n], w)
        };
        let pb = &self.near_points[tb * n..(tb + 1) * n];
        let tiny = 1e-12 * tri_b.diameter;
        let mut m = PairMoments::ZERO;
        for (r, &wm) in pa.iter().zip(wa) {
            let dr = *r - ca;
            let stat = static_potential(tri_b, *r, cb);
            let mut g = C64::new(stat.scalar / tri_b.area, 0.0);
            let sv = stat.vector / tri_b.area;
            let mut g1 = [C64::new(sv.x, 0.0), C64::new(sv.y, 0.0), C64::new(sv.z, 0.0)];
            // Remainder (exp(-jkR) - 1)/R, written without cancellation.
            for (rp, &wn) in pb.iter().zip(w) {
                let dist = r.distance(*rp);
                let kern = if dist <= tiny {
                    C64::new(0.0, -k)
                } else {
                    let half = (0.5 * k * dist).sin();
                    C64::new(-2.0 * half * half / dist, -(k * dist).sin() / dist)
                };
                let kw = kern * wn;
                let dr2 = *rp - cb;
                g += kw;
                for d in 0..3 {
                    g1[d] += kw * dr2[d];
                }
            }
            m.g0 += g * wm;
            for d in 0..3 {
                m.ga[d] += g * (wm * dr[d]);
                m.gb[d] += g1[d] * wm;
            }
            m.gab += cdot(dr, &g1) * wm;
        }
        m
    }

    /// Combines the four triangle-pair moments of bases `i <= j`;
    /// `mom[a][b]` pairs half `a` of `i` (test) with half `b` of `j`.
    fn combine(&self, i: usize, j: usize, mom: &[[PairMoments; 2]; 2]) -> C64 {
        let hi = self.basis.halves(i);
        let hj = self.basis.halves(j);
        let li = self.basis.function(i).length;
        let lj = self.basis.function(j).length;
        let mut z = ZERO;
        for (a, &(ta, si, p)) in hi.iter().enumerate() {
            let dp = p - self.basis.triangle(ta).centroid;
            for (b, &(tb, sj, q)) in hj.iter().enumerate() {
                let dq = q - self.basis.triangle(tb).centroid;
                let m = &mom[a][b];
                let vec = m.gab - cdot(dp, &m.gb) - cdot(dq, &m.ga) + m.g0 * dp.dot(dq);
                z += (self.coef_a * vec + self.coef_phi * m.g0) * (si * sj * li * lj);
            }
        }
        z
    }

    /// `Z(i, j)`. Exactly symmetric: `entry(i, j) == entry(j, i)` bitwise.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let (i, j) = (i.min(j), i.max(j));
        let (fi, fj) = (self.basis.function(i), self.basis.function(j));
        let ti = [fi.plus, fi.minus];
        let tj = [fj.plus, fj.minus];
        let mom = [
            [self.pair_moments(ti[0], tj[0]), self.pair_moments(ti[0], tj[1])],
            [self.pair_moments(ti[1], tj[0]), self.pair_moments(ti[1], tj[1])],
        ];
        self.combine(i, j, &mom)
    }

    /// Row `i` restricted to the columns of `cache`, written to `out`.
    /// Bitwise equal to calling [`entry`](Self::entry) per column.
    pub fn row_into(&self, i: usize, cache: &PairCache, out: &mut [C64]) {
        assert_eq!(out.len(), cache.cols.len());
        let f = self.basis.function(i);
        let mp: Vec<PairMoments> = cache.tris.iter().map(|&t| self.pair_moments(f.plus, t)).collect();
        let mm: Vec<PairMoments> = cache.tris.iter().map(|&t| self.pair_moments(f.minus, t)).collect();
        for ((o, &j), h) in out.iter_mut().zip(&cache.cols).zip(&cache.halves) {
            *o = if i <= j {
                self.combine(i, j, &[[mp[h[0]], mp[h[1]]], [mm[h[0]], mm[h[1]]]])
            } else {
                // Reorient to test on j. Self pairs are stored unswapped.
                let flip = |m: PairMoments, ti: usize, tj: usize| if ti == tj { m } else { m.swapped() };
                let (t0, t1) = (cache.tris[h[0]], cache.tris[h[1]]);
                let t = [
                    [flip(mp[h[0]], f.plus, t0), flip(mm[h[0]], f.minus, t0)],
                    [flip(mp[h[1]], f.plus, t1), flip(mm[h[1]], f.minus, t1)],
                ];
                self.combine(j, i, &t)
            };
        }
    }

    /// Dense block `Z[rows, cols]`.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let cache = PairCache::new(self.basis, cols);
        let mut out = Matrix::zeros(rows.len(), cols.len());
        let mut row = vec![ZERO; cols.len()];
        for (r, &i) in rows.iter().enumerate() {
            self.row_into(i, &cache, &mut row);
            for (c, v) in row.iter().enumerate() {
                out[(r, c)] = *v;
            }
        }
        out
    }
}

/// `Z(i, j)` using `rule` for separated triangle pairs (near pairs keep the
/// seven-point singular scheme).
pub fn matrix_entry(i: usize, j: usize, basis: &RwgBasis, medium: &Medium, rule: &QuadratureRule) -> Result<C64> {
    let n = basis.len();
    if i >= n || j >= n {
        return Err(Error::InvalidArgument(format!("basis index ({i}, {j}) out of range for N = {n}")));
    }
    let op = EfieOperator::with_rules(basis, *medium, rule.clone(), QuadratureRule::seven_point());
    Ok(op.entry(i, j))
}

/// Full `N x N` matrix with the default rules. Refuses N above `cap`.
pub fn assemble_dense(basis: &RwgBasis, medium: &Medium, cap: usize) -> Result<Matrix> {
    let n = basis.len();
    if n > cap {
        return Err(Error::DenseCapExceeded(n, cap));
    }
    let all: Vec<usize> = (0..n).collect();
    Ok(EfieOperator::new(basis, *medium).block(&all, &all))
}
