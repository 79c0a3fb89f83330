//! Low-rank blocks: adaptive cross approximation and SVD recompression.

use faer::MatRef;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, gemv_add, mul, Matrix, C64, ONE, ZERO};

/// Implicit `m x n` block that can produce single rows and columns.
pub trait EntryGenerator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn row(&mut self, i: usize, out: &mut [C64]);
    fn col(&mut self, j: usize, out: &mut [C64]);
}

/// Generator view of an explicit matrix.
pub struct DenseGenerator<'a>(pub MatRef<'a, C64>);

impl EntryGenerator for DenseGenerator<'_> {
    fn rows(&self) -> usize {
        self.0.nrows()
    }
    fn cols(&self) -> usize {
        self.0.ncols()
    }
    fn row(&mut self, i: usize, out: &mut [C64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.0[(i, j)];
        }
    }
    fn col(&mut self, j: usize, out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.0[(i, j)];
        }
    }
}

/// `A ~ U V^T` with `U: m x r` and `V: n x r`.
#[derive(Clone, Debug)]
pub struct LowRankBlock {
    u: Matrix,
    v: Matrix,
    tol: f64,
}

impl LowRankBlock {
    pub fn new(u: Matrix, v: Matrix, tol: f64) -> Self {
        assert_eq!(u.ncols(), v.ncols(), "factor ranks differ");
        Self { u, v, tol }
    }

    pub fn zero(m: usize, n: usize) -> Self {
        Self { u: Matrix::zeros(m, 0), v: Matrix::zeros(n, 0), tol: 0.0 }
    }

    pub fn rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn cols(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Stored complex values, `r (m + n)`.
    pub fn storage(&self) -> usize {
        self.rank() * (self.rows() + self.cols())
    }

    pub fn to_dense(&self) -> Matrix {
        mul(self.u.as_ref(), self.v.transpose(), ONE)
    }

    /// The transposed block, `V U^T`.
    pub fn transpose(&self) -> Self {
        Self { u: self.v.clone(), v: self.u.clone(), tol: self.tol }
    }

    /// `y += alpha U (V^T x)`.
    pub fn apply_add(&self, y: &mut [C64], x: &[C64], alpha: C64) {
        if self.rank() == 0 {
            return;
        }
        let mut t = vec![ZERO; self.rank()];
        gemv_add(&mut t, self.v.transpose(), x, ONE);
        gemv_add(y, self.u.as_ref(), &t, alpha);
    }

    /// `y += alpha V (U^T x)`.
    pub fn apply_transpose_add(&self, y: &mut [C64], x: &[C64], alpha: C64) {
        if self.rank() == 0 {
            return;
        }
        let mut t = vec![ZERO; self.rank()];
        gemv_add(&mut t, self.u.transpose(), x, ONE);
        gemv_add(y, self.v.as_ref(), &t, alpha);
    }

    /// Multiplies the block by `alpha` (folded into `U`).
    pub fn scale(&mut self, alpha: C64) {
        for j in 0..self.u.ncols() {
            for i in 0..self.u.nrows() {
                self.u[(i, j)] *= alpha;
            }
        }
    }

    /// Sum of blocks of equal shape, with concatenated factors (not recompressed).
    pub fn concat(blocks: &[&LowRankBlock]) -> Self {
        let (m, n) = (blocks[0].rows(), blocks[0].cols());
        let r: usize = blocks.iter().map(|b| b.rank()).sum();
        let mut u = Matrix::zeros(m, r);
        let mut v = Matrix::zeros(n, r);
        let mut k = 0;
        for b in blocks {
            assert_eq!((b.rows(), b.cols()), (m, n), "block shapes differ");
            u.as_mut().submatrix_mut(0, k, m, b.rank()).copy_from(b.u.as_ref());
            v.as_mut().submatrix_mut(0, k, n, b.rank()).copy_from(b.v.as_ref());
            k += b.rank();
        }
        Self { u, v, tol: blocks.iter().map(|b| b.tol).fold(0.0, f64::max) }
    }
}

/// Result of [`aca`].
#[derive(Clone, Debug)]
pub struct AcaResult {
    pub block: LowRankBlock,
    pub converged: bool,
    /// Final estimate of `||A||_F`.
    pub norm_estimate: f64,
    /// Norm of the first rejected (or last accepted) update.
    pub residual_estimate: f64,
}

/// Consecutive negligible cross terms required to stop ACA.
const CONFIRMATIONS: usize = 2;

/// Unused row with the largest index distance to the nearest used one.
fn farthest_unused(used: &[bool]) -> Option<usize> {
    let m = used.len();
    let mut dist = vec![usize::MAX; m];
    let mut last = None;
    for i in 0..m {
        if used[i] {
            last = Some(i);
        }
        if let Some(l) = last {
            dist[i] = i - l;
        }
    }
    last = None;
    for i in (0..m).rev() {
        if used[i] {
            last = Some(i);
        }
        if let Some(l) = last {
            dist[i] = dist[i].min(l - i);
        }
    }
    (0..m).filter(|&i| !used[i]).max_by_key(|&i| (dist[i], std::cmp::Reverse(i)))
}

/// Partially pivoted ACA. Stops once two consecutive candidate rank-one
/// terms are below `tol * ||S_k||_F` (neither is kept), or flags
/// non-convergence at `max_rank`.
pub fn aca<G: EntryGenerator + ?Sized>(gen: &mut G, tol: f64, max_rank: usize) -> Result<AcaResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("ACA tolerance must be positive, got {tol}")));
    }
    let (m, n) = (gen.rows(), gen.cols());
    let mut us: Vec<Vec<C64>> = Vec::new();
    let mut vs: Vec<Vec<C64>> = Vec::new();
    let mut used = vec![false; m];
    let mut norm2 = 0.0f64;
    let mut last = 0.0f64;
    let mut converged = false;
    let mut row = vec![ZERO; n];
    let mut col = vec![ZERO; m];
    let mut next = Some(0usize);
    let mut confirmations = 0;

    while let Some(i) = next {
        if us.len() >= max_rank.min(m).min(n) {
            break;
        }
        used[i] = true;
        gen.row(i, &mut row);
        for (u, v) in us.iter().zip(&vs) {
            let a = u[i];
            for (r, vv) in row.iter_mut().zip(v) {
                *r -= a * vv;
            }
        }
        let (j, pivot) = row
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.norm()))
            .fold((0, 0.0), |best, c| if c.1 > best.1 { c } else { best });
        if pivot == 0.0 || !pivot.is_finite() {
            // This row is already reproduced exactly; try the next unused one.
            next = used.iter().position(|&u| !u);
            if next.is_none() {
                converged = true;
            }
            continue;
        }
        let p = row[j];
        let v: Vec<C64> = row.iter().map(|x| x / p).collect();
        gen.col(j, &mut col);
        for (u, vv) in us.iter().zip(&vs) {
            let a = vv[j];
            for (c, uu) in col.iter_mut().zip(u) {
                *c -= a * uu;
            }
        }
        let u = col.clone();

        let nu = u.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let mut cross = ZERO;
        for (ul, vl) in us.iter().zip(&vs) {
            let a: C64 = ul.iter().zip(&u).map(|(p, q)| p.conj() * q).sum();
            let b: C64 = vl.iter().zip(&v).map(|(p, q)| p.conj() * q).sum();
            cross += a * b;
        }
        let candidate = (norm2 + 2.0 * cross.re + nu * nv).max(0.0);
        last = (nu * nv).sqrt();
        if !us.is_empty() && last <= tol * candidate.sqrt() {
            // Negligible update. A single small cross can be a row the factors
            // happen to fit, so confirm on the unused row farthest from every
            // pivot row before stopping.
            confirmations += 1;
            if confirmations >= CONFIRMATIONS {
                converged = true;
                break;
            }
            next = farthest_unused(&used);
            if next.is_none() {
                converged = true;
            }
            continue;
        }
        confirmations = 0;
        norm2 = candidate;
        us.push(u);
        vs.push(v);
        next = (0..m)
            .filter(|&r| !used[r])
            .map(|r| (r, us.last().expect("just pushed")[r].norm()))
            .fold(None, |best: Option<(usize, f64)>, c| match best {
                Some(b) if b.1 >= c.1 => Some(b),
                _ => Some(c),
            })
            .map(|(r, _)| r);
        if next.is_none() {
            converged = true;
        }
    }
    if next.is_none() && us.len() < max_rank.min(m).min(n) {
        converged = true;
    }

    let r = us.len();
    let u = Matrix::from_fn(m, r, |i, k| us[k][i]);
    let v = Matrix::from_fn(n, r, |j, k| vs[k][j]);
    Ok(AcaResult { block: LowRankBlock::new(u, v, tol), converged, norm_estimate: norm2.sqrt(), residual_estimate: last })
}

/// Smallest rank whose discarded tail satisfies `||tail||_2 <= tol ||s||_2`.
fn truncation_rank(s: &[f64], tol: f64) -> usize {
    let total: f64 = s.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return 0;
    }
    let limit = tol * tol * total;
    let mut tail = 0.0;
    let mut r = s.len();
    while r > 0 {
        let t = tail + s[r - 1] * s[r - 1];
        if t > limit {
            break;
        }
        tail = t;
        r -= 1;
    }
    r
}

/// Reduces the rank of `block` by QR of both factors and an SVD of the small
/// core. The discarded singular values have Frobenius norm at most
/// `tol * ||block||_F`.
pub fn recompress(block: &LowRankBlock, tol: f64) -> LowRankBlock {
    let r = block.rank();
    if r == 0 {
        return block.clone();
    }
    let (m, n) = (block.rows(), block.cols());
    if r >= m.min(n) {
        // The factors are at least as large as the block itself.
        return match svd_compress(block.to_dense().as_ref(), tol) {
            Compressed::LowRank(b) if b.rank() <= r => b,
            _ => block.clone(),
        };
    }
    let qu = block.u.qr();
    let qv = block.v.qr();
    let (q_u, r_u) = (qu.compute_thin_Q(), qu.thin_R());
    let (q_v, r_v) = (qv.compute_thin_Q(), qv.thin_R());
    let core = mul(r_u.as_ref(), r_v.transpose(), ONE);
    let Ok(svd) = core.thin_svd() else {
        return block.clone();
    };
    let s: Vec<f64> = svd.S().column_vector().iter().map(|x| x.re).collect();
    let k = truncation_rank(&s, tol);
    if k == 0 {
        return LowRankBlock { u: Matrix::zeros(m, 0), v: Matrix::zeros(n, 0), tol };
    }
    let w = svd.U();
    let y = svd.V();
    // core = W S Y^H, so block = (Qu W S)(Qv conj(Y))^T.
    let ws = Matrix::from_fn(w.nrows(), k, |i, j| w[(i, j)] * s[j]);
    let yc = Matrix::from_fn(y.nrows(), k, |i, j| y[(i, j)].conj());
    let u = mul(q_u.as_ref(), ws.as_ref(), ONE);
    let v = mul(q_v.as_ref(), yc.as_ref(), ONE);
    LowRankBlock { u, v, tol }
}

/// A block kept either in factored or explicit form.
#[derive(Clone, Debug)]
pub enum Compressed {
    LowRank(LowRankBlock),
    Dense(Matrix),
}

impl Compressed {
    pub fn rows(&self) -> usize {
        match self {
            Compressed::LowRank(b) => b.rows(),
            Compressed::Dense(d) => d.nrows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Compressed::LowRank(b) => b.cols(),
            Compressed::Dense(d) => d.ncols(),
        }
    }

    pub fn storage(&self) -> usize {
        match self {
            Compressed::LowRank(b) => b.storage(),
            Compressed::Dense(d) => d.nrows() * d.ncols(),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Compressed::LowRank(b) => b.to_dense(),
            Compressed::Dense(d) => d.clone(),
        }
    }

    /// `y += alpha A x`.
    pub fn apply_add(&self, y: &mut [C64], x: &[C64], alpha: C64) {
        match self {
            Compressed::LowRank(b) => b.apply_add(y, x, alpha),
            Compressed::Dense(d) => gemv_add(y, d.as_ref(), x, alpha),
        }
    }

    /// `y += alpha A^T x`.
    pub fn apply_transpose_add(&self, y: &mut [C64], x: &[C64], alpha: C64) {
        match self {
            Compressed::LowRank(b) => b.apply_transpose_add(y, x, alpha),
            Compressed::Dense(d) => gemv_add(y, d.transpose(), x, alpha),
        }
    }
}

/// Compresses an explicit block to `||A - UV^T||_F <= tol ||A||_F`. Returns
/// the factored form only when it stores fewer values than the block.
///
/// A fully pivoted cross approximation at `tol / 2` followed by
/// [`recompress`] finds the rank in `O(mnr)`; blocks that do not fall below
/// break-even that way go through a thin SVD.
pub fn compress_dense(a: MatRef<'_, C64>, tol: f64) -> Compressed {
    let (m, n) = (a.nrows(), a.ncols());
    let norm = frobenius(a);
    if norm == 0.0 {
        return Compressed::LowRank(LowRankBlock { u: Matrix::zeros(m, 0), v: Matrix::zeros(n, 0), tol });
    }
    let break_even = (m * n).div_ceil(m + n);
    if let Some(cross) = full_pivot_cross(a, 0.5 * tol * norm, break_even) {
        let b = recompress(&cross, tol / (2.0 + tol));
        return Compressed::LowRank(LowRankBlock { tol, ..b });
    }
    svd_compress(a, tol)
}

/// Cross approximation with complete pivoting on an explicit residual. Stops
/// once `||R||_F <= abs_tol`; gives up (returns `None`) at `max_rank` terms.
fn full_pivot_cross(a: MatRef<'_, C64>, abs_tol: f64, max_rank: usize) -> Option<LowRankBlock> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut r = a.to_owned();
    let limit = abs_tol * abs_tol;
    let mut us: Vec<Vec<C64>> = Vec::new();
    let mut vs: Vec<Vec<C64>> = Vec::new();
    let mut resid = frobenius(a).powi(2);
    loop {
        if resid <= limit {
            break;
        }
        if us.len() >= max_rank {
            return None;
        }
        let (mut pi, mut pj, mut best) = (0, 0, -1.0);
        for j in 0..n {
            for i in 0..m {
                let v = r[(i, j)].norm_sqr();
                if v > best {
                    (pi, pj, best) = (i, j, v);
                }
            }
        }
        let piv = r[(pi, pj)];
        let u: Vec<C64> = (0..m).map(|i| r[(i, pj)]).collect();
        let v: Vec<C64> = (0..n).map(|j| r[(pi, j)] / piv).collect();
        resid = 0.0;
        for (j, vj) in v.iter().enumerate() {
            for (i, ui) in u.iter().enumerate() {
                let e = r[(i, j)] - ui * vj;
                r[(i, j)] = e;
                resid += e.norm_sqr();
            }
        }
        us.push(u);
        vs.push(v);
    }
    let k = us.len();
    if k >= max_rank {
        return None;
    }
    Some(LowRankBlock {
        u: Matrix::from_fn(m, k, |i, j| us[j][i]),
        v: Matrix::from_fn(n, k, |i, j| vs[j][i]),
        tol: 0.0,
    })
}

fn svd_compress(a: MatRef<'_, C64>, tol: f64) -> Compressed {
    let (m, n) = (a.nrows(), a.ncols());
    let Ok(svd) = a.thin_svd() else {
        return Compressed::Dense(a.to_owned());
    };
    let s: Vec<f64> = svd.S().column_vector().iter().map(|x| x.re).collect();
    let k = truncation_rank(&s, tol);
    if k * (m + n) >= m * n {
        return Compressed::Dense(a.to_owned());
    }
    let (w, y) = (svd.U(), svd.V());
    let u = Matrix::from_fn(m, k, |i, j| w[(i, j)] * s[j]);
    let v = Matrix::from_fn(n, k, |i, j| y[(i, j)].conj());
    Compressed::LowRank(LowRankBlock { u, v, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{BlockPartition, ClusterTree};
    use crate::efie::{EfieOperator, Medium};
    use crate::mesh::{build_rwg, generate_plate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(m, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        frobenius((a - b).as_ref()) / frobenius(a.as_ref())
    }

    #[test]
    fn rank_one_is_recovered_in_one_step() {
        let x: Vec<C64> = (0..20).map(|i| C64::new(1.0 + i as f64, 0.5)).collect();
        let y: Vec<C64> = (0..15).map(|j| C64::new(0.3, -(j as f64))).collect();
        let a = Matrix::from_fn(20, 15, |i, j| x[i] * y[j]);
        let r = aca(&mut DenseGenerator(a.as_ref()), 1e-8, 7).unwrap();
        assert!(r.converged);
        assert_eq!(r.block.rank(), 1);
        assert!(rel_err(&a, &r.block.to_dense()) < 1e-13);
    }

    #[test]
    fn zero_block_has_rank_zero() {
        let a = Matrix::zeros(12, 9);
        let r = aca(&mut DenseGenerator(a.as_ref()), 1e-6, 4).unwrap();
        assert!(r.converged);
        assert_eq!(r.block.rank(), 0);
        assert_eq!(r.block.storage(), 0);
    }

    #[test]
    fn identity_is_kept_dense() {
        let a = Matrix::from_fn(10, 10, |i, j| if i == j { ONE } else { ZERO });
        assert!(matches!(compress_dense(a.as_ref(), 1e-3), Compressed::Dense(_)));
        let r = aca(&mut DenseGenerator(a.as_ref()), 1e-3, 5).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn noisy_rank_three_compresses_to_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let base = mul(random(40, 3, &mut rng).as_ref(), random(3, 30, &mut rng).as_ref(), ONE);
        let noise = random(40, 30, &mut rng);
        let a = Matrix::from_fn(40, 30, |i, j| base[(i, j)] + noise[(i, j)] * 1e-10);
        match compress_dense(a.as_ref(), 1e-6) {
            Compressed::LowRank(b) => {
                assert_eq!(b.rank(), 3);
                assert!(rel_err(&a, &b.to_dense()) < 1e-6);
            }
            Compressed::Dense(_) => panic!("expected a factored block"),
        }
        let r = aca(&mut DenseGenerator(a.as_ref()), 1e-6, 15).unwrap();
        assert!(r.converged);
        let c = recompress(&r.block, 1e-6);
        assert_eq!(c.rank(), 3);
        assert!(rel_err(&a, &c.to_dense()) < 1e-6);
    }

    #[test]
    fn dense_compression_meets_bound_near_optimal_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // Geometric singular-value decay, like a smooth kernel block.
        let (m, n) = (40, 33);
        let x = random(m, n, &mut rng);
        let q1 = x.qr().compute_thin_Q();
        let q2 = random(n, n, &mut rng).qr().compute_thin_Q();
        let s = Matrix::from_fn(n, n, |i, j| if i == j { C64::new(0.5f64.powi(i as i32), 0.0) } else { ZERO });
        let a = &q1 * &s * q2.transpose();
        for tol in [1e-2, 1e-3, 1e-4] {
            let c = compress_dense(a.as_ref(), tol);
            assert!(rel_err(&a, &c.to_dense()) <= tol, "tol {tol}");
            let Compressed::LowRank(b) = c else { panic!("expected a factored block at {tol}") };
            let svd = svd_compress(a.as_ref(), tol);
            let optimal = match svd {
                Compressed::LowRank(o) => o.rank(),
                Compressed::Dense(_) => usize::MAX,
            };
            assert!(b.rank() <= optimal + 1, "tol {tol}: {} vs {optimal}", b.rank());
        }
    }

    #[test]
    fn recompression_truncates_redundant_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random(30, 2, &mut rng);
        let v = random(25, 2, &mut rng);
        let b = LowRankBlock::new(u, v, 1e-8);
        let twice = LowRankBlock::concat(&[&b, &b, &b]);
        assert_eq!(twice.rank(), 6);
        let c = recompress(&twice, 1e-8);
        assert_eq!(c.rank(), 2);
        let mut expected = b.to_dense();
        expected *= faer::Scale(C64::new(3.0, 0.0));
        assert!(rel_err(&expected, &c.to_dense()) < 1e-12);
    }

    #[test]
    fn apply_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = LowRankBlock::new(random(8, 3, &mut rng), random(6, 3, &mut rng), 0.0);
        let d = b.to_dense();
        let x: Vec<C64> = (0..6).map(|k| C64::new(k as f64, 1.0)).collect();
        let xt: Vec<C64> = (0..8).map(|k| C64::new(1.0, -(k as f64))).collect();
        let alpha = C64::new(0.5, -2.0);
        let mut y = vec![ZERO; 8];
        let mut z = vec![ZERO; 8];
        b.apply_add(&mut y, &x, alpha);
        gemv_add(&mut z, d.as_ref(), &x, alpha);
        for (p, q) in y.iter().zip(&z) {
            assert!((p - q).norm() < 1e-12);
        }
        let mut y = vec![ZERO; 6];
        let mut z = vec![ZERO; 6];
        b.apply_transpose_add(&mut y, &xt, alpha);
        gemv_add(&mut z, d.transpose(), &xt, alpha);
        for (p, q) in y.iter().zip(&z) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    struct Block<'a> {
        op: &'a EfieOperator<'a>,
        rows: Vec<usize>,
        cols: Vec<usize>,
    }

    impl EntryGenerator for Block<'_> {
        fn rows(&self) -> usize {
            self.rows.len()
        }
        fn cols(&self) -> usize {
            self.cols.len()
        }
        fn row(&mut self, i: usize, out: &mut [C64]) {
            for (o, &j) in out.iter_mut().zip(&self.cols) {
                *o = self.op.entry(self.rows[i], j);
            }
        }
        fn col(&mut self, j: usize, out: &mut [C64]) {
            for (o, &i) in out.iter_mut().zip(&self.rows) {
                *o = self.op.entry(i, self.cols[j]);
            }
        }
    }

    #[test]
    fn efie_far_blocks_meet_tolerance() {
        let basis = build_rwg(&generate_plate(3.0, 3.0, 10, 300e6).unwrap()).unwrap();
        let medium = Medium::vacuum(300e6).unwrap();
        let op = EfieOperator::new(&basis, medium);
        let tree = ClusterTree::from_basis(&basis, 40, 20).unwrap();
        let part = BlockPartition::build(&tree, 1.0);
        assert!(!part.far().is_empty());
        for tol in [1e-3, 1e-4] {
            for f in part.far().iter().take(12) {
                let rows = tree.indices(f.t).to_vec();
                let cols = tree.indices(f.s).to_vec();
                let exact = op.block(&rows, &cols);
                let max_rank = rows.len().min(cols.len()) / 2;
                let mut gen = Block { op: &op, rows, cols };
                let r = aca(&mut gen, tol, max_rank.max(1)).unwrap();
                let c = recompress(&r.block, tol);
                assert!(c.rank() <= r.block.rank());
                let err = rel_err(&exact, &c.to_dense());
                assert!(err <= 3.0 * tol, "tol {tol}: error {err}, rank {}", c.rank());
            }
        }
    }
}
