//! Near-field block elimination into a scaled block-diagonal form.
//!
//! With pivots taken in the order of a [`LeafOrdering`], step `k` has a right
//! scaling `alpha_k = I + E_k`, where `E_k` carries `-Z_pp^{-1} Z_pq` in the
//! block row of pivot `p`. Then
//!
//! ```text
//! alpha_K^T ... alpha_1^T  Z_N  alpha_1 ... alpha_K  =  diag(Z~_pp)
//! ```
//!
//! The left scaling is the transpose of the right one because `Z_N` is
//! complex symmetric, so only upper blocks are eliminated and only `alpha` is
//! stored. Block positions outside the original near pattern (fill-in) are
//! kept as low-rank factors and compressed at `fill_tol`.

use std::collections::BTreeMap;
use std::ops::Range;
use std::time::Instant;

use faer::{MatMut, MatRef};

use crate::error::{Error, Result};
use crate::hmatrix::NearField;
use crate::linalg::{gemv_add, mul, mul_add, DenseLu, Matrix, C64, ONE};
use crate::lowrank::{compress_dense, recompress, Compressed, LowRankBlock};
use crate::ordering::LeafOrdering;

/// Relative truncation for fill-in blocks.
pub const DEFAULT_FILL_TOL: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq)]
pub struct SchurOptions {
    /// Fill-in compression tolerance; 0 keeps fill-in dense.
    pub fill_tol: f64,
}

impl Default for SchurOptions {
    fn default() -> Self {
        Self { fill_tol: DEFAULT_FILL_TOL }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Full symmetric elimination with fill-in.
    Schur,
    /// Updates restricted to the original pattern; right scaling only.
    NullField,
    /// Raw diagonal blocks, no scaling.
    BlockJacobi,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SchurStats {
    /// Scaling blocks outside the original near pattern.
    pub fill_blocks: usize,
    /// Stored values in the scaling coefficients.
    pub nnz: usize,
    /// Fill-in blocks that did not compress and are stored dense.
    pub dense_fallbacks: usize,
    /// Pivot solves `Z_pp^{-1} B`.
    pub block_solves: usize,
    /// Schur-update block products.
    pub block_products: usize,
    pub setup_seconds: f64,
}

/// Right scaling coefficients of one pivot; leaves in tree numbering.
#[derive(Clone, Debug)]
pub struct ScalingStep {
    pub pivot: usize,
    pub coeffs: Vec<(usize, Compressed)>,
}

#[derive(Clone, Debug)]
pub struct SchurPreconditioner {
    variant: Variant,
    ranges: Vec<Range<usize>>,
    order: Vec<usize>,
    steps: Vec<ScalingStep>,
    /// Scaled diagonal blocks, by leaf.
    diag: Vec<Matrix>,
    lu: Vec<DenseLu>,
    fill_tol: f64,
    stats: SchurStats,
}

/// Accumulates updates into a fill-in position until its row is pivoted.
#[derive(Default)]
struct FillAcc {
    dense: Option<Matrix>,
    parts: Vec<LowRankBlock>,
    rank: usize,
}

enum Slot {
    Dense(Matrix),
    Fill(FillAcc),
}

fn negate(m: &mut Matrix) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] = -m[(i, j)];
        }
    }
}

/// `-D^{-1} B`.
fn neg_solve(lu: &DenseLu, b: &Compressed) -> Compressed {
    match b {
        Compressed::Dense(m) => {
            let mut x = m.clone();
            lu.solve_in_place(x.as_mut());
            negate(&mut x);
            Compressed::Dense(x)
        }
        Compressed::LowRank(l) => {
            let mut u = l.u().clone();
            lu.solve_in_place(u.as_mut());
            negate(&mut u);
            Compressed::LowRank(LowRankBlock::new(u, l.v().clone(), l.tolerance()))
        }
    }
}

/// `A^T B`, low-rank whenever either factor is.
fn product_t(a: &Compressed, b: &Compressed) -> Compressed {
    match (a, b) {
        (Compressed::Dense(a), Compressed::Dense(b)) => Compressed::Dense(mul(a.transpose(), b.as_ref(), ONE)),
        (Compressed::Dense(a), Compressed::LowRank(b)) => {
            let u = mul(a.transpose(), b.u().as_ref(), ONE);
            Compressed::LowRank(LowRankBlock::new(u, b.v().clone(), b.tolerance()))
        }
        (Compressed::LowRank(a), Compressed::Dense(b)) => {
            // (Ua Va^T)^T B = Va (B^T Ua)^T
            let v = mul(b.transpose(), a.u().as_ref(), ONE);
            Compressed::LowRank(LowRankBlock::new(a.v().clone(), v, a.tolerance()))
        }
        (Compressed::LowRank(a), Compressed::LowRank(b)) => {
            let core = mul(a.u().transpose(), b.u().as_ref(), ONE);
            let tol = a.tolerance().max(b.tolerance());
            if a.rank() <= b.rank() {
                // Va (core Vb^T)
                let v = mul(b.v().as_ref(), core.transpose(), ONE);
                Compressed::LowRank(LowRankBlock::new(a.v().clone(), v, tol))
            } else {
                let u = mul(a.v().as_ref(), core.as_ref(), ONE);
                Compressed::LowRank(LowRankBlock::new(u, b.v().clone(), tol))
            }
        }
    }
}

fn add_into(target: &mut Matrix, c: &Compressed) {
    match c {
        Compressed::Dense(d) => *target += d,
        Compressed::LowRank(l) if l.rank() > 0 => {
            mul_add(target.as_mut(), l.u().as_ref(), l.v().transpose(), ONE);
        }
        Compressed::LowRank(_) => {}
    }
}

impl FillAcc {
    fn add(&mut self, c: Compressed, rows: usize, cols: usize) {
        match c {
            Compressed::Dense(d) => match &mut self.dense {
                Some(t) => *t += &d,
                None => self.dense = Some(d),
            },
            Compressed::LowRank(l) => {
                if l.rank() == 0 {
                    return;
                }
                if let Some(t) = &mut self.dense {
                    add_into(t, &Compressed::LowRank(l));
                    return;
                }
                self.rank += l.rank();
                self.parts.push(l);
                if self.rank > rows.min(cols) / 2 {
                    // Past break-even: fold everything into a dense accumulator.
                    let mut t = Matrix::zeros(rows, cols);
                    for p in self.parts.drain(..) {
                        add_into(&mut t, &Compressed::LowRank(p));
                    }
                    self.rank = 0;
                    self.dense = Some(t);
                }
            }
        }
    }

    /// Compressed value of the accumulated block, and whether it fell back to dense.
    fn finish(self, rows: usize, cols: usize, tol: f64) -> (Compressed, bool) {
        let lr = match self.parts.len() {
            0 => None,
            1 => self.parts.into_iter().next(),
            _ => Some(LowRankBlock::concat(&self.parts.iter().collect::<Vec<_>>())),
        };
        match (self.dense, lr) {
            (Some(mut d), lr) => {
                if let Some(l) = lr {
                    add_into(&mut d, &Compressed::LowRank(l));
                }
                let c = compress_dense(d.as_ref(), tol);
                let dense = matches!(c, Compressed::Dense(_));
                (c, dense)
            }
            (None, Some(l)) => {
                let r = recompress(&l, tol);
                if r.storage() >= rows * cols {
                    (Compressed::Dense(r.to_dense()), true)
                } else {
                    (Compressed::LowRank(r), false)
                }
            }
            (None, None) => (Compressed::LowRank(LowRankBlock::zero(rows, cols)), false),
        }
    }
}

fn check_order(near: &NearField, order: &LeafOrdering) -> Result<()> {
    if order.len() != near.leaf_count() {
        return Err(Error::DimensionMismatch { expected: near.leaf_count(), got: order.len() });
    }
    Ok(())
}

impl SchurPreconditioner {
    /// Symmetric elimination of `near` with pivots in `order`.
    pub fn build(near: &NearField, order: &LeafOrdering, opts: &SchurOptions) -> Result<Self> {
        if !(opts.fill_tol >= 0.0) || !opts.fill_tol.is_finite() {
            return Err(Error::InvalidArgument(format!("fill tolerance must be >= 0, got {}", opts.fill_tol)));
        }
        Self::eliminate(near, order, opts.fill_tol, Variant::Schur)
    }

    /// Baseline that drops every update outside the original pattern and
    /// scales from the right only.
    pub fn null_field(near: &NearField, order: &LeafOrdering) -> Result<Self> {
        Self::eliminate(near, order, 0.0, Variant::NullField)
    }

    /// LU of the raw diagonal blocks.
    pub fn block_jacobi(near: &NearField) -> Result<Self> {
        let clock = Instant::now();
        let k = near.leaf_count();
        let mut diag = Vec::with_capacity(k);
        let mut lu = Vec::with_capacity(k);
        for l in 0..k {
            let d = near.block(l, l).expect("diagonal block").to_owned();
            lu.push(DenseLu::factor(d.as_ref(), l)?);
            diag.push(d);
        }
        let stats = SchurStats { setup_seconds: clock.elapsed().as_secs_f64(), ..Default::default() };
        Ok(Self {
            variant: Variant::BlockJacobi,
            ranges: (0..k).map(|l| near.leaf_range(l)).collect(),
            order: (0..k).collect(),
            steps: Vec::new(),
            diag,
            lu,
            fill_tol: 0.0,
            stats,
        })
    }

    fn eliminate(near: &NearField, order: &LeafOrdering, fill_tol: f64, variant: Variant) -> Result<Self> {
        check_order(near, order)?;
        let clock = Instant::now();
        let k_count = near.leaf_count();
        let leaf_of = order.order();
        let step_of = order.position();
        let size = |q: usize| near.leaf_range(leaf_of[q]).len();

        // Working upper triangle in step numbering.
        let mut rows: Vec<BTreeMap<usize, Slot>> = (0..k_count).map(|_| BTreeMap::new()).collect();
        let mut diag: Vec<Option<Matrix>> = vec![None; k_count];
        for (&(a, b), blk) in near.blocks() {
            let (p, q) = (step_of[a], step_of[b]);
            if p == q {
                diag[p] = Some(blk.clone());
            } else if p < q {
                rows[p].insert(q, Slot::Dense(blk.clone()));
            } else {
                rows[q].insert(p, Slot::Dense(blk.transpose().to_owned()));
            }
        }
        let pattern = |p: usize, q: usize| near.block(leaf_of[p], leaf_of[q]).is_some();

        let mut stats = SchurStats::default();
        let mut steps = Vec::with_capacity(k_count);
        let mut lus: Vec<Option<DenseLu>> = (0..k_count).map(|_| None).collect();
        let mut diag_out: Vec<Option<Matrix>> = vec![None; k_count];

        for k in 0..k_count {
            let leaf = leaf_of[k];
            let d = diag[k].take().expect("diagonal block");
            let lu = DenseLu::factor(d.as_ref(), leaf)?;
            let row = std::mem::take(&mut rows[k]);
            let mut entries: Vec<(usize, Compressed)> = Vec::with_capacity(row.len());
            for (q, slot) in row {
                let c = match slot {
                    Slot::Dense(m) => Compressed::Dense(m),
                    Slot::Fill(acc) => {
                        let (c, dense) = acc.finish(size(k), size(q), fill_tol);
                        stats.dense_fallbacks += dense as usize;
                        c
                    }
                };
                entries.push((q, c));
            }
            let alphas: Vec<(usize, Compressed)> = entries.iter().map(|(q, w)| (*q, neg_solve(&lu, w))).collect();
            stats.block_solves += alphas.len();

            for (a, (q1, w1)) in entries.iter().enumerate() {
                for (q2, al2) in &alphas[a..] {
                    let on_pattern = pattern(*q1, *q2);
                    if variant == Variant::NullField && !on_pattern {
                        continue;
                    }
                    let c = product_t(w1, al2);
                    stats.block_products += 1;
                    if q1 == q2 {
                        add_into(diag[*q1].as_mut().expect("pending diagonal"), &c);
                        continue;
                    }
                    let (m, n) = (size(*q1), size(*q2));
                    let slot = rows[*q1].entry(*q2).or_insert_with(|| {
                        if on_pattern || fill_tol == 0.0 {
                            Slot::Dense(Matrix::zeros(m, n))
                        } else {
                            Slot::Fill(FillAcc::default())
                        }
                    });
                    match slot {
                        Slot::Dense(t) => add_into(t, &c),
                        Slot::Fill(acc) => acc.add(c, m, n),
                    }
                }
            }

            for (q, alpha) in &alphas {
                stats.nnz += alpha.storage();
                stats.fill_blocks += !pattern(k, *q) as usize;
            }
            steps.push(ScalingStep { pivot: leaf, coeffs: alphas.into_iter().map(|(q, a)| (leaf_of[q], a)).collect() });
            lus[leaf] = Some(lu);
            diag_out[leaf] = Some(d);
        }
        stats.setup_seconds = clock.elapsed().as_secs_f64();
        Ok(Self {
            variant,
            ranges: (0..k_count).map(|l| near.leaf_range(l)).collect(),
            order: leaf_of.to_vec(),
            steps,
            diag: diag_out.into_iter().map(|d| d.expect("every leaf pivoted")).collect(),
            lu: lus.into_iter().map(|l| l.expect("every leaf pivoted")).collect(),
            fill_tol,
            stats,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn dim(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn leaf_count(&self) -> usize {
        self.ranges.len()
    }

    /// Elimination order (leaves by step).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn steps(&self) -> &[ScalingStep] {
        &self.steps
    }

    pub fn stats(&self) -> &SchurStats {
        &self.stats
    }

    pub fn fill_tol(&self) -> f64 {
        self.fill_tol
    }

    /// Scaled diagonal block of a leaf.
    pub fn diag_block(&self, leaf: usize) -> &Matrix {
        &self.diag[leaf]
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: len });
        }
        Ok(())
    }

    /// `x <- alpha_1 alpha_2 ... alpha_K x`.
    pub fn apply_right(&self, x: &mut [C64]) -> Result<()> {
        self.check(x.len())?;
        for step in self.steps.iter().rev() {
            let rp = self.ranges[step.pivot].clone();
            let mut acc = vec![C64::new(0.0, 0.0); rp.len()];
            for (q, a) in &step.coeffs {
                a.apply_add(&mut acc, &x[self.ranges[*q].clone()], ONE);
            }
            for (xi, ai) in x[rp].iter_mut().zip(acc) {
                *xi += ai;
            }
        }
        Ok(())
    }

    /// `x <- (alpha_1 ... alpha_K)^T x`.
    pub fn apply_left(&self, x: &mut [C64]) -> Result<()> {
        self.check(x.len())?;
        for step in &self.steps {
            let xp = x[self.ranges[step.pivot].clone()].to_vec();
            for (q, a) in &step.coeffs {
                a.apply_transpose_add(&mut x[self.ranges[*q].clone()], &xp, ONE);
            }
        }
        Ok(())
    }

    /// `x <- diag(Z~)^{-1} x`.
    pub fn solve_diag(&self, x: &mut [C64]) -> Result<()> {
        self.check(x.len())?;
        for (r, lu) in self.ranges.iter().zip(&self.lu) {
            lu.solve_vec_in_place(&mut x[r.clone()]);
        }
        Ok(())
    }

    /// `diag(Z~) x`.
    pub fn diag_apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check(x.len())?;
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        for (r, d) in self.ranges.iter().zip(&self.diag) {
            gemv_add(&mut y[r.clone()], d.as_ref(), &x[r.clone()], ONE);
        }
        Ok(y)
    }

    /// `X <- (alpha_1 ... alpha_K)^T X`, column by column.
    pub fn apply_left_mat(&self, mut x: MatMut<'_, C64>) -> Result<()> {
        self.check(x.nrows())?;
        for step in &self.steps {
            let rp = self.ranges[step.pivot].clone();
            let xp = x.as_ref().subrows(rp.start, rp.len()).to_owned();
            for (q, a) in &step.coeffs {
                let rq = self.ranges[*q].clone();
                let dst = x.as_mut().subrows_mut(rq.start, rq.len());
                apply_t_mat(a, dst, xp.as_ref());
            }
        }
        Ok(())
    }

    /// `X <- alpha_1 ... alpha_K X`, column by column.
    pub fn apply_right_mat(&self, mut x: MatMut<'_, C64>) -> Result<()> {
        self.check(x.nrows())?;
        for step in self.steps.iter().rev() {
            let rp = self.ranges[step.pivot].clone();
            let mut acc = Matrix::zeros(rp.len(), x.ncols());
            for (q, a) in &step.coeffs {
                let rq = self.ranges[*q].clone();
                apply_mat(a, acc.as_mut(), x.as_ref().subrows(rq.start, rq.len()));
            }
            let mut dst = x.as_mut().subrows_mut(rp.start, rp.len());
            for j in 0..acc.ncols() {
                for i in 0..acc.nrows() {
                    dst[(i, j)] += acc[(i, j)];
                }
            }
        }
        Ok(())
    }

    /// Right scaling as an explicit `N x N` matrix, for small checks.
    pub fn scaling_matrix(&self) -> Matrix {
        let n = self.dim();
        let mut a = Matrix::from_fn(n, n, |i, j| if i == j { ONE } else { C64::new(0.0, 0.0) });
        self.apply_right_mat(a.as_mut()).expect("square");
        a
    }

    /// Frobenius norm of the part of `A^T Z_N A` outside the diagonal blocks,
    /// computed densely.
    pub fn off_diagonal_mass(&self, near: &NearField) -> Result<f64> {
        let z = near.to_dense();
        // (A^T Z A)^T = A^T (A^T Z)^T for symmetric Z.
        let mut m = z;
        self.apply_left_mat(m.as_mut())?;
        let mut t = m.transpose().to_owned();
        self.apply_left_mat(t.as_mut())?;
        let mut mass = 0.0;
        let leaf = block_index(&self.ranges);
        for j in 0..t.ncols() {
            for i in 0..t.nrows() {
                if leaf[i] != leaf[j] {
                    mass += t[(i, j)].norm_sqr();
                }
            }
        }
        Ok(mass.sqrt())
    }
}

fn block_index(ranges: &[Range<usize>]) -> Vec<usize> {
    let mut out = Vec::new();
    for (l, r) in ranges.iter().enumerate() {
        out.extend(std::iter::repeat(l).take(r.len()));
    }
    out
}

/// `dst += A src`.
fn apply_mat(a: &Compressed, dst: MatMut<'_, C64>, src: MatRef<'_, C64>) {
    match a {
        Compressed::Dense(d) => mul_add(dst, d.as_ref(), src, ONE),
        Compressed::LowRank(l) if l.rank() > 0 => {
            let t = mul(l.v().transpose(), src, ONE);
            mul_add(dst, l.u().as_ref(), t.as_ref(), ONE);
        }
        Compressed::LowRank(_) => {}
    }
}

/// `dst += A^T src`.
fn apply_t_mat(a: &Compressed, dst: MatMut<'_, C64>, src: MatRef<'_, C64>) {
    match a {
        Compressed::Dense(d) => mul_add(dst, d.transpose(), src, ONE),
        Compressed::LowRank(l) if l.rank() > 0 => {
            let t = mul(l.u().transpose(), src, ONE);
            mul_add(dst, l.v().as_ref(), t.as_ref(), ONE);
        }
        Compressed::LowRank(_) => {}
    }
}

/// Dense elimination that computes left and right coefficients separately
/// and updates both triangles. Used to count the work the symmetric build saves.
#[derive(Clone, Debug)]
pub struct ReferenceBuild {
    /// Per step, `(q, -Z_pp^{-1} Z_pq)` with leaves in tree numbering.
    pub right: Vec<Vec<(usize, Matrix)>>,
    /// Per step, `(q, -Z_qp Z_pp^{-1})`.
    pub left: Vec<Vec<(usize, Matrix)>>,
    /// Schur complements by leaf.
    pub diag: Vec<Matrix>,
    pub block_solves: usize,
    pub block_products: usize,
}

pub fn build_reference(near: &NearField, order: &LeafOrdering) -> Result<ReferenceBuild> {
    check_order(near, order)?;
    let k_count = near.leaf_count();
    let leaf_of = order.order();
    let step_of = order.position();
    let mut w: BTreeMap<(usize, usize), Matrix> = BTreeMap::new();
    for (&(a, b), blk) in near.blocks() {
        let (p, q) = (step_of[a], step_of[b]);
        w.insert((p, q), blk.clone());
        if p != q {
            w.insert((q, p), blk.transpose().to_owned());
        }
    }
    let mut right = Vec::with_capacity(k_count);
    let mut left = Vec::with_capacity(k_count);
    let mut diag = vec![Matrix::zeros(0, 0); k_count];
    let (mut solves, mut products) = (0, 0);
    for k in 0..k_count {
        let d = w.remove(&(k, k)).expect("diagonal block");
        let lu = DenseLu::factor(d.as_ref(), leaf_of[k])?;
        let row: Vec<(usize, Matrix)> =
            w.range((k, k + 1)..(k + 1, 0)).map(|(&(_, q), m)| (q, m.clone())).collect();
        let col: Vec<(usize, Matrix)> = (k + 1..k_count).filter_map(|q| w.remove(&(q, k)).map(|m| (q, m))).collect();
        for (q, _) in &row {
            w.remove(&(k, *q));
        }
        let alpha: Vec<(usize, Matrix)> = row
            .iter()
            .map(|(q, m)| {
                let mut x = m.clone();
                lu.solve_in_place(x.as_mut());
                negate(&mut x);
                (*q, x)
            })
            .collect();
        let beta: Vec<(usize, Matrix)> = col
            .iter()
            .map(|(q, m)| {
                let mut x = m.transpose().to_owned();
                lu.solve_transpose_in_place(x.as_mut());
                negate(&mut x);
                (*q, x.transpose().to_owned())
            })
            .collect();
        solves += alpha.len() + beta.len();
        for (q1, zc) in &col {
            for (q2, a) in &alpha {
                let t = w.entry((*q1, *q2)).or_insert_with(|| Matrix::zeros(zc.nrows(), a.ncols()));
                mul_add(t.as_mut(), zc.as_ref(), a.as_ref(), ONE);
                products += 1;
            }
        }
        right.push(alpha.into_iter().map(|(q, m)| (leaf_of[q], m)).collect());
        left.push(beta.into_iter().map(|(q, m)| (leaf_of[q], m)).collect());
        diag[leaf_of[k]] = d;
    }
    Ok(ReferenceBuild { right, left, diag, block_solves: solves, block_products: products })
}
