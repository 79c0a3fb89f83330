//! The hierarchical EFIE operator `Z = Z_N + Z_F`.
//!
//! Everything is held in tree order (see [`ClusterTree`]): leaf `t` owns the
//! contiguous range `leaf_range(t)`. Near blocks are stored for `t <= s` and
//! far blocks for node pairs `t < s`; the other half is applied through the
//! transpose, which is exact because the Galerkin matrix is symmetric.

use std::collections::BTreeMap;
use std::ops::Range;
use std::time::Instant;

use faer::MatRef;

use crate::cluster::{BlockPartition, ClusterTree};
use crate::efie::{EfieOperator, Medium, PairCache};
use crate::error::{Error, Result};
use crate::linalg::{gemv_add, Matrix, C64, ONE, ZERO};
use crate::lowrank::{aca, compress_dense, recompress, Compressed, EntryGenerator};
use crate::mesh::RwgBasis;

/// Far blocks with a side at most this long are assembled explicitly and
/// compressed by SVD; ACA has too few pivots to work with there.
pub const SMALL_BLOCK: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct HOptions {
    pub tol_aca: f64,
}

impl Default for HOptions {
    fn default() -> Self {
        Self { tol_aca: 1e-4 }
    }
}

/// A stored far block, rows and columns in tree order.
#[derive(Clone, Debug)]
pub struct FarEntry {
    pub t: usize,
    pub s: usize,
    pub level: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub block: Compressed,
}

/// Stored complex values and bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StorageReport {
    pub near_values: usize,
    pub far_values: usize,
    pub total_bytes: usize,
}

/// Assembly statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssemblyStats {
    pub near_seconds: f64,
    pub far_seconds: f64,
    pub max_rank: usize,
    pub mean_rank: f64,
    /// Far blocks that did not compress and are stored dense.
    pub dense_far_blocks: usize,
    /// Far blocks where ACA reached `min(m, n) / 2` and the block was assembled instead.
    pub aca_fallbacks: usize,
}

/// Symmetric block-sparse near field over contiguous leaf ranges. Blocks are
/// stored for `t <= s`; `(s, t)` is the transpose.
#[derive(Clone, Debug)]
pub struct NearField {
    ranges: Vec<Range<usize>>,
    blocks: BTreeMap<(usize, usize), Matrix>,
}

impl NearField {
    /// `ranges` must tile `0..n` in order; every diagonal block must be present.
    pub fn new(ranges: Vec<Range<usize>>, blocks: BTreeMap<(usize, usize), Matrix>) -> Result<Self> {
        let mut next = 0;
        for r in &ranges {
            if r.start != next || r.is_empty() {
                return Err(Error::InvalidArgument("leaf ranges must tile 0..n without gaps".into()));
            }
            next = r.end;
        }
        for (&(t, s), b) in &blocks {
            if t > s || s >= ranges.len() {
                return Err(Error::InvalidArgument(format!("near block ({t}, {s}) is not an upper leaf pair")));
            }
            if (b.nrows(), b.ncols()) != (ranges[t].len(), ranges[s].len()) {
                return Err(Error::DimensionMismatch { expected: ranges[t].len() * ranges[s].len(), got: b.nrows() * b.ncols() });
            }
        }
        if let Some(l) = (0..ranges.len()).find(|&l| !blocks.contains_key(&(l, l))) {
            return Err(Error::InvalidArgument(format!("diagonal block of leaf {l} is missing")));
        }
        Ok(Self { ranges, blocks })
    }

    pub fn dim(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn leaf_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn leaf_range(&self, leaf: usize) -> Range<usize> {
        self.ranges[leaf].clone()
    }

    /// Stored blocks, keyed by leaf pair with `t <= s`.
    pub fn blocks(&self) -> &BTreeMap<(usize, usize), Matrix> {
        &self.blocks
    }

    /// Block `(t, s)` in either orientation.
    pub fn block(&self, t: usize, s: usize) -> Option<MatRef<'_, C64>> {
        if t <= s {
            self.blocks.get(&(t, s)).map(|b| b.as_ref())
        } else {
            self.blocks.get(&(s, t)).map(|b| b.transpose())
        }
    }

    /// Sorted leaves `s` with a block `(t, s)`, `t` itself included.
    pub fn neighbours(&self, t: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .blocks
            .keys()
            .filter_map(|&(a, b)| if a == t { Some(b) } else if b == t { Some(a) } else { None })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `y += Z_N x`.
    pub fn apply_add(&self, x: &[C64], y: &mut [C64]) {
        for (&(t, s), b) in &self.blocks {
            let (rt, rs) = (self.ranges[t].clone(), self.ranges[s].clone());
            gemv_add(&mut y[rt.clone()], b.as_ref(), &x[rs.clone()], ONE);
            if t != s {
                gemv_add(&mut y[rs], b.transpose(), &x[rt], ONE);
            }
        }
    }

    /// Stored values (upper blocks only).
    pub fn stored_values(&self) -> usize {
        self.blocks.values().map(|b| b.nrows() * b.ncols()).sum()
    }

    /// The full near field as a dense matrix, in the same (tree) order.
    pub fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let mut z = Matrix::zeros(n, n);
        for (&(t, s), b) in &self.blocks {
            let (rt, rs) = (self.ranges[t].clone(), self.ranges[s].clone());
            z.as_mut().submatrix_mut(rt.start, rs.start, rt.len(), rs.len()).copy_from(b.as_ref());
            z.as_mut().submatrix_mut(rs.start, rt.start, rs.len(), rt.len()).copy_from(b.transpose());
        }
        z
    }
}

#[derive(Clone, Debug)]
pub struct HOperator {
    n: usize,
    perm: Vec<usize>,
    position: Vec<usize>,
    near: NearField,
    far: Vec<FarEntry>,
    stats: AssemblyStats,
}

struct FarGenerator<'a> {
    op: &'a EfieOperator<'a>,
    rows: &'a [usize],
    cols: &'a [usize],
    row_cache: PairCache,
    col_cache: PairCache,
}

impl EntryGenerator for FarGenerator<'_> {
    fn rows(&self) -> usize {
        self.rows.len()
    }
    fn cols(&self) -> usize {
        self.cols.len()
    }
    fn row(&mut self, i: usize, out: &mut [C64]) {
        self.op.row_into(self.rows[i], &self.col_cache, out);
    }
    fn col(&mut self, j: usize, out: &mut [C64]) {
        // Z is symmetric, so column j is row cols[j] over the row indices.
        self.op.row_into(self.cols[j], &self.row_cache, out);
    }
}

impl HOperator {
    /// Near blocks are assembled exactly; far blocks by ACA and recompression
    /// at `opts.tol_aca`.
    pub fn assemble(
        basis: &RwgBasis,
        medium: &Medium,
        tree: &ClusterTree,
        partition: &BlockPartition,
        opts: &HOptions,
    ) -> Result<Self> {
        if tree.dim() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: tree.dim() });
        }
        if partition.leaf_count() != tree.leaf_count() {
            return Err(Error::InvalidArgument("partition was built for a different tree".into()));
        }
        if !(opts.tol_aca > 0.0) {
            return Err(Error::InvalidArgument(format!("ACA tolerance must be positive, got {}", opts.tol_aca)));
        }
        let op = EfieOperator::new(basis, *medium);
        let leaf_ranges: Vec<Range<usize>> = (0..tree.leaf_count()).map(|l| tree.leaf_range(l)).collect();
        let mut stats = AssemblyStats::default();

        let clock = Instant::now();
        let mut near = BTreeMap::new();
        for t in 0..tree.leaf_count() {
            // One strip per leaf: all upper near neighbours share a pair cache.
            let upper: Vec<usize> = partition.neighbours(t).iter().copied().filter(|&s| s >= t).collect();
            let cols: Vec<usize> = upper.iter().flat_map(|&s| tree.indices(tree.leaves()[s]).iter().copied()).collect();
            let cache = PairCache::new(basis, &cols);
            let rows = tree.indices(tree.leaves()[t]);
            let mut blocks: Vec<Matrix> =
                upper.iter().map(|&s| Matrix::zeros(rows.len(), leaf_ranges[s].len())).collect();
            let mut buf = vec![ZERO; cols.len()];
            for (r, &i) in rows.iter().enumerate() {
                op.row_into(i, &cache, &mut buf);
                let mut off = 0;
                for b in &mut blocks {
                    for c in 0..b.ncols() {
                        b[(r, c)] = buf[off + c];
                    }
                    off += b.ncols();
                }
            }
            for (s, b) in upper.into_iter().zip(blocks) {
                near.insert((t, s), b);
            }
        }
        stats.near_seconds = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let mut far = Vec::new();
        let mut rank_sum = 0usize;
        for fb in partition.far().iter().filter(|b| b.t < b.s) {
            let rows = tree.indices(fb.t);
            let cols = tree.indices(fb.s);
            let (m, n) = (rows.len(), cols.len());
            let block = if m.min(n) <= SMALL_BLOCK {
                compress_dense(op.block(rows, cols).as_ref(), opts.tol_aca)
            } else {
                let mut gen = FarGenerator {
                    op: &op,
                    rows,
                    cols,
                    row_cache: PairCache::new(basis, rows),
                    col_cache: PairCache::new(basis, cols),
                };
                let max_rank = m.min(n) / 2;
                let res = aca(&mut gen, opts.tol_aca, max_rank)?;
                if res.converged {
                    Compressed::LowRank(recompress(&res.block, opts.tol_aca))
                } else {
                    // Past the storage break-even rank: assemble and let the SVD decide.
                    stats.aca_fallbacks += 1;
                    compress_dense(op.block(rows, cols).as_ref(), opts.tol_aca)
                }
            };
            match &block {
                Compressed::LowRank(b) => {
                    stats.max_rank = stats.max_rank.max(b.rank());
                    rank_sum += b.rank();
                }
                Compressed::Dense(_) => stats.dense_far_blocks += 1,
            }
            far.push(FarEntry {
                t: fb.t,
                s: fb.s,
                level: fb.level,
                rows: tree.node(fb.t).range.clone(),
                cols: tree.node(fb.s).range.clone(),
                block,
            });
        }
        let lowrank = far.len() - stats.dense_far_blocks;
        stats.mean_rank = if lowrank > 0 { rank_sum as f64 / lowrank as f64 } else { 0.0 };
        stats.far_seconds = clock.elapsed().as_secs_f64();

        Ok(Self {
            n: basis.len(),
            perm: tree.perm().to_vec(),
            position: tree.position().to_vec(),
            near: NearField { ranges: leaf_ranges, blocks: near },
            far,
            stats,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn leaf_count(&self) -> usize {
        self.near.leaf_count()
    }

    pub fn leaf_range(&self, leaf: usize) -> Range<usize> {
        self.near.leaf_range(leaf)
    }

    /// Tree position to basis index.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Basis index to tree position.
    pub fn position(&self) -> &[usize] {
        &self.position
    }

    pub fn near_field(&self) -> &NearField {
        &self.near
    }

    /// Near block `(t, s)` in either orientation.
    pub fn near_block(&self, t: usize, s: usize) -> Option<MatRef<'_, C64>> {
        self.near.block(t, s)
    }

    /// Stored far blocks (`t < s`).
    pub fn far_blocks(&self) -> &[FarEntry] {
        &self.far
    }

    pub fn stats(&self) -> &AssemblyStats {
        &self.stats
    }

    pub fn to_tree_order(&self, x: &[C64]) -> Vec<C64> {
        self.perm.iter().map(|&i| x[i]).collect()
    }

    pub fn to_basis_order(&self, y: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; y.len()];
        for (p, &i) in self.perm.iter().enumerate() {
            out[i] = y[p];
        }
        out
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: len });
        }
        Ok(())
    }

    /// `y += Z_N x` in tree order.
    pub fn near_apply_add(&self, x: &[C64], y: &mut [C64]) {
        self.near.apply_add(x, y);
    }

    /// `y += Z_F x` in tree order.
    pub fn far_apply_add(&self, x: &[C64], y: &mut [C64]) {
        for f in &self.far {
            f.block.apply_add(&mut y[f.rows.clone()], &x[f.cols.clone()], ONE);
            f.block.apply_transpose_add(&mut y[f.cols.clone()], &x[f.rows.clone()], ONE);
        }
    }

    /// `Z x` with both vectors in tree order.
    pub fn matvec_tree(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check(x.len())?;
        let mut y = vec![ZERO; self.n];
        self.near_apply_add(x, &mut y);
        self.far_apply_add(x, &mut y);
        Ok(y)
    }

    /// `Z_F x` with both vectors in tree order.
    pub fn far_matvec_tree(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check(x.len())?;
        let mut y = vec![ZERO; self.n];
        self.far_apply_add(x, &mut y);
        Ok(y)
    }

    /// `Z x` with both vectors in basis order.
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.check(x.len())?;
        let y = self.matvec_tree(&self.to_tree_order(x))?;
        Ok(self.to_basis_order(&y))
    }

    pub fn storage_report(&self) -> StorageReport {
        let near_values = self.near.stored_values();
        let far_values = self.far.iter().map(|f| f.block.storage()).sum();
        StorageReport {
            near_values,
            far_values,
            total_bytes: (near_values + far_values) * std::mem::size_of::<C64>(),
        }
    }

    /// The full matrix in basis order, for small-problem checks.
    pub fn to_dense(&self) -> Matrix {
        let mut z = Matrix::zeros(self.n, self.n);
        let mut put = |rows: Range<usize>, cols: Range<usize>, b: MatRef<'_, C64>| {
            for (r, p) in rows.enumerate() {
                for (c, q) in cols.clone().enumerate() {
                    z[(self.perm[p], self.perm[q])] = b[(r, c)];
                }
            }
        };
        for (&(t, s), b) in self.near.blocks() {
            put(self.near.leaf_range(t), self.near.leaf_range(s), b.as_ref());
            put(self.near.leaf_range(s), self.near.leaf_range(t), b.transpose());
        }
        for f in &self.far {
            let d = f.block.to_dense();
            put(f.rows.clone(), f.cols.clone(), d.as_ref());
            put(f.cols.clone(), f.rows.clone(), d.transpose());
        }
        z
    }
}
