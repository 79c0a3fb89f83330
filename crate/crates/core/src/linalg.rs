//! Thin helpers over `faer` for the dense complex kernels used everywhere.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Accum, Mat, MatMut, MatRef, Par};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Dense column-major complex matrix.
pub type Matrix = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// All library kernels run sequentially; callers parallelize at a coarser level.
pub const PAR: Par = Par::Seq;

pub fn col_view(x: &[C64]) -> MatRef<'_, C64> {
    MatRef::from_column_major_slice(x, x.len(), 1)
}

pub fn col_view_mut(x: &mut [C64]) -> MatMut<'_, C64> {
    let n = x.len();
    MatMut::from_column_major_slice_mut(x, n, 1)
}

/// `y += alpha * a * x`.
pub fn gemv_add(y: &mut [C64], a: MatRef<'_, C64>, x: &[C64], alpha: C64) {
    debug_assert_eq!(a.nrows(), y.len());
    debug_assert_eq!(a.ncols(), x.len());
    if a.nrows() == 0 || a.ncols() == 0 {
        return;
    }
    matmul(col_view_mut(y), Accum::Add, a, col_view(x), alpha, PAR);
}

/// `alpha * a * b` as a new matrix.
pub fn mul(a: MatRef<'_, C64>, b: MatRef<'_, C64>, alpha: C64) -> Matrix {
    let mut c = Matrix::zeros(a.nrows(), b.ncols());
    if a.ncols() > 0 {
        matmul(c.as_mut(), Accum::Replace, a, b, alpha, PAR);
    }
    c
}

/// `c += alpha * a * b`.
pub fn mul_add(c: MatMut<'_, C64>, a: MatRef<'_, C64>, b: MatRef<'_, C64>, alpha: C64) {
    if a.ncols() == 0 || c.nrows() == 0 || c.ncols() == 0 {
        return;
    }
    matmul(c, Accum::Add, a, b, alpha, PAR);
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Bilinear (unconjugated) dot product `x^T y`.
pub fn dot_t(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Partial-pivoted LU of a square block with a singularity check on the pivots.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: PartialPivLu<C64>,
    n: usize,
}

/// Pivots smaller than this fraction of the largest pivot mark the block singular.
const PIVOT_RATIO_FLOOR: f64 = 1e-14;

impl DenseLu {
    /// Factorizes `a`. Returns `None` if a pivot collapses.
    pub fn new(a: MatRef<'_, C64>) -> Option<Self> {
        assert_eq!(a.nrows(), a.ncols(), "LU of a non-square block");
        let n = a.nrows();
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let mut max = 0.0f64;
        let mut min = f64::INFINITY;
        for i in 0..n {
            let p = u[(i, i)].norm();
            if !p.is_finite() {
                return None;
            }
            max = max.max(p);
            min = min.min(p);
        }
        if n > 0 && (max == 0.0 || min <= PIVOT_RATIO_FLOOR * max) {
            return None;
        }
        Some(Self { lu, n })
    }

    pub fn factor(a: MatRef<'_, C64>, leaf: usize) -> Result<Self> {
        Self::new(a).ok_or(Error::SingularPivot { leaf })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, rhs: MatMut<'_, C64>) {
        if self.n == 0 || rhs.ncols() == 0 {
            return;
        }
        self.lu.solve_in_place(rhs);
    }

    pub fn solve_vec_in_place(&self, x: &mut [C64]) {
        self.solve_in_place(col_view_mut(x));
    }

    /// Solves `a^T x = rhs` in place.
    pub fn solve_transpose_in_place(&self, rhs: MatMut<'_, C64>) {
        if self.n == 0 || rhs.ncols() == 0 {
            return;
        }
        self.lu.solve_transpose_in_place(rhs);
    }

    pub fn solve(&self, rhs: MatRef<'_, C64>) -> Matrix {
        let mut x = rhs.to_owned();
        self.solve_in_place(x.as_mut());
        x
    }
}
