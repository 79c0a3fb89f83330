//! GMRES on the scaled system, the dense reference solve and eigenvalue
//! diagnostics.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::efie::{assemble_dense, Medium, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::hmatrix::HOperator;
use crate::linalg::{gemv_add, norm2, DenseLu, Matrix, C64, ONE, ZERO};
use crate::mesh::RwgBasis;
use crate::ordering::LeafOrdering;
use crate::schur::{SchurOptions, SchurPreconditioner};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PreconditionerKind {
    Schur,
    NullField,
    BlockJacobi,
    None,
}

impl PreconditionerKind {
    pub const ALL: [PreconditionerKind; 4] =
        [PreconditionerKind::Schur, PreconditionerKind::NullField, PreconditionerKind::BlockJacobi, PreconditionerKind::None];

    pub fn name(self) -> &'static str {
        match self {
            PreconditionerKind::Schur => "schur",
            PreconditionerKind::NullField => "nullfield",
            PreconditionerKind::BlockJacobi => "jacobi",
            PreconditionerKind::None => "none",
        }
    }
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        PreconditionerKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown preconditioner '{s}' (expected schur, nullfield, jacobi or none)"))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmresOptions {
    pub tol: f64,
    /// Krylov dimension before a restart; `None` runs full GMRES.
    pub restart: Option<usize>,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tol: 1e-6, restart: None, max_iter: 2000 }
    }
}

/// Outcome of one GMRES run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GmresReport {
    pub iterations: usize,
    /// Relative residual after each iteration, starting with 1 for `x0 = 0`.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

/// Full (optionally restarted) GMRES from `x0 = 0` with modified
/// Gram-Schmidt, one reorthogonalization pass and Givens rotations.
pub fn gmres<F>(mut apply: F, b: &[C64], opts: &GmresOptions) -> Result<(Vec<C64>, GmresReport)>
where
    F: FnMut(&[C64]) -> Result<Vec<C64>>,
{
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("GMRES tolerance must be positive, got {}", opts.tol)));
    }
    let n = b.len();
    let mut x = vec![ZERO; n];
    let bnorm = norm2(b);
    let mut report = GmresReport { residuals: vec![1.0], ..Default::default() };
    if bnorm == 0.0 {
        report.converged = true;
        report.residuals[0] = 0.0;
        return Ok((x, report));
    }
    let m = opts.restart.unwrap_or(opts.max_iter).max(1);
    let mut r = b.to_vec();
    let mut beta = bnorm;
    while report.iterations < opts.max_iter {
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<C64>> = Vec::new(); // column j has length j + 2
        let mut cs: Vec<(f64, C64)> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut done = false;
        for j in 0..m {
            if report.iterations >= opts.max_iter {
                break;
            }
            let mut w = apply(&basis[j])?;
            let mut col = vec![ZERO; j + 2];
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c: C64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                    col[i] += c;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= c * vk;
                    }
                }
            }
            let wn = norm2(&w);
            col[j + 1] = C64::new(wn, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = c * a + s * b;
                col[i + 1] = -s.conj() * a + c * b;
            }
            let (a, b) = (col[j], col[j + 1]);
            let denom = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, ZERO)
            } else if a.norm() == 0.0 {
                (0.0, b.conj() / denom)
            } else {
                let c = a.norm() / denom;
                (c, (a / a.norm()) * b.conj() / denom)
            };
            col[j] = c * a + s * b;
            col[j + 1] = ZERO;
            cs.push((c, s));
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s.conj() * gj);
            h.push(col);
            report.iterations += 1;
            let res = g[j + 1].norm() / bnorm;
            report.residuals.push(res);
            if res <= opts.tol || wn == 0.0 {
                done = true;
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // Back substitution on the triangular Hessenberg factor.
        let k = h.len();
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (l, yl) in y.iter().enumerate().skip(i + 1) {
                s -= h[l][i] * yl;
            }
            y[i] = s / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk += yi * vk;
            }
        }
        if done {
            report.converged = true;
            break;
        }
        let ax = apply(&x)?;
        r = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        beta = norm2(&r);
        if beta / bnorm <= opts.tol {
            report.converged = true;
            break;
        }
    }
    Ok((x, report))
}

/// Per-phase operator timings, averaged per application.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    /// Hierarchical matrix-vector product.
    pub t_mm: f64,
    /// Scaled diagonal multiply and block solve.
    pub t_mpp: f64,
    /// Left plus right scaling-coefficient products.
    pub t_mps: f64,
}

/// Result of solving one right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub gmres: GmresReport,
    /// `||Z x - b|| / ||b||` with the hierarchical `Z`.
    pub original_residual: f64,
    pub solve_seconds: f64,
    pub per_iteration: PhaseTimes,
}

#[derive(Default)]
struct Clock {
    mm: Cell<f64>,
    mpp: Cell<f64>,
    mps: Cell<f64>,
    calls: Cell<usize>,
}

fn timed<T>(acc: &Cell<f64>, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    acc.set(acc.get() + t.elapsed().as_secs_f64());
    out
}

/// How the scaled Schur operator treats the near field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NearTreatment {
    /// Near blocks replaced by the scaled diagonal: `Z~ x~ + A^T Z_F A x~`.
    /// Exact only when the fill-ins were kept uncompressed.
    Replaced,
    /// The full operator `A^T Z A x~`; the recovered `x` solves `Z x = b`
    /// for any fill tolerance.
    Exact,
}

impl NearTreatment {
    /// `Replaced` when the elimination is exact (`fill_tol == 0`), otherwise `Exact`.
    pub fn for_fill_tol(fill_tol: f64) -> Self {
        if fill_tol == 0.0 {
            NearTreatment::Replaced
        } else {
            NearTreatment::Exact
        }
    }
}

/// The hierarchical operator with a preconditioner, in tree order.
///
/// * Schur: `y~ = Z~^{-1} (Z~ x~ + A^T Z_F A x~)` or `Z~^{-1} A^T Z A x~`
///   (see [`NearTreatment`]), with `x = A x~`.
/// * Null-field: `y~ = D~^{-1} Z A x~`, with `x = A x~`.
/// * Block Jacobi: `y = D^{-1} Z x`.
/// * None: `y = Z x`.
pub struct PreconditionedSystem<'a> {
    h: &'a HOperator,
    kind: PreconditionerKind,
    pre: Option<SchurPreconditioner>,
    near: NearTreatment,
    setup_seconds: f64,
    clock: Clock,
}

impl<'a> PreconditionedSystem<'a> {
    /// Builds the preconditioner of `kind` over the near field of `h`;
    /// `order` is the pivot sequence for the scaled variants.
    pub fn new(h: &'a HOperator, kind: PreconditionerKind, order: &LeafOrdering, opts: &SchurOptions) -> Result<Self> {
        let clock = Instant::now();
        let near = h.near_field();
        let pre = match kind {
            PreconditionerKind::Schur => Some(SchurPreconditioner::build(near, order, opts)?),
            PreconditionerKind::NullField => Some(SchurPreconditioner::null_field(near, order)?),
            PreconditionerKind::BlockJacobi => Some(SchurPreconditioner::block_jacobi(near)?),
            PreconditionerKind::None => None,
        };
        Ok(Self {
            h,
            kind,
            pre,
            near: NearTreatment::for_fill_tol(opts.fill_tol),
            setup_seconds: clock.elapsed().as_secs_f64(),
            clock: Clock::default(),
        })
    }

    /// Overrides the near-field treatment of the Schur mode.
    pub fn with_near_treatment(mut self, near: NearTreatment) -> Self {
        self.near = near;
        self
    }

    pub fn near_treatment(&self) -> NearTreatment {
        self.near
    }

    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    pub fn preconditioner(&self) -> Option<&SchurPreconditioner> {
        self.pre.as_ref()
    }

    pub fn operator(&self) -> &HOperator {
        self.h
    }

    pub fn setup_seconds(&self) -> f64 {
        self.setup_seconds
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// One application of the preconditioned operator (tree order).
    pub fn apply_operator(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let c = &self.clock;
        c.calls.set(c.calls.get() + 1);
        match (self.kind, &self.pre) {
            (PreconditionerKind::Schur, Some(p)) if self.near == NearTreatment::Exact => {
                let mut w = x.to_vec();
                timed(&c.mps, || p.apply_right(&mut w))?;
                let mut y = timed(&c.mm, || self.h.matvec_tree(&w))?;
                timed(&c.mps, || p.apply_left(&mut y))?;
                timed(&c.mpp, || p.solve_diag(&mut y))?;
                Ok(y)
            }
            (PreconditionerKind::Schur, Some(p)) => {
                let mut w = x.to_vec();
                timed(&c.mps, || p.apply_right(&mut w))?;
                let mut f = timed(&c.mm, || self.h.far_matvec_tree(&w))?;
                timed(&c.mps, || p.apply_left(&mut f))?;
                timed(&c.mpp, || -> Result<Vec<C64>> {
                    let mut y = p.diag_apply(x)?;
                    for (yi, fi) in y.iter_mut().zip(&f) {
                        *yi += fi;
                    }
                    p.solve_diag(&mut y)?;
                    Ok(y)
                })
            }
            (PreconditionerKind::NullField, Some(p)) => {
                let mut w = x.to_vec();
                timed(&c.mps, || p.apply_right(&mut w))?;
                let mut y = timed(&c.mm, || self.h.matvec_tree(&w))?;
                timed(&c.mpp, || p.solve_diag(&mut y))?;
                Ok(y)
            }
            (PreconditionerKind::BlockJacobi, Some(p)) => {
                let mut y = timed(&c.mm, || self.h.matvec_tree(x))?;
                timed(&c.mpp, || p.solve_diag(&mut y))?;
                Ok(y)
            }
            _ => timed(&c.mm, || self.h.matvec_tree(x)),
        }
    }

    /// Scaled right-hand side (tree order in, tree order out).
    pub fn transform_rhs(&self, b: &[C64]) -> Result<Vec<C64>> {
        let mut r = b.to_vec();
        match (self.kind, &self.pre) {
            (PreconditionerKind::Schur, Some(p)) => {
                p.apply_left(&mut r)?;
                p.solve_diag(&mut r)?;
            }
            (PreconditionerKind::NullField | PreconditionerKind::BlockJacobi, Some(p)) => p.solve_diag(&mut r)?,
            _ => {}
        }
        Ok(r)
    }

    /// Physical currents from the scaled unknowns (tree order).
    pub fn recover(&self, xs: &[C64]) -> Result<Vec<C64>> {
        let mut x = xs.to_vec();
        if let (PreconditionerKind::Schur | PreconditionerKind::NullField, Some(p)) = (self.kind, &self.pre) {
            p.apply_right(&mut x)?;
        }
        Ok(x)
    }

    /// Solves `Z x = b` with `b` and `x` in basis order.
    pub fn solve(&self, b: &[C64], opts: &GmresOptions) -> Result<(Vec<C64>, SolveReport)> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: b.len() });
        }
        let c = &self.clock;
        for cell in [&c.mm, &c.mpp, &c.mps] {
            cell.set(0.0);
        }
        c.calls.set(0);
        let clock = Instant::now();
        let bt = self.h.to_tree_order(b);
        let rhs = self.transform_rhs(&bt)?;
        let (xs, report) = gmres(|v| self.apply_operator(v), &rhs, opts)?;
        let x = self.recover(&xs)?;
        let solve_seconds = clock.elapsed().as_secs_f64();
        let calls = c.calls.get().max(1) as f64;
        let per_iteration = PhaseTimes { t_mm: c.mm.get() / calls, t_mpp: c.mpp.get() / calls, t_mps: c.mps.get() / calls };

        let zx = self.h.matvec_tree(&x)?;
        let diff: Vec<C64> = zx.iter().zip(&bt).map(|(p, q)| p - q).collect();
        let bn = norm2(&bt);
        let original_residual = if bn > 0.0 { norm2(&diff) / bn } else { norm2(&diff) };
        Ok((
            self.h.to_basis_order(&x),
            SolveReport { gmres: report, original_residual, solve_seconds, per_iteration },
        ))
    }

    /// The preconditioned operator as an explicit matrix (tree order), by
    /// applying it to every unit vector.
    pub fn to_dense(&self) -> Result<Matrix> {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e[j] = ONE;
            let col = self.apply_operator(&e)?;
            e[j] = ZERO;
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

/// Pivoted LU solve of the dense EFIE system.
pub fn dense_solve(basis: &RwgBasis, medium: &Medium, b: &[C64]) -> Result<Vec<C64>> {
    let z = assemble_dense(basis, medium, DEFAULT_DENSE_CAP)?;
    dense_solve_matrix(&z, b)
}

/// Pivoted LU solve of an explicit system.
pub fn dense_solve_matrix(z: &Matrix, b: &[C64]) -> Result<Vec<C64>> {
    if z.nrows() != b.len() || z.ncols() != b.len() {
        return Err(Error::DimensionMismatch { expected: z.nrows(), got: b.len() });
    }
    let lu = DenseLu::factor(z.as_ref(), 0)?;
    let mut x = b.to_vec();
    lu.solve_vec_in_place(&mut x);
    Ok(x)
}

/// `||Z x - b|| / ||b||` for an explicit `Z`.
pub fn dense_residual(z: &Matrix, x: &[C64], b: &[C64]) -> f64 {
    let mut r: Vec<C64> = b.iter().map(|v| -v).collect();
    gemv_add(&mut r, z.as_ref(), x, ONE);
    norm2(&r) / norm2(b)
}

/// Eigenvalues before and after preconditioning.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenReport {
    pub before: Vec<C64>,
    pub after: Vec<C64>,
}

/// `max |lambda| / min |lambda|`.
pub fn spread_ratio(eigs: &[C64]) -> f64 {
    let mags = eigs.iter().map(|v| v.norm());
    let (lo, hi) = mags.fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
    hi / lo
}

fn eigenvalues(m: &Matrix) -> Result<Vec<C64>> {
    m.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))
}

/// Dense eigenvalues of `z` and of the preconditioned operator of `sys`.
pub fn eigen_diagnostic(z: &Matrix, sys: &PreconditionedSystem<'_>) -> Result<EigenReport> {
    if z.nrows() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: z.nrows() });
    }
    if sys.dim() > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded(sys.dim(), DEFAULT_DENSE_CAP));
    }
    Ok(EigenReport { before: eigenvalues(z)?, after: eigenvalues(&sys.to_dense()?)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, seed: u64) -> (Matrix, Vec<C64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = Matrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        for i in 0..n {
            z[(i, i)] += C64::new(2.0 * (n as f64).sqrt(), 0.0);
        }
        let b = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        (z, b)
    }

    fn dense_apply(z: &Matrix) -> impl FnMut(&[C64]) -> Result<Vec<C64>> + '_ {
        move |x| {
            let mut y = vec![ZERO; x.len()];
            gemv_add(&mut y, z.as_ref(), x, ONE);
            Ok(y)
        }
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let b: Vec<C64> = (0..7).map(|i| C64::new(i as f64, 1.0)).collect();
        let (x, r) = gmres(|v| Ok(v.to_vec()), &b, &GmresOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        for (p, q) in x.iter().zip(&b) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn residuals_decrease_and_solution_matches_lu() {
        let (z, b) = random_system(60, 1);
        let (x, r) = gmres(dense_apply(&z), &b, &GmresOptions { tol: 1e-10, ..Default::default() }).unwrap();
        assert!(r.converged);
        assert!(r.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let xd = dense_solve_matrix(&z, &b).unwrap();
        let err: f64 = norm2(&x.iter().zip(&xd).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm2(&xd);
        assert!(err < 1e-8);
        assert!(dense_residual(&z, &x, &b) < 1e-9);
    }

    #[test]
    fn restarted_run_still_converges() {
        let (z, b) = random_system(50, 2);
        let opts = GmresOptions { tol: 1e-8, restart: Some(10), max_iter: 500 };
        let (x, r) = gmres(dense_apply(&z), &b, &opts).unwrap();
        assert!(r.converged);
        assert!(dense_residual(&z, &x, &b) < 1e-7);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let (z, b) = random_system(40, 3);
        let (_, r) = gmres(dense_apply(&z), &b, &GmresOptions { tol: 1e-12, restart: None, max_iter: 3 }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn zero_rhs_and_bad_tolerance() {
        let (x, r) = gmres(|v| Ok(v.to_vec()), &[ZERO; 4], &GmresOptions::default()).unwrap();
        assert!(r.converged && x.iter().all(|v| *v == ZERO));
        assert!(gmres(|v| Ok(v.to_vec()), &[ONE], &GmresOptions { tol: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn one_by_one_dense_solve_is_exact() {
        let z = Matrix::from_fn(1, 1, |_, _| C64::new(2.0, -1.0));
        let x = dense_solve_matrix(&z, &[C64::new(4.0, 3.0)]).unwrap();
        assert_eq!(x[0], C64::new(4.0, 3.0) / C64::new(2.0, -1.0));
    }

    #[test]
    fn kinds_parse() {
        for k in PreconditionerKind::ALL {
            assert_eq!(k.name().parse::<PreconditionerKind>().unwrap(), k);
        }
        assert!("ilut".parse::<PreconditionerKind>().is_err());
    }

    use crate::cluster::{BlockPartition, ClusterTree, DEFAULT_ETA};
    use crate::efie::{excitation_vector, Polarization, PlaneWave, QuadratureRule};
    use crate::hmatrix::HOptions;
    use crate::mesh::{build_rwg, generate_plate};
    use crate::ordering::{order_leaves, OrderingKind};

    const F: f64 = 300e6;

    fn plate(side: f64, leaf: usize) -> (RwgBasis, HOperator, LeafOrdering, Vec<C64>) {
        let mesh = generate_plate(side, side, 10, F).unwrap();
        let basis = build_rwg(&mesh).unwrap();
        let medium = Medium::vacuum(F).unwrap();
        let tree = ClusterTree::from_basis(&basis, leaf, 20).unwrap();
        let part = BlockPartition::build(&tree, DEFAULT_ETA);
        let h = HOperator::assemble(&basis, &medium, &tree, &part, &HOptions::default()).unwrap();
        let order = order_leaves(OrderingKind::Sloan, &part.near_field_graph());
        let wave = PlaneWave::arriving_from(0.3, 0.2, Polarization::Theta, ONE);
        let b = excitation_vector(&basis, &wave, &medium, &QuadratureRule::field_default());
        (basis, h, order, b)
    }

    fn tree_dense(h: &HOperator) -> Matrix {
        let n = h.dim();
        let mut z = Matrix::zeros(n, n);
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e[j] = ONE;
            for (i, v) in h.matvec_tree(&e).unwrap().into_iter().enumerate() {
                z[(i, j)] = v;
            }
            e[j] = ZERO;
        }
        z
    }

    fn max_rel(a: &Matrix, b: &Matrix) -> f64 {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                num = num.max((a[(i, j)] - b[(i, j)]).norm());
                den = den.max(b[(i, j)].norm());
            }
        }
        num / den
    }

    /// `D~^{-1} A^T Z A` built from explicit matrices.
    fn dense_composition(sys: &PreconditionedSystem<'_>, z: &Matrix) -> Matrix {
        let p = sys.preconditioner().unwrap();
        let a = p.scaling_matrix();
        let mut m = a.transpose() * z * &a;
        for leaf in 0..p.leaf_count() {
            let r = sys.operator().leaf_range(leaf);
            let lu = DenseLu::factor(p.diag_block(leaf).as_ref(), leaf).unwrap();
            let mut rows = m.as_mut().subrows_mut(r.start, r.len());
            lu.solve_in_place(rows.as_mut());
        }
        m
    }

    #[test]
    fn single_leaf_schur_converges_in_one_iteration() {
        let (_, h, order, b) = plate(0.5, 10_000);
        assert_eq!(h.leaf_count(), 1);
        let sys = PreconditionedSystem::new(&h, PreconditionerKind::Schur, &order, &SchurOptions::default()).unwrap();
        let (_, rep) = sys.solve(&b, &GmresOptions::default()).unwrap();
        assert_eq!(rep.gmres.iterations, 1);
        assert!(rep.original_residual < 1e-10);
        let eig = eigen_diagnostic(&tree_dense(&h), &sys).unwrap();
        assert!(eig.after.iter().all(|l| (l - ONE).norm() < 1e-10));
    }

    #[test]
    fn operator_matches_dense_composition() {
        let (_, h, order, _) = plate(1.0, 30);
        let z = tree_dense(&h);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<C64> = (0..h.dim()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        for (fill_tol, near) in [(0.0, NearTreatment::Replaced), (1e-2, NearTreatment::Exact)] {
            let sys = PreconditionedSystem::new(&h, PreconditionerKind::Schur, &order, &SchurOptions { fill_tol }).unwrap();
            assert_eq!(sys.near_treatment(), near);
            let oracle = dense_composition(&sys, &z);
            assert!(max_rel(&sys.to_dense().unwrap(), &oracle) < 1e-10, "fill_tol {fill_tol}");
            // Linearity.
            let y1 = sys.apply_operator(&x).unwrap();
            let x2: Vec<C64> = x.iter().map(|v| v * C64::new(0.5, -2.0)).collect();
            let y2 = sys.apply_operator(&x2).unwrap();
            for (a, b) in y1.iter().zip(&y2) {
                assert!((a * C64::new(0.5, -2.0) - b).norm() <= 1e-13 * (1.0 + a.norm()) * 4.0);
            }
        }
    }

    #[test]
    fn every_variant_solves_the_same_system() {
        let (_, h, order, b) = plate(1.5, 40);
        let z = h.to_dense();
        let x_ref = dense_solve_matrix(&z, &b).unwrap();
        let opts = GmresOptions::default();
        let mut iterations = Vec::new();
        for kind in PreconditionerKind::ALL {
            let sys = PreconditionedSystem::new(&h, kind, &order, &SchurOptions::default()).unwrap();
            let (x, rep) = sys.solve(&b, &opts).unwrap();
            assert!(rep.gmres.converged, "{kind}");
            assert!(rep.gmres.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)), "{kind}");
            assert!(dense_residual(&z, &x, &b) <= 10.0 * opts.tol, "{kind}");
            assert!((rep.original_residual - dense_residual(&z, &x, &b)).abs() < 1e-8);
            let err = norm2(&x.iter().zip(&x_ref).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm2(&x_ref);
            assert!(err < 1e-4, "{kind}: {err}");
            iterations.push(rep.gmres.iterations);
        }
        assert!(iterations[0] < iterations[3]);
        assert!(iterations[0] <= iterations[1]);
    }

    #[test]
    fn exact_elimination_makes_both_treatments_agree() {
        let (_, h, order, _) = plate(1.0, 30);
        let sys = PreconditionedSystem::new(&h, PreconditionerKind::Schur, &order, &SchurOptions { fill_tol: 0.0 }).unwrap();
        let replaced = sys.to_dense().unwrap();
        let sys = sys.with_near_treatment(NearTreatment::Exact);
        assert!(max_rel(&sys.to_dense().unwrap(), &replaced) < 1e-10);
    }

    #[test]
    fn unpreconditioned_eigenvalues_are_unchanged() {
        let (_, h, order, _) = plate(0.5, 20);
        let sys = PreconditionedSystem::new(&h, PreconditionerKind::None, &order, &SchurOptions::default()).unwrap();
        let z = tree_dense(&h);
        let eig = eigen_diagnostic(&z, &sys).unwrap();
        let key = |v: &C64| (v.re, v.im);
        let mut a = eig.before.clone();
        let mut b = eig.after.clone();
        a.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
        b.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
        let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).norm() < 1e-10 * scale));
        assert!(spread_ratio(&a) > 1.0);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let (_, h, order, _) = plate(0.5, 20);
        let sys = PreconditionedSystem::new(&h, PreconditionerKind::Schur, &order, &SchurOptions::default()).unwrap();
        assert!(sys.apply_operator(&[ONE; 3]).is_err());
        assert!(sys.solve(&[ONE; 3], &GmresOptions::default()).is_err());
    }
}
