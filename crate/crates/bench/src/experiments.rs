//! The experiment subcommands. Each returns its measurements and writes its
//! CSV artifacts under `out_dir`.

use std::path::PathBuf;
use std::time::Instant;

use hschur::cluster::{write_pattern, BlockPartition, ClusterTree};
use hschur::efie::{excitation_vector, monostatic_rcs, Medium, PlaneWave, Polarization, QuadratureRule};
use hschur::geom::Vec3;
use hschur::hmatrix::HOperator;
use hschur::linalg::{norm2, C64, ONE};
use hschur::lowrank::Compressed;
use hschur::mesh::{build_rwg, wavelength, write_mesh, RwgBasis, TriangleMesh};
use hschur::mie::pec_backscatter;
use hschur::ordering::{metrics, order_leaves, LeafOrdering, OrderingKind, OrderingMetrics};
use hschur::schur::SchurStats;
use hschur::solver::{eigen_diagnostic, spread_ratio, PreconditionedSystem, PreconditionerKind, SolveReport};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, BenchResult};
use crate::fit::{loglog_slope, SlopeFit};
use crate::geometry::GeometrySpec;
use crate::output::{fmt_f, write_atomic, write_csv, Table};

/// Bytes per stored scaling-coefficient value (complex double).
pub const BYTES_PER_VALUE: usize = 16;

/// A meshed, clustered and assembled problem.
pub struct Setup {
    pub mesh: TriangleMesh,
    pub basis: RwgBasis,
    pub medium: Medium,
    pub tree: ClusterTree,
    pub partition: BlockPartition,
    pub op: HOperator,
    /// Seconds for clustering, partitioning and hierarchical assembly.
    pub t_sm: f64,
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig) -> BenchResult<Self> {
        Self::from_mesh(cfg.geometry.mesh(cfg.frequency())?, cfg)
    }

    pub fn from_mesh(mesh: TriangleMesh, cfg: &ExperimentConfig) -> BenchResult<Self> {
        let basis = build_rwg(&mesh)?;
        let medium = Medium::vacuum(cfg.frequency())?;
        let clock = Instant::now();
        let tree = ClusterTree::from_basis(&basis, cfg.leaf_size, cfg.max_level)?;
        let partition = BlockPartition::build(&tree, cfg.eta);
        let op = HOperator::assemble(&basis, &medium, &tree, &partition, &cfg.h_options())?;
        let t_sm = clock.elapsed().as_secs_f64();
        Ok(Self { mesh, basis, medium, tree, partition, op, t_sm })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn ordering(&self, kind: OrderingKind) -> LeafOrdering {
        order_leaves(kind, &self.partition.near_field_graph())
    }

    pub fn system(&self, kind: PreconditionerKind, ordering: OrderingKind, cfg: &ExperimentConfig) -> BenchResult<PreconditionedSystem<'_>> {
        Ok(PreconditionedSystem::new(&self.op, kind, &self.ordering(ordering), &cfg.schur_options())?)
    }

    /// Right-hand side for a theta-polarized unit wave arriving from the
    /// given angles (degrees).
    pub fn excitation(&self, theta_deg: f64, phi_deg: f64) -> Vec<C64> {
        let wave = PlaneWave::arriving_from(theta_deg.to_radians(), phi_deg.to_radians(), Polarization::Theta, ONE);
        excitation_vector(&self.basis, &wave, &self.medium, &QuadratureRule::field_default())
    }

    /// Backscatter in dBsm of a solution excited from `(theta, phi)`.
    pub fn backscatter_dbsm(&self, x: &[C64], theta_deg: f64, phi_deg: f64) -> BenchResult<f64> {
        let dir = Vec3::from_spherical(theta_deg.to_radians(), phi_deg.to_radians());
        let rule = QuadratureRule::field_default();
        Ok(monostatic_rcs(&[x.to_vec()], &self.basis, &self.medium, &[dir], 1.0, &rule)?[0])
    }
}

/// Mie backscatter (dBsm) for a sphere geometry.
pub fn mie_dbsm(geometry: &GeometrySpec, frequency: f64) -> Option<f64> {
    match geometry {
        GeometrySpec::Sphere { radius, .. } => {
            let k = 2.0 * std::f64::consts::PI / wavelength(frequency);
            Some(10.0 * pec_backscatter(radius * wavelength(frequency), k).log10())
        }
        _ => None,
    }
}

fn path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

// ---------------------------------------------------------------- generate

pub struct GenerateOutcome {
    pub path: PathBuf,
    pub vertices: usize,
    pub triangles: usize,
    pub unknowns: usize,
}

/// Writes the configured geometry as a mesh file (`mesh.txt`).
pub fn cmd_generate(cfg: &ExperimentConfig) -> BenchResult<GenerateOutcome> {
    cfg.validate()?;
    let mesh = cfg.geometry.mesh(cfg.frequency())?;
    let basis = build_rwg(&mesh)?;
    let path = path(cfg, "mesh.txt");
    write_atomic(&path, write_mesh(&mesh).as_bytes())?;
    Ok(GenerateOutcome { path, vertices: mesh.vertices().len(), triangles: mesh.triangles().len(), unknowns: basis.len() })
}

// ------------------------------------------------------------------- solve

/// One incidence angle of a sweep.
pub struct AngleSolve {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub x: Vec<C64>,
    pub report: SolveReport,
}

/// Solves every angle of the configured sweep with one preconditioner.
pub fn solve_sweep(setup: &Setup, sys: &PreconditionedSystem<'_>, cfg: &ExperimentConfig) -> BenchResult<Vec<AngleSolve>> {
    let opts = cfg.gmres_options();
    cfg.sweep
        .thetas_deg()
        .into_iter()
        .map(|theta_deg| {
            let b = setup.excitation(theta_deg, cfg.phi_deg);
            let (x, report) = sys.solve(&b, &opts)?;
            Ok(AngleSolve { theta_deg, phi_deg: cfg.phi_deg, x, report })
        })
        .collect()
}

pub struct SolveOutcome {
    pub n: usize,
    pub t_sm: f64,
    pub t_sp: f64,
    pub angles: Vec<AngleSolve>,
    pub rcs_dbsm: Vec<f64>,
    pub mie_dbsm: Option<f64>,
}

impl SolveOutcome {
    /// `Err(NotConverged)` naming the first angle that did not converge.
    pub fn check_converged(&self) -> BenchResult<()> {
        match self.angles.iter().find(|a| !a.report.gmres.converged) {
            Some(a) => Err(BenchError::NotConverged(format!(
                "theta = {} deg after {} iterations",
                a.theta_deg, a.report.gmres.iterations
            ))),
            None => Ok(()),
        }
    }
}

/// Monostatic sweep: `solve.csv` (per-angle convergence), `residuals.csv`
/// (GMRES histories) and `rcs.csv` (backscatter, with Mie for spheres).
pub fn cmd_solve(cfg: &ExperimentConfig) -> BenchResult<SolveOutcome> {
    cfg.validate()?;
    let setup = Setup::build(cfg)?;
    let sys = setup.system(cfg.pc, cfg.ordering, cfg)?;
    let angles = solve_sweep(&setup, &sys, cfg)?;
    let mie = mie_dbsm(&cfg.geometry, cfg.frequency());

    let mut solve = Table::new(&["theta_deg", "phi_deg", "iterations", "converged", "residual", "original_residual", "solve_seconds"]);
    let mut hist = Table::new(&["theta_deg", "iteration", "residual"]);
    let mut rcs = Table::new(&["theta_deg", "phi_deg", "sigma_dbsm", "mie_dbsm"]);
    let mut rcs_dbsm = Vec::with_capacity(angles.len());
    for a in &angles {
        let g = &a.report.gmres;
        solve.push(vec![
            fmt_f(a.theta_deg),
            fmt_f(a.phi_deg),
            s(g.iterations),
            s(g.converged),
            fmt_f(*g.residuals.last().unwrap_or(&f64::NAN)),
            fmt_f(a.report.original_residual),
            fmt_f(a.report.solve_seconds),
        ]);
        for (i, r) in g.residuals.iter().enumerate() {
            hist.push(vec![fmt_f(a.theta_deg), s(i), fmt_f(*r)]);
        }
        let sigma = setup.backscatter_dbsm(&a.x, a.theta_deg, a.phi_deg)?;
        rcs_dbsm.push(sigma);
        rcs.push(vec![fmt_f(a.theta_deg), fmt_f(a.phi_deg), fmt_f(sigma), mie.map(fmt_f).unwrap_or_default()]);
    }
    write_csv(&path(cfg, "solve.csv"), cfg, &solve)?;
    write_csv(&path(cfg, "residuals.csv"), cfg, &hist)?;
    write_csv(&path(cfg, "rcs.csv"), cfg, &rcs)?;
    Ok(SolveOutcome { n: setup.dim(), t_sm: setup.t_sm, t_sp: sys.setup_seconds(), angles, rcs_dbsm, mie_dbsm: mie })
}

// ----------------------------------------------------------------- scaling

/// One ladder rung.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    /// Clustering and hierarchical assembly.
    pub t_sm: f64,
    /// Preconditioner setup.
    pub t_sp: f64,
    /// GMRES iterations for one right-hand side.
    pub p: usize,
    /// Right-hand sides the total is projected for.
    pub rhs: usize,
    pub t_mm: f64,
    pub t_mpp: f64,
    pub t_mps: f64,
    pub nnz_scaling: usize,
    pub fillin_blocks: usize,
    pub memory_bytes: usize,
    pub leaves: usize,
    pub t_total: f64,
}

impl BenchRow {
    pub fn t_mp(&self) -> f64 {
        self.t_mpp + self.t_mps
    }

    /// `t_sm + t_sp + p n (t_mm + t_mp)`.
    pub fn total_from_parts(&self) -> f64 {
        self.t_sm + self.t_sp + (self.p * self.rhs) as f64 * (self.t_mm + self.t_mp())
    }

    /// `27 N (N / leaves) * 16` bytes: every leaf couples to at most 27
    /// neighbours of average size.
    pub fn memory_bound_bytes(&self) -> f64 {
        27.0 * self.n as f64 * (self.n as f64 / self.leaves as f64) * BYTES_PER_VALUE as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub setup_slope: Option<SlopeFit>,
    pub scaling_matvec_slope: Option<SlopeFit>,
    pub memory_slope: Option<SlopeFit>,
}

impl BenchReport {
    pub fn from_rows(rows: Vec<BenchRow>) -> Self {
        let n: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let col = |f: fn(&BenchRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
        Self {
            setup_slope: loglog_slope(&n, &col(|r| r.t_sp)),
            scaling_matvec_slope: loglog_slope(&n, &col(|r| r.t_mps)),
            memory_slope: loglog_slope(&n, &col(|r| r.memory_bytes as f64)),
            rows,
        }
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "n", "t_sm", "t_sp", "p", "rhs", "t_mm", "t_mpp", "t_mps", "nnz_scaling", "fillin_blocks", "memory_bytes",
            "memory_bound_bytes", "leaves", "t_total",
        ]);
        for r in &self.rows {
            t.push(vec![
                s(r.n),
                fmt_f(r.t_sm),
                fmt_f(r.t_sp),
                s(r.p),
                s(r.rhs),
                fmt_f(r.t_mm),
                fmt_f(r.t_mpp),
                fmt_f(r.t_mps),
                s(r.nnz_scaling),
                s(r.fillin_blocks),
                s(r.memory_bytes),
                fmt_f(r.memory_bound_bytes()),
                s(r.leaves),
                fmt_f(r.t_total),
            ]);
        }
        t
    }

    pub fn fit_table(&self) -> Table {
        let mut t = Table::new(&["quantity", "slope", "points", "low_confidence"]);
        for (name, f) in [("t_sp", self.setup_slope), ("t_mps", self.scaling_matvec_slope), ("memory_bytes", self.memory_slope)] {
            match f {
                Some(f) => t.push(vec![s(name), fmt_f(f.slope), s(f.points), s(f.low_confidence)]),
                None => t.push(vec![s(name), String::new(), s(0), s(true)]),
            }
        }
        t
    }
}

/// Ladder geometry for one side length; plates keep the configured density.
pub fn ladder_geometry(cfg: &ExperimentConfig, side: f64) -> GeometrySpec {
    let epw = cfg.geometry.elements_per_wavelength().unwrap_or(10);
    match cfg.geometry {
        GeometrySpec::Cube { .. } => GeometrySpec::Cube { side, epw },
        _ => GeometrySpec::Plate { width: side, height: side, epw },
    }
}

/// Measures one problem size: assembly, preconditioner setup and one
/// solve at the first sweep angle.
pub fn bench_row(setup: &Setup, cfg: &ExperimentConfig) -> BenchResult<BenchRow> {
    let sys = setup.system(cfg.pc, cfg.ordering, cfg)?;
    let b = setup.excitation(cfg.sweep.start, cfg.phi_deg);
    let (_, rep) = sys.solve(&b, &cfg.gmres_options())?;
    if !rep.gmres.converged {
        return Err(BenchError::NotConverged(format!("N = {} after {} iterations", setup.dim(), rep.gmres.iterations)));
    }
    let stats = sys.preconditioner().map(|p| p.stats().clone()).unwrap_or_else(SchurStats::default);
    let mut row = BenchRow {
        n: setup.dim(),
        t_sm: setup.t_sm,
        t_sp: sys.setup_seconds(),
        p: rep.gmres.iterations,
        rhs: cfg.sweep.count,
        t_mm: rep.per_iteration.t_mm,
        t_mpp: rep.per_iteration.t_mpp,
        t_mps: rep.per_iteration.t_mps,
        nnz_scaling: stats.nnz,
        fillin_blocks: stats.fill_blocks,
        memory_bytes: stats.nnz * BYTES_PER_VALUE,
        leaves: setup.tree.leaf_count(),
        t_total: 0.0,
    };
    row.t_total = row.total_from_parts();
    Ok(row)
}

/// Runs the size ladder; writes `scaling.csv` and `scaling_fit.csv`.
pub fn cmd_scaling(cfg: &ExperimentConfig) -> BenchResult<BenchReport> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.ladder.len());
    for &side in &cfg.ladder {
        let mut c = cfg.clone();
        c.geometry = ladder_geometry(cfg, side);
        rows.push(bench_row(&Setup::build(&c)?, &c)?);
    }
    let report = BenchReport::from_rows(rows);
    write_csv(&path(cfg, "scaling.csv"), cfg, &report.table())?;
    write_csv(&path(cfg, "scaling_fit.csv"), cfg, &report.fit_table())?;
    Ok(report)
}

// ----------------------------------------------------------------- compare

/// One (ordering, preconditioner) pair over the whole sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub ordering: OrderingKind,
    pub pc: PreconditionerKind,
    pub rhs: usize,
    /// Mean GMRES iterations per right-hand side.
    pub p: f64,
    pub p_max: usize,
    pub converged: bool,
    pub t_sm: f64,
    pub t_sp: f64,
    pub t_mm: f64,
    pub t_mp: f64,
    /// `t_sm + t_sp + p n (t_mm + t_mp)`.
    pub t_total: f64,
    /// Measured wall time of all solves.
    pub t_solve: f64,
    /// Largest `||x - x_ref|| / ||x_ref||` against the first variant.
    pub max_rel_diff: f64,
}

impl CompareRow {
    pub fn speedup_over(&self, other: &CompareRow) -> f64 {
        other.t_total / self.t_total
    }
}

/// Runs every `pcs` x `orderings` pair over the sweep of `cfg`.
pub fn compare_variants(
    setup: &Setup,
    cfg: &ExperimentConfig,
    pcs: &[PreconditionerKind],
    orderings: &[OrderingKind],
) -> BenchResult<Vec<CompareRow>> {
    let mut rows = Vec::new();
    let mut reference: Option<Vec<Vec<C64>>> = None;
    for &ordering in orderings {
        for &pc in pcs {
            let sys = setup.system(pc, ordering, cfg)?;
            let sols = solve_sweep(setup, &sys, cfg)?;
            let rhs = sols.len();
            let iters: Vec<usize> = sols.iter().map(|a| a.report.gmres.iterations).collect();
            let calls: f64 = iters.iter().map(|&i| i.max(1) as f64).sum();
            let avg = |f: fn(&SolveReport) -> f64| {
                sols.iter().map(|a| f(&a.report) * a.report.gmres.iterations.max(1) as f64).sum::<f64>() / calls
            };
            let t_mm = avg(|r| r.per_iteration.t_mm);
            let t_mp = avg(|r| r.per_iteration.t_mpp + r.per_iteration.t_mps);
            let p = iters.iter().sum::<usize>() as f64 / rhs as f64;
            let xs: Vec<Vec<C64>> = sols.iter().map(|a| a.x.clone()).collect();
            let max_rel_diff = match &reference {
                Some(r) => xs.iter().zip(r).map(|(x, y)| rel_diff(x, y)).fold(0.0, f64::max),
                None => {
                    reference = Some(xs);
                    0.0
                }
            };
            rows.push(CompareRow {
                ordering,
                pc,
                rhs,
                p,
                p_max: iters.iter().copied().max().unwrap_or(0),
                converged: sols.iter().all(|a| a.report.gmres.converged),
                t_sm: setup.t_sm,
                t_sp: sys.setup_seconds(),
                t_mm,
                t_mp,
                t_total: setup.t_sm + sys.setup_seconds() + p * rhs as f64 * (t_mm + t_mp),
                t_solve: sols.iter().map(|a| a.report.solve_seconds).sum(),
                max_rel_diff,
            });
        }
    }
    Ok(rows)
}

fn rel_diff(x: &[C64], y: &[C64]) -> f64 {
    let d: Vec<C64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm2(&d) / norm2(y)
}

pub struct CompareOutcome {
    pub n: usize,
    pub rows: Vec<CompareRow>,
}

impl CompareOutcome {
    pub fn row(&self, ordering: OrderingKind, pc: PreconditionerKind) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.ordering == ordering && r.pc == pc)
    }

    /// Whether iterations are ordered schur <= null-field <= jacobi <= none
    /// under `ordering`.
    pub fn iterations_ordered(&self, ordering: OrderingKind) -> bool {
        let p: Vec<f64> = PreconditionerKind::ALL.iter().filter_map(|&k| self.row(ordering, k)).map(|r| r.p).collect();
        p.len() == PreconditionerKind::ALL.len() && p.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn check_converged(&self) -> BenchResult<()> {
        match self.rows.iter().find(|r| !r.converged) {
            Some(r) => Err(BenchError::NotConverged(format!("{} with {} ordering", r.pc, r.ordering))),
            None => Ok(()),
        }
    }
}

/// All four preconditioners under every configured ordering; writes
/// `compare.csv`.
pub fn cmd_compare(cfg: &ExperimentConfig) -> BenchResult<CompareOutcome> {
    cfg.validate()?;
    let setup = Setup::build(cfg)?;
    let rows = compare_variants(&setup, cfg, &PreconditionerKind::ALL, &cfg.orderings)?;
    let out = CompareOutcome { n: setup.dim(), rows };
    let mut t = Table::new(&[
        "ordering", "pc", "rhs", "p", "p_max", "converged", "t_sm", "t_sp", "t_mm", "t_mp", "t_total", "t_solve",
        "speedup_vs_nullfield", "speedup_vs_none", "max_rel_diff",
    ]);
    for r in &out.rows {
        let vs = |k| out.row(r.ordering, k).map(|o| fmt_f(r.speedup_over(o))).unwrap_or_default();
        t.push(vec![
            s(r.ordering),
            s(r.pc),
            s(r.rhs),
            fmt_f(r.p),
            s(r.p_max),
            s(r.converged),
            fmt_f(r.t_sm),
            fmt_f(r.t_sp),
            fmt_f(r.t_mm),
            fmt_f(r.t_mp),
            fmt_f(r.t_total),
            fmt_f(r.t_solve),
            vs(PreconditionerKind::NullField),
            vs(PreconditionerKind::None),
            fmt_f(r.max_rel_diff),
        ]);
    }
    write_csv(&path(cfg, "compare.csv"), cfg, &t)?;
    Ok(out)
}

// ----------------------------------------------------------------- pattern

#[derive(Clone, Debug, PartialEq)]
pub struct OrderingRow {
    pub kind: OrderingKind,
    pub metrics: OrderingMetrics,
    pub stats: SchurStats,
}

pub struct PatternOutcome {
    pub near_blocks: usize,
    pub far_blocks: usize,
    pub orderings: Vec<OrderingRow>,
}

impl PatternOutcome {
    pub fn row(&self, kind: OrderingKind) -> Option<&OrderingRow> {
        self.orderings.iter().find(|r| r.kind == kind)
    }
}

/// Block pattern of the partition (`partition.txt`), the scaling-coefficient
/// pattern per ordering (`scaling_<ordering>.csv`) and a summary
/// (`orderings.csv`).
pub fn cmd_pattern(cfg: &ExperimentConfig) -> BenchResult<PatternOutcome> {
    cfg.validate()?;
    let setup = Setup::build(cfg)?;
    write_atomic(&path(cfg, "partition.txt"), write_pattern(&setup.partition.pattern(&setup.tree)).as_bytes())?;
    let g = setup.partition.near_field_graph();
    let mut rows = Vec::new();
    for &kind in &cfg.orderings {
        let order = order_leaves(kind, &g);
        let sys = PreconditionedSystem::new(&setup.op, PreconditionerKind::Schur, &order, &cfg.schur_options())?;
        let pre = sys.preconditioner().expect("Schur mode keeps its preconditioner");
        let pos = order.position();
        let mut t = Table::new(&["pivot", "leaf", "pivot_step", "leaf_step", "kind", "rows", "cols", "rank", "values"]);
        for step in pre.steps() {
            for (leaf, c) in &step.coeffs {
                let (kind, rank) = match c {
                    Compressed::LowRank(b) => ("lowrank", b.rank()),
                    Compressed::Dense(d) => ("dense", d.nrows().min(d.ncols())),
                };
                t.push(vec![
                    s(step.pivot),
                    s(leaf),
                    s(pos[step.pivot]),
                    s(pos[*leaf]),
                    s(kind),
                    s(c.rows()),
                    s(c.cols()),
                    s(rank),
                    s(c.storage()),
                ]);
            }
        }
        write_csv(&path(cfg, &format!("scaling_{kind}.csv")), cfg, &t)?;
        rows.push(OrderingRow { kind, metrics: metrics(&g, &order), stats: pre.stats().clone() });
    }
    let mut t = Table::new(&[
        "ordering", "bandwidth", "profile", "max_wavefront", "total_wavefront", "nnz_scaling", "fillin_blocks",
        "dense_fallbacks", "block_solves", "block_products", "setup_seconds",
    ]);
    for r in &rows {
        let m = &r.metrics;
        let st = &r.stats;
        t.push(vec![
            s(r.kind),
            s(m.bandwidth),
            s(m.profile),
            s(m.max_wavefront),
            s(m.total_wavefront),
            s(st.nnz),
            s(st.fill_blocks),
            s(st.dense_fallbacks),
            s(st.block_solves),
            s(st.block_products),
            fmt_f(st.setup_seconds),
        ]);
    }
    write_csv(&path(cfg, "orderings.csv"), cfg, &t)?;
    Ok(PatternOutcome { near_blocks: setup.partition.near().len(), far_blocks: setup.partition.far().len(), orderings: rows })
}

// --------------------------------------------------------------------- eig

pub struct EigOutcome {
    pub n: usize,
    pub spread_before: f64,
    pub spread_after: f64,
}

impl EigOutcome {
    pub fn ratio(&self) -> f64 {
        self.spread_after / self.spread_before
    }
}

/// Dense eigenvalues before and after preconditioning (`eig.csv`, columns
/// `re, im, tag`) and their spreads (`eig_summary.csv`).
pub fn cmd_eig(cfg: &ExperimentConfig) -> BenchResult<EigOutcome> {
    cfg.validate()?;
    let setup = Setup::build(cfg)?;
    let out = eig_spread(&setup, cfg, true)?;
    let mut t = Table::new(&["pc", "n", "spread_before", "spread_after", "ratio"]);
    t.push(vec![s(cfg.pc), s(out.n), fmt_f(out.spread_before), fmt_f(out.spread_after), fmt_f(out.ratio())]);
    write_csv(&path(cfg, "eig_summary.csv"), cfg, &t)?;
    Ok(out)
}

/// Eigen spreads of the unpreconditioned and the `cfg.pc` operators; with
/// `write` also dumps the spectra.
pub fn eig_spread(setup: &Setup, cfg: &ExperimentConfig, write: bool) -> BenchResult<EigOutcome> {
    let plain = setup.system(PreconditionerKind::None, cfg.ordering, cfg)?;
    let z = plain.to_dense()?;
    let sys = setup.system(cfg.pc, cfg.ordering, cfg)?;
    let e = eigen_diagnostic(&z, &sys)?;
    if write {
        let mut t = Table::new(&["re", "im", "tag"]);
        for (tag, eigs) in [("before", &e.before), ("after", &e.after)] {
            for v in eigs {
                t.push(vec![fmt_f(v.re), fmt_f(v.im), s(tag)]);
            }
        }
        write_csv(&path(cfg, "eig.csv"), cfg, &t)?;
    }
    Ok(EigOutcome { n: setup.dim(), spread_before: spread_ratio(&e.before), spread_after: spread_ratio(&e.after) })
}
