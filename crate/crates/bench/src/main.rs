use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hschur_bench::experiments::{cmd_compare, cmd_eig, cmd_generate, cmd_pattern, cmd_scaling, cmd_solve};
use hschur_bench::{BenchResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hschur-bench", version, about = "Experiments for the hierarchical EFIE solver with Schur preconditioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured geometry as a mesh file.
    Generate(Overrides),
    /// Monostatic sweep: convergence, residual histories and RCS.
    Solve(Overrides),
    /// Size ladder with log-log slopes of setup time, scaling mat-vec time and memory.
    Scaling(Overrides),
    /// All preconditioners under each ordering over the sweep.
    Compare(Overrides),
    /// Partition and scaling-coefficient sparsity patterns per ordering.
    Pattern(Overrides),
    /// Dense eigenvalues before and after preconditioning.
    Eig(Overrides),
}

/// Settings; flags win over the `--config` file.
#[derive(Args)]
struct Overrides {
    /// `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// plate:WxH:epw, cube:side:epw, sphere:radius:level or file:path (sizes in wavelengths).
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    freq_ghz: Option<String>,
    #[arg(long)]
    leaf_size: Option<String>,
    #[arg(long)]
    max_level: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    tol_aca: Option<String>,
    #[arg(long)]
    fill_tol: Option<String>,
    /// none, cm, rcm, king or sloan.
    #[arg(long)]
    ordering: Option<String>,
    /// Comma-separated orderings for compare and pattern.
    #[arg(long)]
    orderings: Option<String>,
    /// schur, nullfield, jacobi or none.
    #[arg(long)]
    pc: Option<String>,
    #[arg(long)]
    gmres_tol: Option<String>,
    /// Krylov dimension before restart; 0 disables restarting.
    #[arg(long)]
    restart: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// theta start:end:count in degrees.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    phi_deg: Option<String>,
    /// Comma-separated plate sides in wavelengths.
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl Overrides {
    fn resolve(&self) -> BenchResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("geometry", &self.geometry),
            ("freq_ghz", &self.freq_ghz),
            ("leaf_size", &self.leaf_size),
            ("max_level", &self.max_level),
            ("eta", &self.eta),
            ("tol_aca", &self.tol_aca),
            ("fill_tol", &self.fill_tol),
            ("ordering", &self.ordering),
            ("orderings", &self.orderings),
            ("pc", &self.pc),
            ("gmres_tol", &self.gmres_tol),
            ("restart", &self.restart),
            ("max_iter", &self.max_iter),
            ("sweep", &self.sweep),
            ("phi_deg", &self.phi_deg),
            ("ladder", &self.ladder),
            ("out_dir", &self.out_dir),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> BenchResult<()> {
    match cli.command {
        Command::Generate(o) => {
            let g = cmd_generate(&o.resolve()?)?;
            println!("{}: {} vertices, {} triangles, {} unknowns", g.path.display(), g.vertices, g.triangles, g.unknowns);
        }
        Command::Solve(o) => {
            let r = cmd_solve(&o.resolve()?)?;
            let iters: Vec<usize> = r.angles.iter().map(|a| a.report.gmres.iterations).collect();
            println!("N = {}, setup {:.2} s + {:.2} s, iterations {:?}", r.n, r.t_sm, r.t_sp, iters);
            if let Some(m) = r.mie_dbsm {
                println!("backscatter {:?} dBsm, Mie {m:.3} dBsm", r.rcs_dbsm);
            }
            r.check_converged()?;
        }
        Command::Scaling(o) => {
            let r = cmd_scaling(&o.resolve()?)?;
            for (name, f) in [("t_sp", r.setup_slope), ("t_mps", r.scaling_matvec_slope), ("memory", r.memory_slope)] {
                match f {
                    Some(f) => println!("{name}: slope {:.3} over {} points{}", f.slope, f.points, if f.low_confidence { " (low confidence)" } else { "" }),
                    None => println!("{name}: no fit"),
                }
            }
        }
        Command::Compare(o) => {
            let r = cmd_compare(&o.resolve()?)?;
            for row in &r.rows {
                println!("{:>6} {:>9}: p = {:.1}, t_total = {:.3} s", row.ordering, row.pc, row.p, row.t_total);
            }
            r.check_converged()?;
        }
        Command::Pattern(o) => {
            let r = cmd_pattern(&o.resolve()?)?;
            println!("{} near blocks, {} far blocks", r.near_blocks, r.far_blocks);
            for row in &r.orderings {
                println!("{:>6}: nnz {} fill-ins {} bandwidth {}", row.kind, row.stats.nnz, row.stats.fill_blocks, row.metrics.bandwidth);
            }
        }
        Command::Eig(o) => {
            let r = cmd_eig(&o.resolve()?)?;
            println!("N = {}: spread {:.3e} -> {:.3e} (ratio {:.3e})", r.n, r.spread_before, r.spread_after, r.ratio());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
