//! Hierarchical-matrix EFIE solver with a symmetric near-field Schur
//! complement preconditioner.
//!
//! The pipeline, bottom-up:
//!
//! - [`mesh`]: triangulated conductor surfaces and the RWG basis.
//! - [`efie`]: Galerkin matrix entries, plane-wave excitation, far field and RCS.
//! - [`cluster`]: octree over the unknowns, admissibility, near-field graph.
//! - [`lowrank`]: adaptive cross approximation and SVD recompression.
//! - [`hmatrix`]: the compressed operator (dense near field, low-rank far field).
//! - [`ordering`]: bandwidth-reducing orderings of the near-field leaf graph.
//! - [`schur`]: block elimination of the near field into scaling coefficients.
//! - [`solver`]: preconditioned GMRES and diagnostics.
//!
//! A small end-to-end run:
//!
//! ```
//! use hschur::prelude::*;
//!
//! let mesh = generate_plate(1.0, 1.0, 6, 300e6).unwrap();
//! let basis = build_rwg(&mesh).unwrap();
//! let medium = Medium::vacuum(300e6).unwrap();
//! let tree = ClusterTree::build(&basis.midpoints(), 30, 8).unwrap();
//! let partition = BlockPartition::build(&tree, DEFAULT_ETA);
//! let op = HOperator::assemble(&basis, &medium, &tree, &partition, &HOptions::default()).unwrap();
//! assert_eq!(op.dim(), basis.len());
//! ```

pub mod cluster;
pub mod efie;
pub mod error;
pub mod geom;
pub mod hmatrix;
pub mod linalg;
pub mod lowrank;
pub mod mesh;
pub mod mie;
pub mod ordering;
pub mod schur;
pub mod solver;

pub use error::{Error, Result};

/// Common imports for applications.
pub mod prelude {
    pub use crate::cluster::{BlockPartition, ClusterTree, NearFieldGraph, DEFAULT_ETA};
    pub use crate::efie::{Medium, PlaneWave, QuadratureRule};
    pub use crate::error::{Error, Result};
    pub use crate::geom::Vec3;
    pub use crate::hmatrix::{HOperator, HOptions};
    pub use crate::linalg::{Matrix, C64};
    pub use crate::mesh::{
        build_rwg, generate_cube, generate_plate, generate_sphere, load_mesh, save_mesh, RwgBasis,
        TriangleMesh,
    };
    pub use crate::ordering::{OrderingKind, OrderingResult};
    pub use crate::schur::{SchurOptions, SchurPreconditioner};
    pub use crate::solver::{GmresOptions, NearTreatment, PreconditionerKind, PreconditionedSystem};
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/quickstart.md")]
mod book_quickstart {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/preconditioner.md")]
mod book_preconditioner {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/orderings.md")]
mod book_orderings {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
mod book_experiments {}
