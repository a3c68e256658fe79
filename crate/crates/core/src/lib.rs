//! Fermionic Fock-space laboratory for the pairing Hamiltonian on a
//! discretized Fermi shell.
//!
//! Numeric types are generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below fix the double-precision instantiation used by the CLI and
//! the acceptance suite.
//!
//! ```
//! use fockshell::kspace::{build_shell, Dispersion, PlacementScheme};
//! use fockshell::model::{build_w, BcsModel};
//! use fockshell::ncstates::{build_nc_state, NcLabel};
//!
//! let grid = build_shell::<f64>(1.0, 0.1, 2, PlacementScheme::FibonacciSphere)?
//!     .with_dispersion(Dispersion::Quadratic { mass: 1.0 });
//! let model = BcsModel::new(grid, -0.5);
//! let state = build_nc_state(&model, &NcLabel::from_qs(&[1, -1]))?;
//! assert!(build_w(&model).apply(&state.vector).norm() < 1e-12);
//! # Ok::<(), fockshell::Error>(())
//! ```

pub mod error;
pub mod fock;
pub mod kspace;
pub mod meanfield;
pub mod model;
pub mod ncstates;
pub mod opalg;
pub mod scalar;
pub mod spectra;

pub use error::{Error, Result};
pub use scalar::{Amplitude, LinalgReal, Real, Vec3};

pub type KGridF64 = kspace::KGrid<f64>;
pub type FockVectorF64 = fock::FockVector<f64>;
pub type OperatorExprF64 = opalg::OperatorExpr<f64>;
pub type SectorMatrixF64 = opalg::SectorMatrix<f64>;
pub type BcsModelF64 = model::BcsModel<f64>;
pub type NcStateF64 = ncstates::NcState<f64>;
pub type ContinuumParamsF64 = meanfield::ContinuumParams<f64>;
pub type MeanFieldParamsF64 = meanfield::MeanFieldParams<f64>;
