//! Effective impedance of a periodic array of plasmonic particles above a
//! flat interface, computed from layer-potential operators with the
//! half-space periodic Green's function, plus shape optimization.

pub mod config;
pub mod error;
pub mod geometry;
pub mod green;
pub mod impedance;
pub mod operators;
pub mod output;
pub mod probe;
pub mod run;
pub mod scenarios;
pub mod shape_optim;
pub mod spectral;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{make_disk, make_multi, make_star, BoundaryCurve, NormalPerturbation, ParticleBoundary};
pub use green::CellPoint;
pub use operators::{eigendecompose, PeriodicOperators, SpectralDecomposition};
