//! Sensor placement by Gram-matrix coherence minimization and sparse force
//! reconstruction with a complex-valued weighted-l1 solver.
//!
//! The pipeline: build a discrete mechanical system ([`modal`]), synthesize
//! complex acceleration-over-force FRF matrices ([`frf`]), analyze coherence
//! of the column-normalized sensing matrix ([`gram`]), pick sensor rows that
//! minimize off-diagonal Gram energy ([`placement`]), recover sparse force
//! vectors with an accelerated proximal solver ([`lasso`]), and run the
//! end-to-end simulation protocol ([`experiments`]).

pub mod error;
pub mod exec;
pub mod experiments;
pub mod frf;
pub mod gram;
pub mod io;
pub mod lasso;
pub mod modal;
pub mod placement;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
