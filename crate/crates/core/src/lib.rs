//! Simulation engine for diffusions that are pushed along a vector field by
//! their local time on the hyperplane `{x_1 = 0}`, plus the verification
//! machinery around it.
//!
//! The solver is a lattice chain: a plain random walk away from the surface
//! whose on-surface steps are biased and shifted so the conditional mean
//! displacement equals the surface field. Diffusion rescaling turns chain
//! ensembles into path ensembles; drift enters by exponential reweighting,
//! never by changing the chain. Exact dynamic-programming laws, closed-form
//! references and distribution-free bands back every statistical claim, and
//! a two-particle collision model rides on the same engine through a linear
//! change of coordinates.

pub mod chain;
pub mod collisions;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod field;
pub mod girsanov;
pub mod oracle;
pub mod scale;
pub mod stats;
pub mod suites;

pub use chain::{run_chain, ChainParams, ChainWalker, LatticeRun};
pub use config::{OutputOptions, RawConfig, SimConfig};
pub use error::{ConfigCode, ConfigIssue, Error, Result};
pub use field::{DriftField, DriftSpec, FieldParams, FieldSpec, SurfaceField};
pub use scale::ScaledPath;
