//! Solvers for two-cluster mean-field quantum annealing models with XX
//! catalysts: classical-limit ground states, spin-wave gaps, sparse-model
//! saddle points and an exact-diagonalization oracle.

pub mod classical;
pub mod continuation;
pub mod ed;
pub mod error;
pub mod golden;
pub mod linalg;
pub mod model;
pub mod saddle;
pub mod spinwave;
pub mod vec3;

pub use error::{Error, Result};
pub use model::{
    AnnealSchedule, CatalystConfig, ClusterFields, Coupling, CouplingMatrix, MagPair, ModelSpec,
    Placement, Schedule,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
