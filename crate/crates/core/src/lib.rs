//! Solvers for two-player zero-sum games with stochastic action sets.
//!
//! Equilibria are approximated by self-play of sleeping-internal-regret
//! learners, compressed to per-player weight vectors, and cross-checked
//! against matrix-scaling and linear-programming oracles.

pub mod analysis;
pub mod bench;
pub mod compact;
pub mod error;
pub mod families;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod regret;
pub mod rng;
pub mod simplex;
pub mod strategy;

pub use error::{Error, Result};
pub use families::{generate, FamilyTag, GameFamily};
pub use model::{ActionSet, AvailabilityModel, BimatrixGame, GameSpec, JointDraw, PayoffMatrix, Player};
