//! Discrete Bertrand pricing games on the grid `{1/k, ..., 1}`.

pub mod constructions;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod game;
pub mod learners;
pub mod lp;

pub use equilibrium::{DeviationClass, JointDist, VerificationReport};
pub use error::{Error, Result};
pub use game::{Demand, Game, GameConfig, PriceGrid};
