//! Equilibrium selection and subsidy design for binary-action coordination
//! games with a hidden state and noisy private signals.
//!
//! * [`game`]: payoffs, incentives and dominance regions of the
//!   complete-information game family.
//! * [`beliefs`]: noise and prior models, posterior quadrature, beliefs over
//!   the number of opponents playing 1.
//! * [`solver`]: iterated-dominance sequences from both dominance regions and
//!   the switching-point profile they pin down.
//! * [`design`]: subsidy and reward schemes implementing a target threshold.
//! * [`oracle_sim`]: a brute-force discretized elimination oracle and a seeded
//!   Monte Carlo simulator of play.

pub mod beliefs;
pub mod design;
mod error;
pub mod game;
pub mod oracle_sim;
pub mod solver;

pub use beliefs::{
    translation_check, CountBelief, InformationStructure, NoiseDensity, NoiseModel, PriorDensity, PriorModel,
    QuadratureConfig,
};
pub use design::{PartitionTarget, Provenance, SubsidyScheme, Target};
pub use error::{Error, Result};
pub use game::{CoordinationGame, DominanceBounds, ExternalitySchedule, StateBounds};
pub use solver::{SolveReport, SolverConfig, ThresholdProfile};
