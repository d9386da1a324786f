//! Independent checks on the solver: exhaustive elimination on a grid and
//! simulated play.

mod brute_force;
mod simulate;
mod trace;

pub use brute_force::{brute_force_iesds, ActionSet, Band, DiscretizedGame, MAX_ORACLE_CELLS, MAX_ORACLE_PLAYERS};
pub use simulate::{
    simulate_play, DrawRecord, RegionCounts, SimulationOptions, SimulationRun, SimulationSummary, RNG_ALGORITHM,
};
pub use trace::{unraveling_trace_export, write_trace_csv, TraceRow};
