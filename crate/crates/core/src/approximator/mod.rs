//! The fiber-based Tucker constructor, the approximant it produces, and its
//! file format.

mod approximant;
mod construct;
pub mod format;
pub mod halton;
mod oracle;
mod stats;

pub use approximant::{Approximation, TuckerApproximant};
pub use construct::{
    approximate, approximate_with, grow_coarse, next_rank_guesses, phase1_factors, phase2_refine, phase3_core,
    sample_fibers, ConstructorConfig, FiberSet, Phase1Output, Phase2Output, Phase3Output,
};
pub use format::{deserialize, serialize};
pub use halton::halton_points;
pub use oracle::{EvalCount, InstrumentedOracle, Phase};
pub use stats::{AttemptStats, ConstructionStats, PhaseCounts, STATS_VERSION};
