use serde::{Deserialize, Serialize};

use super::oracle::EvalCount;

/// Version of the stats JSON schema; bumped together with the binary format.
pub const STATS_VERSION: u32 = 1;

/// Evaluation counts split by construction phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub fiber_selection: EvalCount,
    pub refinement: EvalCount,
    pub core: EvalCount,
    pub verification: EvalCount,
}

impl PhaseCounts {
    pub fn from_array(c: [EvalCount; 4]) -> Self {
        Self {
            fiber_selection: c[0],
            refinement: c[1],
            core: c[2],
            verification: c[3],
        }
    }

    pub fn sum(&self) -> EvalCount {
        let mut s = self.fiber_selection;
        s += self.refinement;
        s += self.core;
        s += self.verification;
        s
    }
}

/// One pass through phases 1 to 3 plus the accuracy check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptStats {
    /// Coarse dims the attempt started from.
    pub initial_coarse_dims: [usize; 3],
    /// Rank guesses the attempt started from.
    pub rank_guesses: [usize; 3],
    /// Coarse dims after any growth inside fiber selection.
    pub coarse_dims: [usize; 3],
    pub fine_dims: [usize; 3],
    pub ranks: [usize; 3],
    /// Number of fiber-selection restarts caused by the rank-ratio threshold.
    pub coarse_regrowths: usize,
    pub sweeps: usize,
    pub refinement_rounds: [usize; 3],
    pub unresolved: [bool; 3],
    /// Spectral norms of `Q(I,:)⁻¹` per mode.
    pub deim_norms: [f64; 3],
    /// Oracle calls made for the core tensor.
    pub core_calls: u64,
    pub halton_error: f64,
    pub threshold: f64,
    pub passed: bool,
    pub counts: PhaseCounts,
}

/// Summary of a construction, written as the JSON sidecar of an approximant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionStats {
    pub version: u32,
    pub tol: f64,
    pub seed: u64,
    pub restarts: usize,
    pub certified: bool,
    /// The function was identically zero on the first probe.
    pub zero_function: bool,
    pub ranks: [usize; 3],
    pub degrees: [usize; 3],
    pub coarse_dims: [usize; 3],
    pub fine_dims: [usize; 3],
    pub unresolved: [bool; 3],
    pub vscale: f64,
    /// Max error at the Halton points of the returned attempt.
    pub halton_error: f64,
    pub total_calls: u64,
    pub distinct_points: u64,
    pub phases: PhaseCounts,
    /// Index of the attempt whose approximant was returned.
    pub selected_attempt: usize,
    pub attempts: Vec<AttemptStats>,
}

impl ConstructionStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize to JSON")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
