use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor3;

/// Construction stage an evaluation is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    FiberSelection,
    Refinement,
    Core,
    Verification,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::FiberSelection,
        Phase::Refinement,
        Phase::Core,
        Phase::Verification,
    ];

    fn slot(self) -> usize {
        self as usize
    }
}

/// Oracle calls attributed to one phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCount {
    /// Every query, memoized or not.
    pub total: u64,
    /// Queries at points never seen before.
    pub distinct: u64,
}

impl std::ops::Sub for EvalCount {
    type Output = EvalCount;
    fn sub(self, rhs: Self) -> Self {
        EvalCount {
            total: self.total - rhs.total,
            distinct: self.distinct - rhs.distinct,
        }
    }
}

impl std::ops::AddAssign for EvalCount {
    fn add_assign(&mut self, rhs: Self) {
        self.total += rhs.total;
        self.distinct += rhs.distinct;
    }
}

/// Batches with at least this many new points are evaluated in parallel.
const PARALLEL_BATCH: usize = 512;

type Key = [u64; 3];

fn key(p: [f64; 3]) -> Key {
    // -0.0 and 0.0 are the same sample point.
    p.map(|v| (v + 0.0).to_bits())
}

/// Wraps the target function: memoizes by exact sample point, counts calls
/// per phase, and tracks the running maximum |f| seen (`vscale`).
pub struct InstrumentedOracle<'f> {
    f: &'f (dyn Fn(f64, f64, f64) -> f64 + Sync),
    memo: HashMap<Key, f64>,
    vscale: f64,
    phase: Phase,
    counts: [EvalCount; 4],
}

impl<'f> InstrumentedOracle<'f> {
    pub fn new(f: &'f (dyn Fn(f64, f64, f64) -> f64 + Sync)) -> Self {
        Self {
            f,
            memo: HashMap::new(),
            vscale: 0.0,
            phase: Phase::FiberSelection,
            counts: [EvalCount::default(); 4],
        }
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn vscale(&self) -> f64 {
        self.vscale
    }

    pub fn total_calls(&self) -> u64 {
        self.counts.iter().map(|c| c.total).sum()
    }

    pub fn distinct_points(&self) -> u64 {
        self.memo.len() as u64
    }

    pub fn count(&self, phase: Phase) -> EvalCount {
        self.counts[phase.slot()]
    }

    pub fn counts(&self) -> [EvalCount; 4] {
        self.counts
    }

    /// Evaluates `f` at one point.
    pub fn eval(&mut self, x: f64, y: f64, z: f64) -> Result<f64> {
        Ok(self.eval_batch(&[[x, y, z]])?[0])
    }

    /// Evaluates `f` at many points. New points are evaluated concurrently
    /// for large batches; counters and the memo are updated afterwards, so
    /// results do not depend on scheduling.
    pub fn eval_batch(&mut self, points: &[[f64; 3]]) -> Result<Vec<f64>> {
        let mut fresh: Vec<[f64; 3]> = Vec::new();
        let mut seen_fresh: HashMap<Key, ()> = HashMap::new();
        for &p in points {
            let k = key(p);
            if !self.memo.contains_key(&k) && seen_fresh.insert(k, ()).is_none() {
                fresh.push(p);
            }
        }
        let f = self.f;
        let values: Vec<f64> = if fresh.len() >= PARALLEL_BATCH {
            fresh.par_iter().map(|p| f(p[0], p[1], p[2])).collect()
        } else {
            fresh.iter().map(|p| f(p[0], p[1], p[2])).collect()
        };
        for (p, &value) in fresh.iter().zip(&values) {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    x: p[0],
                    y: p[1],
                    z: p[2],
                    value,
                });
            }
        }
        let slot = &mut self.counts[self.phase.slot()];
        slot.total += points.len() as u64;
        slot.distinct += fresh.len() as u64;
        for (p, value) in fresh.into_iter().zip(values) {
            self.vscale = self.vscale.max(value.abs());
            self.memo.insert(key(p), value);
        }
        Ok(points.iter().map(|&p| self.memo[&key(p)]).collect())
    }

    /// Samples the `|I| × |J| × |K|` subtensor of the tensor of `f` on the
    /// Chebyshev grids given by `grids`.
    pub fn subtensor(&mut self, grids: [&[f64]; 3], idx: [&[usize]; 3]) -> Result<DenseTensor3> {
        for a in 0..3 {
            if let Some(&bad) = idx[a].iter().find(|&&i| i >= grids[a].len()) {
                return Err(Error::InvalidArgument(format!(
                    "index {bad} out of range for mode-{} grid of {} points",
                    a + 1,
                    grids[a].len()
                )));
            }
        }
        let dims = [idx[0].len(), idx[1].len(), idx[2].len()];
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("empty index set".into()));
        }
        let mut points = Vec::with_capacity(dims.iter().product());
        for &k in idx[2] {
            for &j in idx[1] {
                for &i in idx[0] {
                    points.push([grids[0][i], grids[1][j], grids[2][k]]);
                }
            }
        }
        DenseTensor3::new(dims, self.eval_batch(&points)?)
    }
}
