//! Experiments: rank versus degree of `1/(x+y+z+3+ε)`, and evaluation-count
//! benchmarks over named functions.

use std::time::Instant;

use serde::Serialize;

use crate::approximator::{approximate, ConstructorConfig};
use crate::catalog;
use crate::chebyshev::{chop_series, interpolate, is_resolved};
use crate::error::{invalid, Error, Result};
use crate::tensor::{hosvd_truncated, DenseTensor3};

/// Largest grid accepted by [`rank_degree_study`] (300³ samples, about 216 MB).
pub const MAX_STUDY_GRID: usize = 300;

/// Largest grid tried by the scalar resolution loop.
pub const MAX_FIBER_POINTS: usize = (1 << 16) + 1;

/// One line of the rank-versus-degree CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankDegRow {
    pub eps: f64,
    pub degree: usize,
    pub rank: usize,
}

/// Degree needed to resolve `f` on `[-1, 1]` to relative accuracy `tol`:
/// grids of 17, 33, 65, ... points until the series is resolved, then chopped.
pub fn fiber_degree(f: impl Fn(f64) -> f64, tol: f64) -> Result<usize> {
    let mut n = 17;
    while n <= MAX_FIBER_POINTS {
        let series = interpolate(&f, n)?;
        let vscale = crate::chebyshev::cheb_points(n)?
            .iter()
            .map(|&x| f(x).abs())
            .fold(0.0, f64::max);
        if is_resolved(&series, tol, vscale) {
            return Ok(chop_series(&series, tol, vscale).len() - 1);
        }
        n = 2 * n - 1;
    }
    invalid(format!("fiber not resolved with {MAX_FIBER_POINTS} points"))
}

/// Degree and HOSVD rank of `1/(x+y+z+3+ε)` for each `ε`.
///
/// The degree is the largest over the mode-1 fibers through
/// `(y, z) ∈ {-1, 0, 1}²` (the function is symmetric, so the other modes
/// agree). The rank is the largest truncated-HOSVD rank of the samples on a
/// `grid³` Chebyshev grid.
pub fn rank_degree_study(eps_list: &[f64], tol: f64, grid: usize) -> Result<Vec<RankDegRow>> {
    if grid > MAX_STUDY_GRID {
        return invalid(format!(
            "a {grid}^3 grid needs {} MB; use --grid {MAX_STUDY_GRID} or less",
            grid * grid * grid * 8 / (1 << 20)
        ));
    }
    if grid < 2 {
        return invalid("the study grid needs at least 2 points per mode");
    }
    let pts = crate::chebyshev::cheb_points(grid)?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if eps.is_nan() || eps <= 0.0 {
            return invalid(format!("eps must be positive, got {eps}"));
        }
        let f = |x: f64, y: f64, z: f64| 1.0 / (x + y + z + 3.0 + eps);
        let mut degree = 0;
        for y in [-1.0, 0.0, 1.0] {
            for z in [-1.0, 0.0, 1.0] {
                degree = degree.max(fiber_degree(|x| f(x, y, z), tol)?);
            }
        }
        let t = DenseTensor3::from_fn([grid; 3], |i, j, k| f(pts[i], pts[j], pts[k]));
        let rank = *hosvd_truncated(&t, tol)?.ranks.iter().max().unwrap();
        rows.push(RankDegRow { eps, degree, rank });
    }
    Ok(rows)
}

/// Outcome of fitting `y ≈ c · model(x)` through the origin in log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitCheck {
    /// Geometric mean of `y / model`.
    pub constant: f64,
    /// Smallest and largest `y / (c · model)`.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl FitCheck {
    pub fn new(ys: &[f64], model: &[f64]) -> Self {
        let logs: Vec<f64> = ys.iter().zip(model).map(|(y, m)| (y / m).ln()).collect();
        let constant = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
        let ratios = ys.iter().zip(model).map(|(y, m)| y / (constant * m));
        let (min_ratio, max_ratio) = ratios.fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        Self {
            constant,
            min_ratio,
            max_ratio,
        }
    }

    /// Data grow no faster than the model: every point is at most `factor` times the fit.
    pub fn bounded_above(&self, factor: f64) -> bool {
        self.max_ratio <= factor
    }

    /// Data follow the model within `factor` in both directions.
    pub fn within(&self, factor: f64) -> bool {
        self.max_ratio <= factor && self.min_ratio >= 1.0 / factor
    }
}

/// `|log ε|`, the growth model for the rank.
pub fn rank_model(eps: f64) -> f64 {
    eps.ln().abs()
}

/// `1 / log(1 + √ε)`, the growth model for the degree.
pub fn degree_model(eps: f64) -> f64 {
    1.0 / (1.0 + eps.sqrt()).ln()
}

/// One line of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub function: String,
    pub tol: f64,
    pub seed: u64,
    /// `certified`, `not-certified` or `error`.
    pub status: String,
    pub restarts: usize,
    pub rank1: usize,
    pub rank2: usize,
    pub rank3: usize,
    pub degree1: usize,
    pub degree2: usize,
    pub degree3: usize,
    pub phase1_total: u64,
    pub phase1_distinct: u64,
    pub phase2_total: u64,
    pub phase2_distinct: u64,
    pub phase3_total: u64,
    pub phase3_distinct: u64,
    pub verify_total: u64,
    pub verify_distinct: u64,
    pub total_calls: u64,
    pub distinct_points: u64,
    pub fine_product: u64,
    pub halton_error: f64,
    pub vscale: f64,
    pub wall_ms: u64,
    pub message: String,
}

/// Column names of [`BenchRow`], in CSV order.
pub const BENCH_HEADER: [&str; 26] = [
    "function",
    "tol",
    "seed",
    "status",
    "restarts",
    "rank1",
    "rank2",
    "rank3",
    "degree1",
    "degree2",
    "degree3",
    "phase1_total",
    "phase1_distinct",
    "phase2_total",
    "phase2_distinct",
    "phase3_total",
    "phase3_distinct",
    "verify_total",
    "verify_distinct",
    "total_calls",
    "distinct_points",
    "fine_product",
    "halton_error",
    "vscale",
    "wall_ms",
    "message",
];

/// Approximates the catalog function `name`; failures become rows with
/// status `error` rather than aborting.
pub fn bench_function(name: &str, cfg: &ConstructorConfig) -> BenchRow {
    let start = Instant::now();
    let mut row = BenchRow {
        function: name.to_string(),
        tol: cfg.tol,
        seed: cfg.seed,
        status: "error".into(),
        restarts: 0,
        rank1: 0,
        rank2: 0,
        rank3: 0,
        degree1: 0,
        degree2: 0,
        degree3: 0,
        phase1_total: 0,
        phase1_distinct: 0,
        phase2_total: 0,
        phase2_distinct: 0,
        phase3_total: 0,
        phase3_distinct: 0,
        verify_total: 0,
        verify_distinct: 0,
        total_calls: 0,
        distinct_points: 0,
        fine_product: 0,
        halton_error: f64::NAN,
        vscale: f64::NAN,
        wall_ms: 0,
        message: String::new(),
    };
    let result = catalog::lookup(name)
        .and_then(|entry| entry.parse())
        .and_then(|expr| approximate(|x, y, z| expr.eval(x, y, z), cfg));
    match result {
        Ok(a) => {
            let s = &a.stats;
            row.status = if s.certified { "certified" } else { "not-certified" }.into();
            row.restarts = s.restarts;
            [row.rank1, row.rank2, row.rank3] = s.ranks;
            [row.degree1, row.degree2, row.degree3] = s.degrees;
            let p = &s.phases;
            (row.phase1_total, row.phase1_distinct) = (p.fiber_selection.total, p.fiber_selection.distinct);
            (row.phase2_total, row.phase2_distinct) = (p.refinement.total, p.refinement.distinct);
            (row.phase3_total, row.phase3_distinct) = (p.core.total, p.core.distinct);
            (row.verify_total, row.verify_distinct) = (p.verification.total, p.verification.distinct);
            row.total_calls = s.total_calls;
            row.distinct_points = s.distinct_points;
            row.fine_product = s.fine_dims.iter().map(|&d| d as u64).product();
            row.halton_error = s.halton_error;
            row.vscale = s.vscale;
        }
        Err(e) => {
            row.message = match e {
                Error::NonFinite { .. } => format!("sampling: {e}"),
                _ => e.to_string(),
            };
        }
    }
    row.wall_ms = start.elapsed().as_millis() as u64;
    row
}
