use log::{debug, info, warn};
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chebyshev::{cheb_points, coeffs_to_vals, is_resolved, vals_to_coeffs};
use crate::cross::{aca, build_oblique};
use crate::error::{invalid, Error, Result};
use crate::tensor::Mode;

use super::approximant::{Approximation, TuckerApproximant};
use super::halton::halton_points;
use super::oracle::{InstrumentedOracle, Phase};
use super::stats::{AttemptStats, ConstructionStats, PhaseCounts, STATS_VERSION};

/// Parameters of the constructor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructorConfig {
    /// Relative tolerance.
    pub tol: f64,
    pub coarse_dims: [usize; 3],
    pub rank_guesses: [usize; 3],
    /// Coarse grids grow when `rank / coarse_dim` exceeds this in some mode.
    pub rank_threshold: f64,
    pub halton_count: usize,
    /// The accuracy check passes when the max Halton error is at most
    /// `acceptance_factor * tol * vscale`.
    pub acceptance_factor: f64,
    pub max_restarts: usize,
    pub max_fine_dim: usize,
    pub max_coarse_dim: usize,
    pub max_rank: usize,
    pub seed: u64,
}

impl Default for ConstructorConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            coarse_dims: [17; 3],
            rank_guesses: [6; 3],
            rank_threshold: 1.0 / (2.0 * std::f64::consts::SQRT_2),
            halton_count: 30,
            acceptance_factor: 10.0,
            max_restarts: 5,
            max_fine_dim: (1 << 14) + 1,
            max_coarse_dim: 2000,
            max_rank: 512,
            seed: 1,
        }
    }
}

impl ConstructorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return invalid(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.coarse_dims.iter().any(|&n| n < 2 || n > self.max_coarse_dim) {
            return invalid(format!(
                "coarse dims {:?} must lie in 2..={}",
                self.coarse_dims, self.max_coarse_dim
            ));
        }
        if self.max_fine_dim < 2 {
            return invalid("max fine dim must be at least 2");
        }
        if self.rank_guesses.contains(&0) || self.max_rank == 0 {
            return invalid("rank guesses and the rank cap must be positive");
        }
        if self.rank_threshold.is_nan()
            || self.rank_threshold <= 0.0
            || self.acceptance_factor.is_nan()
            || self.acceptance_factor <= 0.0
        {
            return invalid("rank threshold and acceptance factor must be positive");
        }
        if self.halton_count == 0 {
            return invalid("at least one verification point is needed");
        }
        Ok(())
    }
}

/// Next coarse grid size, `⌊√2^⌊2 log₂ n + 1⌋⌋ + 1` (17 → 23 → 33 → 46).
pub fn grow_coarse(n: usize) -> usize {
    let e = (2.0 * (n as f64).log2() + 1.0).floor();
    2f64.powf(e / 2.0).floor() as usize + 1
}

/// Fibers of one mode sampled on a Chebyshev grid.
#[derive(Debug, Clone)]
pub struct FiberSet {
    pub mode: Mode,
    /// Coordinates of each fiber in the other two modes, lower mode first.
    pub anchors: Vec<(f64, f64)>,
    /// Values on the `values.nrows()`-point grid, one column per fiber.
    pub values: DMatrix<f64>,
}

impl FiberSet {
    fn empty(mode: Mode, n: usize) -> Self {
        Self {
            mode,
            anchors: Vec::new(),
            values: DMatrix::zeros(n, 0),
        }
    }

    pub fn grid_size(&self) -> usize {
        self.values.nrows()
    }

    pub fn rank(&self) -> usize {
        self.values.ncols()
    }
}

fn place(mode: Mode, t: f64, (p, q): (f64, f64)) -> [f64; 3] {
    match mode {
        Mode::One => [t, p, q],
        Mode::Two => [p, t, q],
        Mode::Three => [p, q, t],
    }
}

/// Samples every fiber of `anchors` on the `n`-point grid in one batch.
pub fn sample_fibers(
    oracle: &mut InstrumentedOracle,
    mode: Mode,
    anchors: &[(f64, f64)],
    n: usize,
) -> Result<DMatrix<f64>> {
    let grid = cheb_points(n)?;
    let points: Vec<[f64; 3]> = anchors
        .iter()
        .flat_map(|&a| grid.iter().map(move |&t| place(mode, t, a)))
        .collect();
    Ok(DMatrix::from_vec(n, anchors.len(), oracle.eval_batch(&points)?))
}

/// Result of alternating fiber selection on coarse grids.
#[derive(Debug, Clone)]
pub struct Phase1Output {
    pub coarse_dims: [usize; 3],
    pub ranks: [usize; 3],
    pub fibers: [FiberSet; 3],
    /// Row indices chosen by the last cross approximation of each mode.
    pub index_sets: [Vec<usize>; 3],
    pub sweeps: usize,
    pub regrowths: usize,
    /// Some cross approximation found no entry above the tolerance; the
    /// fibers are then incomplete.
    pub degenerate: bool,
}

fn random_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut v = sample(rng, n, k.clamp(1, n)).into_vec();
    v.sort_unstable();
    v
}

/// Alternating cross approximation on the coarse tensor.
///
/// Each sweep approximates the mode-1, 2, 3 unfoldings of the subtensors
/// `T(:, J, K)`, `T(I, :, K)`, `T(I, J, :)` in turn, each step replacing the
/// index set of its mode by the selected rows. Two sweeps are made unless some
/// rank drops to 1 or less. If a rank is large relative to its coarse grid,
/// that grid grows and selection restarts from random index sets sized by the
/// ranks found.
pub fn phase1_factors(
    oracle: &mut InstrumentedOracle,
    cfg: &ConstructorConfig,
    coarse_dims: [usize; 3],
    rank_guesses: [usize; 3],
    rng: &mut ChaCha8Rng,
) -> Result<Phase1Output> {
    let mut dims = coarse_dims;
    let mut guesses = rank_guesses;
    let mut regrowths = 0;
    loop {
        let grids = [cheb_points(dims[0])?, cheb_points(dims[1])?, cheb_points(dims[2])?];
        let mut idx = [
            Vec::new(),
            random_indices(rng, dims[1], guesses[1]),
            random_indices(rng, dims[2], guesses[2]),
        ];
        let mut fibers = Mode::ALL.map(|m| FiberSet::empty(m, dims[m.index()]));
        let mut ranks = [0; 3];
        let mut sweeps = 0;
        let mut degenerate = false;
        'sweeps: for _ in 0..2 {
            sweeps += 1;
            for mode in Mode::ALL {
                let a = mode.index();
                let mut sel = idx.clone();
                sel[a] = (0..dims[a]).collect();
                let t = oracle.subtensor([&grids[0], &grids[1], &grids[2]], [&sel[0], &sel[1], &sel[2]])?;
                let m = t.matricize(mode);
                let res = aca(&m, cfg.tol * t.norm_inf(), cfg.max_rank)?;
                ranks[a] = res.rank();
                if ranks[a] == 0 {
                    degenerate = true;
                    break 'sweeps;
                }
                let (p, q) = mode.others();
                let np = sel[p].len();
                let anchors = res
                    .cols
                    .iter()
                    .map(|&c| (grids[p][sel[p][c % np]], grids[q][sel[q][c / np]]))
                    .collect();
                fibers[a] = FiberSet {
                    mode,
                    anchors,
                    values: m.select_columns(&res.cols),
                };
                idx[a] = res.rows;
            }
            debug!("sweep {sweeps} on coarse grid {dims:?}: ranks {ranks:?}");
            if ranks.iter().any(|&r| r <= 1) {
                break;
            }
        }
        let out = Phase1Output {
            coarse_dims: dims,
            ranks,
            fibers,
            index_sets: idx,
            sweeps,
            regrowths,
            degenerate,
        };
        if degenerate {
            return Ok(out);
        }
        let mut grown = false;
        for a in 0..3 {
            if ranks[a] as f64 / dims[a] as f64 > cfg.rank_threshold {
                let next = grow_coarse(dims[a]).min(cfg.max_coarse_dim);
                grown |= next > dims[a];
                dims[a] = next;
            }
        }
        if !grown {
            if (0..3).any(|a| ranks[a] as f64 / dims[a] as f64 > cfg.rank_threshold) {
                warn!("coarse grid reached its size cap with ranks {ranks:?}");
            }
            return Ok(out);
        }
        debug!("rank ratio above threshold, coarse grid grows to {dims:?}");
        guesses = ranks;
        regrowths += 1;
    }
}

/// Result of adaptive fiber refinement.
#[derive(Debug, Clone)]
pub struct Phase2Output {
    /// The fibers on each mode's fine grid.
    pub fibers: [FiberSet; 3],
    pub fine_dims: [usize; 3],
    pub rounds: [usize; 3],
    /// Some fiber of the mode was still unresolved at the fine grid cap.
    pub unresolved: [bool; 3],
}

struct Column {
    anchor: (f64, f64),
    values: Vec<f64>,
    resolved: bool,
}

/// Refines the fibers of each mode on nested grids `n → 2n - 1`.
///
/// Only unresolved fibers are sampled again; a fiber is resolved once its
/// coefficient tail is below `tol · vscale` for the running vscale. Fibers
/// resolved on coarser grids are interpolated onto the finest grid used.
/// Refinement stops at `max_fine_dim`, flagging the mode as unresolved.
pub fn phase2_refine(
    oracle: &mut InstrumentedOracle,
    fibers: &[FiberSet; 3],
    cfg: &ConstructorConfig,
) -> Result<Phase2Output> {
    let mut out = Phase2Output {
        fibers: fibers.clone(),
        fine_dims: [0; 3],
        rounds: [0; 3],
        unresolved: [false; 3],
    };
    for mode in Mode::ALL {
        let a = mode.index();
        let fs = &fibers[a];
        let mut cols: Vec<Column> = fs
            .anchors
            .iter()
            .zip(fs.values.column_iter())
            .map(|(&anchor, v)| Column {
                anchor,
                values: v.iter().copied().collect(),
                resolved: false,
            })
            .collect();
        let mut n = fs.grid_size();
        loop {
            let vscale = oracle.vscale();
            for c in cols.iter_mut().filter(|c| !c.resolved) {
                c.resolved = is_resolved(&vals_to_coeffs(&c.values)?, cfg.tol, vscale);
            }
            let pending: Vec<usize> = (0..cols.len()).filter(|&i| !cols[i].resolved).collect();
            if pending.is_empty() {
                break;
            }
            let next = 2 * n - 1;
            if next > cfg.max_fine_dim {
                out.unresolved[a] = true;
                break;
            }
            let anchors: Vec<(f64, f64)> = pending.iter().map(|&i| cols[i].anchor).collect();
            let fresh = sample_fibers(oracle, mode, &anchors, next)?;
            for (&i, v) in pending.iter().zip(fresh.column_iter()) {
                cols[i].values = v.iter().copied().collect();
            }
            n = next;
            out.rounds[a] += 1;
        }
        if out.unresolved[a] {
            let count = cols.iter().filter(|c| !c.resolved).count();
            warn!("mode {}: {count} fibers unresolved at {n} points", a + 1);
        }
        let fine = cols.iter().map(|c| c.values.len()).max().unwrap_or(n);
        let mut values = DMatrix::zeros(fine, cols.len());
        for (j, c) in cols.iter().enumerate() {
            let v = if c.values.len() == fine {
                c.values.clone()
            } else {
                coeffs_to_vals(&vals_to_coeffs(&c.values)?, fine)?
            };
            values.set_column(j, &nalgebra::DVector::from_vec(v));
        }
        out.fibers[a] = FiberSet {
            mode,
            anchors: cols.iter().map(|c| c.anchor).collect(),
            values,
        };
        out.fine_dims[a] = fine;
    }
    Ok(out)
}

/// Result of the core reconstruction.
#[derive(Debug, Clone)]
pub struct Phase3Output {
    pub approximant: TuckerApproximant,
    /// DEIM rows per mode, indices into the fine grids.
    pub rows: [Vec<usize>; 3],
    pub deim_norms: [f64; 3],
    pub core_calls: u64,
}

/// Orthonormal basis of the column space, dropping columns whose `R`
/// diagonal is below `1e-14 ‖R‖`.
fn orthonormal_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let scale = r.norm();
    let keep: Vec<usize> = (0..r.nrows().min(r.ncols()))
        .filter(|&i| r[(i, i)].abs() > 1e-14 * scale)
        .collect();
    q.select_columns(&keep)
}

/// QR and DEIM per mode, then the core from `r1·r2·r3` samples at the
/// selected fine-grid points. Factor `α` is `Q (Q(I,:))⁻¹`, stored as
/// Chebyshev coefficients of its columns.
pub fn phase3_core(oracle: &mut InstrumentedOracle, fibers: &[FiberSet; 3]) -> Result<Phase3Output> {
    let mut rows: [Vec<usize>; 3] = Default::default();
    let mut norms = [0.0; 3];
    let mut coeffs: [DMatrix<f64>; 3] = Default::default();
    let mut grids: [Vec<f64>; 3] = Default::default();
    for (a, fs) in fibers.iter().enumerate() {
        let q = orthonormal_basis(&fs.values);
        if q.ncols() == 0 {
            return Err(Error::DegenerateInput(format!(
                "mode {} fibers are numerically zero",
                a + 1
            )));
        }
        if q.ncols() < fs.rank() {
            debug!("mode {}: dropped {} dependent fibers", a + 1, fs.rank() - q.ncols());
        }
        let proj = build_oblique(&q)?;
        let basis = proj.interpolatory_basis();
        let n = basis.nrows();
        let mut c = DMatrix::zeros(n, basis.ncols());
        for (j, col) in basis.column_iter().enumerate() {
            let v: Vec<f64> = col.iter().copied().collect();
            c.set_column(j, &nalgebra::DVector::from_vec(vals_to_coeffs(&v)?.coeffs));
        }
        coeffs[a] = c;
        norms[a] = proj.mixing_norm;
        rows[a] = proj.rows;
        grids[a] = cheb_points(n)?;
    }
    let before = oracle.total_calls();
    let core = oracle.subtensor([&grids[0], &grids[1], &grids[2]], [&rows[0], &rows[1], &rows[2]])?;
    let core_calls = oracle.total_calls() - before;
    Ok(Phase3Output {
        approximant: TuckerApproximant::new(core, coeffs)?,
        rows,
        deim_norms: norms,
        core_calls,
    })
}

/// Ranks used for the next attempt after a failed accuracy check.
pub fn next_rank_guesses(ranks: [usize; 3], max_rank: usize) -> [usize; 3] {
    ranks.map(|r| if r <= 2 { 3 } else { 6.max(2 * r) }.min(max_rank))
}

/// Builds an approximant of `f` on `[-1, 1]^3`.
pub fn approximate<F>(f: F, cfg: &ConstructorConfig) -> Result<Approximation>
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let mut oracle = InstrumentedOracle::new(&f);
    approximate_with(&mut oracle, cfg)
}

/// Like [`approximate`], drawing samples through an existing oracle.
pub fn approximate_with(oracle: &mut InstrumentedOracle, cfg: &ConstructorConfig) -> Result<Approximation> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dims = cfg.coarse_dims;
    let mut guesses = cfg.rank_guesses.map(|r| r.min(cfg.max_rank));
    let mut attempts: Vec<AttemptStats> = Vec::new();
    let mut results: Vec<TuckerApproximant> = Vec::new();
    let mut zero_function = false;

    for attempt in 0..=cfg.max_restarts {
        let counts_before = oracle.counts();
        oracle.set_phase(Phase::FiberSelection);
        let p1 = phase1_factors(oracle, cfg, dims, guesses, &mut rng)?;
        if attempt == 0 && p1.degenerate && oracle.vscale() == 0.0 {
            zero_function = true;
        }
        let mut fine_dims = p1.coarse_dims;
        let mut rounds = [0; 3];
        let mut unresolved = [false; 3];
        let mut deim_norms = [0.0; 3];
        let mut core_calls = 0;
        let approximant = if p1.degenerate {
            TuckerApproximant::constant(0.0)
        } else {
            oracle.set_phase(Phase::Refinement);
            let p2 = phase2_refine(oracle, &p1.fibers, cfg)?;
            (fine_dims, rounds, unresolved) = (p2.fine_dims, p2.rounds, p2.unresolved);
            oracle.set_phase(Phase::Core);
            match phase3_core(oracle, &p2.fibers) {
                Ok(p3) => {
                    deim_norms = p3.deim_norms;
                    core_calls = p3.core_calls;
                    p3.approximant
                }
                Err(Error::DegenerateInput(msg)) => {
                    warn!("core reconstruction failed: {msg}");
                    TuckerApproximant::constant(0.0)
                }
                Err(e) => return Err(e),
            }
        };

        oracle.set_phase(Phase::Verification);
        let points = halton_points(cfg.halton_count, (attempt * cfg.halton_count) as u64);
        let exact = oracle.eval_batch(&points)?;
        let halton_error = points
            .iter()
            .zip(&exact)
            .map(|(p, v)| (v - approximant.evaluate(p[0], p[1], p[2])).abs())
            .fold(0.0, f64::max);
        let threshold = cfg.acceptance_factor * cfg.tol * oracle.vscale();
        let passed = halton_error <= threshold;
        let counts_after = oracle.counts();
        let ranks = approximant.ranks();
        info!(
            "attempt {attempt}: ranks {ranks:?}, fine dims {fine_dims:?}, halton error {halton_error:.3e} (threshold {threshold:.3e})"
        );
        attempts.push(AttemptStats {
            initial_coarse_dims: dims,
            rank_guesses: guesses,
            coarse_dims: p1.coarse_dims,
            fine_dims,
            ranks,
            coarse_regrowths: p1.regrowths,
            sweeps: p1.sweeps,
            refinement_rounds: rounds,
            unresolved,
            deim_norms,
            core_calls,
            halton_error,
            threshold,
            passed,
            counts: PhaseCounts::from_array(std::array::from_fn(|i| counts_after[i] - counts_before[i])),
        });
        results.push(approximant);
        if passed {
            break;
        }
        guesses = next_rank_guesses(ranks, cfg.max_rank);
        dims = p1.coarse_dims.map(|n| grow_coarse(n).min(cfg.max_coarse_dim));
    }

    let last = attempts.len() - 1;
    let selected = if attempts[last].passed {
        last
    } else {
        warn!("tolerance not certified after {} attempts", attempts.len());
        (0..attempts.len())
            .min_by(|&i, &j| attempts[i].halton_error.total_cmp(&attempts[j].halton_error))
            .unwrap()
    };
    let chosen = &attempts[selected];
    let approximant = results.swap_remove(selected);
    let stats = ConstructionStats {
        version: STATS_VERSION,
        tol: cfg.tol,
        seed: cfg.seed,
        restarts: attempts.len() - 1,
        certified: chosen.passed,
        zero_function,
        ranks: approximant.ranks(),
        degrees: approximant.degrees(),
        coarse_dims: chosen.coarse_dims,
        fine_dims: chosen.fine_dims,
        unresolved: chosen.unresolved,
        vscale: oracle.vscale(),
        halton_error: chosen.halton_error,
        total_calls: oracle.total_calls(),
        distinct_points: oracle.distinct_points(),
        phases: PhaseCounts::from_array(oracle.counts()),
        selected_attempt: selected,
        attempts,
    };
    Ok(Approximation { approximant, stats })
}
