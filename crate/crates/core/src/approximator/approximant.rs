use nalgebra::DMatrix;

use crate::chebyshev::clenshaw;
use crate::error::{invalid, Result};
use crate::tensor::{DenseTensor3, Mode, TuckerCore};

use super::stats::ConstructionStats;

/// `f(x, y, z) ≈ C ×₁ u(x) ×₂ v(y) ×₃ w(z)`.
///
/// Factor `α` is stored as a `d_α × r_α` matrix of Chebyshev coefficients, one
/// column per basis function.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerApproximant {
    core: TuckerCore,
    factors: [DMatrix<f64>; 3],
}

impl TuckerApproximant {
    pub fn new(core: TuckerCore, factors: [DMatrix<f64>; 3]) -> Result<Self> {
        let ranks = core.dims();
        for (a, f) in factors.iter().enumerate() {
            if f.ncols() != ranks[a] {
                return invalid(format!(
                    "factor {} has {} columns but the core has rank {} in that mode",
                    a + 1,
                    f.ncols(),
                    ranks[a]
                ));
            }
            if f.nrows() == 0 {
                return invalid(format!("factor {} has no coefficients", a + 1));
            }
        }
        Ok(Self { core, factors })
    }

    /// The approximant that is `value` everywhere.
    pub fn constant(value: f64) -> Self {
        let one = DMatrix::from_element(1, 1, 1.0);
        Self {
            core: DenseTensor3::from_fn([1, 1, 1], |_, _, _| value),
            factors: [one.clone(), one.clone(), one],
        }
    }

    pub fn core(&self) -> &TuckerCore {
        &self.core
    }

    pub fn factor(&self, mode: Mode) -> &DMatrix<f64> {
        &self.factors[mode.index()]
    }

    pub fn factors(&self) -> &[DMatrix<f64>; 3] {
        &self.factors
    }

    /// Multilinear rank `(r1, r2, r3)`.
    pub fn ranks(&self) -> [usize; 3] {
        self.core.dims()
    }

    /// Number of stored coefficients per factor column `(d1, d2, d3)`.
    pub fn degrees(&self) -> [usize; 3] {
        self.factors.clone().map(|f| f.nrows())
    }

    /// Values of all basis functions of one mode at `t`.
    pub fn factor_row(&self, mode: Mode, t: f64) -> Vec<f64> {
        let f = &self.factors[mode.index()];
        let d = f.nrows();
        f.as_slice().chunks(d).map(|col| clenshaw(col, t)).collect()
    }

    pub fn evaluate(&self, x: f64, y: f64, z: f64) -> f64 {
        let u = self.factor_row(Mode::One, x);
        let v = self.factor_row(Mode::Two, y);
        let w = self.factor_row(Mode::Three, z);
        let [r1, r2, _] = self.ranks();
        let c = self.core.data();
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let mut slab = 0.0;
            for (j, vj) in v.iter().enumerate() {
                let base = r1 * (j + r2 * k);
                let row: f64 = c[base..base + r1].iter().zip(&u).map(|(a, b)| a * b).sum();
                slab += vj * row;
            }
            acc += wk * slab;
        }
        acc
    }

    /// Samples the approximant on a tensor-product grid.
    pub fn evaluate_grid(&self, xs: &[f64], ys: &[f64], zs: &[f64]) -> DenseTensor3 {
        let rows = |mode, pts: &[f64]| {
            let r = self.ranks()[Mode::index(mode)];
            let mut m = DMatrix::zeros(pts.len(), r);
            for (i, &t) in pts.iter().enumerate() {
                for (c, v) in self.factor_row(mode, t).into_iter().enumerate() {
                    m[(i, c)] = v;
                }
            }
            m
        };
        self.core
            .mode_mult(&rows(Mode::One, xs), Mode::One)
            .and_then(|t| t.mode_mult(&rows(Mode::Two, ys), Mode::Two))
            .and_then(|t| t.mode_mult(&rows(Mode::Three, zs), Mode::Three))
            .expect("factor shapes match the core by construction")
    }
}

/// A finished construction: the approximant and how it was obtained.
#[derive(Debug, Clone)]
pub struct Approximation {
    pub approximant: TuckerApproximant,
    pub stats: ConstructionStats,
}

impl Approximation {
    /// Whether the final accuracy check passed.
    pub fn certified(&self) -> bool {
        self.stats.certified
    }
}
