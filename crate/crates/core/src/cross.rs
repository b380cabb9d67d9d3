//! Index selection: full-pivot adaptive cross approximation and DEIM.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Row and column indices chosen by [`aca`], in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct AcaResult {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// Magnitude of the residual pivot at each step; each equals the residual
    /// max-norm before that step.
    pub pivots: Vec<f64>,
}

impl AcaResult {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

/// Position and magnitude of the largest |entry|, first in column-major order.
fn argmax_abs(m: &DMatrix<f64>) -> (usize, usize, f64) {
    let mut best = (0, 0, -1.0);
    for (c, col) in m.column_iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            if v.abs() > best.2 {
                best = (r, c, v.abs());
            }
        }
    }
    best
}

/// Greedy full-pivot cross approximation.
///
/// Repeatedly picks the largest residual entry and removes the rank-one cross
/// through it, stopping once the residual max drops below `tol_abs`, the rank
/// reaches `max_rank`, or the residual vanishes. The selected indices satisfy
/// `M ≈ M(:, J) M(I, J)⁻¹ M(I, :)`.
pub fn aca(m: &DMatrix<f64>, tol_abs: f64, max_rank: usize) -> Result<AcaResult> {
    if m.iter().any(|v| !v.is_finite()) {
        return invalid("cross approximation input contains non-finite entries");
    }
    let mut res = AcaResult {
        rows: Vec::new(),
        cols: Vec::new(),
        pivots: Vec::new(),
    };
    if m.is_empty() {
        return Ok(res);
    }
    let max_rank = max_rank.min(m.nrows()).min(m.ncols());
    let mut r = m.clone();
    while res.rank() < max_rank {
        let (i, j, mag) = argmax_abs(&r);
        if mag == 0.0 || mag < tol_abs {
            break;
        }
        res.rows.push(i);
        res.cols.push(j);
        res.pivots.push(mag);
        let col = r.column(j).into_owned();
        let row = r.row(i).into_owned() / r[(i, j)];
        r -= col * row;
        // Exact zeros along the cross keep the pivot from being reselected.
        r.column_mut(j).fill(0.0);
        r.row_mut(i).fill(0.0);
    }
    Ok(res)
}

/// Index of the largest |v|, smallest index on ties.
fn argmax_abs_vec<'a>(v: impl Iterator<Item = &'a f64>) -> (usize, f64) {
    v.enumerate().fold(
        (0, -1.0),
        |best, (i, x)| {
            if x.abs() > best.1 {
                (i, x.abs())
            } else {
                best
            }
        },
    )
}

/// Discrete empirical interpolation: greedy row selection for a matrix with
/// orthonormal columns.
pub fn deim(q: &DMatrix<f64>) -> Result<Vec<usize>> {
    let (n, r) = q.shape();
    if r > n {
        return invalid(format!("DEIM needs at most as many columns as rows, got {n}x{r}"));
    }
    if r == 0 {
        return Ok(Vec::new());
    }
    let gram_err = (q.transpose() * q - DMatrix::identity(r, r)).amax();
    if gram_err > 1e-8 {
        log::warn!("DEIM input columns are not orthonormal (deviation {gram_err:.2e})");
    }
    let (first, mag) = argmax_abs_vec(q.column(0).iter());
    if mag == 0.0 {
        return Err(Error::DegenerateInput("DEIM met a zero column".into()));
    }
    let mut rows = vec![first];
    for k in 1..r {
        let sel = q.select_rows(&rows).columns(0, k).into_owned();
        let rhs = q.select_rows(&rows).column(k).into_owned();
        let c = sel
            .full_piv_lu()
            .solve(&rhs)
            .ok_or_else(|| Error::DegenerateInput("singular DEIM interpolation matrix".into()))?;
        let resid = q.column(k) - q.columns(0, k) * c;
        let (idx, mag) = argmax_abs_vec(resid.iter());
        if mag == 0.0 {
            return Err(Error::DegenerateInput(format!("DEIM residual vanished at column {k}")));
        }
        rows.push(idx);
    }
    Ok(rows)
}

/// Oblique projector `Q (Q(I,:))⁻¹ Φ_Iᵀ` built from DEIM rows.
#[derive(Debug, Clone)]
pub struct ObliqueProjector {
    pub basis: DMatrix<f64>,
    pub rows: Vec<usize>,
    /// `Q(I,:)⁻¹`.
    pub mixing: DMatrix<f64>,
    /// Spectral norm of `mixing`, the error amplification factor of the projector.
    pub mixing_norm: f64,
}

impl ObliqueProjector {
    /// `Q · mixing`, the interpolatory basis that is the identity on rows `I`.
    pub fn interpolatory_basis(&self) -> DMatrix<f64> {
        &self.basis * &self.mixing
    }

    /// Applies the projector to a vector of length `n`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let sampled = nalgebra::DVector::from_iterator(self.rows.len(), self.rows.iter().map(|&i| x[i]));
        (&self.basis * (&self.mixing * sampled)).iter().copied().collect()
    }
}

/// Runs DEIM on `q` and forms the inverse of `Q(I,:)` with a pivoted LU solve.
pub fn build_oblique(q: &DMatrix<f64>) -> Result<ObliqueProjector> {
    let rows = deim(q)?;
    let r = rows.len();
    let sel = q.select_rows(&rows);
    let lu = sel.full_piv_lu();
    let mixing = lu
        .solve(&DMatrix::identity(r, r))
        .ok_or_else(|| Error::DegenerateInput("Q(I,:) is singular".into()))?;
    if mixing.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("Q(I,:) is numerically singular".into()));
    }
    let mixing_norm = if r == 0 { 0.0 } else { mixing.singular_values().max() };
    Ok(ObliqueProjector {
        basis: q.clone(),
        rows,
        mixing,
        mixing_norm,
    })
}
