//! Univariate Chebyshev machinery on `[-1, 1]`.
//!
//! Grids are Chebyshev points of the second kind ordered from `1` down to
//! `-1`. Values and coefficients are related by a DCT-I, applied directly for
//! short grids and through an FFT of length `2(n - 1)` otherwise.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{invalid, Result};

/// Grids at least this long use the FFT path.
const FFT_THRESHOLD: usize = 64;

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The `j`-th of `n` Chebyshev points, `cos(jπ/(n-1))`.
///
/// Evaluated as `sin(π(n-1-2j) / (2(n-1)))` with the fraction reduced first, so
/// the point at index `2j` of the `2n - 1` grid is bit-identical to point `j`
/// of the `n` grid. The grid is exactly symmetric and contains an exact zero
/// for odd `n`.
pub fn cheb_point(n: usize, j: usize) -> f64 {
    debug_assert!(j < n);
    if n == 1 {
        return 0.0;
    }
    let m = n - 1;
    let num = m as i64 - 2 * j as i64;
    let den = 2 * m;
    let g = gcd(num.unsigned_abs() as usize, den);
    let (p, q) = (num / g as i64, den / g);
    (PI * p as f64 / q as f64).sin()
}

/// The `n` Chebyshev points of the second kind, strictly decreasing from 1 to -1.
pub fn cheb_points(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("a Chebyshev grid needs at least one point");
    }
    Ok((0..n).map(|j| cheb_point(n, j)).collect())
}

/// Coefficients `c_0..c_{n-1}` of a Chebyshev expansion `Σ c_k T_k(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    pub coeffs: Vec<f64>,
}

impl ChebSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Evaluates the series with Clenshaw's recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, x)
    }
}

/// Clenshaw recurrence for `Σ c_k T_k(x)`.
pub fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let Some((&c0, rest)) = coeffs.split_first() else {
        return 0.0;
    };
    let two_x = 2.0 * x;
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in rest.iter().rev() {
        let b0 = c + two_x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c0 + x * b1 - b2
}

/// Evaluates `Σ c_k T_k(x)` for a series.
pub fn eval_series(series: &ChebSeries, x: f64) -> f64 {
    series.eval(x)
}

// Computes w_j = Σ_{l=0}^{m} a_l cos(π j l / m) for j = 0..=m, the shared kernel of
// both transforms.
fn cosine_sum(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n == 1 {
        return vec![a[0]];
    }
    let m = n - 1;
    if n < FFT_THRESHOLD {
        let table: Vec<f64> = (0..2 * m).map(|l| (PI * l as f64 / m as f64).cos()).collect();
        return (0..n)
            .map(|j| a.iter().enumerate().map(|(l, &al)| al * table[(j * l) % (2 * m)]).sum())
            .collect();
    }
    // Even extension of length 2m: the DFT of [a_0, a_1/2.., a_m, ..a_1/2] is real.
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(2 * m);
    buf.push(Complex::new(a[0], 0.0));
    buf.extend(a[1..m].iter().map(|&v| Complex::new(0.5 * v, 0.0)));
    buf.push(Complex::new(a[m], 0.0));
    buf.extend(a[1..m].iter().rev().map(|&v| Complex::new(0.5 * v, 0.0)));
    FftPlanner::new().plan_fft_forward(2 * m).process(&mut buf);
    buf[..n].iter().map(|c| c.re).collect()
}

/// Maps samples at `cheb_points(n)` to the coefficients of the interpolating
/// Chebyshev series.
pub fn vals_to_coeffs(values: &[f64]) -> Result<ChebSeries> {
    let n = values.len();
    if n == 0 {
        return invalid("cannot transform an empty sample vector");
    }
    if n == 1 {
        return Ok(ChebSeries::new(values.to_vec()));
    }
    let m = n - 1;
    // c_k = (2/m) Σ'' v_j cos(πjk/m), endpoints halved in both j and k.
    let mut weighted = values.to_vec();
    weighted[0] *= 0.5;
    weighted[m] *= 0.5;
    let scale = 2.0 / m as f64;
    let mut c: Vec<f64> = cosine_sum(&weighted).into_iter().map(|v| v * scale).collect();
    c[0] *= 0.5;
    c[m] *= 0.5;
    Ok(ChebSeries::new(c))
}

/// Samples a series on `cheb_points(n)`; `n` must be at least the series length.
pub fn coeffs_to_vals(series: &ChebSeries, n: usize) -> Result<Vec<f64>> {
    if n == 0 || n < series.len() {
        return invalid(format!(
            "cannot sample a length-{} series on {} points",
            series.len(),
            n
        ));
    }
    let mut padded = series.coeffs.clone();
    padded.resize(n, 0.0);
    Ok(cosine_sum(&padded))
}

fn tail_window(n: usize) -> usize {
    3.max((0.15 * n as f64).ceil() as usize)
}

/// Decides whether a series is resolved: at least 5 coefficients, and the
/// largest magnitude among the last `max(3, ⌈0.15 n⌉)` is at most `tol * vscale`.
pub fn is_resolved(series: &ChebSeries, tol: f64, vscale: f64) -> bool {
    let n = series.len();
    if n < 5 {
        return false;
    }
    let w = tail_window(n).min(n);
    let tail_max = series.coeffs[n - w..].iter().fold(0.0_f64, |acc, c| acc.max(c.abs()));
    tail_max <= tol * vscale
}

/// Grid size after one nested refinement step.
pub fn refine_size(n: usize) -> Result<usize> {
    if n < 2 {
        return invalid(format!("cannot refine a grid of {n} points"));
    }
    Ok(2 * n - 1)
}

/// Drops the trailing coefficients whose magnitude is at most `tol * vscale`.
/// Never returns an empty series.
pub fn chop_series(series: &ChebSeries, tol: f64, vscale: f64) -> ChebSeries {
    let thresh = tol * vscale;
    let keep = series
        .coeffs
        .iter()
        .rposition(|c| c.abs() > thresh)
        .map_or(1, |k| k + 1)
        .min(series.len().max(1));
    let mut coeffs = series.coeffs.clone();
    coeffs.truncate(keep);
    if coeffs.is_empty() {
        coeffs.push(0.0);
    }
    ChebSeries::new(coeffs)
}

/// Samples `f` on the `n`-point grid and returns the interpolating series.
pub fn interpolate(f: impl Fn(f64) -> f64, n: usize) -> Result<ChebSeries> {
    let vals: Vec<f64> = cheb_points(n)?.into_iter().map(f).collect();
    vals_to_coeffs(&vals)
}
