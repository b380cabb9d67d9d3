//! Dense order-3 tensors.
//!
//! Entries are stored with the first index varying fastest: `(i, j, k)` lives
//! at `i + n1 * (j + n2 * k)`. The mode-α matricization has the mode-α fibers
//! as columns, with the remaining two indices ordered the same way (lower mode
//! fastest): mode 1 columns are indexed by `j + n2 * k`, mode 2 by
//! `i + n1 * k`, mode 3 by `i + n1 * j`.

use nalgebra::DMatrix;

use crate::chebyshev::{clenshaw, vals_to_coeffs};
use crate::error::{invalid, Error, Result};

/// One of the three tensor modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Zero-based position of the mode.
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    /// The two remaining zero-based mode positions, in increasing order.
    pub fn others(self) -> (usize, usize) {
        match self {
            Mode::One => (1, 2),
            Mode::Two => (0, 2),
            Mode::Three => (0, 1),
        }
    }
}

impl TryFrom<usize> for Mode {
    type Error = Error;

    /// Converts the one-based mode number used in the math notation.
    fn try_from(m: usize) -> Result<Self> {
        match m {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            _ => invalid(format!("mode must be 1, 2 or 3, got {m}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

/// Core tensor of a Tucker decomposition; same layout as any dense tensor.
pub type TuckerCore = DenseTensor3;

impl DenseTensor3 {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return invalid(format!("tensor dimensions must be positive, got {dims:?}"));
        }
        if data.len() != dims.iter().product::<usize>() {
            return invalid(format!(
                "tensor of dims {dims:?} needs {} entries, got {}",
                dims.iter().product::<usize>(),
                data.len()
            ));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dims, data }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    // (row, column) of entry (i, j, k) in the mode matricization.
    fn unfold_position(&self, mode: Mode, idx: [usize; 3]) -> (usize, usize) {
        let (a, b) = mode.others();
        (idx[mode.index()], idx[a] + self.dims[a] * idx[b])
    }

    /// Mode matricization; see the module docs for the column order.
    pub fn matricize(&self, mode: Mode) -> DMatrix<f64> {
        let (a, b) = mode.others();
        let rows = self.dims[mode.index()];
        let mut m = DMatrix::zeros(rows, self.dims[a] * self.dims[b]);
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    let (r, c) = self.unfold_position(mode, [i, j, k]);
                    m[(r, c)] = self.get(i, j, k);
                }
            }
        }
        m
    }

    /// Inverse of [`matricize`](Self::matricize) for a tensor of the given dims.
    pub fn fold(m: &DMatrix<f64>, mode: Mode, dims: [usize; 3]) -> Result<Self> {
        let (a, b) = mode.others();
        if m.nrows() != dims[mode.index()] || m.ncols() != dims[a] * dims[b] {
            return invalid(format!(
                "a {}x{} matrix is not a mode-{} unfolding of {dims:?}",
                m.nrows(),
                m.ncols(),
                mode.index() + 1
            ));
        }
        let mut t = Self::zeros(dims);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let (r, c) = t.unfold_position(mode, [i, j, k]);
                    t.set(i, j, k, m[(r, c)]);
                }
            }
        }
        Ok(t)
    }

    /// Multiplies every mode fiber by `m`: `(T ×_α M)^(α) = M T^(α)`.
    pub fn mode_mult(&self, m: &DMatrix<f64>, mode: Mode) -> Result<Self> {
        let n = self.dims[mode.index()];
        if m.ncols() != n {
            return invalid(format!(
                "mode-{} product needs a matrix with {n} columns, got {}",
                mode.index() + 1,
                m.ncols()
            ));
        }
        let mut dims = self.dims;
        dims[mode.index()] = m.nrows();
        if m.nrows() == 0 {
            return invalid("mode product with an empty matrix");
        }
        let product = m * self.matricize(mode);
        Self::fold(&product, mode, dims)
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn norm_frob(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return invalid(format!("dims differ: {:?} vs {:?}", self.dims, other.dims));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { dims: self.dims, data })
    }

    /// Applies `f` to every mode fiber in place. `f` maps a fiber to a fiber
    /// of the same length.
    pub fn map_fibers(&self, mode: Mode, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut unfolded = self.matricize(mode);
        for mut col in unfolded.column_iter_mut() {
            let fiber: Vec<f64> = col.iter().copied().collect();
            let mapped = f(&fiber);
            for (dst, v) in col.iter_mut().zip(mapped) {
                *dst = v;
            }
        }
        Self::fold(&unfolded, mode, self.dims).expect("fiber map keeps dims")
    }
}

/// Truncated higher-order SVD.
#[derive(Debug, Clone)]
pub struct Hosvd {
    pub core: TuckerCore,
    /// Orthonormal factor matrices, `n_α × r_α`.
    pub factors: [DMatrix<f64>; 3],
    pub ranks: [usize; 3],
    /// Singular values of each mode matricization, descending.
    pub singular_values: [Vec<f64>; 3],
}

impl Hosvd {
    pub fn reconstruct(&self) -> DenseTensor3 {
        let mut t = self.core.clone();
        for mode in Mode::ALL {
            t = t
                .mode_mult(&self.factors[mode.index()], mode)
                .expect("factor shapes match core");
        }
        t
    }
}

// Left singular vectors and singular values of a (possibly very wide) matrix.
// Wide matrices are first reduced through a QR of the transpose, which keeps
// the small singular values at full relative accuracy.
fn left_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let square = if m.ncols() > m.nrows() {
        let r = m.transpose().qr().r();
        r.transpose()
    } else {
        m.clone()
    };
    let svd = square.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cols: Vec<_> = order.iter().map(|&i| u.column(i).into_owned()).collect();
    (DMatrix::from_columns(&cols), sv)
}

/// Smallest rank whose discarded singular values have energy at most `bound`.
fn truncation_rank(sv: &[f64], bound: f64) -> usize {
    let mut tail = 0.0;
    let mut r = sv.len();
    while r > 0 {
        let next = tail + sv[r - 1] * sv[r - 1];
        if next.sqrt() > bound {
            break;
        }
        tail = next;
        r -= 1;
    }
    r.max(1)
}

/// Truncated HOSVD: per-mode ranks keep the discarded energy of each
/// matricization below `tol * ‖t‖_F / √3`, so the reconstruction error is at
/// most `tol * ‖t‖_F`.
pub fn hosvd_truncated(t: &DenseTensor3, tol: f64) -> Result<Hosvd> {
    if tol.is_nan() || tol < 0.0 {
        return invalid(format!("tolerance must be non-negative, got {tol}"));
    }
    let bound = tol * t.norm_frob() / 3f64.sqrt();
    let mut factors = Vec::with_capacity(3);
    let mut ranks = [0; 3];
    let mut svs: Vec<Vec<f64>> = Vec::with_capacity(3);
    for mode in Mode::ALL {
        let (u, sv) = left_svd(&t.matricize(mode));
        let r = truncation_rank(&sv, bound).min(u.ncols());
        ranks[mode.index()] = r;
        factors.push(u.columns(0, r).into_owned());
        svs.push(sv);
    }
    let mut core = t.clone();
    for mode in Mode::ALL {
        core = core.mode_mult(&factors[mode.index()].transpose(), mode)?;
    }
    let [f1, f2, f3]: [DMatrix<f64>; 3] = factors.try_into().expect("three modes");
    let [s1, s2, s3]: [Vec<f64>; 3] = svs.try_into().expect("three modes");
    Ok(Hosvd {
        core,
        factors: [f1, f2, f3],
        ranks,
        singular_values: [s1, s2, s3],
    })
}

/// Chebyshev coefficient tensor of the tensor-product interpolant of samples
/// taken on a Chebyshev grid (the transform applied along every mode).
pub fn interpolation_coefficients(samples: &DenseTensor3) -> DenseTensor3 {
    let mut t = samples.clone();
    for mode in Mode::ALL {
        t = t.map_fibers(mode, |fiber| {
            vals_to_coeffs(fiber).expect("fibers are non-empty").coeffs
        });
    }
    t
}

/// Evaluates `Σ A_ijk T_i(x) T_j(y) T_k(z)` for a coefficient tensor.
pub fn eval_coefficient_tensor(coeffs: &DenseTensor3, x: f64, y: f64, z: f64) -> f64 {
    let [n1, n2, n3] = coeffs.dims();
    let mut plane = vec![0.0; n2 * n3];
    for (col, slot) in plane.iter_mut().enumerate() {
        let start = col * n1;
        *slot = clenshaw(&coeffs.data()[start..start + n1], x);
    }
    let line: Vec<f64> = (0..n3).map(|k| clenshaw(&plane[k * n2..(k + 1) * n2], y)).collect();
    clenshaw(&line, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::cheb_points;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(dims: [usize; 3], rng: &mut ChaCha8Rng) -> DenseTensor3 {
        DenseTensor3::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0))
    }

    fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn outer(u: &[f64], v: &[f64], w: &[f64]) -> DenseTensor3 {
        DenseTensor3::from_fn([u.len(), v.len(), w.len()], |i, j, k| u[i] * v[j] * w[k])
    }

    #[test]
    fn construction_checks_shape() {
        assert!(DenseTensor3::new([2, 2, 2], vec![0.0; 7]).is_err());
        assert!(DenseTensor3::new([0, 2, 2], vec![]).is_err());
        let t = DenseTensor3::new([2, 3, 4], (0..24).map(f64::from).collect()).unwrap();
        assert_eq!(t.get(1, 2, 3), 23.0);
        assert_eq!(t.get(1, 0, 0), 1.0);
        assert_eq!(t.get(0, 1, 0), 2.0);
    }

    #[test]
    fn mode_numbers() {
        assert_eq!(Mode::try_from(2).unwrap(), Mode::Two);
        assert!(Mode::try_from(0).is_err());
        assert!(Mode::try_from(4).is_err());
    }

    #[test]
    fn matricize_examples() {
        let t = DenseTensor3::new([2, 1, 1], vec![3.0, -1.0]).unwrap();
        let m = t.matricize(Mode::One);
        assert_eq!((m.nrows(), m.ncols()), (2, 1));
        assert_eq!(m[(0, 0)], 3.0);
        assert_eq!(m[(1, 0)], -1.0);

        // Mode-2 columns are the rows of the frontal slice.
        let t = DenseTensor3::from_fn([2, 2, 1], |i, j, _| (10 * i + j) as f64);
        let m2 = t.matricize(Mode::Two);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m2[(j, i)], t.get(i, j, 0));
            }
        }
    }

    #[test]
    fn fold_inverts_matricize() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_tensor([3, 4, 5], &mut rng);
        for mode in Mode::ALL {
            let back = DenseTensor3::fold(&t.matricize(mode), mode, t.dims()).unwrap();
            assert_eq!(back, t);
        }
        assert!(DenseTensor3::fold(&DMatrix::zeros(3, 3), Mode::One, [3, 4, 5]).is_err());
    }

    #[test]
    fn mode_mult_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = random_tensor([3, 4, 2], &mut rng);
        for mode in Mode::ALL {
            let n = t.dims()[mode.index()];
            assert_eq!(t.mode_mult(&DMatrix::identity(n, n), mode).unwrap(), t);
        }
        assert!(t.mode_mult(&DMatrix::identity(2, 2), Mode::One).is_err());

        let (u, v, w) = (vec![1.0, -2.0, 0.5], vec![2.0, 1.0], vec![0.3, 0.7, -1.0]);
        let m = random_matrix(4, 3, &mut rng);
        let mu: Vec<f64> = (m.clone() * nalgebra::DVector::from_vec(u.clone()))
            .iter()
            .copied()
            .collect();
        let lhs = outer(&u, &v, &w).mode_mult(&m, Mode::One).unwrap();
        let rhs = outer(&mu, &v, &w);
        assert!(lhs.sub(&rhs).unwrap().norm_inf() < 1e-14);
    }

    #[test]
    fn successive_products_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor([3, 3, 3], &mut rng);
        let a = random_matrix(3, 3, &mut rng);
        let b = random_matrix(3, 3, &mut rng);
        for mode in Mode::ALL {
            let twice = t.mode_mult(&a, mode).unwrap().mode_mult(&b, mode).unwrap();
            let once = t.mode_mult(&(&b * &a), mode).unwrap();
            assert!(twice.sub(&once).unwrap().norm_inf() < 1e-13);
        }
    }

    #[test]
    fn norms() {
        let z = DenseTensor3::zeros([2, 3, 1]);
        assert_eq!((z.norm_inf(), z.norm_frob()), (0.0, 0.0));
        let one = DenseTensor3::new([1, 1, 1], vec![3.0]).unwrap();
        assert_eq!((one.norm_inf(), one.norm_frob()), (3.0, 3.0));
        let t = DenseTensor3::new([2, 1, 1], vec![3.0, -4.0]).unwrap();
        assert_eq!((t.norm_inf(), t.norm_frob()), (4.0, 5.0));
    }

    #[test]
    fn hosvd_rank_one() {
        let t = outer(&[1.0, 2.0, -1.0], &[0.5, 0.1, 0.2, 0.3], &[1.0, 1.0]);
        let h = hosvd_truncated(&t, 1e-10).unwrap();
        assert_eq!(h.ranks, [1, 1, 1]);
        assert!(h.reconstruct().sub(&t).unwrap().norm_frob() < 1e-12);
    }

    #[test]
    fn hosvd_sum_of_coordinates_has_rank_two() {
        // x + y + z unfolds to x·1ᵀ + 1·(y+z)ᵀ in every mode: rank exactly 2.
        let p = cheb_points(5).unwrap();
        let t = DenseTensor3::from_fn([5, 5, 5], |i, j, k| p[i] + p[j] + p[k]);
        for mode in Mode::ALL {
            let m = t.matricize(mode);
            let sv = m.singular_values();
            let numerical_rank = sv.iter().filter(|s| **s > 1e-12 * sv.max()).count();
            assert_eq!(numerical_rank, 2);
        }
        assert_eq!(hosvd_truncated(&t, 1e-10).unwrap().ranks, [2, 2, 2]);
    }

    #[test]
    fn hosvd_zero_tolerance_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_tensor([4, 4, 4], &mut rng);
        let h = hosvd_truncated(&t, 0.0).unwrap();
        assert!(h.ranks.iter().all(|&r| r <= 4));
        assert!(h.reconstruct().sub(&t).unwrap().norm_frob() < 1e-13);
    }

    #[test]
    fn hosvd_wide_unfolding_matches_direct_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tensor([4, 9, 7], &mut rng);
        let h = hosvd_truncated(&t, 0.0).unwrap();
        for mode in Mode::ALL {
            let mut direct: Vec<f64> = t.matricize(mode).singular_values().iter().copied().collect();
            direct.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in direct.iter().zip(&h.singular_values[mode.index()]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_interpolant_reproduces_polynomials() {
        let dims = [5, 4, 6];
        let grids = dims.map(|n| cheb_points(n).unwrap());
        let f = |x: f64, y: f64, z: f64| x.powi(4) - 2.0 * x * y + y.powi(3) * z.powi(5) + 1.0;
        let samples = DenseTensor3::from_fn(dims, |i, j, k| f(grids[0][i], grids[1][j], grids[2][k]));
        let coeffs = interpolation_coefficients(&samples);
        for &(x, y, z) in &[(0.1, 0.2, 0.3), (-0.9, 0.5, 1.0), (0.77, -0.33, -0.61)] {
            assert!((eval_coefficient_tensor(&coeffs, x, y, z) - f(x, y, z)).abs() < 1e-13);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn mode_mult_agrees_with_matricization(
                n1 in 1usize..7, n2 in 1usize..6, n3 in 1usize..5, rows in 1usize..5, seed in any::<u64>()
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let t = random_tensor([n1, n2, n3], &mut rng);
                for mode in Mode::ALL {
                    let m = random_matrix(rows, t.dims()[mode.index()], &mut rng);
                    let lhs = t.mode_mult(&m, mode).unwrap().matricize(mode);
                    let rhs = &m * t.matricize(mode);
                    prop_assert!((lhs - rhs).amax() < 1e-13);
                }
            }

            #[test]
            fn hosvd_reconstruction_bound(seed in any::<u64>(), noise in 1e-9f64..1e-4, tol in 1e-8f64..1e-2) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let core = random_tensor([2, 3, 2], &mut rng);
                let mut t = core
                    .mode_mult(&random_matrix(6, 2, &mut rng), Mode::One).unwrap()
                    .mode_mult(&random_matrix(5, 3, &mut rng), Mode::Two).unwrap()
                    .mode_mult(&random_matrix(4, 2, &mut rng), Mode::Three).unwrap();
                let noisy = random_tensor(t.dims(), &mut rng);
                for (a, b) in t.data.iter_mut().zip(noisy.data()) {
                    *a += noise * b;
                }
                let h = hosvd_truncated(&t, tol).unwrap();
                let err = h.reconstruct().sub(&t).unwrap().norm_frob();
                prop_assert!(err <= tol * t.norm_frob() * (1.0 + 1e-10) + 1e-14);
            }

            #[test]
            fn hosvd_ranks_invariant_under_rotations(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let t = random_tensor([2, 2, 3], &mut rng)
                    .mode_mult(&random_matrix(5, 2, &mut rng), Mode::One).unwrap()
                    .mode_mult(&random_matrix(5, 2, &mut rng), Mode::Two).unwrap()
                    .mode_mult(&random_matrix(5, 3, &mut rng), Mode::Three).unwrap();
                let mut rotated = t.clone();
                for mode in Mode::ALL {
                    let q = random_matrix(5, 5, &mut rng).qr().q();
                    rotated = rotated.mode_mult(&q, mode).unwrap();
                }
                let a = hosvd_truncated(&t, 1e-10).unwrap().ranks;
                let b = hosvd_truncated(&rotated, 1e-10).unwrap().ranks;
                prop_assert_eq!(a, [2, 2, 3]);
                prop_assert_eq!(a, b);
            }
        }
    }
}
