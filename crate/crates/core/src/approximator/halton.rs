//! Halton points in `[-1, 1]^3` used to check a finished approximant.

const BASES: [u64; 3] = [2, 3, 5];

/// Van der Corput radical inverse of `i` in base `b`, a value in `[0, 1)`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    while i > 0 {
        acc += (i % b) as f64 * scale;
        i /= b;
        scale *= inv;
    }
    acc
}

/// `count` points of the Halton sequence in bases 2, 3, 5, mapped by `t ↦ 2t - 1`.
/// Element indices run from `offset + 1` to `offset + count`.
pub fn halton_points(count: usize, offset: u64) -> Vec<[f64; 3]> {
    (1..=count as u64)
        .map(|i| BASES.map(|b| 2.0 * radical_inverse(offset + i, b) - 1.0))
        .collect()
}
