//! Binary approximant files.
//!
//! All integers and reals are little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 7 | magic `TCHEB3F` |
//! | 4 | format version, `u32` |
//! | 48 | `d1 r1 d2 r2 d3 r3`, each `u64` |
//! | 8·r1·r2·r3 | core, `f64`, index `i + r1 (j + r2 k)` |
//! | 8·dα·rα, α = 1..3 | factor coefficient matrices, `f64`, column-major |

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor3;

use super::approximant::TuckerApproximant;

pub const MAGIC: &[u8; 7] = b"TCHEB3F";
pub const FORMAT_VERSION: u32 = 1;

/// Largest dimension accepted when reading, guarding against absurd allocations.
const MAX_DIM: u64 = 1 << 24;

pub fn serialize(a: &TuckerApproximant) -> Vec<u8> {
    let [r1, r2, r3] = a.ranks();
    let d = a.degrees();
    let mut out = Vec::with_capacity(59 + 8 * (r1 * r2 * r3 + d[0] * r1 + d[1] * r2 + d[2] * r3));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for (dim, r) in d.iter().zip([r1, r2, r3]) {
        out.extend_from_slice(&(*dim as u64).to_le_bytes());
        out.extend_from_slice(&(r as u64).to_le_bytes());
    }
    for v in a.core().data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in a.factors() {
        for v in f.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.buf.len(),
                message: format!("unexpected end of stream while reading {what}"),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn dim(&mut self, what: &str) -> Result<usize> {
        let at = self.pos;
        let v = u64::from_le_bytes(self.take(8, what)?.try_into().unwrap());
        if v == 0 || v > MAX_DIM {
            return Err(Error::Format {
                offset: at,
                message: format!("{what} = {v} is out of range"),
            });
        }
        Ok(v as usize)
    }

    fn reals(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.take(n * 8, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<TuckerApproximant> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "not an approximant file (bad magic)".into(),
        });
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let mut d = [0; 3];
    let mut ranks = [0; 3];
    for a in 0..3 {
        d[a] = r.dim(&format!("d{}", a + 1))?;
        ranks[a] = r.dim(&format!("r{}", a + 1))?;
    }
    let core_len = ranks.iter().product::<usize>();
    let core = DenseTensor3::new(ranks, r.reals(core_len, "core")?)?;
    let mut factors = Vec::with_capacity(3);
    for a in 0..3 {
        let vals = r.reals(d[a] * ranks[a], &format!("factor {}", a + 1))?;
        factors.push(DMatrix::from_vec(d[a], ranks[a], vals));
    }
    if r.pos != bytes.len() {
        return Err(Error::Format {
            offset: r.pos,
            message: format!("{} trailing bytes", bytes.len() - r.pos),
        });
    }
    let factors: [DMatrix<f64>; 3] = factors.try_into().unwrap();
    TuckerApproximant::new(core, factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TuckerApproximant {
        let core = DenseTensor3::from_fn([2, 1, 3], |i, j, k| 0.1 + i as f64 - 0.7 * k as f64 + j as f64);
        TuckerApproximant::new(
            core,
            [
                DMatrix::from_fn(4, 2, |i, j| (i * 3 + j) as f64 / 7.0),
                DMatrix::from_fn(1, 1, |_, _| -1.5),
                DMatrix::from_fn(5, 3, |i, j| 1.0 / (1 + i + j) as f64),
            ],
        )
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = serialize(&sample());
        assert_eq!(&bytes[..7], b"TCHEB3F");
        assert_eq!(u32::from_le_bytes(bytes[7..11].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[11..19].try_into().unwrap()), 4);
        assert_eq!(bytes.len(), 59 + 8 * (6 + 8 + 1 + 15));
    }

    #[test]
    fn round_trip_is_exact() {
        let a = sample();
        assert_eq!(deserialize(&serialize(&a)).unwrap(), a);
    }

    #[test]
    fn every_truncation_fails() {
        let bytes = serialize(&sample());
        for n in 0..bytes.len() {
            assert!(
                matches!(deserialize(&bytes[..n]), Err(Error::Format { .. })),
                "length {n}"
            );
        }
    }

    #[test]
    fn version_and_magic_errors() {
        let mut bytes = serialize(&sample());
        bytes[7] = 2;
        assert_eq!(
            deserialize(&bytes),
            Err(Error::UnsupportedVersion { found: 2, expected: 1 })
        );
        bytes[0] = b'X';
        assert!(matches!(deserialize(&bytes), Err(Error::Format { offset: 0, .. })));
        let mut extra = serialize(&sample());
        extra.push(0);
        assert!(matches!(deserialize(&extra), Err(Error::Format { .. })));
    }
}
