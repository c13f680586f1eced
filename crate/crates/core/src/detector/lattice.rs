//! QR preprocessing and the lattice-point representation shared by the
//! list sphere decoder and the LLR routines.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Largest block the bit-mask representation supports.
pub const MAX_BLOCK_LEN: usize = 64;

/// Thin QR factors: `Q` is `m × n` with orthonormal columns, `R` is `n × n`
/// upper triangular with a non-negative diagonal.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

pub fn qr_factorize(h: &DMatrix<f64>) -> Result<QrFactors> {
    let (m, n) = h.shape();
    if m < n {
        return Err(Error::invalid(format!(
            "{m}x{n} matrix is wide, need rows >= cols"
        )));
    }
    let qr = h.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
        if r[(i, i)] < 1e-10 {
            return Err(Error::RankDeficient {
                index: i,
                value: r[(i, i)],
            });
        }
    }
    Ok(QrFactors { q, r })
}

/// A candidate symbol vector and its squared distance `‖y − H a‖²`.
///
/// Bit `k` of `bits` is `x_k` (1 maps to `+√Eb`, 0 to `−√Eb`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePoint {
    pub bits: u64,
    pub squared_distance: f64,
}

impl LatticePoint {
    pub fn bit(&self, k: usize) -> u8 {
        ((self.bits >> k) & 1) as u8
    }

    pub fn bit_vec(&self, n: usize) -> Vec<u8> {
        (0..n).map(|k| self.bit(k)).collect()
    }

    pub fn symbols(&self, n: usize, amplitude: f64) -> Vec<f64> {
        (0..n)
            .map(|k| {
                if self.bit(k) == 1 {
                    amplitude
                } else {
                    -amplitude
                }
            })
            .collect()
    }

    /// Ordering by distance, then lexicographically by bit pattern
    /// (`x_0` first, bit 0 before bit 1).
    pub fn key_cmp(&self, other: &Self) -> Ordering {
        self.squared_distance
            .total_cmp(&other.squared_distance)
            .then_with(|| lex_cmp(self.bits, other.bits))
    }
}

/// Lexicographic comparison of bit patterns with `x_0` most significant.
pub fn lex_cmp(a: u64, b: u64) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        return Ordering::Equal;
    }
    if (a >> diff.trailing_zeros()) & 1 == 0 {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

pub fn bits_to_mask(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0, |m, (k, &b)| m | (u64::from(b != 0) << k))
}

/// Everything the tree search needs for one received block: the triangular
/// factor, the rotated observation `z = Qᵀy`, and the constant
/// `‖y‖² − ‖z‖²` that completes `‖z − R a‖²` to `‖y − H a‖²`.
#[derive(Debug, Clone)]
pub struct SearchProblem {
    n: usize,
    r: Vec<f64>,
    z: Vec<f64>,
    offset: f64,
    amplitude: f64,
}

impl SearchProblem {
    pub fn new(qr: &QrFactors, y: &[f64], amplitude: f64) -> Result<Self> {
        let (m, n) = qr.q.shape();
        if y.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: y.len(),
            });
        }
        if n > MAX_BLOCK_LEN {
            return Err(Error::invalid(format!(
                "block length {n} exceeds {MAX_BLOCK_LEN}"
            )));
        }
        let z: Vec<f64> = (0..n)
            .map(|j| qr.q.column(j).iter().zip(y).map(|(q, y)| q * y).sum())
            .collect();
        let y_sq: f64 = y.iter().map(|v| v * v).sum();
        let z_sq: f64 = z.iter().map(|v| v * v).sum();
        let mut r = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                r[i * n + j] = qr.r[(i, j)];
            }
        }
        Ok(Self {
            n,
            r,
            z,
            offset: (y_sq - z_sq).max(0.0),
            amplitude,
        })
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// `‖y‖² − ‖Qᵀy‖²`, the part of every distance no symbol choice affects.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub(crate) fn r_at(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.n + j]
    }

    pub(crate) fn r_row(&self, i: usize) -> &[f64] {
        &self.r[i * self.n..(i + 1) * self.n]
    }

    /// `‖y − H a‖²` evaluated through the triangular factor.
    pub fn distance(&self, bits: u64) -> f64 {
        let a = |j: usize| {
            if (bits >> j) & 1 == 1 {
                self.amplitude
            } else {
                -self.amplitude
            }
        };
        let mut total = self.offset;
        for i in 0..self.n {
            let row = self.r_row(i);
            let ra: f64 = (i..self.n).map(|j| row[j] * a(j)).sum();
            total += (self.z[i] - ra).powi(2);
        }
        total
    }
}
