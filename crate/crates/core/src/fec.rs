//! Rate-1/n feed-forward convolutional codes with zero-tail termination, a
//! seeded block interleaver, and a soft-input Viterbi decoder.
//!
//! Generator bit `K−1` (the MSB of the octal word) taps the current input
//! bit; bit 0 taps the oldest register stage. Output bits for each input bit
//! are emitted in generator order.

use rand::seq::SliceRandom;

use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCode {
    constraint_length: usize,
    generators: Vec<u32>,
}

impl ConvCode {
    pub fn new(constraint_length: usize, generators: &[u32]) -> Result<Self> {
        if !(2..=16).contains(&constraint_length) {
            return Err(Error::invalid(format!(
                "constraint length {constraint_length} outside [2, 16]"
            )));
        }
        if generators.is_empty() {
            return Err(Error::invalid("need at least one generator"));
        }
        if let Some(g) = generators
            .iter()
            .find(|&&g| g == 0 || g >= 1 << constraint_length)
        {
            return Err(Error::invalid(format!(
                "generator {g:o} does not fit constraint length {constraint_length}"
            )));
        }
        Ok(Self {
            constraint_length,
            generators: generators.to_vec(),
        })
    }

    /// Builds a code from octal generator strings such as `"171"`.
    pub fn from_octal(constraint_length: usize, generators: &[&str]) -> Result<Self> {
        let parsed = generators
            .iter()
            .map(|g| {
                u32::from_str_radix(g, 8)
                    .map_err(|_| Error::invalid(format!("bad octal generator {g:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(constraint_length, &parsed)
    }

    /// The (7, [171 133]) industry-standard code.
    pub fn standard() -> Self {
        Self {
            constraint_length: 7,
            generators: vec![0o171, 0o133],
        }
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    pub fn memory(&self) -> usize {
        self.constraint_length - 1
    }

    pub fn outputs_per_bit(&self) -> usize {
        self.generators.len()
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.generators.len() as f64
    }

    fn num_states(&self) -> usize {
        1 << self.memory()
    }

    /// Coded length for `k` information bits including the zero tail.
    pub fn coded_len(&self, k: usize) -> usize {
        self.outputs_per_bit() * (k + self.memory())
    }

    /// Output bits for input `bit` from `state`, packed LSB-first per
    /// generator, plus the next state.
    fn step(&self, state: usize, bit: u8) -> (u32, usize) {
        let reg = ((bit as u32) << self.memory()) | state as u32;
        let out = self
            .generators
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &g)| {
                acc | (((reg & g).count_ones() & 1) << i)
            });
        (out, (reg >> 1) as usize)
    }
}

/// Encodes `info_bits` and appends `memory` zero flush bits.
pub fn conv_encode(code: &ConvCode, info_bits: &[u8]) -> Result<Vec<u8>> {
    if info_bits.is_empty() {
        return Err(Error::invalid("nothing to encode"));
    }
    let n = code.outputs_per_bit();
    let mut out = Vec::with_capacity(code.coded_len(info_bits.len()));
    let mut state = 0;
    let tail = std::iter::repeat_n(0u8, code.memory());
    for bit in info_bits.iter().map(|&b| u8::from(b != 0)).chain(tail) {
        let (word, next) = code.step(state, bit);
        out.extend((0..n).map(|i| ((word >> i) & 1) as u8));
        state = next;
    }
    Ok(out)
}

/// Maximum-likelihood decoding of a zero-tail codeword from per-bit LLRs
/// (positive favours bit 1). The branch metric is `Σ ±llr/2`; ties keep the
/// path arriving from the lower-numbered predecessor state.
pub fn viterbi_decode_soft(code: &ConvCode, llrs: &[f64]) -> Result<Vec<u8>> {
    let n = code.outputs_per_bit();
    if llrs.is_empty() || !llrs.len().is_multiple_of(n) || llrs.len() / n <= code.memory() {
        return Err(Error::invalid(format!(
            "LLR length {} is not a terminated codeword length",
            llrs.len()
        )));
    }
    let steps = llrs.len() / n;
    let states = code.num_states();

    // Precompute the trellis: for each state and input, (output word, next).
    let trellis: Vec<[(u32, usize); 2]> = (0..states)
        .map(|s| [code.step(s, 0), code.step(s, 1)])
        .collect();

    let mut metric = vec![f64::NEG_INFINITY; states];
    metric[0] = 0.0;
    let mut next_metric = vec![f64::NEG_INFINITY; states];
    // survivors[t][state] = (previous state, input bit)
    let mut survivors: Vec<Vec<(u32, u8)>> = Vec::with_capacity(steps);

    for t in 0..steps {
        let chunk = &llrs[t * n..(t + 1) * n];
        // Metric of every output word for this step.
        let word_metric: Vec<f64> = (0..1u32 << n)
            .map(|w| {
                chunk
                    .iter()
                    .enumerate()
                    .map(|(i, l)| if (w >> i) & 1 == 1 { 0.5 * l } else { -0.5 * l })
                    .sum()
            })
            .collect();
        next_metric.fill(f64::NEG_INFINITY);
        let mut surv = vec![(0u32, 0u8); states];
        let inputs: &[u8] = if t + code.memory() >= steps {
            &[0]
        } else {
            &[0, 1]
        };
        for s in 0..states {
            if metric[s] == f64::NEG_INFINITY {
                continue;
            }
            for &bit in inputs {
                let (word, next) = trellis[s][bit as usize];
                let m = metric[s] + word_metric[word as usize];
                if m > next_metric[next] {
                    next_metric[next] = m;
                    surv[next] = (s as u32, bit);
                }
            }
        }
        std::mem::swap(&mut metric, &mut next_metric);
        survivors.push(surv);
    }

    let mut bits = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        let (prev, bit) = survivors[t][state];
        bits[t] = bit;
        state = prev as usize;
    }
    bits.truncate(steps - code.memory());
    Ok(bits)
}

/// Hard-decision decoding: bit `b` becomes LLR `2b − 1`.
pub fn viterbi_decode_hard(code: &ConvCode, coded: &[u8]) -> Result<Vec<u8>> {
    let llrs: Vec<f64> = coded
        .iter()
        .map(|&b| if b != 0 { 1.0 } else { -1.0 })
        .collect();
    viterbi_decode_soft(code, &llrs)
}

/// A fixed permutation of block positions: `out[i] = in[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    permutation: Vec<usize>,
    seed: Option<u64>,
}

impl Interleaver {
    /// Uniform random permutation of `len` positions drawn from `seed`.
    pub fn new(len: usize, seed: u64) -> Self {
        let mut permutation: Vec<usize> = (0..len).collect();
        permutation.shuffle(&mut rng_from_seed(seed));
        Self {
            permutation,
            seed: Some(seed),
        }
    }

    pub fn identity(len: usize) -> Self {
        Self {
            permutation: (0..len).collect(),
            seed: None,
        }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn interleave<T: Copy>(&self, seq: &[T]) -> Result<Vec<T>> {
        self.check(seq.len())?;
        Ok(self.permutation.iter().map(|&p| seq[p]).collect())
    }

    pub fn deinterleave<T: Copy>(&self, seq: &[T]) -> Result<Vec<T>> {
        self.check(seq.len())?;
        let mut out = seq.to_vec();
        for (i, &p) in self.permutation.iter().enumerate() {
            out[p] = seq[i];
        }
        Ok(out)
    }
}
