//! Bit log-likelihood ratios, exact over the full lattice or approximated
//! over a candidate list.
//!
//! For bit `k` the posterior log-ratio is
//!
//! ```text
//! L(x_k) = L_A(x_k) + ln Σ_{x: x_k=1} p(y|x) exp(Σ_{j≠k, x_j=1} L_A(x_j))
//!                   − ln Σ_{x: x_k=0} p(y|x) exp(Σ_{j≠k, x_j=1} L_A(x_j))
//! ```
//!
//! with `p(y|x) ∝ exp(−‖y − H a‖² / 2σ²)`. The Gaussian normalization
//! cancels and is dropped; both sums are taken with an exact log-sum-exp.

use super::lattice::LatticePoint;
use super::lsd::CandidateList;
use crate::link::IsiMatrix;
use crate::{Error, Result};

/// Magnitude cap applied to every LLR.
pub const LLR_CLAMP: f64 = 30.0;

/// Largest block for which [`exact_llr`] will enumerate `2^N` points.
pub const EXACT_MAX_BLOCK: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector {
    values: Vec<f64>,
    clamp: f64,
}

impl LlrVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn clamp(&self) -> f64 {
        self.clamp
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sign decisions, bit 1 for a positive LLR.
    pub fn hard_decisions(&self) -> Vec<u8> {
        self.values.iter().map(|&l| u8::from(l > 0.0)).collect()
    }
}

/// Streaming `ln Σ exp(v)`.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    const EMPTY: LogSum = LogSum {
        max: f64::NEG_INFINITY,
        sum: 0.0,
    };

    fn push(&mut self, v: f64) {
        if v > self.max {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.sum += (v - self.max).exp();
        }
    }

    fn value(&self) -> Option<f64> {
        (self.max > f64::NEG_INFINITY).then(|| self.max + self.sum.ln())
    }
}

fn check_priors(priors: Option<&[f64]>, n: usize) -> Result<Vec<f64>> {
    match priors {
        None => Ok(vec![0.0; n]),
        Some(p) if p.len() == n => Ok(p.to_vec()),
        Some(p) => Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        }),
    }
}

/// Accumulates per-bit log-sums over `(bits, squared distance)` pairs.
fn llrs_from_points(
    points: impl Iterator<Item = (u64, f64)>,
    n: usize,
    sigma: f64,
    priors: &[f64],
) -> LlrVector {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut sums = vec![[LogSum::EMPTY; 2]; n];
    for (bits, d) in points {
        let prior_all: f64 = (0..n)
            .filter(|&j| (bits >> j) & 1 == 1)
            .map(|j| priors[j])
            .sum();
        let base = -d * inv + prior_all;
        for (k, acc) in sums.iter_mut().enumerate() {
            if (bits >> k) & 1 == 1 {
                acc[1].push(base - priors[k]);
            } else {
                acc[0].push(base);
            }
        }
    }
    let values = sums
        .iter()
        .zip(priors)
        .map(|(acc, &la)| match (acc[1].value(), acc[0].value()) {
            (Some(p), Some(m)) => (la + p - m).clamp(-LLR_CLAMP, LLR_CLAMP),
            (Some(_), None) => LLR_CLAMP,
            (None, Some(_)) => -LLR_CLAMP,
            (None, None) => 0.0,
        })
        .collect();
    LlrVector {
        values,
        clamp: LLR_CLAMP,
    }
}

/// Exact LLRs by enumerating all `2^N` symbol vectors.
pub fn exact_llr(
    y: &[f64],
    h: &IsiMatrix,
    sigma: f64,
    amplitude: f64,
    priors: Option<&[f64]>,
) -> Result<LlrVector> {
    let n = h.cols();
    if n > EXACT_MAX_BLOCK {
        return Err(Error::BlockTooLarge(n));
    }
    if y.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            got: y.len(),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let priors = check_priors(priors, n)?;
    // Walk the lattice in Gray-code order so each step flips one symbol and
    // the residual y − Ha updates in O(rows).
    let mut residual = h.apply(&vec![-amplitude; n])?;
    for (r, yi) in residual.iter_mut().zip(y) {
        *r = yi - *r;
    }
    let taps = h.taps();
    let mut bits = 0u64;
    let total = 1u64 << n;
    let points = (0..total).map(move |step| {
        if step > 0 {
            let k = step.trailing_zeros() as usize;
            bits ^= 1 << k;
            // Flipping x_k changes a_k by ±2A; column k of H is the taps
            // shifted down by k.
            let delta = if (bits >> k) & 1 == 1 {
                2.0 * amplitude
            } else {
                -2.0 * amplitude
            };
            for (l, t) in taps.iter().enumerate() {
                residual[k + l] -= delta * t;
            }
        }
        let d: f64 = residual.iter().map(|r| r * r).sum();
        (bits, d)
    });
    Ok(llrs_from_points(points, n, sigma, &priors))
}

/// Approximate LLRs over the points of a candidate list. A bit whose value
/// never appears with one sign in the list gets `±LLR_CLAMP`.
pub fn approx_llr(
    list: &CandidateList,
    n: usize,
    sigma: f64,
    priors: Option<&[f64]>,
) -> Result<LlrVector> {
    approx_llr_points(list.entries(), n, sigma, priors)
}

/// [`approx_llr`] over an arbitrary slice of lattice points.
pub fn approx_llr_points(
    points: &[LatticePoint],
    n: usize,
    sigma: f64,
    priors: Option<&[f64]>,
) -> Result<LlrVector> {
    if points.is_empty() {
        return Err(Error::EmptyList);
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let priors = check_priors(priors, n)?;
    Ok(llrs_from_points(
        points.iter().map(|p| (p.bits, p.squared_distance)),
        n,
        sigma,
        &priors,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::lattice::{qr_factorize, SearchProblem};
    use crate::detector::lsd::lsd_search;
    use crate::detector::FlopCounter;
    use crate::link::{ebn0_to_sigma, map_bits, transmit, FtnLink};

    /// Literal double sum over all 2^N points with explicit likelihoods.
    fn reference_llr(y: &[f64], h: &IsiMatrix, sigma: f64, priors: &[f64]) -> Vec<f64> {
        let n = h.cols();
        let all: Vec<(Vec<u8>, f64)> = (0..1u32 << n)
            .map(|m| {
                let bits: Vec<u8> = (0..n).map(|k| ((m >> k) & 1) as u8).collect();
                let a: Vec<f64> = bits
                    .iter()
                    .map(|&b| if b == 1 { 1.0 } else { -1.0 })
                    .collect();
                let ha = h.apply(&a).unwrap();
                let d: f64 = y.iter().zip(&ha).map(|(p, q)| (p - q).powi(2)).sum();
                (bits, d)
            })
            .collect();
        let dmin = all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        (0..n)
            .map(|k| {
                let mut num = 0.0;
                let mut den = 0.0;
                for (bits, d) in &all {
                    let lik = (-(d - dmin) / (2.0 * sigma * sigma)).exp();
                    let prior: f64 = (0..n)
                        .filter(|&j| j != k && bits[j] == 1)
                        .map(|j| priors[j])
                        .sum();
                    if bits[k] == 1 {
                        num += lik * prior.exp();
                    } else {
                        den += lik * prior.exp();
                    }
                }
                priors[k] + (num / den).ln()
            })
            .collect()
    }

    #[test]
    fn single_bit_closed_form() {
        let h = IsiMatrix::from_taps(&[1.0], 1).unwrap();
        let sigma = 0.5f64.sqrt();
        let l = exact_llr(&[1.0], &h, sigma, 1.0, None).unwrap();
        assert!((l.values()[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn matches_literal_enumeration() {
        let link = FtnLink::new(0.6, 0.35, 0.12, 20, 8).unwrap();
        let noise = ebn0_to_sigma(4.0, 1.0, 1.0).unwrap();
        let bits = [1, 0, 0, 1, 1, 0, 1, 0];
        let y = transmit(link.isi(), &map_bits(&bits, 1.0).unwrap(), &noise, 17).unwrap();
        let priors = [0.3, -0.2, 0.0, 0.5, -1.0, 0.1, 0.0, 0.25];
        for p in [None, Some(&priors[..])] {
            let l = exact_llr(&y, link.isi(), noise.sigma, 1.0, p).unwrap();
            let r = reference_llr(&y, link.isi(), noise.sigma, p.unwrap_or(&[0.0; 8]));
            for (a, b) in l.values().iter().zip(&r) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn vanishing_noise_recovers_bits() {
        let link = FtnLink::new(0.6, 0.35, 0.12, 20, 10).unwrap();
        let bits = [1, 1, 0, 1, 0, 0, 0, 1, 1, 0];
        let y = link
            .isi()
            .apply(map_bits(&bits, 1.0).unwrap().symbols())
            .unwrap();
        let l = exact_llr(&y, link.isi(), 0.05, 1.0, None).unwrap();
        assert_eq!(l.hard_decisions(), bits);
        assert!(l.values().iter().all(|v| v.abs() <= LLR_CLAMP));
    }

    #[test]
    fn block_guard() {
        let h = IsiMatrix::from_taps(&[1.0, 0.3], 21).unwrap();
        let y = vec![0.0; h.rows()];
        assert!(matches!(
            exact_llr(&y, &h, 1.0, 1.0, None),
            Err(Error::BlockTooLarge(21))
        ));
    }

    fn full_list(n: usize, seed: u64) -> (Vec<f64>, FtnLink, SearchProblem, f64) {
        let link = FtnLink::new(0.6, 0.35, 0.12, 20, n).unwrap();
        let qr = qr_factorize(link.isi().matrix()).unwrap();
        let noise = ebn0_to_sigma(4.0, 1.0, 1.0).unwrap();
        let bits: Vec<u8> = (0..n)
            .map(|k| (k + seed as usize).is_multiple_of(3) as u8)
            .collect();
        let y = transmit(link.isi(), &map_bits(&bits, 1.0).unwrap(), &noise, seed).unwrap();
        let p = SearchProblem::new(&qr, &y, 1.0).unwrap();
        (y, link, p, noise.sigma)
    }

    #[test]
    fn full_list_equals_exact() {
        let (y, link, p, sigma) = full_list(8, 4);
        let out = lsd_search(&p, 1e18, 256, &mut FlopCounter::default());
        let approx = approx_llr(&out.list, 8, sigma, None).unwrap();
        let exact = exact_llr(&y, link.isi(), sigma, 1.0, None).unwrap();
        for (a, b) in approx.values().iter().zip(exact.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn single_point_is_one_sided() {
        let (_, _, p, sigma) = full_list(8, 5);
        let out = lsd_search(&p, 1e18, 1, &mut FlopCounter::default());
        let l = approx_llr(&out.list, 8, sigma, None).unwrap();
        let best = out.list.entries()[0];
        for k in 0..8 {
            let expected = if best.bit(k) == 1 {
                LLR_CLAMP
            } else {
                -LLR_CLAMP
            };
            assert_eq!(l.values()[k], expected);
        }
    }

    #[test]
    fn order_independent() {
        let (_, _, p, sigma) = full_list(8, 6);
        let out = lsd_search(&p, 1e18, 20, &mut FlopCounter::default());
        let mut reversed = out.list.entries().to_vec();
        reversed.reverse();
        let a = approx_llr(&out.list, 8, sigma, None).unwrap();
        let b = approx_llr_points(&reversed, 8, sigma, None).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(matches!(
            approx_llr_points(&[], 8, sigma, None),
            Err(Error::EmptyList)
        ));
    }
}
