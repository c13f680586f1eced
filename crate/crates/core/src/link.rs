//! The discrete FTN channel `y = H a + w`.
//!
//! `H` is the tall `(N+L−1) × N` Toeplitz matrix of the basis-expansion taps,
//! so `H a` is the full linear convolution of the symbol block with the taps
//! and no edge ISI is discarded. Because the basis pulses are orthonormal the
//! noise after the matched filter is white with per-sample variance `σ²`.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::pulse::{basis_coefficients, basis_coefficients_forced, BasisExpansion, PulseSpec};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// A block of BPSK symbols `±√Eb`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    symbols: Vec<f64>,
    amplitude: f64,
}

impl SymbolBlock {
    pub fn symbols(&self) -> &[f64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// `√Eb`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

/// Maps bit 0 to `−√eb` and bit 1 to `+√eb`.
pub fn map_bits(bits: &[u8], eb: f64) -> Result<SymbolBlock> {
    if bits.is_empty() {
        return Err(Error::invalid("cannot map an empty bit block"));
    }
    if !(eb > 0.0) {
        return Err(Error::invalid(format!("bit energy {eb} must be positive")));
    }
    let amplitude = eb.sqrt();
    let symbols = bits
        .iter()
        .map(|&b| if b != 0 { amplitude } else { -amplitude })
        .collect();
    Ok(SymbolBlock { symbols, amplitude })
}

/// Hard inverse of [`map_bits`].
pub fn demap(block: &SymbolBlock) -> Vec<u8> {
    block.symbols.iter().map(|&s| u8::from(s > 0.0)).collect()
}

/// Tall Toeplitz convolution matrix, `H[i][j] = h_{i−j}`.
#[derive(Debug, Clone)]
pub struct IsiMatrix {
    taps: Vec<f64>,
    block_len: usize,
    dense: DMatrix<f64>,
}

impl IsiMatrix {
    pub fn from_taps(taps: &[f64], block_len: usize) -> Result<Self> {
        if taps.is_empty() || block_len == 0 {
            return Err(Error::invalid(
                "ISI matrix needs taps and a positive block length",
            ));
        }
        let rows = block_len + taps.len() - 1;
        let dense = DMatrix::from_fn(rows, block_len, |i, j| {
            i.checked_sub(j)
                .and_then(|k| taps.get(k))
                .copied()
                .unwrap_or(0.0)
        });
        Ok(Self {
            taps: taps.to_vec(),
            block_len,
            dense,
        })
    }

    pub fn rows(&self) -> usize {
        self.dense.nrows()
    }

    pub fn cols(&self) -> usize {
        self.block_len
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dense[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.dense
    }

    /// `H a`.
    pub fn apply(&self, a: &[f64]) -> Result<Vec<f64>> {
        if a.len() != self.block_len {
            return Err(Error::DimensionMismatch {
                expected: self.block_len,
                got: a.len(),
            });
        }
        let mut out = vec![0.0; self.rows()];
        for (j, &aj) in a.iter().enumerate() {
            for (k, &h) in self.taps.iter().enumerate() {
                out[j + k] += h * aj;
            }
        }
        Ok(out)
    }
}

pub fn build_isi_matrix(expansion: &BasisExpansion, block_len: usize) -> Result<IsiMatrix> {
    IsiMatrix::from_taps(expansion.coefficients(), block_len)
}

/// Per-sample noise level for a given Eb/N0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub ebn0_db: f64,
    pub code_rate: f64,
}

impl NoiseSpec {
    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// `σ² = (eb / rate) / (2 · 10^{Eb/N0 / 10})`: real baseband, `N0/2` per
/// sample, energy charged per information bit.
pub fn ebn0_to_sigma(ebn0_db: f64, eb: f64, code_rate: f64) -> Result<NoiseSpec> {
    if !ebn0_db.is_finite() {
        return Err(Error::invalid(format!("Eb/N0 {ebn0_db} dB is not finite")));
    }
    if !(eb > 0.0) {
        return Err(Error::invalid(format!("bit energy {eb} must be positive")));
    }
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(Error::invalid(format!(
            "code rate {code_rate} outside (0, 1]"
        )));
    }
    let variance = (eb / code_rate) / (2.0 * 10f64.powf(ebn0_db / 10.0));
    Ok(NoiseSpec {
        sigma: variance.sqrt(),
        ebn0_db,
        code_rate,
    })
}

/// Standard-normal noise draws for one block. Scaling these by `σ` (rather
/// than drawing at `σ` directly) lets runs at different noise levels share a
/// realization.
pub fn unit_noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `y = H a + w` with `w ~ N(0, σ² I)` drawn from `seed`.
pub fn transmit(h: &IsiMatrix, a: &SymbolBlock, noise: &NoiseSpec, seed: u64) -> Result<Vec<f64>> {
    let mut y = h.apply(a.symbols())?;
    for (yi, wi) in y.iter_mut().zip(unit_noise(h.rows(), seed)) {
        *yi += noise.sigma * wi;
    }
    Ok(y)
}

/// Physical setup of one FTN link: pulses, expansion and ISI matrix.
#[derive(Debug, Clone)]
pub struct FtnLink {
    pub tau: f64,
    pub beta_h: f64,
    pub beta_v: f64,
    pub block_len: usize,
    expansion: BasisExpansion,
    isi: IsiMatrix,
    flat_band_ok: bool,
}

impl FtnLink {
    /// Unit symbol time, unit bit energy.
    ///
    /// `τ` must lie in the operation region. If the roll-off of `v` leaves
    /// `V(f)` non-flat somewhere on `|f| < W` the same taps are used anyway:
    /// the discrete model stays exact for the pulse the taps synthesize, only
    /// that pulse drifts further from `h(t)`. [`FtnLink::flat_band_ok`]
    /// reports which case applies.
    pub fn new(
        tau: f64,
        beta_h: f64,
        beta_v: f64,
        num_taps: usize,
        block_len: usize,
    ) -> Result<Self> {
        let spec_h = PulseSpec::new(beta_h, 1.0)?;
        let spec_v = PulseSpec::new(beta_v, tau)?;
        let (expansion, flat_band_ok) = match basis_coefficients(&spec_h, &spec_v, tau, num_taps) {
            Err(Error::FlatBandViolation { .. }) => (
                basis_coefficients_forced(&spec_h, &spec_v, tau, num_taps)?,
                false,
            ),
            other => (other?, true),
        };
        let isi = build_isi_matrix(&expansion, block_len)?;
        Ok(Self {
            tau,
            beta_h,
            beta_v,
            block_len,
            expansion,
            isi,
            flat_band_ok,
        })
    }

    /// Whether `V(f)` is flat over the whole band of `h`.
    pub fn flat_band_ok(&self) -> bool {
        self.flat_band_ok
    }

    pub fn expansion(&self) -> &BasisExpansion {
        &self.expansion
    }

    pub fn isi(&self) -> &IsiMatrix {
        &self.isi
    }

    /// Length of the observation vector, `N + L − 1`.
    pub fn observation_len(&self) -> usize {
        self.isi.rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_region_and_flat_band() {
        assert!(FtnLink::new(0.6, 0.35, 0.12, 20, 25)
            .unwrap()
            .flat_band_ok());
        // In the operation region, but the 0.12 roll-off of v ends the flat
        // band at 0.595 < W = 0.675.
        let edge = FtnLink::new(0.74, 0.35, 0.12, 20, 25).unwrap();
        assert!(!edge.flat_band_ok());
        let strict = basis_coefficients(
            &PulseSpec::new(0.35, 1.0).unwrap(),
            &PulseSpec::new(0.12, 0.74).unwrap(),
            0.74,
            20,
        );
        assert!(matches!(strict, Err(Error::FlatBandViolation { .. })));
        assert_eq!(edge.expansion().c0(), 0.74f64.sqrt());
        assert!(matches!(
            FtnLink::new(0.75, 0.35, 0.12, 20, 25),
            Err(Error::OperationRegionViolation { .. })
        ));
    }
    use proptest::prelude::*;

    fn reference_link() -> FtnLink {
        FtnLink::new(0.6, 0.35, 0.12, 20, 25).unwrap()
    }

    #[test]
    fn map_examples() {
        let b = map_bits(&[0, 1, 1], 1.0).unwrap();
        assert_eq!(b.symbols(), &[-1.0, 1.0, 1.0]);
        let b = map_bits(&[1; 25], 4.0).unwrap();
        assert!(b.symbols().iter().all(|&s| s == 2.0));
        assert!(map_bits(&[], 1.0).is_err());
    }

    #[test]
    fn isi_trivial_cases() {
        let h = IsiMatrix::from_taps(&[1.0], 3).unwrap();
        assert_eq!(h.matrix(), &DMatrix::<f64>::identity(3, 3));
        let h = IsiMatrix::from_taps(&[1.0, 0.5], 2).unwrap();
        let expected = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 1.0, 0.0, 0.5]);
        assert_eq!(h.matrix(), &expected);
    }

    /// Direct convolution, written independently of `IsiMatrix`.
    fn convolve(a: &[f64], h: &[f64]) -> Vec<f64> {
        (0..a.len() + h.len() - 1)
            .map(|n| {
                (0..h.len())
                    .filter(|&l| n >= l && n - l < a.len())
                    .map(|l| a[n - l] * h[l])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn isi_matrix_matches_convolution() {
        let link = reference_link();
        let h = link.isi();
        assert_eq!((h.rows(), h.cols()), (44, 25));
        let bits: Vec<u8> = (0..25).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let a = map_bits(&bits, 1.0).unwrap();
        let direct = convolve(a.symbols(), h.taps());
        let dense = h.matrix() * nalgebra::DVector::from_column_slice(a.symbols());
        for (x, y) in direct.iter().zip(dense.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in direct.iter().zip(h.apply(a.symbols()).unwrap()) {
            assert!((x - y).abs() < 1e-12);
        }
        // Interior columns carry the full tap energy.
        let norms: Vec<f64> = (0..25).map(|j| h.matrix().column(j).norm()).collect();
        for n in &norms {
            assert!((n - norms[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn sigma_examples() {
        assert!((ebn0_to_sigma(0.0, 1.0, 1.0).unwrap().variance() - 0.5).abs() < 1e-15);
        assert!((ebn0_to_sigma(3.0103, 1.0, 1.0).unwrap().variance() - 0.25).abs() < 1e-5);
        assert!((ebn0_to_sigma(0.0, 1.0, 0.5).unwrap().variance() - 1.0).abs() < 1e-15);
        assert!(ebn0_to_sigma(0.0, 0.0, 1.0).is_err());
        assert!(ebn0_to_sigma(0.0, 1.0, 0.0).is_err());
        assert!(ebn0_to_sigma(0.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn noiseless_and_deterministic() {
        let link = reference_link();
        let a = map_bits(&[1; 25], 1.0).unwrap();
        let clean = link.isi().apply(a.symbols()).unwrap();
        let tiny = NoiseSpec {
            sigma: 1e-12,
            ebn0_db: 0.0,
            code_rate: 1.0,
        };
        let y = transmit(link.isi(), &a, &tiny, 1).unwrap();
        assert!(y.iter().zip(&clean).all(|(p, q)| (p - q).abs() < 1e-9));
        let noise = ebn0_to_sigma(4.0, 1.0, 1.0).unwrap();
        assert_eq!(
            transmit(link.isi(), &a, &noise, 9).unwrap(),
            transmit(link.isi(), &a, &noise, 9).unwrap()
        );
        assert_ne!(
            transmit(link.isi(), &a, &noise, 9).unwrap(),
            transmit(link.isi(), &a, &noise, 10).unwrap()
        );
        let short = map_bits(&[1; 3], 1.0).unwrap();
        assert!(transmit(link.isi(), &short, &noise, 1).is_err());
    }

    #[test]
    fn noise_variance_and_whiteness() {
        let sigma: f64 = 0.7;
        let w: Vec<f64> = (0..2500)
            .flat_map(|b| unit_noise(40, b))
            .map(|x| sigma * x)
            .collect();
        assert_eq!(w.len(), 100_000);
        let n = w.len() as f64;
        let var = w.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.03, "variance {var}");
        for lag in 1..5 {
            let r: f64 = w.windows(lag + 1).map(|p| p[0] * p[lag]).sum::<f64>() / n;
            assert!(r.abs() < 0.02 * sigma * sigma, "lag {lag}: {r}");
        }
    }

    proptest! {
        #[test]
        fn demap_inverts_map(bits in proptest::collection::vec(0u8..2, 25)) {
            prop_assert_eq!(demap(&map_bits(&bits, 1.0).unwrap()), bits);
        }

        #[test]
        fn toeplitz_structure(taps in proptest::collection::vec(-2.0f64..2.0, 1..8), n in 1usize..10) {
            let h = IsiMatrix::from_taps(&taps, n).unwrap();
            prop_assert_eq!(h.rows(), n + taps.len() - 1);
            for i in 0..h.rows() - 1 {
                for j in 0..n - 1 {
                    prop_assert_eq!(h.get(i + 1, j + 1), h.get(i, j));
                }
            }
        }

        #[test]
        fn noiseless_channel_is_linear(
            a1 in proptest::collection::vec(-1.0f64..1.0, 6),
            a2 in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            let h = IsiMatrix::from_taps(&[0.9, 0.4, -0.2], 6).unwrap();
            let sum: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| x + y).collect();
            let lhs = h.apply(&sum).unwrap();
            let r1 = h.apply(&a1).unwrap();
            let r2 = h.apply(&a2).unwrap();
            for k in 0..lhs.len() {
                prop_assert!((lhs[k] - r1[k] - r2[k]).abs() < 1e-12);
            }
        }
    }
}
