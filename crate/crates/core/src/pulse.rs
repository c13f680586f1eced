//! Root-raised-cosine pulses and the orthonormal-basis expansion of an FTN
//! transmit pulse.
//!
//! A T-orthogonal pulse `h(t)` band-limited to `|f| < W` can be written as
//! `h(t) = Σ_n h_n v(t − nτT)` over shifts of a τT-orthonormal pulse `v(t)`
//! whose spectrum is flat (`V(f) = c0`) on `|f| < W`, with
//! `h_n = (τT / c0) · h(nτT)`. For rRC pulses this holds as long as
//! `τ < 1/(1+β_h)` and `W` stays inside the flat band of `V`.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Default number of expansion taps.
pub const DEFAULT_TAPS: usize = 20;

/// Samples per symbol period on the default error grid.
pub const GRID_POINTS_PER_SYMBOL: usize = 64;

/// Half-width of the default error grid, in symbol periods.
pub const GRID_HALF_WIDTH: f64 = 5.0;

/// A unit-energy root-raised-cosine pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    rolloff: f64,
    symbol_time: f64,
}

impl PulseSpec {
    pub fn new(rolloff: f64, symbol_time: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rolloff) {
            return Err(Error::invalid(format!("rolloff {rolloff} outside [0, 1]")));
        }
        if !(symbol_time > 0.0 && symbol_time.is_finite()) {
            return Err(Error::invalid(format!(
                "symbol time {symbol_time} must be positive"
            )));
        }
        Ok(Self {
            rolloff,
            symbol_time,
        })
    }

    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }

    pub fn symbol_time(&self) -> f64 {
        self.symbol_time
    }

    /// One-sided bandwidth `(1+β)/(2T)`.
    pub fn bandwidth(&self) -> f64 {
        0.5 * (1.0 + self.rolloff) / self.symbol_time
    }

    /// Upper edge of the flat part of the spectrum, `(1−β)/(2T)`.
    pub fn flat_band_edge(&self) -> f64 {
        0.5 * (1.0 - self.rolloff) / self.symbol_time
    }

    /// Time-domain amplitude `h(t)`.
    pub fn value(&self, t: f64) -> f64 {
        rrc_normalized(self.rolloff, t / self.symbol_time) / self.symbol_time.sqrt()
    }

    /// Fourier transform `H(f)` (real and even).
    pub fn spectrum(&self, f: f64) -> f64 {
        let ts = self.symbol_time;
        let x = (f * ts).abs();
        let beta = self.rolloff;
        let flat = 0.5 * (1.0 - beta);
        let edge = 0.5 * (1.0 + beta);
        if x <= flat {
            ts.sqrt()
        } else if x <= edge {
            ts.sqrt() * (PI / (2.0 * beta) * (x - flat)).cos()
        } else {
            0.0
        }
    }
}

/// rRC amplitude for unit symbol time at normalized time `u = t/T`.
fn rrc_normalized(beta: f64, u: f64) -> f64 {
    if u.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && (4.0 * beta * u.abs() - 1.0).abs() < 1e-10 {
        let arg = PI / (4.0 * beta);
        return beta / 2.0_f64.sqrt()
            * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    let num = (PI * u * (1.0 - beta)).sin() + 4.0 * beta * u * (PI * u * (1.0 + beta)).cos();
    let den = PI * u * (1.0 - (4.0 * beta * u).powi(2));
    num / den
}

/// `h(t)` for the pulse described by `spec`.
pub fn rrc_value(spec: &PulseSpec, t: f64) -> f64 {
    spec.value(t)
}

/// Operation region of the orthonormal-basis model: `tau < 1/(1+beta_h)`.
pub fn operation_region_ok(tau: f64, beta_h: f64) -> Result<bool> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("tau {tau} outside (0, 1]")));
    }
    if !(0.0..=1.0).contains(&beta_h) {
        return Err(Error::invalid(format!("beta_h {beta_h} outside [0, 1]")));
    }
    Ok(tau < 1.0 / (1.0 + beta_h))
}

/// Flat-band value `c0` of `V(f)`, valid only if `w` lies inside the flat band.
pub fn flat_band_constant(spec_v: &PulseSpec, w: f64) -> Result<f64> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::invalid(format!("band edge {w} must be positive")));
    }
    let flat_edge = spec_v.flat_band_edge();
    if w > flat_edge * (1.0 + 1e-12) {
        return Err(Error::FlatBandViolation { w, flat_edge });
    }
    Ok(spec_v.spectrum(0.0))
}

/// Expansion coefficients `{h_n}` of a pulse over τT-spaced basis pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisExpansion {
    coefficients: Vec<f64>,
    first_index: i64,
    tau: f64,
    step: f64,
    c0: f64,
}

impl BasisExpansion {
    /// Builds an expansion from raw parts. `first_index` is the tap index `n`
    /// of `coefficients[0]`; `step` is the basis spacing τT.
    pub fn from_parts(
        coefficients: Vec<f64>,
        first_index: i64,
        tau: f64,
        step: f64,
        c0: f64,
    ) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("expansion needs at least one tap"));
        }
        if !(c0 > 0.0) || !(step > 0.0) {
            return Err(Error::invalid("c0 and step must be positive"));
        }
        Ok(Self {
            coefficients,
            first_index,
            tau,
            step,
            c0,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn num_taps(&self) -> usize {
        self.coefficients.len()
    }

    /// Tap index `n` of the first coefficient.
    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    /// Iterator over `(n, h_n)`.
    pub fn taps(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.first_index + k as i64, c))
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Basis spacing τT.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Coefficient at tap index `n`, zero outside the window.
    pub fn coefficient(&self, n: i64) -> f64 {
        let k = n - self.first_index;
        if k < 0 {
            return 0.0;
        }
        self.coefficients.get(k as usize).copied().unwrap_or(0.0)
    }

    /// `Σ h_n²`, which equals the energy of the reconstructed pulse.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }
}

/// Window start so that `num_taps` indices sit around `n = 0`; for an even
/// count the extra tap goes to the positive side.
fn window_start(num_taps: usize) -> i64 {
    -(((num_taps - 1) / 2) as i64)
}

/// Lemma coefficients `h_n = (τT/c0)·h(nτT)`, with the hypotheses checked.
pub fn basis_coefficients(
    spec_h: &PulseSpec,
    spec_v: &PulseSpec,
    tau: f64,
    num_taps: usize,
) -> Result<BasisExpansion> {
    if !operation_region_ok(tau, spec_h.rolloff())? {
        return Err(Error::OperationRegionViolation {
            tau,
            beta_h: spec_h.rolloff(),
        });
    }
    check_basis_spacing(spec_h, spec_v, tau)?;
    let c0 = flat_band_constant(spec_v, spec_h.bandwidth())?;
    sample_expansion(spec_h, c0, tau, num_taps)
}

/// Same formula as [`basis_coefficients`] without checking the operation
/// region or the flat band. Used to show how the approximation breaks down
/// outside the valid region.
pub fn basis_coefficients_forced(
    spec_h: &PulseSpec,
    spec_v: &PulseSpec,
    tau: f64,
    num_taps: usize,
) -> Result<BasisExpansion> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("tau {tau} outside (0, 1]")));
    }
    check_basis_spacing(spec_h, spec_v, tau)?;
    sample_expansion(spec_h, spec_v.spectrum(0.0), tau, num_taps)
}

fn check_basis_spacing(spec_h: &PulseSpec, spec_v: &PulseSpec, tau: f64) -> Result<()> {
    let step = tau * spec_h.symbol_time();
    if (spec_v.symbol_time() - step).abs() > 1e-12 * step {
        return Err(Error::invalid(format!(
            "basis pulse period {} does not match tau*T = {step}",
            spec_v.symbol_time()
        )));
    }
    Ok(())
}

fn sample_expansion(
    spec_h: &PulseSpec,
    c0: f64,
    tau: f64,
    num_taps: usize,
) -> Result<BasisExpansion> {
    if num_taps == 0 {
        return Err(Error::invalid("num_taps must be at least 1"));
    }
    let step = tau * spec_h.symbol_time();
    let first = window_start(num_taps);
    let coefficients = (0..num_taps as i64)
        .map(|k| step / c0 * spec_h.value((first + k) as f64 * step))
        .collect();
    BasisExpansion::from_parts(coefficients, first, tau, step, c0)
}

/// Finite-tap reconstruction `Σ_n h_n v(t − nτT)`.
pub fn reconstruct(expansion: &BasisExpansion, spec_v: &PulseSpec, t: f64) -> f64 {
    expansion
        .taps()
        .map(|(n, c)| c * spec_v.value(t - n as f64 * expansion.step()))
        .sum()
}

/// The default comparison grid: `|t| ≤ 5T` with 64 points per `T`.
pub fn default_error_grid(symbol_time: f64) -> Vec<f64> {
    let per = GRID_POINTS_PER_SYMBOL as f64;
    let count = (2.0 * GRID_HALF_WIDTH * per).round() as usize;
    (0..=count)
        .map(|k| symbol_time * (-GRID_HALF_WIDTH + k as f64 / per))
        .collect()
}

/// Maximum absolute deviation between `h(t)` and its expansion over `grid`.
pub fn approximation_error(
    spec_h: &PulseSpec,
    spec_v: &PulseSpec,
    expansion: &BasisExpansion,
    grid: &[f64],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    Ok(grid
        .iter()
        .map(|&t| (spec_h.value(t) - reconstruct(expansion, spec_v, t)).abs())
        .fold(0.0, f64::max))
}

/// Number of frequency points used by [`verify_lemma_spectrum`].
const SPECTRUM_GRID: usize = 200;

/// Checks the sampling identity `H(f) = τT Σ_n h(nτT) e^{−j2πf nτT}` on
/// `|f| ≤ W`, truncating the sum to `|n| ≤ num_samples`. Returns the largest
/// modulus difference over a midpoint grid on `(−W, W)`.
///
/// Inside the operation region the periodic images of `H` do not reach the
/// band, so the difference is only truncation error; outside it they overlap
/// and the identity fails.
pub fn verify_lemma_spectrum(spec_h: &PulseSpec, tau: f64, num_samples: usize) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("tau {tau} outside (0, 1]")));
    }
    let step = tau * spec_h.symbol_time();
    let w = spec_h.bandwidth();
    let samples: Vec<(f64, f64)> = (-(num_samples as i64)..=num_samples as i64)
        .map(|n| (n as f64 * step, spec_h.value(n as f64 * step)))
        .collect();
    let mut worst = 0.0_f64;
    for k in 0..SPECTRUM_GRID {
        let f = -w + (k as f64 + 0.5) * 2.0 * w / SPECTRUM_GRID as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for &(t, h) in &samples {
            let phase = -2.0 * PI * f * t;
            re += h * phase.cos();
            im += h * phase.sin();
        }
        let diff_re = spec_h.spectrum(f) - step * re;
        let diff_im = step * im;
        worst = worst.max(diff_re.hypot(diff_im));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_pulses(tau: f64) -> (PulseSpec, PulseSpec) {
        (
            PulseSpec::new(0.35, 1.0).unwrap(),
            PulseSpec::new(0.12, tau).unwrap(),
        )
    }

    fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
        let dt = (hi - lo) / steps as f64;
        let inner: f64 = (1..steps).map(|k| f(lo + k as f64 * dt)).sum();
        dt * (inner + 0.5 * (f(lo) + f(hi)))
    }

    #[test]
    fn peak_matches_analytic_limit() {
        let p = PulseSpec::new(0.35, 1.0).unwrap();
        let expected = 1.0 - 0.35 + 4.0 * 0.35 / PI;
        assert!((rrc_value(&p, 0.0) - expected).abs() < 1e-15);
        // The limit should also be approached continuously.
        assert!((p.value(1e-7) - expected).abs() < 1e-9);
    }

    #[test]
    fn sinc_zero_crossings() {
        let p = PulseSpec::new(0.0, 1.0).unwrap();
        for k in 1..6 {
            assert!(p.value(k as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_point_is_continuous() {
        let p = PulseSpec::new(0.35, 1.0).unwrap();
        let ts = 1.0 / (4.0 * 0.35);
        let at = p.value(ts);
        let left = p.value(ts - 1e-6);
        let right = p.value(ts + 1e-6);
        assert!(at.is_finite());
        assert!(
            (at - 0.5 * (left + right)).abs() < 1e-9,
            "{at} vs {left} {right}"
        );
        assert!((p.value(-ts) - at).abs() < 1e-15);
    }

    #[test]
    fn unit_energy() {
        for &(beta, ts) in &[(0.35, 1.0), (0.12, 0.6), (0.5, 2.0), (1.0, 1.0)] {
            let p = PulseSpec::new(beta, ts).unwrap();
            // Trapezoid integration is exact for band-limited integrands; the
            // window only has to contain the tails.
            let e = trapezoid(|t| p.value(t).powi(2), -200.0 * ts, 200.0 * ts, 40_000);
            assert!((e - 1.0).abs() < 1e-6, "beta {beta}: energy {e}");
        }
    }

    #[test]
    fn spectrum_has_unit_energy() {
        let p = PulseSpec::new(0.35, 1.0).unwrap();
        let e = trapezoid(|f| p.spectrum(f).powi(2), -1.0, 1.0, 20_000);
        assert!((e - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(PulseSpec::new(-0.1, 1.0).is_err());
        assert!(PulseSpec::new(1.1, 1.0).is_err());
        assert!(PulseSpec::new(0.3, 0.0).is_err());
    }

    #[test]
    fn operation_region_examples() {
        assert!(operation_region_ok(0.6, 0.35).unwrap());
        assert!(!operation_region_ok(0.9, 0.35).unwrap());
        assert!(operation_region_ok(0.74, 0.35).unwrap());
        assert!(!operation_region_ok(1.0 / 1.35, 0.35).unwrap());
        assert!(operation_region_ok(0.0, 0.35).is_err());
        assert!(operation_region_ok(1.2, 0.35).is_err());
        assert!(operation_region_ok(0.5, 1.5).is_err());
    }

    #[test]
    fn flat_band_examples() {
        let v = PulseSpec::new(0.12, 0.6).unwrap();
        let c0 = flat_band_constant(&v, 0.675).unwrap();
        assert!((c0 - 0.6_f64.sqrt()).abs() < 1e-15);
        assert_eq!(flat_band_constant(&v, 1e-9).unwrap(), c0);

        let brick = PulseSpec::new(0.0, 0.6).unwrap();
        assert!(matches!(
            flat_band_constant(&brick, 0.9),
            Err(Error::FlatBandViolation { .. })
        ));
        assert!(flat_band_constant(&brick, 0.0).is_err());
    }

    #[test]
    fn coefficients_follow_the_sampling_formula() {
        let (h, v) = default_pulses(0.6);
        let exp = basis_coefficients(&h, &v, 0.6, 20).unwrap();
        assert_eq!(exp.num_taps(), 20);
        assert_eq!(exp.first_index(), -9);
        let c0 = 0.6_f64.sqrt();
        assert!((exp.coefficient(0) - 0.6 / c0 * h.value(0.0)).abs() < 1e-15);
        // The largest-magnitude tap is the center.
        let max = exp
            .coefficients()
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()));
        assert_eq!(max, exp.coefficient(0));
        for n in 1..=9 {
            assert!((exp.coefficient(n) - exp.coefficient(-n)).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_region_is_rejected() {
        let (h, v) = default_pulses(0.9);
        assert!(matches!(
            basis_coefficients(&h, &v, 0.9, 20),
            Err(Error::OperationRegionViolation { .. })
        ));
        // Mismatched basis period.
        let (h, _) = default_pulses(0.6);
        assert!(basis_coefficients(&h, &PulseSpec::new(0.12, 0.5).unwrap(), 0.6, 20).is_err());
    }

    #[test]
    fn reconstruct_trivial_cases() {
        let v = PulseSpec::new(0.12, 0.6).unwrap();
        let zero = BasisExpansion::from_parts(vec![0.0; 5], -2, 0.6, 0.6, 1.0).unwrap();
        for t in [-3.0, 0.0, 0.37, 2.0] {
            assert_eq!(reconstruct(&zero, &v, t), 0.0);
        }
        let single = BasisExpansion::from_parts(vec![0.8], 0, 0.6, 0.6, 1.0).unwrap();
        assert!((reconstruct(&single, &v, 0.0) - 0.8 * v.value(0.0)).abs() < 1e-15);
    }

    #[test]
    fn identity_expansion_is_exact() {
        let h = PulseSpec::new(0.0, 1.0).unwrap();
        let v = PulseSpec::new(0.0, 1.0).unwrap();
        let exp = basis_coefficients_forced(&h, &v, 1.0, 1).unwrap();
        assert!((exp.coefficient(0) - 1.0).abs() < 1e-15);
        let err = approximation_error(&h, &v, &exp, &default_error_grid(1.0)).unwrap();
        assert!(err < 1e-9);
        assert!(approximation_error(&h, &v, &exp, &[]).is_err());
    }

    #[test]
    fn out_of_region_error_is_much_larger() {
        let grid = default_error_grid(1.0);
        let (h, v) = default_pulses(0.6);
        let good = basis_coefficients(&h, &v, 0.6, 20).unwrap();
        let e_good = approximation_error(&h, &v, &good, &grid).unwrap();
        let (h9, v9) = default_pulses(0.9);
        let bad = basis_coefficients_forced(&h9, &v9, 0.9, 20).unwrap();
        let e_bad = approximation_error(&h9, &v9, &bad, &grid).unwrap();
        assert!(e_good < 0.02 * h.value(0.0), "in-region error {e_good}");
        assert!(e_bad >= 10.0 * e_good, "{e_bad} vs {e_good}");
    }

    #[test]
    fn error_shrinks_with_more_taps() {
        let grid = default_error_grid(1.0);
        let (h, v) = default_pulses(0.6);
        let errors: Vec<f64> = [5, 9, 13, 17, 21, 31]
            .iter()
            .map(|&n| {
                let e = basis_coefficients(&h, &v, 0.6, n).unwrap();
                approximation_error(&h, &v, &e, &grid).unwrap()
            })
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{errors:?}");
        }
    }

    #[test]
    fn reconstructed_energy_matches_coefficients() {
        let (h, v) = default_pulses(0.6);
        let exp = basis_coefficients(&h, &v, 0.6, 20).unwrap();
        let e = trapezoid(|t| reconstruct(&exp, &v, t).powi(2), -80.0, 80.0, 32_000);
        assert!((e - exp.energy()).abs() < 1e-3, "{e} vs {}", exp.energy());
    }

    #[test]
    fn spectrum_identity_inside_region() {
        let h = PulseSpec::new(0.35, 1.0).unwrap();
        let e6 = verify_lemma_spectrum(&h, 0.6, 1024).unwrap();
        assert!(e6 < 1e-4 * h.spectrum(0.0), "tau 0.6 error {e6}");
        let e9 = verify_lemma_spectrum(&h, 0.9, 1024).unwrap();
        assert!(e9 > e6);
        assert!(e9 > 0.1);
    }

    #[test]
    fn spectrum_identity_for_sinc() {
        let h = PulseSpec::new(0.0, 1.0).unwrap();
        let e = verify_lemma_spectrum(&h, 0.99, 4096).unwrap();
        assert!(e < 0.05, "sinc spectrum error {e}");
    }
}
