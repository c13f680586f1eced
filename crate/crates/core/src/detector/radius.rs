//! Initial-radius strategies for the list sphere decoder.
//!
//! Both strategies drive the same [`lsd_search`]; they differ only in how
//! the first radius is picked and how it grows when the sphere holds fewer
//! than `N_L` points.

use super::lattice::SearchProblem;
use super::lsd::{lsd_search, CandidateList, SearchStats};
use super::FlopCounter;
use crate::stats::chi_square_quantile;
use crate::{Error, Result};

/// Default probability that the transmitted point falls outside the
/// noise-variance sphere.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Anything that maps an observation to a search radius (a distance, not a
/// squared distance).
pub trait RadiusPredictor {
    fn predict_radius(&self, y: &[f64]) -> Result<f64>;
}

/// A predictor that ignores its input.
#[derive(Debug, Clone, Copy)]
pub struct FixedRadius(pub f64);

impl RadiusPredictor for FixedRadius {
    fn predict_radius(&self, _y: &[f64]) -> Result<f64> {
        Ok(self.0)
    }
}

/// How a detection run picks its initial radius.
#[derive(Clone, Copy)]
pub enum RadiusStrategy<'a> {
    /// `d² = σ² χ²⁻¹(1 − ε)` over the observation dimension; the radius is
    /// doubled (in `d²`) until the sphere holds `N_L` points.
    NoiseVariance { epsilon: f64 },
    /// `d` from a trained predictor, grown by `delta_d` until the sphere
    /// holds `N_L` points.
    Learned {
        model: &'a dyn RadiusPredictor,
        delta_d: f64,
    },
}

impl std::fmt::Debug for RadiusStrategy<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadiusStrategy::NoiseVariance { epsilon } => f
                .debug_struct("NoiseVariance")
                .field("epsilon", epsilon)
                .finish(),
            RadiusStrategy::Learned { delta_d, .. } => f
                .debug_struct("Learned")
                .field("delta_d", delta_d)
                .finish_non_exhaustive(),
        }
    }
}

/// `σ² · χ²⁻¹_{n_rows}(1 − ε)`: the squared radius that contains the
/// transmitted point with probability `1 − ε`.
pub fn initial_radius_noise(sigma: f64, n_rows: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    Ok(sigma * sigma * chi_square_quantile(n_rows, 1.0 - epsilon)?)
}

/// Result of a full detection (possibly several searches).
#[derive(Debug, Clone)]
pub struct DetectionOutcome {
    /// The `N_L` closest points (fewer only if the lattice is smaller).
    pub list: CandidateList,
    /// Number of tree searches run.
    pub searches: usize,
    /// Squared radius of the first search.
    pub initial_radius_sq: f64,
    /// Squared radius of the last search.
    pub final_radius_sq: f64,
    /// Work of the last search alone.
    pub final_stats: SearchStats,
    /// Work summed over all searches.
    pub total_stats: SearchStats,
    /// Set when a learned strategy fell back to the noise-variance radius.
    pub fell_back: bool,
}

fn check_list_size(problem: &SearchProblem, n_l: usize) -> Result<()> {
    let n = problem.block_len();
    if n_l == 0 || (n < 64 && n_l as u128 > 1u128 << n) {
        return Err(Error::invalid(format!(
            "list size {n_l} must be in [1, 2^{n}]"
        )));
    }
    Ok(())
}

/// Reruns the search with `grow(d²)` until the list is full.
fn grow_until_full(
    problem: &SearchProblem,
    mut radius_sq: f64,
    n_l: usize,
    counter: &mut FlopCounter,
    mut grow: impl FnMut(f64) -> f64,
) -> DetectionOutcome {
    let initial_radius_sq = radius_sq;
    let mut total = SearchStats::default();
    let mut searches = 0;
    loop {
        let out = lsd_search(problem, radius_sq, n_l, counter);
        searches += 1;
        total += out.stats;
        if out.list.len() >= n_l {
            let mut list = out.list;
            list.truncate(n_l);
            return DetectionOutcome {
                list,
                searches,
                initial_radius_sq,
                final_radius_sq: radius_sq,
                final_stats: out.stats,
                total_stats: total,
                fell_back: false,
            };
        }
        radius_sq = grow(radius_sq);
    }
}

/// Baseline LSD with the noise-variance radius over an `n_rows`-dimensional
/// observation.
pub fn noise_lsd_detect(
    problem: &SearchProblem,
    sigma: f64,
    n_rows: usize,
    epsilon: f64,
    n_l: usize,
    counter: &mut FlopCounter,
) -> Result<DetectionOutcome> {
    check_list_size(problem, n_l)?;
    let d_sq = initial_radius_noise(sigma, n_rows, epsilon)?;
    Ok(grow_until_full(problem, d_sq, n_l, counter, |r| 2.0 * r))
}

/// Learned-radius LSD: start at the predicted distance `d`, search with
/// `d²`, and while fewer than `n_l` points turn up, retry with `d + δ_d`.
pub fn dl_lsd_detect(
    problem: &SearchProblem,
    y: &[f64],
    model: &dyn RadiusPredictor,
    delta_d: f64,
    n_l: usize,
    counter: &mut FlopCounter,
) -> Result<DetectionOutcome> {
    check_list_size(problem, n_l)?;
    if !(delta_d > 0.0 && delta_d.is_finite()) {
        return Err(Error::invalid(format!(
            "delta_d {delta_d} must be positive"
        )));
    }
    let d = model.predict_radius(y)?;
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::NonFiniteRadius(d));
    }
    let mut radius = d;
    Ok(grow_until_full(problem, d * d, n_l, counter, |_| {
        radius += delta_d;
        radius * radius
    }))
}

/// Runs `strategy`. A learned predictor that emits an unusable radius falls
/// back to the noise-variance radius with the default `ε`.
pub fn detect(
    problem: &SearchProblem,
    y: &[f64],
    sigma: f64,
    strategy: RadiusStrategy<'_>,
    n_l: usize,
    counter: &mut FlopCounter,
) -> Result<DetectionOutcome> {
    match strategy {
        RadiusStrategy::NoiseVariance { epsilon } => {
            noise_lsd_detect(problem, sigma, y.len(), epsilon, n_l, counter)
        }
        RadiusStrategy::Learned { model, delta_d } => {
            match dl_lsd_detect(problem, y, model, delta_d, n_l, counter) {
                Err(Error::NonFiniteRadius(_)) => {
                    let mut out =
                        noise_lsd_detect(problem, sigma, y.len(), DEFAULT_EPSILON, n_l, counter)?;
                    out.fell_back = true;
                    Ok(out)
                }
                other => other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::lattice::qr_factorize;
    use crate::link::{ebn0_to_sigma, map_bits, transmit, FtnLink};

    fn problem(n: usize, ebn0: f64, seed: u64) -> (SearchProblem, Vec<f64>, f64) {
        let link = FtnLink::new(0.6, 0.35, 0.12, 20, n).unwrap();
        let qr = qr_factorize(link.isi().matrix()).unwrap();
        let noise = ebn0_to_sigma(ebn0, 1.0, 1.0).unwrap();
        let bits: Vec<u8> = (0..n).map(|k| ((k * 3 + 1) % 4 < 2) as u8).collect();
        let y = transmit(link.isi(), &map_bits(&bits, 1.0).unwrap(), &noise, seed).unwrap();
        (SearchProblem::new(&qr, &y, 1.0).unwrap(), y, noise.sigma)
    }

    #[test]
    fn noise_radius_examples() {
        let d = initial_radius_noise(1.0, 1, 0.5).unwrap();
        assert!((d - 0.4549).abs() < 1e-4);
        let sigma = 0.5f64.sqrt();
        let loose = initial_radius_noise(sigma, 44, 0.01).unwrap();
        let looser = initial_radius_noise(sigma, 44, 1e-6).unwrap();
        assert!(looser > loose);
        assert!(initial_radius_noise(sigma, 44, 0.0).is_err());
        assert!(initial_radius_noise(sigma, 44, 1.0).is_err());
    }

    #[test]
    fn huge_predicted_radius_needs_one_search() {
        let (p, y, _) = problem(8, 4.0, 1);
        let mut c = FlopCounter::default();
        let out = dl_lsd_detect(&p, &y, &FixedRadius(1e9), 1.0, 16, &mut c).unwrap();
        assert_eq!(out.searches, 1);
        assert_eq!(out.list.len(), 16);
    }

    #[test]
    fn small_prediction_grows_once() {
        let (p, y, _) = problem(8, 4.0, 2);
        let mut c = FlopCounter::default();
        let out = dl_lsd_detect(&p, &y, &FixedRadius(1e-3), 1e3, 16, &mut c).unwrap();
        assert_eq!(out.searches, 2);
        assert_eq!(out.list.len(), 16);
        assert!(out.total_stats.nodes_visited >= out.final_stats.nodes_visited);
    }

    #[test]
    fn bad_predictions_fall_back() {
        let (p, y, sigma) = problem(8, 4.0, 3);
        for bad in [f64::NAN, f64::INFINITY, 0.0, -2.0] {
            let mut c = FlopCounter::default();
            assert!(matches!(
                dl_lsd_detect(&p, &y, &FixedRadius(bad), 1.0, 4, &mut c),
                Err(Error::NonFiniteRadius(_))
            ));
            let strategy = RadiusStrategy::Learned {
                model: &FixedRadius(bad),
                delta_d: 1.0,
            };
            let out = detect(&p, &y, sigma, strategy, 4, &mut c).unwrap();
            assert!(out.fell_back);
            assert_eq!(out.list.len(), 4);
        }
    }

    #[test]
    fn baseline_fills_the_list() {
        // At high SNR the chi-square sphere is too small for 32 points and
        // has to grow.
        let (p, y, sigma) = problem(25, 10.0, 4);
        let mut c = FlopCounter::default();
        let out = noise_lsd_detect(&p, sigma, y.len(), 0.01, 32, &mut c).unwrap();
        assert_eq!(out.list.len(), 32);
        assert!(out.final_radius_sq >= out.initial_radius_sq);
    }

    #[test]
    fn rejects_impossible_list_sizes() {
        let (p, y, sigma) = problem(4, 4.0, 5);
        let mut c = FlopCounter::default();
        assert!(noise_lsd_detect(&p, sigma, y.len(), 0.01, 17, &mut c).is_err());
        assert!(dl_lsd_detect(&p, &y, &FixedRadius(1.0), 0.0, 4, &mut c).is_err());
    }
}
