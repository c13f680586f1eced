//! Soft-output detection for the FTN block model.
//!
//! [`exact_llr`] enumerates the whole lattice and serves as the reference.
//! The practical path is [`lsd_search`] (list sphere decoder) followed by
//! [`approx_llr`] over the returned list, with the initial radius picked by
//! one of the [`RadiusStrategy`] variants.

mod lattice;
mod llr;
mod lsd;
mod radius;

pub use lattice::{
    bits_to_mask, lex_cmp, qr_factorize, LatticePoint, QrFactors, SearchProblem, MAX_BLOCK_LEN,
};
pub use llr::{approx_llr, approx_llr_points, exact_llr, LlrVector, EXACT_MAX_BLOCK, LLR_CLAMP};
pub use lsd::{count_points_in_sphere, lsd_search, CandidateList, SearchOutcome, SearchStats};
pub use radius::{
    detect, dl_lsd_detect, initial_radius_noise, noise_lsd_detect, DetectionOutcome, FixedRadius,
    RadiusPredictor, RadiusStrategy, DEFAULT_EPSILON,
};

use crate::{Error, Result};

/// Running count of floating-point additions, subtractions,
/// multiplications and divisions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct FlopCounter(u64);

impl FlopCounter {
    #[inline]
    pub fn add(&mut self, flops: u64) {
        self.0 += flops;
    }

    pub fn count(&self) -> u64 {
        self.0
    }
}

/// Flop ratio `dl / orig`.
pub fn complexity_report(counter_dl: &FlopCounter, counter_orig: &FlopCounter) -> Result<f64> {
    if counter_orig.count() == 0 {
        return Err(Error::invalid("reference flop count is zero"));
    }
    Ok(counter_dl.count() as f64 / counter_orig.count() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio() {
        let mut a = FlopCounter::default();
        a.add(120);
        assert_eq!(complexity_report(&a, &a).unwrap(), 1.0);
        let mut b = FlopCounter::default();
        b.add(40);
        assert_eq!(complexity_report(&b, &a).unwrap(), 1.0 / 3.0);
        assert!(complexity_report(&a, &FlopCounter::default()).is_err());
    }
}
