//! Browser demo: three small interactive views of the FTN toolkit.
//!
//! Each `compute_*` function is plain Rust (and is what the native tests
//! exercise); the `#[wasm_bindgen]` wrappers only convert errors.

// `!(x > 0.0)` guards reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use ftn_core::detector::{
    approx_llr, count_points_in_sphere, exact_llr, initial_radius_noise, lsd_search,
    noise_lsd_detect, qr_factorize, FlopCounter, SearchProblem, DEFAULT_EPSILON,
};
use ftn_core::harness::{lemma_check, ExperimentConfig};
use ftn_core::link::{ebn0_to_sigma, map_bits, transmit, FtnLink};
use ftn_core::rng::{random_bits, stream_seed};
use ftn_core::Result;
use wasm_bindgen::prelude::*;

const SPHERE_LIMIT: u64 = 100_000;

fn to_js(e: ftn_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `h(t)` against its truncated expansion on `|t| ≤ 5T`.
#[wasm_bindgen]
pub struct PulseCurves {
    t: Vec<f64>,
    exact: Vec<f64>,
    approx: Vec<f64>,
    max_error: f64,
    in_region: bool,
}

#[wasm_bindgen]
impl PulseCurves {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn approx(&self) -> Vec<f64> {
        self.approx.clone()
    }

    #[wasm_bindgen(getter, js_name = maxError)]
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    #[wasm_bindgen(getter, js_name = inRegion)]
    pub fn in_region(&self) -> bool {
        self.in_region
    }
}

pub fn compute_pulse_curves(
    tau: f64,
    beta_h: f64,
    beta_v: f64,
    num_taps: usize,
) -> Result<PulseCurves> {
    let cfg = ExperimentConfig {
        tau,
        beta_h,
        beta_v,
        num_taps,
        ..Default::default()
    };
    let report = lemma_check(&cfg)?;
    Ok(PulseCurves {
        t: report.rows.iter().map(|r| r.0).collect(),
        exact: report.rows.iter().map(|r| r.1).collect(),
        approx: report.rows.iter().map(|r| r.2).collect(),
        max_error: report.max_error,
        in_region: report.in_region,
    })
}

#[wasm_bindgen(js_name = pulseCurves)]
pub fn pulse_curves(
    tau: f64,
    beta_h: f64,
    beta_v: f64,
    num_taps: usize,
) -> Result<PulseCurves, JsError> {
    compute_pulse_curves(tau, beta_h, beta_v, num_taps).map_err(to_js)
}

/// One received block searched at a range of fixed radii.
#[wasm_bindgen]
pub struct RadiusSweep {
    radii: Vec<f64>,
    list_sizes: Vec<f64>,
    flops: Vec<f64>,
    sphere_points: Vec<f64>,
    noise_radius: f64,
    target_radius: f64,
}

#[wasm_bindgen]
impl RadiusSweep {
    #[wasm_bindgen(getter)]
    pub fn radii(&self) -> Vec<f64> {
        self.radii.clone()
    }

    #[wasm_bindgen(getter, js_name = listSizes)]
    pub fn list_sizes(&self) -> Vec<f64> {
        self.list_sizes.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn flops(&self) -> Vec<f64> {
        self.flops.clone()
    }

    /// Lattice points inside each sphere, capped at 100 000.
    #[wasm_bindgen(getter, js_name = spherePoints)]
    pub fn sphere_points(&self) -> Vec<f64> {
        self.sphere_points.clone()
    }

    /// Radius the noise-variance rule starts from.
    #[wasm_bindgen(getter, js_name = noiseRadius)]
    pub fn noise_radius(&self) -> f64 {
        self.noise_radius
    }

    /// Distance of the `N_L`-th nearest lattice point.
    #[wasm_bindgen(getter, js_name = targetRadius)]
    pub fn target_radius(&self) -> f64 {
        self.target_radius
    }
}

fn received_block(
    tau: f64,
    block_len: usize,
    ebn0_db: f64,
    seed: u64,
) -> Result<(FtnLink, Vec<u8>, Vec<f64>, f64)> {
    let link = FtnLink::new(tau, 0.35, 0.12, 20, block_len)?;
    let noise = ebn0_to_sigma(ebn0_db, 1.0, 1.0)?;
    let bits = random_bits(block_len, stream_seed(seed, 1));
    let block = map_bits(&bits, 1.0)?;
    let y = transmit(link.isi(), &block, &noise, stream_seed(seed, 2))?;
    Ok((link, bits, y, noise.sigma))
}

pub fn compute_radius_sweep(
    tau: f64,
    ebn0_db: f64,
    list_size: usize,
    max_radius: f64,
    steps: usize,
    seed: u64,
) -> Result<RadiusSweep> {
    if !(max_radius > 0.0) || steps < 2 {
        return Err(ftn_core::Error::InvalidParameter(
            "need max_radius > 0 and at least 2 steps".into(),
        ));
    }
    let (link, _, y, sigma) = received_block(tau, 25, ebn0_db, seed)?;
    let qr = qr_factorize(link.isi().matrix())?;
    let problem = SearchProblem::new(&qr, &y, 1.0)?;
    let nearest = lsd_search(
        &problem,
        f64::INFINITY,
        list_size,
        &mut FlopCounter::default(),
    );
    let mut sweep = RadiusSweep {
        radii: Vec::with_capacity(steps),
        list_sizes: Vec::with_capacity(steps),
        flops: Vec::with_capacity(steps),
        sphere_points: Vec::with_capacity(steps),
        noise_radius: initial_radius_noise(sigma, y.len(), DEFAULT_EPSILON)?.sqrt(),
        target_radius: nearest.list.farthest_distance().map_or(f64::NAN, f64::sqrt),
    };
    for k in 1..=steps {
        let r = max_radius * k as f64 / steps as f64;
        let mut counter = FlopCounter::default();
        let out = lsd_search(&problem, r * r, list_size, &mut counter);
        sweep.radii.push(r);
        sweep.list_sizes.push(out.list.len() as f64);
        sweep.flops.push(counter.count() as f64);
        sweep
            .sphere_points
            .push(count_points_in_sphere(&problem, r * r, SPHERE_LIMIT) as f64);
    }
    Ok(sweep)
}

#[wasm_bindgen(js_name = radiusSweep)]
pub fn radius_sweep(
    tau: f64,
    ebn0_db: f64,
    list_size: usize,
    max_radius: f64,
    steps: usize,
    seed: u64,
) -> Result<RadiusSweep, JsError> {
    compute_radius_sweep(tau, ebn0_db, list_size, max_radius, steps, seed).map_err(to_js)
}

/// Exhaustive LLRs next to the list approximation for one block.
#[wasm_bindgen]
pub struct LlrComparison {
    bits: Vec<u8>,
    exact: Vec<f64>,
    approx: Vec<f64>,
}

#[wasm_bindgen]
impl LlrComparison {
    #[wasm_bindgen(getter)]
    pub fn bits(&self) -> Vec<u8> {
        self.bits.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn exact(&self) -> Vec<f64> {
        self.exact.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn approx(&self) -> Vec<f64> {
        self.approx.clone()
    }
}

pub fn compute_llr_comparison(
    tau: f64,
    ebn0_db: f64,
    block_len: usize,
    list_size: usize,
    seed: u64,
) -> Result<LlrComparison> {
    let (link, bits, y, sigma) = received_block(tau, block_len, ebn0_db, seed)?;
    let exact = exact_llr(&y, link.isi(), sigma, 1.0, None)?;
    let qr = qr_factorize(link.isi().matrix())?;
    let problem = SearchProblem::new(&qr, &y, 1.0)?;
    let mut counter = FlopCounter::default();
    let out = noise_lsd_detect(
        &problem,
        sigma,
        y.len(),
        DEFAULT_EPSILON,
        list_size,
        &mut counter,
    )?;
    let approx = approx_llr(&out.list, block_len, sigma, None)?;
    Ok(LlrComparison {
        bits,
        exact: exact.into_values(),
        approx: approx.into_values(),
    })
}

#[wasm_bindgen(js_name = llrComparison)]
pub fn llr_comparison(
    tau: f64,
    ebn0_db: f64,
    block_len: usize,
    list_size: usize,
    seed: u64,
) -> Result<LlrComparison, JsError> {
    compute_llr_comparison(tau, ebn0_db, block_len, list_size, seed).map_err(to_js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_curves_follow_the_region() {
        let inside = compute_pulse_curves(0.6, 0.35, 0.12, 20).unwrap();
        assert!(inside.in_region);
        assert_eq!(inside.t.len(), inside.exact.len());
        assert_eq!(inside.t.len(), inside.approx.len());
        let outside = compute_pulse_curves(0.9, 0.35, 0.12, 20).unwrap();
        assert!(!outside.in_region);
        assert!(outside.max_error > 10.0 * inside.max_error);
        assert!(compute_pulse_curves(1.5, 0.35, 0.12, 20).is_err());
    }

    #[test]
    fn sweep_grows_with_radius() {
        let s = compute_radius_sweep(0.6, 6.0, 32, 8.0, 16, 3).unwrap();
        assert_eq!(s.radii.len(), 16);
        for w in s.sphere_points.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_eq!(*s.list_sizes.last().unwrap(), 32.0);
        assert!(s.list_sizes.iter().all(|&l| l <= 32.0));
        assert!(s.target_radius > 0.0 && s.noise_radius > 0.0);
        // Below the N_L-th distance the sphere cannot hold a full list.
        for (r, l) in s.radii.iter().zip(&s.list_sizes) {
            if *r < s.target_radius {
                assert!(*l < 32.0);
            }
        }
        assert!(compute_radius_sweep(0.6, 6.0, 32, 8.0, 1, 3).is_err());
    }

    #[test]
    fn full_list_reproduces_exact_llrs() {
        let c = compute_llr_comparison(0.6, 4.0, 6, 64, 11).unwrap();
        assert_eq!(c.bits.len(), 6);
        for (a, e) in c.approx.iter().zip(&c.exact) {
            assert!((a - e).abs() < 1e-9);
        }
        let short = compute_llr_comparison(0.6, 4.0, 10, 4, 11).unwrap();
        assert_eq!(short.approx.len(), 10);
        assert!(compute_llr_comparison(0.6, 4.0, 30, 4, 11).is_err());
    }
}
