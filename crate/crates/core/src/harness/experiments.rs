//! The batch experiments: pulse check, dataset generation, training and
//! the paired Monte-Carlo comparison of the two radius strategies.

use std::ops::AddAssign;

use crate::detector::{
    approx_llr, count_points_in_sphere, detect, qr_factorize, FlopCounter, QrFactors,
    RadiusStrategy, SearchProblem,
};
use crate::fec::{conv_encode, viterbi_decode_soft, ConvCode, Interleaver};
use crate::link::{ebn0_to_sigma, map_bits, unit_noise, FtnLink, IsiMatrix, SymbolBlock};
use crate::pulse::{
    approximation_error, basis_coefficients, basis_coefficients_forced, default_error_grid,
    operation_region_ok, reconstruct, PulseSpec,
};
use crate::radius_net::{
    estimate_delta_d, generate_training_set, train, ModelMeta, NnModel, RadiusStats, TrainReport,
    TrainedModel, TrainingSet, Widths, BITS_STREAM, NOISE_STREAM,
};
use crate::rng::{block_seed, random_bits, stream_seed};
use crate::stats::bpsk_awgn_ber;
use crate::{Error, Result};

use super::config::ExperimentConfig;

/// Stop counting sphere points past this many.
pub const SPHERE_COUNT_LIMIT: u64 = 1 << 20;

const INTERLEAVER_STREAM: u64 = 3;
const INIT_STREAM: u64 = 4;

/// Pulse-approximation report for one `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub tau: f64,
    pub in_region: bool,
    /// `max |h(t) − Σ h_n v(t − nτT)|` over `|t| ≤ 5T`.
    pub max_error: f64,
    /// `h(0)`, for relative error.
    pub peak: f64,
    /// `(t, h(t), reconstruction)`.
    pub rows: Vec<(f64, f64, f64)>,
}

/// Compares `h(t)` with its finite expansion. Outside the operation region
/// the coefficients are still formed (without the flat-band constant check)
/// so the breakdown can be seen.
pub fn lemma_check(cfg: &ExperimentConfig) -> Result<LemmaReport> {
    cfg.validate_basic()?;
    let spec_h = PulseSpec::new(cfg.beta_h, 1.0)?;
    let spec_v = PulseSpec::new(cfg.beta_v, cfg.tau)?;
    let in_region = operation_region_ok(cfg.tau, cfg.beta_h)?;
    let expansion = if in_region {
        basis_coefficients(&spec_h, &spec_v, cfg.tau, cfg.num_taps)?
    } else {
        basis_coefficients_forced(&spec_h, &spec_v, cfg.tau, cfg.num_taps)?
    };
    let grid = default_error_grid(1.0);
    let max_error = approximation_error(&spec_h, &spec_v, &expansion, &grid)?;
    let rows = grid
        .iter()
        .map(|&t| (t, spec_h.value(t), reconstruct(&expansion, &spec_v, t)))
        .collect();
    Ok(LemmaReport {
        tau: cfg.tau,
        in_region,
        max_error,
        peak: spec_h.value(0.0),
        rows,
    })
}

/// Baseline-decoder training pairs at `cfg.train_ebn0_db`.
pub fn generate_data(cfg: &ExperimentConfig) -> Result<TrainingSet> {
    cfg.validate()?;
    let link = FtnLink::new(cfg.tau, cfg.beta_h, cfg.beta_v, cfg.num_taps, cfg.block_len)?;
    generate_training_set(
        &link,
        cfg.num_taps,
        cfg.train_ebn0_db,
        cfg.num_blocks,
        cfg.list_size,
        cfg.epsilon,
        cfg.master_seed,
    )
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub report: TrainReport,
    pub stats: RadiusStats,
}

/// Trains a full-width network on `set`. The operating point is taken from
/// the dataset; `cfg` supplies the optimizer settings and seed.
pub fn train_model(cfg: &ExperimentConfig, set: &TrainingSet) -> Result<TrainOutcome> {
    train_model_with_widths(cfg, set, Widths::default())
}

pub fn train_model_with_widths(
    cfg: &ExperimentConfig,
    set: &TrainingSet,
    widths: Widths,
) -> Result<TrainOutcome> {
    let stats = estimate_delta_d(&set.samples)?;
    let seq_len = set.samples[0].y.len();
    let mut net = NnModel::init(widths, seq_len, stream_seed(cfg.master_seed, INIT_STREAM))?;
    let report = train(&mut net, &set.samples, &cfg.training_config())?;
    let model = TrainedModel {
        meta: ModelMeta {
            tau: set.meta.tau,
            ebn0_db: set.meta.ebn0_db,
            block_len: set.meta.block_len,
            list_size: set.meta.list_size,
            delta_d: stats.delta_d,
            radius_mean: stats.mean,
        },
        net,
    };
    Ok(TrainOutcome {
        model,
        report,
        stats,
    })
}

/// Aggregates for one Eb/N0 point. `_dl` fields describe the learned
/// strategy, `_orig` the noise-variance baseline; fields of a strategy that
/// was not run are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub ebn0_db: f64,
    /// BER of the learned strategy if it ran, otherwise of the baseline.
    pub ber: f64,
    pub ber_orig: f64,
    /// Coded runs only: BER without the code on the same noise draws.
    pub ber_uncoded: f64,
    /// Average returned list size of the strategy behind `ber`.
    pub avg_list_size: f64,
    /// Lattice points inside the final learned sphere, before truncation.
    pub avg_sphere_points_dl: f64,
    /// Lattice points inside the initial noise-variance sphere.
    pub avg_sphere_points_orig: f64,
    /// Leaves accepted into the list during the final search.
    pub avg_found_dl: f64,
    pub avg_found_orig: f64,
    pub avg_nodes_dl: f64,
    pub avg_nodes_orig: f64,
    pub avg_searches_dl: f64,
    pub avg_flops_dl: f64,
    pub avg_flops_orig: f64,
    pub flop_ratio: f64,
    pub blocks_run: u64,
    pub info_bits: u64,
    pub bit_errors: u64,
    pub fallbacks: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct StrategyTally {
    runs: u64,
    list: u64,
    sphere: u64,
    found: u64,
    nodes: u64,
    searches: u64,
    flops: u64,
    errors: u64,
    fallbacks: u64,
}

impl AddAssign for StrategyTally {
    fn add_assign(&mut self, o: Self) {
        self.runs += o.runs;
        self.list += o.list;
        self.sphere += o.sphere;
        self.found += o.found;
        self.nodes += o.nodes;
        self.searches += o.searches;
        self.flops += o.flops;
        self.errors += o.errors;
        self.fallbacks += o.fallbacks;
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    blocks: u64,
    info_bits: u64,
    dl: StrategyTally,
    orig: StrategyTally,
    uncoded_bits: u64,
    uncoded_errors: u64,
}

impl AddAssign for Tally {
    fn add_assign(&mut self, o: Self) {
        self.blocks += o.blocks;
        self.info_bits += o.info_bits;
        self.dl += o.dl;
        self.orig += o.orig;
        self.uncoded_bits += o.uncoded_bits;
        self.uncoded_errors += o.uncoded_errors;
    }
}

struct Detected {
    llr: Vec<f64>,
    tally: StrategyTally,
}

struct SimContext<'a> {
    cfg: &'a ExperimentConfig,
    isi: IsiMatrix,
    qr: QrFactors,
    model: Option<&'a TrainedModel>,
    code: ConvCode,
    interleaver: Option<Interleaver>,
}

impl SimContext<'_> {
    fn strategy(&self, learned: bool) -> RadiusStrategy<'_> {
        match (learned, self.model) {
            (true, Some(m)) => RadiusStrategy::Learned {
                model: m,
                delta_d: m.meta.delta_d,
            },
            _ => RadiusStrategy::NoiseVariance {
                epsilon: self.cfg.epsilon,
            },
        }
    }

    fn detect(&self, y: &[f64], sigma: f64, learned: bool) -> Result<Detected> {
        let n = self.cfg.block_len;
        let problem = SearchProblem::new(&self.qr, y, 1.0)?;
        let mut counter = FlopCounter::default();
        let out = detect(
            &problem,
            y,
            sigma,
            self.strategy(learned),
            self.cfg.list_size,
            &mut counter,
        )?;
        let sphere = if self.cfg.sphere_counts {
            let r2 = if learned {
                out.final_radius_sq
            } else {
                out.initial_radius_sq
            };
            count_points_in_sphere(&problem, r2, SPHERE_COUNT_LIMIT)
        } else {
            0
        };
        let llr = approx_llr(&out.list, n, sigma, None)?.into_values();
        Ok(Detected {
            llr,
            tally: StrategyTally {
                runs: 1,
                list: out.list.len() as u64,
                sphere,
                found: out.final_stats.points_found,
                nodes: out.total_stats.nodes_visited,
                searches: out.searches as u64,
                flops: counter.count(),
                errors: 0,
                fallbacks: u64::from(out.fell_back),
            },
        })
    }

    fn received(&self, a: &SymbolBlock, sigma: f64, w: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.isi.apply(a.symbols())?;
        for (yi, wi) in y.iter_mut().zip(w) {
            *yi += sigma * wi;
        }
        Ok(y)
    }

    fn strategies(&self) -> Vec<bool> {
        let s = self.cfg.strategy;
        let mut v = Vec::new();
        if s.runs_noise() {
            v.push(false);
        }
        if s.runs_learned() {
            v.push(true);
        }
        v
    }

    fn run_uncoded(&self, ebn0_db: f64, frame: u64) -> Result<Tally> {
        let n = self.cfg.block_len;
        let fs = block_seed(self.cfg.master_seed, frame);
        let bits = random_bits(n, stream_seed(fs, BITS_STREAM));
        let w = unit_noise(
            self.isi.rows(),
            stream_seed(stream_seed(fs, NOISE_STREAM), 0),
        );
        let sigma = ebn0_to_sigma(ebn0_db, 1.0, 1.0)?.sigma;
        let y = self.received(&map_bits(&bits, 1.0)?, sigma, &w)?;
        let mut t = Tally {
            blocks: 1,
            info_bits: n as u64,
            ..Tally::default()
        };
        for learned in self.strategies() {
            let mut d = self.detect(&y, sigma, learned)?;
            d.tally.errors = count_errors(&hard(&d.llr), &bits);
            *self.slot(&mut t, learned) += d.tally;
        }
        Ok(t)
    }

    fn run_coded(&self, ebn0_db: f64, frame: u64) -> Result<Tally> {
        let n = self.cfg.block_len;
        let fs = block_seed(self.cfg.master_seed, frame);
        let info = random_bits(self.cfg.info_bits, stream_seed(fs, BITS_STREAM));
        let coded = conv_encode(&self.code, &info)?;
        let il = self
            .interleaver
            .as_ref()
            .expect("coded runs build an interleaver");
        let tx = il.interleave(&coded)?;
        let sigma_c = ebn0_to_sigma(ebn0_db, 1.0, self.code.rate())?.sigma;
        let sigma_u = ebn0_to_sigma(ebn0_db, 1.0, 1.0)?.sigma;
        let strategies = self.strategies();
        let primary = *strategies.last().expect("at least one strategy");
        let mut llrs: Vec<Vec<f64>> = vec![Vec::with_capacity(tx.len()); strategies.len()];
        let mut t = Tally {
            info_bits: info.len() as u64,
            ..Tally::default()
        };
        let noise_seed = stream_seed(fs, NOISE_STREAM);
        for (b, chunk) in tx.chunks(n).enumerate() {
            let a = map_bits(chunk, 1.0)?;
            let w = unit_noise(self.isi.rows(), stream_seed(noise_seed, b as u64));
            let y = self.received(&a, sigma_c, &w)?;
            for (k, &learned) in strategies.iter().enumerate() {
                let d = self.detect(&y, sigma_c, learned)?;
                llrs[k].extend_from_slice(&d.llr);
                *self.slot(&mut t, learned) += d.tally;
            }
            // Same symbols and noise draw, uncoded energy per bit.
            let y_u = self.received(&a, sigma_u, &w)?;
            let d_u = self.detect(&y_u, sigma_u, primary)?;
            t.uncoded_bits += n as u64;
            t.uncoded_errors += count_errors(&hard(&d_u.llr), chunk);
            t.blocks += 1;
        }
        for (k, &learned) in strategies.iter().enumerate() {
            let decoded = viterbi_decode_soft(&self.code, &il.deinterleave(&llrs[k])?)?;
            self.slot(&mut t, learned).errors += count_errors(&decoded, &info);
        }
        Ok(t)
    }

    fn slot<'t>(&self, t: &'t mut Tally, learned: bool) -> &'t mut StrategyTally {
        if learned {
            &mut t.dl
        } else {
            &mut t.orig
        }
    }
}

fn hard(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&l| u8::from(l > 0.0)).collect()
}

fn count_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

fn per(num: u64, den: u64) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Runs `cfg.num_blocks` FTN blocks per Eb/N0 point. Both strategies see
/// the same bits and noise draws. Coded runs group blocks into frames of
/// one codeword each and always finish the last frame.
pub fn simulate(cfg: &ExperimentConfig, model: Option<&TrainedModel>) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    if cfg.strategy.runs_learned() {
        let m = model.ok_or_else(|| Error::invalid("the learned strategy needs a model file"))?;
        m.check_compatible(cfg.tau, cfg.block_len, cfg.list_size)?;
        if m.net.seq_len() != cfg.block_len + cfg.num_taps - 1 {
            return Err(Error::ModelMismatch(format!(
                "model expects {} observations, link produces {}",
                m.net.seq_len(),
                cfg.block_len + cfg.num_taps - 1
            )));
        }
    }
    let link = FtnLink::new(cfg.tau, cfg.beta_h, cfg.beta_v, cfg.num_taps, cfg.block_len)?;
    let code = ConvCode::standard();
    let interleaver = cfg.coded.then(|| {
        Interleaver::new(
            code.coded_len(cfg.info_bits),
            stream_seed(cfg.master_seed, INTERLEAVER_STREAM),
        )
    });
    let ctx = SimContext {
        cfg,
        qr: qr_factorize(link.isi().matrix())?,
        isi: link.isi().clone(),
        model,
        code,
        interleaver,
    };
    let frames = if cfg.coded {
        let per_frame = ctx.code.coded_len(cfg.info_bits) / cfg.block_len;
        cfg.num_blocks.div_ceil(per_frame)
    } else {
        cfg.num_blocks
    } as u64;

    let mut rows = Vec::with_capacity(cfg.ebn0_grid_db.len());
    for &ebn0 in &cfg.ebn0_grid_db {
        let run = |f: u64| {
            if cfg.coded {
                ctx.run_coded(ebn0, f)
            } else {
                ctx.run_uncoded(ebn0, f)
            }
        };
        #[cfg(feature = "parallel")]
        let parts: Vec<Result<Tally>> = {
            use rayon::prelude::*;
            (0..frames).into_par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<Result<Tally>> = (0..frames).map(run).collect();
        let mut t = Tally::default();
        for p in parts {
            t += p?;
        }
        rows.push(summarize(ebn0, &t, cfg));
    }
    Ok(rows)
}

fn summarize(ebn0_db: f64, t: &Tally, cfg: &ExperimentConfig) -> ResultRow {
    let (dl, orig) = (&t.dl, &t.orig);
    let primary = if cfg.strategy.runs_learned() {
        dl
    } else {
        orig
    };
    ResultRow {
        ebn0_db,
        ber: per(primary.errors, t.info_bits),
        ber_orig: if cfg.strategy.runs_noise() {
            per(orig.errors, t.info_bits)
        } else {
            f64::NAN
        },
        ber_uncoded: per(t.uncoded_errors, t.uncoded_bits),
        avg_list_size: per(primary.list, primary.runs),
        avg_sphere_points_dl: if cfg.sphere_counts {
            per(dl.sphere, dl.runs)
        } else {
            f64::NAN
        },
        avg_sphere_points_orig: if cfg.sphere_counts {
            per(orig.sphere, orig.runs)
        } else {
            f64::NAN
        },
        avg_found_dl: per(dl.found, dl.runs),
        avg_found_orig: per(orig.found, orig.runs),
        avg_nodes_dl: per(dl.nodes, dl.runs),
        avg_nodes_orig: per(orig.nodes, orig.runs),
        avg_searches_dl: per(dl.searches, dl.runs),
        avg_flops_dl: per(dl.flops, dl.runs),
        avg_flops_orig: per(orig.flops, orig.runs),
        flop_ratio: per(dl.flops, orig.flops),
        blocks_run: t.blocks,
        info_bits: t.info_bits,
        bit_errors: primary.errors,
        fallbacks: dl.fallbacks,
    }
}

/// Analytic uncoded BPSK reference `Q(√(2 Eb/N0))` per grid point.
pub fn ber_reference(grid_db: &[f64]) -> Vec<(f64, f64)> {
    grid_db.iter().map(|&e| (e, bpsk_awgn_ber(e))).collect()
}

/// Canonical model file name for an operating point.
pub fn model_file_name(tau: f64, ebn0_db: f64) -> String {
    format!("model_tau{tau}_ebn0{ebn0_db}.txt")
}

/// Canonical dataset file name for an operating point.
pub fn dataset_file_name(tau: f64, ebn0_db: f64) -> String {
    format!("dataset_tau{tau}_ebn0{ebn0_db}.csv")
}
