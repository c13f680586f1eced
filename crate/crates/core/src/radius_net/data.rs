//! Training pairs `(y, R)` produced by the baseline list sphere decoder,
//! their radius statistics, and the dataset file format.

use std::fmt::Write as _;
use std::path::Path;

use crate::detector::{noise_lsd_detect, qr_factorize, FlopCounter, SearchProblem};
use crate::link::{ebn0_to_sigma, map_bits, transmit, FtnLink};
use crate::rng::{block_seed, random_bits, stream_seed};
use crate::stats::mean_std;
use crate::{Error, Result};

/// Stream tags for the per-block seeds.
pub(crate) const BITS_STREAM: u64 = 1;
pub(crate) const NOISE_STREAM: u64 = 2;

const DATASET_SCHEMA: u32 = 1;
const HISTOGRAM_BINS: usize = 20;

/// One observation and the distance from it to the farthest point of its
/// `N_L`-point list.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub y: Vec<f64>,
    pub radius: f64,
}

/// Operating point a dataset was generated at.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub tau: f64,
    pub beta_h: f64,
    pub beta_v: f64,
    pub num_taps: usize,
    pub ebn0_db: f64,
    pub block_len: usize,
    pub list_size: usize,
    pub seed: u64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub meta: DatasetMeta,
    pub samples: Vec<TrainingSample>,
}

/// Runs the noise-variance LSD on `num_blocks` random blocks and records
/// `(y, max distance in the list)` for each.
pub fn generate_training_set(
    link: &FtnLink,
    num_taps: usize,
    ebn0_db: f64,
    num_blocks: usize,
    list_size: usize,
    epsilon: f64,
    seed: u64,
) -> Result<TrainingSet> {
    let noise = ebn0_to_sigma(ebn0_db, 1.0, 1.0)?;
    let qr = qr_factorize(link.isi().matrix())?;
    let n = link.block_len;
    let one = |i: usize| -> Result<TrainingSample> {
        let bs = block_seed(seed, i as u64);
        let a = map_bits(&random_bits(n, stream_seed(bs, BITS_STREAM)), 1.0)?;
        let y = transmit(link.isi(), &a, &noise, stream_seed(bs, NOISE_STREAM))?;
        let problem = SearchProblem::new(&qr, &y, 1.0)?;
        let mut counter = FlopCounter::default();
        let out = noise_lsd_detect(
            &problem,
            noise.sigma,
            y.len(),
            epsilon,
            list_size,
            &mut counter,
        )?;
        let radius = out.list.farthest_distance().ok_or(Error::EmptyList)?;
        Ok(TrainingSample { y, radius })
    };
    #[cfg(feature = "parallel")]
    let samples: Result<Vec<_>> = {
        use rayon::prelude::*;
        (0..num_blocks).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let samples: Result<Vec<_>> = (0..num_blocks).map(one).collect();
    Ok(TrainingSet {
        meta: DatasetMeta {
            tau: link.tau,
            beta_h: link.beta_h,
            beta_v: link.beta_v,
            num_taps,
            ebn0_db,
            block_len: n,
            list_size,
            seed,
            epsilon,
        },
        samples: samples?,
    })
}

/// Equal-width histogram over `[lo, lo + width · counts.len()]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

/// Summary of the training radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusStats {
    pub mean: f64,
    /// Unbiased sample standard deviation.
    pub std: f64,
    /// Growth step for the learned detector, `max(std, 1e-3 · mean)`.
    pub delta_d: f64,
    pub skewness: f64,
    pub histogram: Histogram,
}

pub fn estimate_delta_d(samples: &[TrainingSample]) -> Result<RadiusStats> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    let r: Vec<f64> = samples.iter().map(|s| s.radius).collect();
    let (mean, std) = mean_std(&r);
    let n = r.len() as f64;
    let skewness = if std > 0.0 {
        let m2 = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = r.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        m3 / m2.powf(1.5)
    } else {
        0.0
    };
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / HISTOGRAM_BINS as f64
    } else {
        1.0
    };
    let mut counts = vec![0; HISTOGRAM_BINS];
    for v in &r {
        let b = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    Ok(RadiusStats {
        mean,
        std,
        delta_d: std.max(1e-3 * mean),
        skewness,
        histogram: Histogram { lo, width, counts },
    })
}

/// Twelve significant digits.
pub(crate) fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

impl TrainingSet {
    /// Writes the samples as CSV (one row: the `y` values, then `R`) and
    /// the generation parameters to `<path>.meta`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let seq = self.samples.first().map_or(0, |s| s.y.len());
        let mut out = String::new();
        writeln!(out, "# ftn-dataset v{DATASET_SCHEMA}").unwrap();
        let header: Vec<String> = (0..seq)
            .map(|i| format!("y{i}"))
            .chain(["radius".into()])
            .collect();
        writeln!(out, "{}", header.join(",")).unwrap();
        for s in &self.samples {
            let row: Vec<String> = s.y.iter().chain([&s.radius]).map(|&v| fmt12(v)).collect();
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))?;
        let m = &self.meta;
        let meta = format!(
            "schema_version = {DATASET_SCHEMA}\ntau = {}\nbeta_h = {}\nbeta_v = {}\nnum_taps = {}\n\
             ebn0_db = {}\nblock_len = {}\nlist_size = {}\nnum_blocks = {}\nseed = {}\nepsilon = {}\n\
             radius_semantics = distance\n",
            m.tau,
            m.beta_h,
            m.beta_v,
            m.num_taps,
            m.ebn0_db,
            m.block_len,
            m.list_size,
            self.samples.len(),
            m.seed,
            m.epsilon
        );
        let meta_path = meta_path(path);
        std::fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut samples = Vec::new();
        let mut width = None;
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('y') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                msg,
            };
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| parse_err(format!("{f:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if vals.len() < 2 || *width.get_or_insert(vals.len()) != vals.len() {
                return Err(parse_err(format!("unexpected row width {}", vals.len())));
            }
            let (radius, y) = vals.split_last().unwrap();
            if !(radius.is_finite() && *radius > 0.0) || y.iter().any(|v| !v.is_finite()) {
                return Err(parse_err("non-finite value or non-positive radius".into()));
            }
            samples.push(TrainingSample {
                y: y.to_vec(),
                radius: *radius,
            });
        }
        let meta = load_meta(&meta_path(path))?;
        Ok(Self { meta, samples })
    }
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    s.into()
}

/// Parses `key = value` lines, ignoring blanks and `#` comments.
pub(crate) fn parse_key_values(text: &str, path: &Path) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        out.push((k + 1, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn parse_value<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    key: &str,
    v: &str,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("{key}: {e}"),
    })
}

fn load_meta(path: &Path) -> Result<DatasetMeta> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m = DatasetMeta {
        tau: f64::NAN,
        beta_h: f64::NAN,
        beta_v: f64::NAN,
        num_taps: 0,
        ebn0_db: f64::NAN,
        block_len: 0,
        list_size: 0,
        seed: 0,
        epsilon: f64::NAN,
    };
    for (line, key, v) in parse_key_values(&text, path)? {
        match key.as_str() {
            "tau" => m.tau = parse_value(path, line, &key, &v)?,
            "beta_h" => m.beta_h = parse_value(path, line, &key, &v)?,
            "beta_v" => m.beta_v = parse_value(path, line, &key, &v)?,
            "num_taps" => m.num_taps = parse_value(path, line, &key, &v)?,
            "ebn0_db" => m.ebn0_db = parse_value(path, line, &key, &v)?,
            "block_len" => m.block_len = parse_value(path, line, &key, &v)?,
            "list_size" => m.list_size = parse_value(path, line, &key, &v)?,
            "seed" => m.seed = parse_value(path, line, &key, &v)?,
            "epsilon" => m.epsilon = parse_value(path, line, &key, &v)?,
            _ => {}
        }
    }
    if m.tau.is_nan() || m.ebn0_db.is_nan() || m.block_len == 0 || m.list_size == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "missing tau, ebn0_db, block_len or list_size".into(),
        });
    }
    Ok(m)
}
