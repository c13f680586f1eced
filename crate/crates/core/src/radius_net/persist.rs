//! Text model file: a `key = value` header followed by named row-major
//! matrices. Floats are written in shortest round-trip form, so loading a
//! saved model restores every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::data::{parse_key_values, parse_value};
use super::model::{NnModel, Widths};
use crate::detector::RadiusPredictor;
use crate::{Error, Result};

pub const MODEL_SCHEMA: u32 = 1;

/// Operating point and growth step stored alongside the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub tau: f64,
    pub ebn0_db: f64,
    pub block_len: usize,
    pub list_size: usize,
    pub delta_d: f64,
    pub radius_mean: f64,
}

/// A trained network plus the parameters the detector needs with it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub meta: ModelMeta,
    pub net: NnModel,
}

impl RadiusPredictor for TrainedModel {
    fn predict_radius(&self, y: &[f64]) -> Result<f64> {
        self.net.forward(y)
    }
}

impl TrainedModel {
    /// Fails unless the model was trained for this `(τ, N, N_L)`.
    pub fn check_compatible(&self, tau: f64, block_len: usize, list_size: usize) -> Result<()> {
        let m = &self.meta;
        if (m.tau - tau).abs() > 1e-12 || m.block_len != block_len || m.list_size != list_size {
            return Err(Error::ModelMismatch(format!(
                "model is for tau={}, N={}, N_L={} but run uses tau={tau}, N={block_len}, N_L={list_size}",
                m.tau, m.block_len, m.list_size
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let m = &self.meta;
        let w = self.net.widths();
        let mut s = String::new();
        writeln!(s, "# ftn radius model").unwrap();
        writeln!(s, "schema_version = {MODEL_SCHEMA}").unwrap();
        writeln!(s, "tau = {}", m.tau).unwrap();
        writeln!(s, "ebn0_db = {}", m.ebn0_db).unwrap();
        writeln!(s, "block_len = {}", m.block_len).unwrap();
        writeln!(s, "list_size = {}", m.list_size).unwrap();
        writeln!(s, "seq_len = {}", self.net.seq_len()).unwrap();
        writeln!(s, "radius_semantics = distance").unwrap();
        writeln!(s, "widths = {} {} {}", w.rnn1, w.rnn2, w.dense).unwrap();
        writeln!(s, "delta_d = {}", m.delta_d).unwrap();
        writeln!(s, "radius_mean = {}", m.radius_mean).unwrap();
        for shape in self.net.shapes() {
            writeln!(s, "[{} {} {}]", shape.name, shape.rows, shape.cols).unwrap();
            let block = self.net.block(shape.name).expect("shape names are valid");
            for row in block.chunks(shape.cols) {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(s, "{}", cells.join(" ")).unwrap();
            }
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }

    /// Parses a model file; `path` is only used in error messages.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let split = text
            .lines()
            .position(|l| l.trim_start().starts_with('['))
            .ok_or_else(|| perr(0, "no weight blocks".into()))?;
        let header: String = text.lines().take(split).collect::<Vec<_>>().join("\n");

        let mut schema = None;
        let (mut tau, mut ebn0, mut delta_d, mut mean) = (None, None, None, None);
        let (mut block_len, mut list_size, mut seq_len, mut widths) = (None, None, None, None);
        for (line, key, v) in parse_key_values(&header, path)? {
            match key.as_str() {
                "schema_version" => schema = Some(parse_value::<u32>(path, line, &key, &v)?),
                "tau" => tau = Some(parse_value::<f64>(path, line, &key, &v)?),
                "ebn0_db" => ebn0 = Some(parse_value::<f64>(path, line, &key, &v)?),
                "block_len" => block_len = Some(parse_value::<usize>(path, line, &key, &v)?),
                "list_size" => list_size = Some(parse_value::<usize>(path, line, &key, &v)?),
                "seq_len" => seq_len = Some(parse_value::<usize>(path, line, &key, &v)?),
                "delta_d" => delta_d = Some(parse_value::<f64>(path, line, &key, &v)?),
                "radius_mean" => mean = Some(parse_value::<f64>(path, line, &key, &v)?),
                "radius_semantics" if v != "distance" => {
                    return Err(perr(line, format!("unsupported radius semantics {v:?}")));
                }
                "widths" => {
                    let w: Vec<usize> = v
                        .split_whitespace()
                        .map(|x| parse_value(path, line, &key, x))
                        .collect::<Result<_>>()?;
                    if w.len() != 3 {
                        return Err(perr(line, "widths needs three values".into()));
                    }
                    widths = Some(Widths {
                        rnn1: w[0],
                        rnn2: w[1],
                        dense: w[2],
                    });
                }
                _ => {}
            }
        }
        if schema != Some(MODEL_SCHEMA) {
            return Err(perr(0, format!("unsupported schema version {schema:?}")));
        }
        let missing = |k: &str| perr(0, format!("missing header key {k}"));
        let widths = widths.ok_or_else(|| missing("widths"))?;
        let seq_len = seq_len.ok_or_else(|| missing("seq_len"))?;
        let mut net = NnModel::zeros(widths, seq_len)?;

        let lines: Vec<&str> = text.lines().collect();
        let mut k = split;
        let mut seen = 0;
        while k < lines.len() {
            let head = lines[k].trim();
            if head.is_empty() {
                k += 1;
                continue;
            }
            let inner = head
                .strip_prefix('[')
                .and_then(|h| h.strip_suffix(']'))
                .ok_or_else(|| perr(k + 1, format!("expected block header, got {head:?}")))?;
            let parts: Vec<&str> = inner.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(perr(k + 1, "block header needs name rows cols".into()));
            }
            let shape = *net
                .shapes()
                .iter()
                .find(|s| s.name == parts[0])
                .ok_or_else(|| perr(k + 1, format!("unknown block {}", parts[0])))?;
            let rows: usize = parse_value(path, k + 1, "rows", parts[1])?;
            let cols: usize = parse_value(path, k + 1, "cols", parts[2])?;
            if (rows, cols) != (shape.rows, shape.cols) {
                return Err(perr(
                    k + 1,
                    format!("{} should be {}x{}", shape.name, shape.rows, shape.cols),
                ));
            }
            let dst = net.block_mut(shape.name).expect("known block");
            for r in 0..rows {
                let line_no = k + 2 + r;
                let row = lines
                    .get(line_no - 1)
                    .ok_or_else(|| perr(line_no, "truncated block".into()))?;
                let vals: Vec<f64> = row
                    .split_whitespace()
                    .map(|x| parse_value(path, line_no, shape.name, x))
                    .collect::<Result<_>>()?;
                if vals.len() != cols {
                    return Err(perr(line_no, format!("expected {cols} values")));
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(perr(line_no, "non-finite parameter".into()));
                }
                dst[r * cols..(r + 1) * cols].copy_from_slice(&vals);
            }
            seen += 1;
            k += 1 + rows;
        }
        if seen != net.shapes().len() {
            return Err(perr(
                0,
                format!("expected {} blocks, found {seen}", net.shapes().len()),
            ));
        }
        let meta = ModelMeta {
            tau: tau.ok_or_else(|| missing("tau"))?,
            ebn0_db: ebn0.ok_or_else(|| missing("ebn0_db"))?,
            block_len: block_len.ok_or_else(|| missing("block_len"))?,
            list_size: list_size.ok_or_else(|| missing("list_size"))?,
            delta_d: delta_d.ok_or_else(|| missing("delta_d"))?,
            radius_mean: mean.ok_or_else(|| missing("radius_mean"))?,
        };
        if !(meta.delta_d > 0.0 && meta.delta_d.is_finite()) {
            return Err(perr(
                0,
                format!("delta_d {} must be positive", meta.delta_d),
            ));
        }
        Ok(Self { meta, net })
    }
}
