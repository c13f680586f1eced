//! Two Elman ReLU layers, a dense ReLU layer and a linear head, with
//! hand-written backpropagation through time.
//!
//! All parameters live in one flat vector so the optimizer can treat them
//! uniformly; [`NnModel::blocks`] exposes the named matrices inside it.

use rand::Rng;

use super::data::TrainingSample;
use crate::detector::RadiusPredictor;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Hidden widths of the two recurrent layers and the dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Widths {
    pub rnn1: usize,
    pub rnn2: usize,
    pub dense: usize,
}

impl Default for Widths {
    fn default() -> Self {
        Self {
            rnn1: 128,
            rnn2: 128,
            dense: 64,
        }
    }
}

/// Names of the parameter blocks, in storage order.
pub const BLOCK_NAMES: [&str; 10] = [
    "rnn1.w_in",
    "rnn1.w_rec",
    "rnn1.bias",
    "rnn2.w_in",
    "rnn2.w_rec",
    "rnn2.bias",
    "dense.weight",
    "dense.bias",
    "head.weight",
    "head.bias",
];

const W1X: usize = 0;
const W1H: usize = 1;
const B1: usize = 2;
const W2X: usize = 3;
const W2H: usize = 4;
const B2: usize = 5;
const W3: usize = 6;
const B3: usize = 7;
const W4: usize = 8;
const B4: usize = 9;

/// Shape and position of one parameter block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockShape {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl BlockShape {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

fn layout(w: Widths) -> [BlockShape; 10] {
    let dims = [
        (w.rnn1, 1),
        (w.rnn1, w.rnn1),
        (w.rnn1, 1),
        (w.rnn2, w.rnn1),
        (w.rnn2, w.rnn2),
        (w.rnn2, 1),
        (w.dense, w.rnn2),
        (w.dense, 1),
        (1, w.dense),
        (1, 1),
    ];
    let mut offset = 0;
    let mut out = [BlockShape {
        name: "",
        rows: 0,
        cols: 0,
        offset: 0,
    }; 10];
    for (k, (rows, cols)) in dims.into_iter().enumerate() {
        out[k] = BlockShape {
            name: BLOCK_NAMES[k],
            rows,
            cols,
            offset,
        };
        offset += rows * cols;
    }
    out
}

/// The radius predictor `R̂ = f(y, θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NnModel {
    widths: Widths,
    seq_len: usize,
    shapes: [BlockShape; 10],
    params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
struct Trace {
    h1: Vec<f64>,
    h2: Vec<f64>,
    g: Vec<f64>,
    out: f64,
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// `out += W x` for row-major `W` (`rows × x.len()`).
#[inline]
fn gemv_acc(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += Wᵀ d` for row-major `W` (`d.len() × out.len()`).
#[inline]
fn gemv_t_acc(w: &[f64], d: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (&di, row) in d.iter().zip(w.chunks_exact(cols)) {
        if di != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += di * a;
            }
        }
    }
}

/// `G += d xᵀ`.
#[inline]
fn outer_acc(g: &mut [f64], d: &[f64], x: &[f64]) {
    let cols = x.len();
    for (&di, row) in d.iter().zip(g.chunks_exact_mut(cols)) {
        if di != 0.0 {
            for (o, a) in row.iter_mut().zip(x) {
                *o += di * a;
            }
        }
    }
}

impl NnModel {
    /// A model with every parameter zero.
    pub fn zeros(widths: Widths, seq_len: usize) -> Result<Self> {
        if widths.rnn1 == 0 || widths.rnn2 == 0 || widths.dense == 0 || seq_len == 0 {
            return Err(Error::invalid(
                "network widths and sequence length must be positive",
            ));
        }
        let shapes = layout(widths);
        let total = shapes[B4].offset + 1;
        Ok(Self {
            widths,
            seq_len,
            shapes,
            params: vec![0.0; total],
        })
    }

    /// Glorot-uniform weights `U(−a, a)`, `a = √(6 / (fan_in + fan_out))`,
    /// and zero biases.
    pub fn init(widths: Widths, seq_len: usize, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(widths, seq_len)?;
        let mut rng = rng_from_seed(seed);
        for k in [W1X, W1H, W2X, W2H, W3, W4] {
            let s = model.shapes[k];
            let a = (6.0 / (s.rows + s.cols) as f64).sqrt();
            for p in &mut model.params[s.range()] {
                *p = rng.random_range(-a..a);
            }
        }
        Ok(model)
    }

    /// Builds a model from a flat parameter vector in [`BLOCK_NAMES`] order.
    pub fn from_params(widths: Widths, seq_len: usize, params: Vec<f64>) -> Result<Self> {
        let mut model = Self::zeros(widths, seq_len)?;
        if params.len() != model.params.len() {
            return Err(Error::DimensionMismatch {
                expected: model.params.len(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("non-finite network parameter"));
        }
        model.params = params;
        Ok(model)
    }

    pub fn widths(&self) -> Widths {
        self.widths
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn shapes(&self) -> &[BlockShape] {
        &self.shapes
    }

    /// Parameter block by name (see [`BLOCK_NAMES`]).
    pub fn block(&self, name: &str) -> Option<&[f64]> {
        let s = self.shapes.iter().find(|s| s.name == name)?;
        Some(&self.params[s.range()])
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let s = *self.shapes.iter().find(|s| s.name == name)?;
        Some(&mut self.params[s.range()])
    }

    fn p(&self, k: usize) -> &[f64] {
        &self.params[self.shapes[k].range()]
    }

    fn check_len(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.seq_len {
            return Err(Error::DimensionMismatch {
                expected: self.seq_len,
                got: y.len(),
            });
        }
        Ok(())
    }

    fn run(&self, y: &[f64]) -> Trace {
        let Widths { rnn1, rnn2, dense } = self.widths;
        let t_len = y.len();
        let (w1x, w1h, b1) = (self.p(W1X), self.p(W1H), self.p(B1));
        let (w2x, w2h, b2) = (self.p(W2X), self.p(W2H), self.p(B2));
        let mut h1 = vec![0.0; t_len * rnn1];
        let mut h2 = vec![0.0; t_len * rnn2];
        for (t, &yt) in y.iter().enumerate() {
            let (prev, cur) = h1.split_at_mut(t * rnn1);
            let cur = &mut cur[..rnn1];
            for i in 0..rnn1 {
                cur[i] = w1x[i] * yt + b1[i];
            }
            if t > 0 {
                gemv_acc(w1h, &prev[(t - 1) * rnn1..], cur);
            }
            cur.iter_mut().for_each(|v| *v = relu(*v));

            let (prev2, cur2) = h2.split_at_mut(t * rnn2);
            let cur2 = &mut cur2[..rnn2];
            cur2.copy_from_slice(b2);
            gemv_acc(w2x, &h1[t * rnn1..(t + 1) * rnn1], cur2);
            if t > 0 {
                gemv_acc(w2h, &prev2[(t - 1) * rnn2..], cur2);
            }
            cur2.iter_mut().for_each(|v| *v = relu(*v));
        }
        let last = &h2[(t_len - 1) * rnn2..];
        let mut g = self.p(B3).to_vec();
        gemv_acc(self.p(W3), last, &mut g);
        g.iter_mut().for_each(|v| *v = relu(*v));
        debug_assert_eq!(g.len(), dense);
        let out = self.p(B4)[0] + self.p(W4).iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
        Trace { h1, h2, g, out }
    }

    /// Predicted radius for one observation.
    pub fn forward(&self, y: &[f64]) -> Result<f64> {
        self.check_len(y)?;
        Ok(self.run(y).out)
    }

    /// Adds `∂(scale · f(y))/∂θ` to `grad`.
    fn backprop(&self, y: &[f64], tr: &Trace, scale: f64, grad: &mut [f64]) {
        let Widths { rnn1, rnn2, .. } = self.widths;
        let t_len = y.len();
        let sh = self.shapes;
        let (w1h, w2x, w2h, w3, w4) = (
            self.p(W1H),
            self.p(W2X),
            self.p(W2H),
            self.p(W3),
            self.p(W4),
        );

        grad[sh[B4].offset] += scale;
        let dg: Vec<f64> =
            tr.g.iter()
                .zip(w4)
                .map(|(&g, &w)| if g > 0.0 { scale * w } else { 0.0 })
                .collect();
        for (gw, &g) in grad[sh[W4].range()].iter_mut().zip(&tr.g) {
            *gw += scale * g;
        }
        let last2 = &tr.h2[(t_len - 1) * rnn2..];
        outer_acc(&mut grad[sh[W3].range()], &dg, last2);
        for (gb, d) in grad[sh[B3].range()].iter_mut().zip(&dg) {
            *gb += d;
        }

        // Second recurrent layer, back through time.
        let mut dh2 = vec![0.0; rnn2];
        gemv_t_acc(w3, &dg, &mut dh2);
        let mut dh1_in = vec![0.0; t_len * rnn1];
        let mut da = vec![0.0; rnn2];
        for t in (0..t_len).rev() {
            let h = &tr.h2[t * rnn2..(t + 1) * rnn2];
            for i in 0..rnn2 {
                da[i] = if h[i] > 0.0 { dh2[i] } else { 0.0 };
            }
            outer_acc(
                &mut grad[sh[W2X].range()],
                &da,
                &tr.h1[t * rnn1..(t + 1) * rnn1],
            );
            for (gb, d) in grad[sh[B2].range()].iter_mut().zip(&da) {
                *gb += d;
            }
            gemv_t_acc(w2x, &da, &mut dh1_in[t * rnn1..(t + 1) * rnn1]);
            dh2.iter_mut().for_each(|v| *v = 0.0);
            if t > 0 {
                outer_acc(
                    &mut grad[sh[W2H].range()],
                    &da,
                    &tr.h2[(t - 1) * rnn2..t * rnn2],
                );
                gemv_t_acc(w2h, &da, &mut dh2);
            }
        }

        // First recurrent layer.
        let mut dh1 = vec![0.0; rnn1];
        let mut da = vec![0.0; rnn1];
        for t in (0..t_len).rev() {
            let h = &tr.h1[t * rnn1..(t + 1) * rnn1];
            for i in 0..rnn1 {
                let d = dh1[i] + dh1_in[t * rnn1 + i];
                da[i] = if h[i] > 0.0 { d } else { 0.0 };
            }
            for (gw, d) in grad[sh[W1X].range()].iter_mut().zip(&da) {
                *gw += d * y[t];
            }
            for (gb, d) in grad[sh[B1].range()].iter_mut().zip(&da) {
                *gb += d;
            }
            dh1.iter_mut().for_each(|v| *v = 0.0);
            if t > 0 {
                outer_acc(
                    &mut grad[sh[W1H].range()],
                    &da,
                    &tr.h1[(t - 1) * rnn1..t * rnn1],
                );
                gemv_t_acc(w1h, &da, &mut dh1);
            }
        }
    }

    /// Squared error of one sample and its gradient, scaled by `weight`.
    pub(crate) fn sample_gradient(
        &self,
        s: &TrainingSample,
        weight: f64,
    ) -> Result<(f64, Vec<f64>)> {
        self.check_len(&s.y)?;
        let tr = self.run(&s.y);
        let resid = tr.out - s.radius;
        let mut grad = vec![0.0; self.params.len()];
        self.backprop(&s.y, &tr, weight * 2.0 * resid, &mut grad);
        Ok((resid * resid, grad))
    }
}

impl RadiusPredictor for NnModel {
    fn predict_radius(&self, y: &[f64]) -> Result<f64> {
        self.forward(y)
    }
}

/// Mean squared error `(1/|S|) Σ (R − f(y))²`.
pub fn mse_loss(model: &NnModel, samples: &[TrainingSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut total = 0.0;
    for s in samples {
        let r = model.forward(&s.y)? - s.radius;
        total += r * r;
    }
    Ok(total / samples.len() as f64)
}

/// Mini-batch loss and its gradient with respect to every parameter.
///
/// Per-sample gradients may be computed in parallel but are summed in
/// sample order, so the result does not depend on the thread count.
pub fn backward(model: &NnModel, batch: &[TrainingSample]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let w = 1.0 / batch.len() as f64;
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<(f64, Vec<f64>)>> = {
        use rayon::prelude::*;
        batch
            .par_iter()
            .map(|s| model.sample_gradient(s, w))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<(f64, Vec<f64>)>> =
        batch.iter().map(|s| model.sample_gradient(s, w)).collect();
    let mut loss = 0.0;
    let mut grad = vec![0.0; model.num_params()];
    for part in parts {
        let (l, g) = part?;
        loss += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    Ok((loss * w, grad))
}
