//! Mini-batch Adam training with a seeded held-out split and early stopping.

use rand::seq::SliceRandom;

use super::data::TrainingSample;
use super::model::{backward, mse_loss, NnModel};
use crate::rng::{rng_from_seed, stream_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Stop after this many epochs without a held-out improvement.
    pub patience: Option<usize>,
    /// Fraction of the samples held out for validation.
    pub holdout_fraction: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 20,
            epochs: 100,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            patience: Some(10),
            holdout_fraction: 0.1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(
                "learning rate must be finite and non-negative",
            ));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::invalid(
                "batch size and epoch count must be positive",
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("Adam eps must be positive"));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::invalid("holdout fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `params`.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    config: &TrainingConfig,
) -> Result<()> {
    let n = params.len();
    for len in [grads.len(), state.m.len(), state.v.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    state.t += 1;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for i in 0..n {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.eps);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Training-set MSE; entry 0 is before the first update.
    pub train_loss: Vec<f64>,
    /// Held-out MSE per epoch (empty without a held-out split).
    pub holdout_loss: Vec<f64>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Splits sample indices into (train, held-out).
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(stream_seed(seed, 0x5e1)));
    let n_hold = if n >= 2 {
        ((n as f64 * fraction).round() as usize).min(n - 1)
    } else {
        0
    };
    let hold = idx.split_off(n - n_hold);
    (idx, hold)
}

/// Trains `model` in place and returns the loss traces.
///
/// Each epoch shuffles the training part, runs Adam over consecutive
/// mini-batches (the last one may be short) and records the full-set
/// losses. With a patience set, training stops once the held-out loss has
/// not improved for that many epochs, and the best parameters are restored.
pub fn train(
    model: &mut NnModel,
    samples: &[TrainingSample],
    config: &TrainingConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let (train_idx, hold_idx) = holdout_split(samples.len(), config.holdout_fraction, config.seed);
    let train_set: Vec<TrainingSample> = train_idx.iter().map(|&i| samples[i].clone()).collect();
    let hold_set: Vec<TrainingSample> = hold_idx.iter().map(|&i| samples[i].clone()).collect();

    let monitor = |m: &NnModel, epoch: usize| -> Result<(f64, Option<f64>)> {
        let tl = mse_loss(m, &train_set)?;
        let hl = if hold_set.is_empty() {
            None
        } else {
            Some(mse_loss(m, &hold_set)?)
        };
        if !tl.is_finite() || hl.is_some_and(|h| !h.is_finite()) {
            return Err(Error::NonFiniteLoss(epoch));
        }
        Ok((tl, hl))
    };

    let (tl0, hl0) = monitor(model, 0)?;
    let mut report = TrainReport {
        train_loss: vec![tl0],
        holdout_loss: hl0.into_iter().collect(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best_loss = hl0.unwrap_or(tl0);
    let mut best_params = model.params().to_vec();

    let mut state = AdamState::new(model.num_params());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle_rng = rng_from_seed(stream_seed(config.seed, 0x5b1));
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set[i].clone()));
            let (loss, grad) = backward(model, &batch)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss(epoch));
            }
            adam_step(model.params_mut(), &grad, &mut state, config)?;
        }
        let (tl, hl) = monitor(model, epoch)?;
        report.train_loss.push(tl);
        report.holdout_loss.extend(hl);
        let watched = hl.unwrap_or(tl);
        if watched < best_loss {
            best_loss = watched;
            best_params.copy_from_slice(model.params());
            report.best_epoch = epoch;
        }
        if let Some(p) = config.patience {
            if epoch - report.best_epoch >= p {
                report.stopped_early = true;
                break;
            }
        }
    }
    if config.patience.is_some() {
        model.params_mut().copy_from_slice(&best_params);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radius_net::model::Widths;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn cfg() -> TrainingConfig {
        TrainingConfig::default()
    }

    #[test]
    fn adam_first_step_matches_hand_computation() {
        let c = cfg();
        let mut p = vec![1.0, -2.0, 0.5];
        let g = vec![0.3, -4.0, 0.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &g, &mut s, &c).unwrap();
        for (i, (&p0, &gi)) in [1.0, -2.0, 0.5].iter().zip(&g).enumerate() {
            // m̂ = g, v̂ = g² after bias correction at t = 1.
            let expected = p0 - c.learning_rate * gi / (gi.abs() + c.eps);
            assert!((p[i] - expected).abs() < 1e-15);
        }
        assert_eq!(s.t, 1);
    }

    #[test]
    fn adam_zero_gradient_and_constant_gradient() {
        let c = cfg();
        let mut p = vec![0.7; 2];
        let mut s = AdamState::new(2);
        s.m = vec![0.5, -0.5];
        s.v = vec![0.25, 0.25];
        adam_step(&mut p, &[0.0, 0.0], &mut s, &c).unwrap();
        assert!((s.m[0] - 0.45).abs() < 1e-15);
        assert!((s.v[0] - 0.24975).abs() < 1e-15);

        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p[0];
            adam_step(&mut p, &[2.5], &mut s, &c).unwrap();
            last = before - p[0];
        }
        assert!((last - c.learning_rate).abs() < 1e-8);
        assert!(adam_step(&mut p, &[1.0, 2.0], &mut s, &c).is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let w = Widths {
            rnn1: 3,
            rnn2: 3,
            dense: 2,
        };
        let mut m = NnModel::init(w, 4, 2).unwrap();
        let before = m.clone();
        let samples: Vec<TrainingSample> = (0..30)
            .map(|i| TrainingSample {
                y: vec![i as f64 * 0.1; 4],
                radius: 1.0,
            })
            .collect();
        let c = TrainingConfig {
            learning_rate: 0.0,
            epochs: 3,
            ..cfg()
        };
        let rep = train(&mut m, &samples, &c).unwrap();
        assert_eq!(m, before);
        assert!(rep.train_loss.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(rep.train_loss.len(), 4);
    }

    #[test]
    fn learns_the_norm_of_its_input() {
        let w = Widths {
            rnn1: 8,
            rnn2: 8,
            dense: 6,
        };
        let mut rng = rng_from_seed(12);
        let samples: Vec<TrainingSample> = (0..200)
            .map(|_| {
                let y: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
                let radius = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                TrainingSample { y, radius }
            })
            .collect();
        let mut m = NnModel::init(w, 6, 13).unwrap();
        let c = TrainingConfig {
            learning_rate: 3e-3,
            epochs: 200,
            patience: None,
            holdout_fraction: 0.0,
            seed: 14,
            ..cfg()
        };
        let rep = train(&mut m, &samples, &c).unwrap();
        let first = rep.train_loss[0];
        let last = *rep.train_loss.last().unwrap();
        assert!(last < 0.1 * first, "{first} -> {last}");
    }

    #[test]
    fn training_is_deterministic() {
        let w = Widths {
            rnn1: 4,
            rnn2: 4,
            dense: 3,
        };
        let samples: Vec<TrainingSample> = (0..45)
            .map(|i| TrainingSample {
                y: vec![(i % 7) as f64 * 0.2 - 0.5; 5],
                radius: 1.0 + (i % 3) as f64,
            })
            .collect();
        let c = TrainingConfig {
            learning_rate: 1e-3,
            epochs: 5,
            seed: 3,
            ..cfg()
        };
        let mut a = NnModel::init(w, 5, 1).unwrap();
        let mut b = a.clone();
        let ra = train(&mut a, &samples, &c).unwrap();
        let rb = train(&mut b, &samples, &c).unwrap();
        assert_eq!(ra, rb);
        assert!(a
            .params()
            .iter()
            .zip(b.params())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn split_sizes() {
        let (t, h) = holdout_split(100, 0.1, 5);
        assert_eq!((t.len(), h.len()), (90, 10));
        let mut all: Vec<usize> = t.iter().chain(&h).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(holdout_split(1, 0.5, 0).1.len(), 0);
    }
}
