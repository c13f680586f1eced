//! Recurrent network that predicts the list sphere decoder's initial
//! radius from the received vector.
//!
//! The observation `y` is fed one sample per time step through two Elman
//! ReLU layers; the last hidden state of the second layer goes through a
//! dense ReLU layer and a linear head. Training minimizes the mean squared
//! error against radii produced by the baseline decoder.

mod data;
mod model;
mod persist;
mod train;

pub use data::{
    estimate_delta_d, generate_training_set, DatasetMeta, Histogram, RadiusStats, TrainingSample,
    TrainingSet,
};
pub(crate) use data::{fmt12, parse_key_values, parse_value, BITS_STREAM, NOISE_STREAM};
pub use model::{backward, mse_loss, BlockShape, NnModel, Widths, BLOCK_NAMES};
pub use persist::{ModelMeta, TrainedModel, MODEL_SCHEMA};
pub use train::{adam_step, holdout_split, train, AdamState, TrainReport, TrainingConfig};
