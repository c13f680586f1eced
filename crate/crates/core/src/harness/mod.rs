//! Batch experiments behind the `ftnsim` binary: configuration, the
//! paired Monte-Carlo comparison of the radius strategies, and CSV output.

mod config;
mod experiments;
mod output;

pub use config::{parse_grid, ExperimentConfig, StrategyChoice};
pub use experiments::{
    ber_reference, dataset_file_name, generate_data, lemma_check, model_file_name, simulate,
    train_model, train_model_with_widths, LemmaReport, ResultRow, TrainOutcome, SPHERE_COUNT_LIMIT,
};
pub use output::{
    results_csv, write_ber_reference, write_lemma_csv, write_loss_csv, write_radius_histogram,
    write_results_csv, CSV_SCHEMA, RESULT_COLUMNS,
};
