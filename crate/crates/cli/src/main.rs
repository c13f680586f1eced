//! `ftnsim`: batch experiments for the FTN list sphere decoder.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ftn_core::harness::{
    ber_reference, dataset_file_name, generate_data, lemma_check, model_file_name, simulate,
    train_model, write_ber_reference, write_lemma_csv, write_loss_csv, write_radius_histogram,
    write_results_csv, ExperimentConfig, ResultRow,
};
use ftn_core::link::FtnLink;
use ftn_core::radius_net::{estimate_delta_d, TrainedModel, TrainingSet};
use ftn_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ftnsim",
    version,
    about = "FTN link experiments with a learned-radius list sphere decoder"
)]
struct Cli {
    /// `key = value` file with defaults; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the experiment configuration keys.
#[derive(Args, Default)]
struct Overrides {
    /// FTN compression factor.
    #[arg(long, global = true)]
    tau: Option<String>,
    #[arg(long, global = true)]
    beta_h: Option<String>,
    #[arg(long, global = true)]
    beta_v: Option<String>,
    #[arg(long, global = true)]
    num_taps: Option<String>,
    /// Symbols per block, N.
    #[arg(long, global = true)]
    block_len: Option<String>,
    /// Candidate list size, N_L.
    #[arg(long, global = true)]
    list_size: Option<String>,
    /// Eb/N0 grid in dB: `4,6,8` or `start:step:stop`.
    #[arg(long, global = true, value_name = "GRID")]
    ebn0_grid: Option<String>,
    /// Eb/N0 of the training data in dB.
    #[arg(long, global = true)]
    train_ebn0_db: Option<String>,
    /// FTN blocks per grid point, or training blocks for generate-data.
    #[arg(long, global = true)]
    num_blocks: Option<String>,
    /// Run the convolutional code.
    #[arg(long, global = true)]
    coded: bool,
    /// Information bits per coded frame.
    #[arg(long, global = true)]
    info_bits: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    output_dir: Option<String>,
    /// noise, learned or both.
    #[arg(long, global = true)]
    strategy: Option<String>,
    /// Miss probability of the noise-variance radius.
    #[arg(long, global = true)]
    epsilon: Option<String>,
    /// Count lattice points inside each sphere (true/false).
    #[arg(long, global = true)]
    sphere_counts: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<String>,
    #[arg(long, global = true)]
    learning_rate: Option<String>,
    #[arg(long, global = true)]
    batch_size: Option<String>,
    /// Early-stopping patience in epochs, 0 to disable.
    #[arg(long, global = true)]
    patience: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        let pairs = [
            ("tau", &self.tau),
            ("beta_h", &self.beta_h),
            ("beta_v", &self.beta_v),
            ("num_taps", &self.num_taps),
            ("block_len", &self.block_len),
            ("list_size", &self.list_size),
            ("ebn0_grid", &self.ebn0_grid),
            ("train_ebn0_db", &self.train_ebn0_db),
            ("num_blocks", &self.num_blocks),
            ("info_bits", &self.info_bits),
            ("master_seed", &self.seed),
            ("output_dir", &self.output_dir),
            ("strategy", &self.strategy),
            ("epsilon", &self.epsilon),
            ("sphere_counts", &self.sphere_counts),
            ("epochs", &self.epochs),
            ("learning_rate", &self.learning_rate),
            ("batch_size", &self.batch_size),
            ("patience", &self.patience),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.coded {
            cfg.coded = true;
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compare h(t) with its orthonormal-basis expansion.
    LemmaCheck,
    /// Write baseline-decoder training pairs at --train-ebn0-db.
    GenerateData,
    /// Train the radius network on a dataset.
    Train {
        /// Defaults to the dataset name generate-data uses.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Where to write the model; defaults to the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the Monte-Carlo comparison over the Eb/N0 grid.
    Simulate {
        /// Trained model; defaults to the name train uses for --train-ebn0-db.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Analytic BPSK over AWGN bit error rate.
    BerReference,
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn warn_flat_band(cfg: &ExperimentConfig) -> Result<()> {
    let link = FtnLink::new(cfg.tau, cfg.beta_h, cfg.beta_v, cfg.num_taps, cfg.block_len)?;
    if !link.flat_band_ok() {
        eprintln!(
            "warning: with beta_v = {} the flat band of V(f) ends below the band edge of h(t); \
             the link uses the expansion coefficients as given",
            cfg.beta_v
        );
    }
    Ok(())
}

fn cmd_lemma_check(cfg: &ExperimentConfig) -> Result<()> {
    let report = lemma_check(cfg)?;
    let path = cfg.output_dir.join(format!("lemma_tau{}.csv", cfg.tau));
    write_lemma_csv(&path, &report)?;
    println!(
        "tau = {}: {}, max error {:.4e} ({:.3}% of h(0))",
        report.tau,
        if report.in_region {
            "in-region"
        } else {
            "out-of-region"
        },
        report.max_error,
        100.0 * report.max_error / report.peak
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_generate_data(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    warn_flat_band(cfg)?;
    let set = generate_data(cfg)?;
    let path = cfg
        .output_dir
        .join(dataset_file_name(cfg.tau, cfg.train_ebn0_db));
    set.save(&path)?;
    let stats = estimate_delta_d(&set.samples)?;
    let hist = cfg.output_dir.join(format!(
        "radius_hist_tau{}_ebn0{}.csv",
        cfg.tau, cfg.train_ebn0_db
    ));
    write_radius_histogram(&hist, &stats)?;
    println!(
        "{} samples, radius mean {} std {} skewness {}",
        set.samples.len(),
        num(stats.mean),
        num(stats.std),
        num(stats.skewness)
    );
    println!("wrote {} and {}", path.display(), hist.display());
    Ok(())
}

fn cmd_train(cfg: &ExperimentConfig, dataset: Option<&Path>, model: Option<&Path>) -> Result<()> {
    cfg.training_config().validate()?;
    let default_data = cfg
        .output_dir
        .join(dataset_file_name(cfg.tau, cfg.train_ebn0_db));
    let data_path = dataset.unwrap_or(&default_data);
    let set = TrainingSet::load(data_path)?;
    let outcome = train_model(cfg, &set)?;
    let meta = &outcome.model.meta;
    let model_path = match model {
        Some(p) => p.to_path_buf(),
        None => cfg.output_dir.join(model_file_name(meta.tau, meta.ebn0_db)),
    };
    outcome.model.save(&model_path)?;
    let loss_path = cfg
        .output_dir
        .join(format!("loss_tau{}_ebn0{}.csv", meta.tau, meta.ebn0_db));
    write_loss_csv(&loss_path, &outcome.report)?;
    let r = &outcome.report;
    println!(
        "{} epochs, held-out MSE {} -> {} (best epoch {}{}), delta_d {}",
        r.train_loss.len() - 1,
        num(r.holdout_loss[0]),
        num(r.holdout_loss[r.best_epoch]),
        r.best_epoch,
        if r.stopped_early {
            ", stopped early"
        } else {
            ""
        },
        num(meta.delta_d)
    );
    println!("wrote {} and {}", model_path.display(), loss_path.display());
    Ok(())
}

fn print_rows(rows: &[ResultRow]) {
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>10} {:>12} {:>10}",
        "Eb/N0", "ber", "ber_orig", "ber_uncoded", "list", "flop_ratio", "fallbacks"
    );
    for r in rows {
        println!(
            "{:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.2} {:>12.4} {:>10}",
            r.ebn0_db, r.ber, r.ber_orig, r.ber_uncoded, r.avg_list_size, r.flop_ratio, r.fallbacks
        );
    }
}

fn cmd_simulate(cfg: &ExperimentConfig, model: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    warn_flat_band(cfg)?;
    let trained = if cfg.strategy.runs_learned() {
        let default = cfg
            .output_dir
            .join(model_file_name(cfg.tau, cfg.train_ebn0_db));
        Some(TrainedModel::load(model.unwrap_or(&default))?)
    } else {
        None
    };
    let rows = simulate(cfg, trained.as_ref())?;
    let kind = if cfg.coded { "coded" } else { "uncoded" };
    let path = cfg.output_dir.join(format!(
        "results_tau{}_{kind}_{}.csv",
        cfg.tau, cfg.strategy
    ));
    write_results_csv(&path, &rows, &cfg.strategy.to_string())?;
    print_rows(&rows);
    let fallbacks: u64 = rows.iter().map(|r| r.fallbacks).sum();
    if fallbacks > 0 {
        eprintln!("warning: the learned radius was unusable on {fallbacks} blocks; those used the noise radius");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_ber_reference(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.ebn0_grid_db.is_empty() {
        return Err(Error::InvalidParameter("empty Eb/N0 grid".into()));
    }
    let rows = ber_reference(&cfg.ebn0_grid_db);
    let path = cfg.output_dir.join("ber_reference.csv");
    write_ber_reference(&path, &rows)?;
    for (e, b) in &rows {
        println!("{e:>8} {b:.6e}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        // A malformed config file is a configuration error, not an I/O one.
        cfg.apply_file(path).map_err(|e| match e {
            Error::Parse { .. } => Error::InvalidParameter(e.to_string()),
            e => e,
        })?;
    }
    cli.overrides.apply(&mut cfg)?;
    match &cli.command {
        Command::LemmaCheck => cmd_lemma_check(&cfg),
        Command::GenerateData => cmd_generate_data(&cfg),
        Command::Train { dataset, model } => cmd_train(&cfg, dataset.as_deref(), model.as_deref()),
        Command::Simulate { model } => cmd_simulate(&cfg, model.as_deref()),
        Command::BerReference => cmd_ber_reference(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
