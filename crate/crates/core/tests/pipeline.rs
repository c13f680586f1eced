use ftn_core::harness::{
    dataset_file_name, generate_data, model_file_name, simulate, train_model_with_widths,
    write_results_csv, ExperimentConfig, StrategyChoice, RESULT_COLUMNS,
};
use ftn_core::radius_net::{TrainedModel, TrainingSet, Widths};

#[test]
fn files_carry_the_whole_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        num_blocks: 60,
        epochs: 3,
        ebn0_grid_db: vec![6.0, 10.0],
        output_dir: dir.path().to_path_buf(),
        ..Default::default()
    };

    let data_path = dir
        .path()
        .join(dataset_file_name(cfg.tau, cfg.train_ebn0_db));
    generate_data(&cfg).unwrap().save(&data_path).unwrap();
    let set = TrainingSet::load(&data_path).unwrap();
    assert_eq!(set.samples.len(), 60);

    let widths = Widths {
        rnn1: 8,
        rnn2: 8,
        dense: 4,
    };
    let outcome = train_model_with_widths(&cfg, &set, widths).unwrap();
    assert_eq!(outcome.report.train_loss.len(), 4);
    let model_path = dir.path().join(model_file_name(cfg.tau, cfg.train_ebn0_db));
    outcome.model.save(&model_path).unwrap();
    let model = TrainedModel::load(&model_path).unwrap();
    assert_eq!(model.net.params(), outcome.model.net.params());

    let run = ExperimentConfig {
        num_blocks: 20,
        strategy: StrategyChoice::Both,
        ..cfg
    };
    let rows = simulate(&run, Some(&model)).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.avg_list_size, 32.0);
        assert_eq!(r.blocks_run, 20);
        assert!(r.flop_ratio > 0.0);
    }
    let csv_path = dir.path().join("results/ber.csv");
    write_results_csv(&csv_path, &rows, "both").unwrap();
    let text = std::fs::read_to_string(csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[2].split(',').count(), RESULT_COLUMNS.len());
}

#[test]
fn model_for_another_operating_point_is_refused() {
    let cfg = ExperimentConfig {
        num_blocks: 20,
        epochs: 1,
        ..Default::default()
    };
    let set = generate_data(&cfg).unwrap();
    let widths = Widths {
        rnn1: 4,
        rnn2: 4,
        dense: 2,
    };
    let model = train_model_with_widths(&cfg, &set, widths).unwrap().model;
    let other = ExperimentConfig { tau: 0.7, ..cfg };
    assert!(simulate(&other, Some(&model)).is_err());
}
