//! CSV writers. Every file starts with a `# <kind> v<schema>` comment line;
//! reals carry twelve significant digits.

use std::fmt::Write as _;
use std::path::Path;

use super::experiments::{LemmaReport, ResultRow};
use crate::radius_net::{fmt12, RadiusStats, TrainReport};
use crate::{Error, Result};

pub const CSV_SCHEMA: u32 = 1;

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        fmt12(v)
    }
}

fn write(path: &Path, text: String) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub const RESULT_COLUMNS: [&str; 20] = [
    "ebn0_db",
    "ber",
    "ber_orig",
    "ber_uncoded",
    "avg_list_size",
    "avg_sphere_points_dl",
    "avg_sphere_points_orig",
    "avg_found_dl",
    "avg_found_orig",
    "avg_nodes_dl",
    "avg_nodes_orig",
    "avg_searches_dl",
    "avg_flops_dl",
    "avg_flops_orig",
    "flop_ratio",
    "blocks_run",
    "info_bits",
    "bit_errors",
    "fallbacks",
    "strategy",
];

pub fn results_csv(rows: &[ResultRow], strategy: &str) -> String {
    let mut s = format!(
        "# ftn-results v{CSV_SCHEMA}\n{}\n",
        RESULT_COLUMNS.join(",")
    );
    for r in rows {
        let reals = [
            r.ebn0_db,
            r.ber,
            r.ber_orig,
            r.ber_uncoded,
            r.avg_list_size,
            r.avg_sphere_points_dl,
            r.avg_sphere_points_orig,
            r.avg_found_dl,
            r.avg_found_orig,
            r.avg_nodes_dl,
            r.avg_nodes_orig,
            r.avg_searches_dl,
            r.avg_flops_dl,
            r.avg_flops_orig,
            r.flop_ratio,
        ];
        let mut cells: Vec<String> = reals.iter().map(|&v| num(v)).collect();
        cells.extend([r.blocks_run, r.info_bits, r.bit_errors, r.fallbacks].map(|v| v.to_string()));
        cells.push(strategy.to_string());
        writeln!(s, "{}", cells.join(",")).unwrap();
    }
    s
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow], strategy: &str) -> Result<()> {
    write(path, results_csv(rows, strategy))
}

pub fn write_lemma_csv(path: &Path, report: &LemmaReport) -> Result<()> {
    let mut s = format!(
        "# ftn-lemma v{CSV_SCHEMA}\n# tau = {}\n# verdict = {}\n# max_error = {}\n# relative_error = {}\nt,exact,reconstructed\n",
        report.tau,
        if report.in_region { "in-region" } else { "out-of-region" },
        num(report.max_error),
        num(report.max_error / report.peak),
    );
    for &(t, h, r) in &report.rows {
        writeln!(s, "{},{},{}", num(t), num(h), num(r)).unwrap();
    }
    write(path, s)
}

pub fn write_loss_csv(path: &Path, report: &TrainReport) -> Result<()> {
    let mut s = format!(
        "# ftn-loss v{CSV_SCHEMA}\n# best_epoch = {}\nepoch,train_mse,holdout_mse\n",
        report.best_epoch
    );
    for (k, &t) in report.train_loss.iter().enumerate() {
        let h = report.holdout_loss.get(k).copied().unwrap_or(f64::NAN);
        writeln!(s, "{k},{},{}", num(t), num(h)).unwrap();
    }
    write(path, s)
}

pub fn write_radius_histogram(path: &Path, stats: &RadiusStats) -> Result<()> {
    let h = &stats.histogram;
    let mut s = format!(
        "# ftn-radius-histogram v{CSV_SCHEMA}\n# mean = {}\n# std = {}\n# delta_d = {}\n# skewness = {}\nbin_lo,bin_hi,count\n",
        num(stats.mean),
        num(stats.std),
        num(stats.delta_d),
        num(stats.skewness)
    );
    for (k, c) in h.counts.iter().enumerate() {
        let lo = h.lo + k as f64 * h.width;
        writeln!(s, "{},{},{c}", num(lo), num(lo + h.width)).unwrap();
    }
    write(path, s)
}

pub fn write_ber_reference(path: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut s = format!("# ftn-ber-reference v{CSV_SCHEMA}\nebn0_db,ber\n");
    for &(e, b) in rows {
        writeln!(s, "{},{}", num(e), num(b)).unwrap();
    }
    write(path, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiments::ber_reference;

    #[test]
    fn reference_csv_shape() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/ref.csv");
        write_ber_reference(&p, &ber_reference(&[0.0, 2.0])).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# ftn-ber-reference v1");
        assert_eq!(lines[1], "ebn0_db,ber");
        assert_eq!(lines[2], "0.00000000000e0,7.86496035251e-2");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn nan_cells() {
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(1.5), "1.50000000000e0");
    }
}
