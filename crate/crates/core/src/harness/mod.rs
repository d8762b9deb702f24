//! Experiment configs, seeded parallel trials, metrics, and CSV/SVG output.

mod config;
mod metrics;
mod run;
mod svg;

pub use config::{load_config, load_config_file, ExperimentConfig, CHECKPOINT_EVERY, DEFAULT_IPD_POPULATION, KEYS};
pub use metrics::{
    confidence_band, fraction_of_optimal, optimal_occupancy, q_gap, table_q_gap, visitation_metric,
    visitation_vs_optimal, MetricRow, MetricsTable, OptimalityBaseline, CSV_HEADER,
};
pub use run::{
    info_rows, probe_config, run_blocks, run_experiment, run_team_size, run_trial, trial_rng, DEFAULT_INFO_EPSILON,
    DEFAULT_INFO_MU,
};
pub use svg::{bar_chart, line_chart, write_svg, BarGroup, Series};

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Run manifest: config hash, seed, crate version and the canonical config.
pub fn manifest_text(cfg: &ExperimentConfig, command: &str) -> String {
    format!(
        "command = {command}\nconfig_sha256 = {}\nseed = {}\nversion = {}\n\n{}",
        cfg.hash(),
        cfg.seed,
        env!("CARGO_PKG_VERSION"),
        cfg.to_text()
    )
}

pub fn write_manifest(cfg: &ExperimentConfig, dir: &Path, command: &str) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest_text(cfg, command)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Appends metric blocks to a CSV file, flushing after each one so an
/// interrupted sweep keeps every finished team size.
pub struct BlockWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl BlockWriter {
    /// Creates (truncating) `path` and writes the header.
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BlockWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(f),
        };
        MetricsTable::new().write_csv(&mut w.out, true)?;
        w.flush()?;
        Ok(w)
    }

    /// Reopens an existing file for appending.
    pub fn append(path: &Path) -> Result<Self> {
        let f = OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?;
        Ok(BlockWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(f),
        })
    }

    pub fn write_block(&mut self, rows: &[MetricRow]) -> Result<()> {
        let mut t = MetricsTable::new();
        t.extend(rows.iter().cloned());
        t.write_csv(&mut self.out, false)?;
        self.flush()
    }

    fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Mean ± band curve of `metric` against checkpoint, one series per team size.
pub fn metric_curves(table: &MetricsTable, metric: &str) -> Vec<Series> {
    table
        .team_sizes()
        .into_iter()
        .map(|n| Series {
            label: format!("n={n}"),
            points: table
                .series(metric, n)
                .into_iter()
                .filter_map(|(cp, vals)| confidence_band(&vals).map(|(m, h)| (cp as f64, m, h)))
                .collect(),
        })
        .filter(|s| !s.points.is_empty())
        .collect()
}

/// Writes the standard figures for a finished table into `dir` and returns
/// their paths.
pub fn write_figures(table: &MetricsTable, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let env = cfg.env.name();
    for (metric, file, label) in [
        ("mean_step_reward", "reward.svg", "mean team reward per step"),
        ("fraction_of_optimal", "fraction_of_optimal.svg", "fraction of optimal"),
        ("q_gap", "q_gap.svg", "normalised Q gap"),
    ] {
        let curves = metric_curves(table, metric);
        if curves.is_empty() {
            continue;
        }
        let path = dir.join(file);
        write_svg(&path, &line_chart(&curves, &format!("{env}: {label}"), "episode", label))?;
        written.push(path);
    }
    if let Some(states) = cfg.env.physical_states() {
        let names: Vec<&str> = (0..states).map(visitation_metric).collect();
        let groups: Vec<BarGroup> = table
            .team_sizes()
            .into_iter()
            .map(|n| BarGroup {
                label: n.to_string(),
                bars: names
                    .iter()
                    .map(|m| confidence_band(&table.final_values(m, n)).unwrap_or((0.0, 0.0)))
                    .collect(),
            })
            .collect();
        if !groups.is_empty() {
            let legend: Vec<&str> = ["s_c", "s_r", "s_3", "s_4"][..states].to_vec();
            let path = dir.join("visitation.svg");
            write_svg(
                &path,
                &bar_chart(&groups, &legend, &format!("{env}: visitation vs optimal"), "team size", "deviation"),
            )?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_writer_appends_readable_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut w = BlockWriter::create(&path).unwrap();
        let row = |t| MetricRow {
            trial: t,
            team_size: 2,
            checkpoint: 10,
            metric: "q_gap".into(),
            value: 0.25,
        };
        w.write_block(&[row(0)]).unwrap();
        // readable mid-run
        assert_eq!(MetricsTable::read_csv_file(&path).unwrap().len(), 1);
        w.write_block(&[row(1)]).unwrap();
        drop(w);
        BlockWriter::append(&path).unwrap().write_block(&[row(2)]).unwrap();
        let back = MetricsTable::read_csv_file(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.rows()[2].trial, 2);
    }

    #[test]
    fn manifest_carries_hash() {
        let cfg = load_config("env = twostates\nseed = 9\n").unwrap();
        let m = manifest_text(&cfg, "run");
        assert!(m.contains(&cfg.hash()));
        assert!(m.contains("seed = 9"));
    }
}
