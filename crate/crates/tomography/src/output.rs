//! Flat-file artifacts: CSV tables and JSON metadata.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tomography_core::sweep::{RunOutcome, SuccessGrid, ThresholdCurve};

use crate::error::{CliError, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

/// Writes a CSV file from a header and string rows.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(path))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const RUNS_HEADER: [&str; 8] = ["experiment", "kind", "t", "d", "run", "seed", "best_loss", "best_acc"];

pub fn run_row(experiment: &str, o: &RunOutcome) -> Vec<String> {
    vec![
        experiment.to_string(),
        o.kind.as_str().to_string(),
        o.t.to_string(),
        o.d.to_string(),
        o.run.to_string(),
        o.seed.to_string(),
        o.best_loss.to_string(),
        opt(o.best_accuracy),
    ]
}

pub fn write_runs(path: &Path, experiment: &str, outcomes: &[RunOutcome]) -> Result<()> {
    write_csv(path, &RUNS_HEADER, outcomes.iter().map(|o| run_row(experiment, o)))
}

pub fn write_grid(path: &Path, grid: &SuccessGrid) -> Result<()> {
    write_csv(
        path,
        &["t", "d", "threshold", "metric_kind", "successes", "runs", "p_success"],
        grid.cells().iter().map(|c| {
            vec![
                c.t.to_string(),
                c.d.to_string(),
                c.threshold.to_string(),
                c.metric.as_str().to_string(),
                c.successes.to_string(),
                c.runs.to_string(),
                c.probability().to_string(),
            ]
        }),
    )
}

/// Unreached thresholds leave `d_star` empty.
pub fn write_thresholds(path: &Path, curves: &[ThresholdCurve]) -> Result<()> {
    write_csv(
        path,
        &["t", "threshold", "metric_kind", "delta", "d_star"],
        curves.iter().flat_map(|c| {
            c.points.iter().map(move |p| {
                vec![
                    c.t.to_string(),
                    p.threshold.to_string(),
                    c.metric.as_str().to_string(),
                    c.delta.to_string(),
                    opt(p.d_star),
                ]
            })
        }),
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("metadata serializes");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

/// Paths of everything a run wrote, in write order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

impl Artifacts {
    pub fn push(&mut self, p: PathBuf) -> &Path {
        self.files.push(p);
        self.files.last().unwrap()
    }
}
