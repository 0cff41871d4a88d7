//! One runner per subcommand. Each runner computes its results in memory
//! (`compute`) and then writes them out (`run`).

pub mod affine;
pub mod lottery;
pub mod nn;
pub mod quadratic;
pub mod ticket;
pub mod width;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use tomography_core::neural::{make_blobs, Dataset};
use tomography_core::numerics::RngStream;
use tomography_core::sweep::{MetricKind, ThresholdAxis};

use crate::config::{DataConfig, Experiment, ExperimentConfig, Thresholds};
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, write_json, Artifacts};

/// Maps `f` over `items` on `workers` threads. Results keep input order, so
/// the output does not depend on scheduling.
pub fn parallel_map<T, U, F>(workers: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect::<Vec<_>>()).into_iter().collect()
}

/// Named random stream for one purpose within an experiment.
pub fn stream(config: &ExperimentConfig, purpose: &str, parts: &[u64]) -> RngStream {
    RngStream::derive(config.seed, &format!("{}/{purpose}", config.name), parts)
}

pub fn load_data(config: &ExperimentConfig, data: &DataConfig) -> Result<Dataset> {
    match data {
        DataConfig::Blobs { classes, per_class, input_dim, separation } => {
            let mut rng = stream(config, "data", &[]).rng();
            Ok(make_blobs(*classes, *per_class, *input_dim, *separation, &mut rng)?)
        }
        DataConfig::Idx { images, labels, limit, classes } => {
            crate::idx::load_idx(images, labels, *limit, *classes)
        }
    }
}

/// Threshold axes in a fixed order: accuracy, then loss.
pub fn threshold_axes(t: &Thresholds) -> Result<Vec<ThresholdAxis>> {
    let mut axes = vec![];
    if let Some(g) = &t.accuracy {
        let values = grid_values(g.values(), "experiment.thresholds.accuracy")?;
        axes.push(ThresholdAxis { metric: MetricKind::Accuracy, values });
    }
    if let Some(g) = &t.loss {
        let values = grid_values(g.values(), "experiment.thresholds.loss")?;
        axes.push(ThresholdAxis { metric: MetricKind::Loss, values });
    }
    Ok(axes)
}

pub(crate) fn grid_values<T>(r: std::result::Result<T, String>, path: &str) -> Result<T> {
    r.map_err(|message| CliError::Config { path: path.into(), message })
}

/// Contents of `metadata.json`.
#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub name: &'a str,
    pub experiment: &'static str,
    pub seed: u64,
    pub runs: usize,
    pub delta: f64,
    pub workers: usize,
    pub version: &'static str,
    pub config: &'a Experiment,
    /// Modelling choices the results depend on.
    pub choices: Vec<&'static str>,
    pub derived: serde_json::Value,
}

impl<'a> Metadata<'a> {
    pub fn new(config: &'a ExperimentConfig, choices: Vec<&'static str>, derived: serde_json::Value) -> Self {
        Self {
            name: &config.name,
            experiment: config.experiment.kind().as_str(),
            seed: config.seed,
            runs: config.runs,
            delta: config.delta,
            workers: config.workers,
            version: env!("CARGO_PKG_VERSION"),
            config: &config.experiment,
            choices,
            derived,
        }
    }
}

/// Output directory: the configured one, else `out/<name>`.
pub fn out_dir(config: &ExperimentConfig) -> PathBuf {
    config.out.clone().unwrap_or_else(|| Path::new("out").join(&config.name))
}

pub(crate) fn prepare_out(config: &ExperimentConfig) -> Result<(PathBuf, Artifacts)> {
    let dir = out_dir(config);
    ensure_dir(&dir)?;
    Ok((dir, Artifacts::default()))
}

pub(crate) fn finish(
    dir: &Path,
    mut artifacts: Artifacts,
    config: &ExperimentConfig,
    choices: Vec<&'static str>,
    derived: serde_json::Value,
) -> Result<Artifacts> {
    let path = artifacts.push(dir.join("metadata.json")).to_path_buf();
    write_json(&path, &Metadata::new(config, choices, derived))?;
    Ok(artifacts)
}

/// Runs whichever experiment `config` describes and writes its artifacts.
pub fn run(config: &ExperimentConfig, svg: bool) -> Result<Artifacts> {
    match &config.experiment {
        Experiment::QuadraticSweep(q) => quadratic::run(config, q, svg),
        Experiment::NnSweep(n) => nn::run(config, n, svg),
        Experiment::WidthEstimate(w) => width::run(config, w),
        Experiment::AffineDistance(a) => affine::run(config, a),
        Experiment::Lottery(l) => lottery::run(config, l, svg),
        Experiment::Ticket(t) => ticket::run(config, t, svg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_input_order() {
        let items: Vec<u64> = (0..200).collect();
        let seq = parallel_map(1, &items, |&x| Ok(x * x)).unwrap();
        let par = parallel_map(8, &items, |&x| Ok(x * x)).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[13], 169);
    }

    #[test]
    fn parallel_map_reports_errors() {
        let items = [1, 2, 3];
        let r = parallel_map(2, &items, |&x| if x == 2 { Err(CliError::Usage("bad".into())) } else { Ok(x) });
        assert!(matches!(r, Err(CliError::Usage(_))));
    }

    #[test]
    fn streams_are_namespaced_by_experiment() {
        let text = |name: &str| {
            format!(r#"{{"name": "{name}", "seed": 1, "experiment": {{"dims": [1], "epsilons": [0.1]}}}}"#)
        };
        let a = ExperimentConfig::from_json(&text("a"), crate::ExperimentKind::QuadraticSweep).unwrap();
        let b = ExperimentConfig::from_json(&text("b"), crate::ExperimentKind::QuadraticSweep).unwrap();
        assert_ne!(stream(&a, "init", &[0]).stream_id, stream(&b, "init", &[0]).stream_id);
        assert_ne!(stream(&a, "init", &[0]).stream_id, stream(&a, "init", &[1]).stream_id);
        assert_eq!(stream(&a, "init", &[0]), stream(&a, "init", &[0]));
    }
}
