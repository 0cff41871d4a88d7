//! JSON experiment configuration.
//!
//! A config file holds the shared run settings plus an `experiment` object
//! whose shape is fixed by the chosen subcommand. Unknown keys are rejected
//! and every parse error carries the JSON path of the offending field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tomography_core::neural::AdamConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    QuadraticSweep,
    NnSweep,
    WidthEstimate,
    AffineDistance,
    Lottery,
    Ticket,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::QuadraticSweep => "quadratic-sweep",
            Self::NnSweep => "nn-sweep",
            Self::WidthEstimate => "width-estimate",
            Self::AffineDistance => "affine-distance",
            Self::Lottery => "lottery",
            Self::Ticket => "ticket",
        }
    }
}

fn default_delta() -> f64 {
    0.1
}

fn default_runs() -> usize {
    10
}

fn default_workers() -> usize {
    1
}

/// Shared settings plus the raw experiment body.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    seed: u64,
    #[serde(default = "default_runs")]
    runs: usize,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default = "default_workers")]
    workers: usize,
    #[serde(default)]
    out: Option<PathBuf>,
    experiment: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub runs: usize,
    pub delta: f64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QuadraticSweep(QuadraticSweep),
    NnSweep(NnSweep),
    WidthEstimate(WidthEstimate),
    AffineDistance(AffineDistance),
    Lottery(Lottery),
    Ticket(Ticket),
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Self::QuadraticSweep(_) => ExperimentKind::QuadraticSweep,
            Self::NnSweep(_) => ExperimentKind::NnSweep,
            Self::WidthEstimate(_) => ExperimentKind::WidthEstimate,
            Self::AffineDistance(_) => ExperimentKind::AffineDistance,
            Self::Lottery(_) => ExperimentKind::Lottery,
            Self::Ticket(_) => ExperimentKind::Ticket,
        }
    }
}

/// An explicit list, an arithmetic range, or powers of two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimGrid {
    List(Vec<usize>),
    Range { from: usize, to: usize, step: usize },
    Powers { powers_of_two_up_to: usize },
}

impl DimGrid {
    pub fn values(&self) -> Result<Vec<usize>, String> {
        let v: Vec<usize> = match self {
            Self::List(v) => v.clone(),
            Self::Range { from, to, step } => {
                if *step == 0 || from > to {
                    return Err("range needs step > 0 and from <= to".into());
                }
                (*from..=*to).step_by(*step).collect()
            }
            Self::Powers { powers_of_two_up_to } => {
                let mut v = vec![];
                let mut p = 1;
                while p <= *powers_of_two_up_to {
                    v.push(p);
                    p *= 2;
                }
                v
            }
        };
        if v.is_empty() {
            return Err("grid is empty".into());
        }
        Ok(v)
    }
}

/// Threshold values: explicit, log-spaced, or linearly spaced. Endpoints are
/// included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueGrid {
    List(Vec<f64>),
    Log { log_from: f64, log_to: f64, count: usize },
    Linear { from: f64, to: f64, count: usize },
}

impl ValueGrid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let spaced = |a: f64, b: f64, n: usize| -> Vec<f64> {
            if n == 1 {
                vec![a]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            }
        };
        let v = match self {
            Self::List(v) => v.clone(),
            Self::Log { log_from, log_to, count } => {
                if !(*log_from > 0.0 && *log_to > 0.0) {
                    return Err("log grid endpoints must be positive".into());
                }
                spaced(log_from.ln(), log_to.ln(), *count).into_iter().map(f64::exp).collect()
            }
            Self::Linear { from, to, count } => spaced(*from, *to, *count),
        };
        if v.is_empty() {
            return Err("grid is empty".into());
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err("grid values must be finite".into());
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectrumConfig {
    Bimodal { dimension: usize, num_small: usize, lambda_small: f64, lambda_large: f64 },
    Bulk { dimension: usize, lambda_min: f64, lambda_max: f64 },
    Explicit { eigenvalues: Vec<f64> },
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self::Bimodal { dimension: 100, num_small: 50, lambda_small: 0.01, lambda_large: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    #[default]
    Exact,
    Adam,
}

/// Adam settings with the optimizer defaults filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub eval_every: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let a = AdamConfig::default();
        Self {
            learning_rate: a.learning_rate,
            beta1: a.beta1,
            beta2: a.beta2,
            epsilon: a.epsilon,
            batch_size: a.batch_size,
            epochs: a.epochs,
            eval_every: a.eval_every,
        }
    }
}

impl From<OptimizerConfig> for AdamConfig {
    fn from(o: OptimizerConfig) -> Self {
        AdamConfig {
            learning_rate: o.learning_rate,
            beta1: o.beta1,
            beta2: o.beta2,
            epsilon: o.epsilon,
            batch_size: o.batch_size,
            epochs: o.epochs,
            eval_every: o.eval_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSweep {
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    /// Distance `R` from the offset to the minimum.
    #[serde(default = "one")]
    pub distance: f64,
    pub dims: DimGrid,
    pub epsilons: ValueGrid,
    #[serde(default)]
    pub solver: Solver,
    /// Used only by the Adam solver.
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    Blobs { classes: usize, per_class: usize, input_dim: usize, separation: f64 },
    Idx { images: PathBuf, labels: PathBuf, limit: usize, classes: usize },
}

impl Default for DataConfig {
    fn default() -> Self {
        Self::Blobs { classes: 10, per_class: 200, input_dim: 20, separation: 3.0 }
    }
}

fn default_hidden() -> Vec<usize> {
    vec![128, 64]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Mlp,
    /// Tangent model around weights trained for `reference_epochs`.
    Linearized {
        reference_epochs: usize,
        #[serde(default = "default_jacobian_limit")]
        jacobian_limit_bytes: u64,
    },
}

fn default_jacobian_limit() -> u64 {
    tomography_core::neural::DEFAULT_JACOBIAN_LIMIT
}

fn default_model() -> ModelConfig {
    ModelConfig::Mlp
}

/// Accuracy and loss threshold axes; at least one must be present.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default)]
    pub accuracy: Option<ValueGrid>,
    #[serde(default)]
    pub loss: Option<ValueGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnSweep {
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    pub dims: DimGrid,
    /// Burn-in step counts; 0 is the random affine subspace.
    #[serde(default = "zero_list")]
    pub burn_in: Vec<usize>,
    pub thresholds: Thresholds,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

fn zero_list() -> Vec<usize> {
    vec![0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryModeConfig {
    #[default]
    Deltas,
    Snapshots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lottery {
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    pub dims: DimGrid,
    pub thresholds: Thresholds,
    /// Epochs of full-space training whose trajectory defines the subspace.
    pub full_epochs: usize,
    #[serde(default = "one_usize")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub trajectory: TrajectoryModeConfig,
    /// Rewind step `t`; the subspace is anchored at `w_t`.
    #[serde(default)]
    pub rewind: usize,
    /// Also train random subspaces at the same offset for comparison.
    #[serde(default = "yes")]
    pub baseline: bool,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Optimizer for the full-space trajectory; defaults to `optimizer`.
    #[serde(default)]
    pub full_optimizer: Option<OptimizerConfig>,
}

fn one_usize() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ticket {
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Fractions of parameters kept after magnitude pruning.
    pub keep_fractions: Vec<f64>,
    #[serde(default = "two")]
    pub pretrain_epochs: usize,
    pub thresholds: Thresholds,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum WidthTarget {
    Ellipsoid {
        radii: Vec<f64>,
    },
    /// Sublevel set `{L ≤ ε}` of a quadratic well.
    Sublevel {
        spectrum: SpectrumConfig,
        epsilon: f64,
    },
    SphereCloud {
        dimension: usize,
        points: usize,
    },
    Points {
        points: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthEstimate {
    pub target: WidthTarget,
    pub num_gaussians: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineDistance {
    pub dimension: usize,
    /// `(n, d)`: target dimension and chart dimension.
    pub pairs: Vec<(usize, usize)>,
    #[serde(default = "one")]
    pub offset_distance: f64,
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

fn parse_body<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| CliError::Config {
        path: format!("experiment.{}", e.path()),
        message: e.inner().to_string(),
    })
}

impl ExperimentConfig {
    /// Parses a config for experiment `kind` from JSON text.
    pub fn from_json(text: &str, kind: ExperimentKind) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config { path: e.path().to_string(), message: e.inner().to_string() })?;
        let experiment = match kind {
            ExperimentKind::QuadraticSweep => Experiment::QuadraticSweep(parse_body(raw.experiment)?),
            ExperimentKind::NnSweep => Experiment::NnSweep(parse_body(raw.experiment)?),
            ExperimentKind::WidthEstimate => Experiment::WidthEstimate(parse_body(raw.experiment)?),
            ExperimentKind::AffineDistance => Experiment::AffineDistance(parse_body(raw.experiment)?),
            ExperimentKind::Lottery => Experiment::Lottery(parse_body(raw.experiment)?),
            ExperimentKind::Ticket => Experiment::Ticket(parse_body(raw.experiment)?),
        };
        let cfg = Self {
            name: raw.name,
            seed: raw.seed,
            runs: raw.runs,
            delta: raw.delta,
            workers: raw.workers,
            out: raw.out,
            experiment,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, kind: ExperimentKind) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_json(&text, kind)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad =
            |path: &str, message: &str| Err(CliError::Config { path: path.into(), message: message.into() });
        if self.name.is_empty() {
            return bad("name", "must be nonempty");
        }
        if self.runs == 0 {
            return bad("runs", "must be at least 1");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", "must lie in (0, 1)");
        }
        if self.workers == 0 {
            return bad("workers", "must be at least 1");
        }
        let grid_err = |path: &str, r: Result<(), String>| {
            r.map_err(|m| CliError::Config { path: path.into(), message: m })
        };
        let thresholds = |t: &Thresholds| -> Result<(), CliError> {
            if t.accuracy.is_none() && t.loss.is_none() {
                return bad("experiment.thresholds", "need an accuracy or loss grid");
            }
            if let Some(g) = &t.accuracy {
                grid_err("experiment.thresholds.accuracy", g.values().map(|_| ()))?;
            }
            if let Some(g) = &t.loss {
                grid_err("experiment.thresholds.loss", g.values().map(|_| ()))?;
            }
            Ok(())
        };
        match &self.experiment {
            Experiment::QuadraticSweep(q) => {
                grid_err("experiment.dims", q.dims.values().map(|_| ()))?;
                grid_err("experiment.epsilons", q.epsilons.values().map(|_| ()))?;
                if !(q.distance > 0.0) {
                    return bad("experiment.distance", "must be positive");
                }
            }
            Experiment::NnSweep(n) => {
                grid_err("experiment.dims", n.dims.values().map(|_| ()))?;
                if n.burn_in.is_empty() {
                    return bad("experiment.burn_in", "must be nonempty");
                }
                thresholds(&n.thresholds)?;
            }
            Experiment::Lottery(l) => {
                grid_err("experiment.dims", l.dims.values().map(|_| ()))?;
                thresholds(&l.thresholds)?;
                if l.snapshot_every == 0 {
                    return bad("experiment.snapshot_every", "must be at least 1");
                }
                if l.rewind % l.snapshot_every != 0 {
                    return bad("experiment.rewind", "must be a multiple of snapshot_every");
                }
            }
            Experiment::Ticket(t) => {
                thresholds(&t.thresholds)?;
                if t.keep_fractions.is_empty() {
                    return bad("experiment.keep_fractions", "must be nonempty");
                }
                if t.keep_fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
                    return bad("experiment.keep_fractions", "fractions must lie in (0, 1]");
                }
            }
            Experiment::WidthEstimate(w) => {
                if w.num_gaussians < 2 {
                    return bad("experiment.num_gaussians", "need at least 2 draws");
                }
            }
            Experiment::AffineDistance(a) => {
                if a.pairs.is_empty() {
                    return bad("experiment.pairs", "must be nonempty");
                }
                if a.pairs.iter().any(|&(n, _)| n >= a.dimension) {
                    return bad("experiment.pairs", "target dimension n must be below dimension");
                }
            }
        }
        Ok(())
    }
}
