//! Success grids over (burn-in step, training dimension, threshold) and
//! threshold-training-dimension extraction.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Which sublevel (or super-level) set a threshold refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricKind {
    /// Success when the best training loss is at or below the threshold.
    Loss,
    /// Success when the best training accuracy is at or above the threshold.
    Accuracy,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Loss => "loss",
            MetricKind::Accuracy => "accuracy",
        }
    }
}

/// How the training chart was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubspaceKind {
    Full,
    Random,
    BurnIn,
    Lottery,
    Linearized,
    Ticket,
}

impl SubspaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SubspaceKind::Full => "full",
            SubspaceKind::Random => "random",
            SubspaceKind::BurnIn => "burn-in",
            SubspaceKind::Lottery => "lottery",
            SubspaceKind::Linearized => "linearized",
            SubspaceKind::Ticket => "ticket",
        }
    }
}

/// Summary of one constrained run, as it enters a success grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub kind: SubspaceKind,
    /// Burn-in steps (0 for random affine subspaces).
    pub t: usize,
    /// Training dimension.
    pub d: usize,
    pub run: usize,
    /// Stream id the run was driven by.
    pub seed: u64,
    pub best_loss: f64,
    pub best_accuracy: Option<f64>,
}

impl RunOutcome {
    pub fn succeeds(&self, metric: MetricKind, threshold: f64) -> bool {
        match metric {
            MetricKind::Loss => self.best_loss <= threshold,
            MetricKind::Accuracy => self.best_accuracy.is_some_and(|a| a >= threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdAxis {
    pub metric: MetricKind,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellCount {
    pub t: usize,
    pub d: usize,
    pub metric: MetricKind,
    pub threshold_index: usize,
    pub threshold: f64,
    pub successes: usize,
    pub runs: usize,
}

impl CellCount {
    pub fn probability(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.successes as f64 / self.runs as f64
        }
    }
}

/// Empirical success probabilities on a `t × d × threshold` lattice together
/// with the run records they were counted from.
///
/// Outcomes are kept sorted by `(t, d, run)`, so the grid does not depend on
/// the order in which runs finished.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessGrid {
    dims: Vec<usize>,
    burn_in: Vec<usize>,
    axes: Vec<ThresholdAxis>,
    outcomes: Vec<RunOutcome>,
    cells: Vec<CellCount>,
}

impl SuccessGrid {
    pub fn new(
        mut dims: Vec<usize>,
        mut burn_in: Vec<usize>,
        axes: Vec<ThresholdAxis>,
        mut outcomes: Vec<RunOutcome>,
    ) -> Result<Self> {
        dims.sort_unstable();
        dims.dedup();
        burn_in.sort_unstable();
        burn_in.dedup();
        if dims.is_empty() {
            return Err(Error::invalid("dims", "grid needs at least one training dimension"));
        }
        if burn_in.is_empty() {
            return Err(Error::invalid("burn_in", "grid needs at least one burn-in value"));
        }
        if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
            return Err(Error::invalid("thresholds", "threshold axes must be nonempty"));
        }
        outcomes.sort_by_key(|o| (o.t, o.d, o.run));
        for w in outcomes.windows(2) {
            if (w[0].t, w[0].d, w[0].run) == (w[1].t, w[1].d, w[1].run) {
                return Err(Error::invalid(
                    "outcomes",
                    format!("duplicate run (t={}, d={}, run={})", w[0].t, w[0].d, w[0].run),
                ));
            }
        }
        if let Some(o) = outcomes
            .iter()
            .find(|o| dims.binary_search(&o.d).is_err() || burn_in.binary_search(&o.t).is_err())
        {
            return Err(Error::invalid(
                "outcomes",
                format!("run at (t={}, d={}) lies outside the grid axes", o.t, o.d),
            ));
        }

        let mut cells = Vec::new();
        for &t in &burn_in {
            for &d in &dims {
                let runs: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.t == t && o.d == d).collect();
                for axis in &axes {
                    for (threshold_index, &threshold) in axis.values.iter().enumerate() {
                        let successes = runs.iter().filter(|o| o.succeeds(axis.metric, threshold)).count();
                        cells.push(CellCount {
                            t,
                            d,
                            metric: axis.metric,
                            threshold_index,
                            threshold,
                            successes,
                            runs: runs.len(),
                        });
                    }
                }
            }
        }
        Ok(Self { dims, burn_in, axes, outcomes, cells })
    }

    /// Union of the runs of two grids over identical axes.
    pub fn merge(self, other: SuccessGrid) -> Result<SuccessGrid> {
        if self.axes != other.axes {
            return Err(Error::MismatchedAxes);
        }
        let mut dims = self.dims;
        dims.extend(other.dims);
        let mut burn_in = self.burn_in;
        burn_in.extend(other.burn_in);
        let mut outcomes = self.outcomes;
        outcomes.extend(other.outcomes);
        SuccessGrid::new(dims, burn_in, self.axes, outcomes)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn burn_in(&self) -> &[usize] {
        &self.burn_in
    }

    pub fn axes(&self) -> &[ThresholdAxis] {
        &self.axes
    }

    pub fn axis(&self, metric: MetricKind) -> Option<&ThresholdAxis> {
        self.axes.iter().find(|a| a.metric == metric)
    }

    pub fn outcomes(&self) -> &[RunOutcome] {
        &self.outcomes
    }

    pub fn cells(&self) -> &[CellCount] {
        &self.cells
    }

    pub fn cell(&self, t: usize, d: usize, metric: MetricKind, threshold_index: usize) -> Option<&CellCount> {
        self.cells
            .iter()
            .find(|c| c.t == t && c.d == d && c.metric == metric && c.threshold_index == threshold_index)
    }

    pub fn probability(&self, t: usize, d: usize, metric: MetricKind, threshold_index: usize) -> Option<f64> {
        self.cell(t, d, metric, threshold_index).map(CellCount::probability)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    pub threshold: f64,
    /// Smallest measured `d` reaching the success criterion; `None` when no
    /// dimension in the grid does.
    pub d_star: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurve {
    pub label: String,
    pub metric: MetricKind,
    pub t: usize,
    pub delta: f64,
    pub points: Vec<ThresholdPoint>,
}

impl ThresholdCurve {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Threshold training dimension: for every threshold on `metric`'s axis, the
/// smallest measured `d` whose empirical success probability is `≥ 1 − δ`.
pub fn extract_threshold(
    grid: &SuccessGrid,
    metric: MetricKind,
    delta: f64,
    t: usize,
) -> Result<ThresholdCurve> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", "must lie in (0, 1)"));
    }
    if grid.burn_in.binary_search(&t).is_err() {
        return Err(Error::invalid("t", format!("burn-in value {t} is not on the grid")));
    }
    let axis = grid
        .axis(metric)
        .ok_or_else(|| Error::invalid("metric", format!("grid has no {} axis", metric.as_str())))?;
    let points = axis
        .values
        .iter()
        .enumerate()
        .map(|(idx, &threshold)| {
            let d_star = grid.dims.iter().copied().find(|&d| {
                grid.cell(t, d, metric, idx)
                    .is_some_and(|c| c.runs > 0 && c.successes as f64 >= (1.0 - delta) * c.runs as f64 - 1e-9)
            });
            ThresholdPoint { threshold, d_star }
        })
        .collect();
    Ok(ThresholdCurve { label: format!("t={t}"), metric, t, delta, points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub label: String,
    pub t: usize,
    pub d_star: Option<usize>,
    /// 1-based competition rank; equal `d_star` share a rank.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub threshold: f64,
    pub entries: Vec<RankedEntry>,
    /// Pairs `(shorter burn-in, longer burn-in)` where the longer burn-in
    /// needed strictly more dimensions.
    pub ordering_violations: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub metric: MetricKind,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    /// Rows where at least one curve is defined.
    pub fn rows_with_any_defined(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.entries.iter().any(|e| e.d_star.is_some()))
    }
}

// `None` means the threshold was never reached, which orders after every
// measured dimension.
fn d_key(d: Option<usize>) -> usize {
    d.unwrap_or(usize::MAX)
}

/// Ranks methods by threshold training dimension at every threshold and
/// flags rows where more burn-in did not lower (or keep) the dimension.
pub fn compare_methods(curves: &[ThresholdCurve]) -> Result<ComparisonReport> {
    let Some(first) = curves.first() else {
        return Err(Error::invalid("curves", "nothing to compare"));
    };
    for c in &curves[1..] {
        let same_axis = c.metric == first.metric
            && c.points.len() == first.points.len()
            && c.points.iter().zip(&first.points).all(|(a, b)| a.threshold == b.threshold);
        if !same_axis {
            return Err(Error::MismatchedAxes);
        }
    }
    let rows = (0..first.points.len())
        .map(|i| {
            let mut entries: Vec<RankedEntry> = curves
                .iter()
                .map(|c| RankedEntry { label: c.label.clone(), t: c.t, d_star: c.points[i].d_star, rank: 0 })
                .collect();
            entries.sort_by_key(|e| d_key(e.d_star));
            for k in 0..entries.len() {
                entries[k].rank = if k > 0 && entries[k].d_star == entries[k - 1].d_star {
                    entries[k - 1].rank
                } else {
                    k + 1
                };
            }
            let mut ordering_violations = Vec::new();
            for a in curves {
                for b in curves {
                    if a.t < b.t && d_key(b.points[i].d_star) > d_key(a.points[i].d_star) {
                        ordering_violations.push((a.label.clone(), b.label.clone()));
                    }
                }
            }
            ComparisonRow { threshold: first.points[i].threshold, entries, ordering_violations }
        })
        .collect();
    Ok(ComparisonReport { metric: first.metric, rows })
}
