//! Random, burn-in and linearized subspace training sweeps on an MLP.

use serde_json::json;
use tomography_core::landscapes::SubspaceBasis;
use tomography_core::neural::{
    init_params, train_chart, train_full, train_in_subspace, AdamConfig, Dataset, FullChart, LinearizedModel,
    MlpArchitecture, MlpObjective, Objective, RunLabel,
};
use tomography_core::sweep::{
    compare_methods, extract_threshold, ComparisonReport, RunOutcome, SubspaceKind, SuccessGrid,
    ThresholdCurve,
};

use super::{finish, grid_values, load_data, parallel_map, prepare_out, stream, threshold_axes};
use crate::config::{ExperimentConfig, ModelConfig, NnSweep};
use crate::error::Result;
use crate::output::{write_csv, write_grid, write_runs, write_text, write_thresholds, Artifacts};
use crate::svg::render_phase_svg;

#[derive(Debug, Clone)]
pub struct NnResult {
    pub num_params: usize,
    pub grid: SuccessGrid,
    /// One curve per `(t, metric)`, `t` ascending, accuracy first.
    pub curves: Vec<ThresholdCurve>,
    pub comparisons: Vec<ComparisonReport>,
}

/// Offsets for one run: `(t, w_t)` for every burn-in value.
struct RunPrep {
    offsets: Vec<(usize, Vec<f64>)>,
    model: Option<LinearizedModel>,
}

pub fn curve_label(kind: SubspaceKind, t: usize) -> String {
    match kind {
        SubspaceKind::Random if t == 0 => "random".into(),
        _ if t == 0 => kind.as_str().into(),
        _ => format!("{} t={t}", kind.as_str()),
    }
}

fn kind_for(model: &ModelConfig, t: usize) -> SubspaceKind {
    match model {
        ModelConfig::Linearized { .. } => SubspaceKind::Linearized,
        ModelConfig::Mlp if t == 0 => SubspaceKind::Random,
        ModelConfig::Mlp => SubspaceKind::BurnIn,
    }
}

fn prepare_run(
    config: &ExperimentConfig,
    n: &NnSweep,
    arch: &MlpArchitecture,
    data: &Dataset,
    burn_in: &[usize],
    run: usize,
) -> Result<RunPrep> {
    let adam: AdamConfig = n.optimizer.into();
    let w0 = init_params(arch, &mut stream(config, "init", &[run as u64]).rng());
    let mlp = MlpObjective::new(arch, data)?;
    let model = match &n.model {
        ModelConfig::Mlp => None,
        ModelConfig::Linearized { reference_epochs, jacobian_limit_bytes } => {
            let cfg = AdamConfig { epochs: *reference_epochs, eval_every: usize::MAX, ..adam };
            let mut rng = stream(config, "reference", &[run as u64]).rng();
            let w_opt = train_full(&mlp, &w0, &cfg, 0, 0, &mut rng)?.final_params;
            Some(LinearizedModel::linearize(arch, &w_opt, data, *jacobian_limit_bytes)?)
        }
    };
    let objective: &dyn Objective = match &model {
        Some(m) => m,
        None => &mlp,
    };
    let max_t = burn_in.iter().copied().max().unwrap_or(0);
    let trajectory = if max_t == 0 {
        vec![w0.clone()]
    } else {
        let cfg = AdamConfig { eval_every: usize::MAX, ..adam };
        let label = RunLabel { kind: SubspaceKind::Full, d: w0.len(), t: 0, seed: 0 };
        let mut rng = stream(config, "burn-in", &[run as u64]).rng();
        train_chart(objective, &FullChart(w0.len()), w0, &cfg, max_t, 1, label, &mut rng)?.trajectory
    };
    let offsets = burn_in.iter().map(|&t| (t, trajectory[t].clone())).collect();
    Ok(RunPrep { offsets, model })
}

fn train_job(
    config: &ExperimentConfig,
    n: &NnSweep,
    objective: &dyn Objective,
    offset: &[f64],
    t: usize,
    d: usize,
    run: usize,
) -> Result<RunOutcome> {
    let basis_stream = stream(config, "basis", &[d as u64, run as u64]);
    let basis = SubspaceBasis::random(offset.to_vec(), d, &mut basis_stream.rng())?;
    let label = RunLabel { kind: kind_for(&n.model, t), d, t, seed: basis_stream.stream_id };
    let mut rng = stream(config, "train", &[d as u64, run as u64]).rng();
    let rec = train_in_subspace(objective, &basis, &n.optimizer.into(), label, &mut rng)?;
    Ok(rec.to_outcome(run))
}

/// Every `(run, t, d)` job of the prepared runs, in that order.
fn train_batch(
    config: &ExperimentConfig,
    n: &NnSweep,
    mlp: &MlpObjective<'_>,
    dims: &[usize],
    preps: &[(usize, RunPrep)],
) -> Result<Vec<RunOutcome>> {
    let jobs: Vec<(usize, usize, usize)> = preps
        .iter()
        .enumerate()
        .flat_map(|(i, (_, p))| (0..p.offsets.len()).flat_map(move |k| dims.iter().map(move |&d| (i, k, d))))
        .collect();
    parallel_map(config.workers, &jobs, |&(i, k, d)| {
        let (run, prep) = &preps[i];
        let objective: &dyn Objective = match &prep.model {
            Some(m) => m,
            None => mlp,
        };
        let (t, offset) = &prep.offsets[k];
        train_job(config, n, objective, offset, *t, d, *run)
    })
}

pub fn compute(config: &ExperimentConfig, n: &NnSweep) -> Result<NnResult> {
    let data = load_data(config, &n.data)?;
    let arch = MlpArchitecture::new(data.input_dim(), &n.hidden, data.num_classes())?;
    let mlp = MlpObjective::new(&arch, &data)?;
    let dims = grid_values(n.dims.values(), "experiment.dims")?;
    let mut burn_in = n.burn_in.clone();
    burn_in.sort_unstable();
    burn_in.dedup();
    let axes = threshold_axes(&n.thresholds)?;
    let runs: Vec<usize> = (0..config.runs).collect();

    let mut outcomes = Vec::new();
    match n.model {
        // one Jacobian alive at a time
        ModelConfig::Linearized { .. } => {
            for &run in &runs {
                let prep = prepare_run(config, n, &arch, &data, &burn_in, run)?;
                outcomes.extend(train_batch(config, n, &mlp, &dims, &[(run, prep)])?);
            }
        }
        ModelConfig::Mlp => {
            let preps = parallel_map(config.workers, &runs, |&run| {
                Ok((run, prepare_run(config, n, &arch, &data, &burn_in, run)?))
            })?;
            outcomes = train_batch(config, n, &mlp, &dims, &preps)?;
        }
    }

    let grid = SuccessGrid::new(dims, burn_in.clone(), axes.clone(), outcomes)?;
    let mut curves = vec![];
    let mut comparisons = vec![];
    for axis in &axes {
        let per_t = burn_in
            .iter()
            .map(|&t| {
                Ok(extract_threshold(&grid, axis.metric, config.delta, t)?
                    .with_label(curve_label(kind_for(&n.model, t), t)))
            })
            .collect::<Result<Vec<_>>>()?;
        comparisons.push(compare_methods(&per_t)?);
        curves.extend(per_t);
    }
    Ok(NnResult { num_params: arch.num_params(), grid, curves, comparisons })
}

pub(crate) fn write_comparisons(path: &std::path::Path, reports: &[ComparisonReport]) -> Result<()> {
    write_csv(
        path,
        &["metric_kind", "threshold", "label", "t", "d_star", "rank", "violations"],
        reports.iter().flat_map(|rep| {
            rep.rows.iter().flat_map(move |row| {
                let violations: Vec<String> =
                    row.ordering_violations.iter().map(|(a, b)| format!("{a} < {b}")).collect();
                let joined = violations.join(";");
                row.entries.iter().map(move |e| {
                    vec![
                        rep.metric.as_str().to_string(),
                        row.threshold.to_string(),
                        e.label.clone(),
                        e.t.to_string(),
                        e.d_star.map(|d| d.to_string()).unwrap_or_default(),
                        e.rank.to_string(),
                        joined.clone(),
                    ]
                })
            })
        }),
    )
}

pub fn run(config: &ExperimentConfig, n: &NnSweep, svg: bool) -> Result<Artifacts> {
    let res = compute(config, n)?;
    let (dir, mut art) = prepare_out(config)?;
    write_runs(art.push(dir.join("runs.csv")), &config.name, res.grid.outcomes())?;
    write_grid(art.push(dir.join("grid.csv")), &res.grid)?;
    write_thresholds(art.push(dir.join("thresholds.csv")), &res.curves)?;
    write_comparisons(art.push(dir.join("comparison.csv")), &res.comparisons)?;
    if svg {
        for c in &res.curves {
            let name = format!("phase_t{}_{}.svg", c.t, c.metric.as_str());
            write_text(art.push(dir.join(name)), &render_phase_svg(&res.grid, c))?;
        }
    }
    let mut choices = vec![
        "random affine offset is the initialization w0; burn-in offset is w_t",
        "burn-in steps are counted separately from the subspace training budget",
        "best values are taken over full-dataset evaluations every eval_every steps",
    ];
    if matches!(n.model, ModelConfig::Linearized { .. }) {
        choices.push("linearized model: expansion point w_opt from full training, subspace offset w0");
    }
    let violations: usize =
        res.comparisons.iter().flat_map(|r| &r.rows).map(|r| r.ordering_violations.len()).sum();
    let derived = json!({ "num_params": res.num_params, "ordering_violations": violations });
    finish(&dir, art, config, choices, derived)
}
