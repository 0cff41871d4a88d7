//! Lottery subspaces: training inside the top singular directions of a
//! full-space trajectory, against random subspaces through the same point.

use serde_json::json;
use tomography_core::landscapes::SubspaceBasis;
use tomography_core::neural::{
    init_params, train_full, train_in_subspace, AdamConfig, Dataset, MlpArchitecture, MlpObjective, RunLabel,
};
use tomography_core::pruning::{
    build_lottery_subspace, running_max, LotterySubspace, TrajectoryMatrix, TrajectoryMode,
};
use tomography_core::sweep::{extract_threshold, RunOutcome, SubspaceKind, SuccessGrid, ThresholdCurve};

use super::{finish, grid_values, load_data, parallel_map, prepare_out, stream, threshold_axes};
use crate::config::{ExperimentConfig, Lottery, TrajectoryModeConfig};
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, write_csv, write_grid, write_runs, write_text, write_thresholds, Artifacts};
use crate::svg::render_phase_svg;

#[derive(Debug, Clone)]
pub struct LotteryResult {
    pub num_params: usize,
    pub grid: SuccessGrid,
    pub curves: Vec<ThresholdCurve>,
    pub baseline: Option<(SuccessGrid, Vec<ThresholdCurve>)>,
    /// Per run: singular values of the trajectory.
    pub spectra: Vec<Vec<f64>>,
}

fn prepare_run(
    config: &ExperimentConfig,
    l: &Lottery,
    arch: &MlpArchitecture,
    data: &Dataset,
    max_d: usize,
    run: usize,
) -> Result<LotterySubspace> {
    let w0 = init_params(arch, &mut stream(config, "init", &[run as u64]).rng());
    let obj = MlpObjective::new(arch, data)?;
    let full: AdamConfig = l.full_optimizer.unwrap_or(l.optimizer).into();
    let full = AdamConfig { epochs: l.full_epochs, eval_every: usize::MAX, ..full };
    let mut rng = stream(config, "full", &[run as u64]).rng();
    let out = train_full(&obj, &w0, &full, l.snapshot_every, 0, &mut rng)?;
    let rewind_index = l.rewind / l.snapshot_every;
    let rewind = out.trajectory.get(rewind_index).ok_or_else(|| CliError::Config {
        path: "experiment.rewind".into(),
        message: format!("rewind step {} is past the end of the trajectory", l.rewind),
    })?;
    let mode = match l.trajectory {
        TrajectoryModeConfig::Deltas => TrajectoryMode::Deltas,
        TrajectoryModeConfig::Snapshots => TrajectoryMode::Snapshots,
    };
    let traj = TrajectoryMatrix::from_snapshots(&out.trajectory, mode)?;
    if max_d > traj.num_columns() {
        return Err(CliError::Config {
            path: "experiment.dims".into(),
            message: format!("d = {max_d} exceeds the {} trajectory columns", traj.num_columns()),
        });
    }
    Ok(build_lottery_subspace(&traj, traj.num_columns(), rewind)?)
}

pub fn compute(config: &ExperimentConfig, l: &Lottery) -> Result<LotteryResult> {
    let data = load_data(config, &l.data)?;
    let arch = MlpArchitecture::new(data.input_dim(), &l.hidden, data.num_classes())?;
    let obj = MlpObjective::new(&arch, &data)?;
    let mut dims = grid_values(l.dims.values(), "experiment.dims")?;
    dims.sort_unstable();
    dims.dedup();
    let max_d = *dims.last().unwrap();
    let axes = threshold_axes(&l.thresholds)?;
    let runs: Vec<usize> = (0..config.runs).collect();
    let subspaces = parallel_map(config.workers, &runs, |&r| prepare_run(config, l, &arch, &data, max_d, r))?;
    let adam: AdamConfig = l.optimizer.into();
    let t = l.rewind;
    let baseline_kind = if t == 0 { SubspaceKind::Random } else { SubspaceKind::BurnIn };

    let mut jobs: Vec<(bool, usize, usize)> =
        runs.iter().flat_map(|&r| dims.iter().map(move |&d| (true, d, r))).collect();
    if l.baseline {
        jobs.extend(runs.iter().flat_map(|&r| dims.iter().map(move |&d| (false, d, r))));
    }
    let results: Vec<(bool, RunOutcome)> = parallel_map(config.workers, &jobs, |&(lottery, d, run)| {
        let ls = &subspaces[run];
        let train = stream(config, "train", &[d as u64, run as u64]);
        let (chart, kind, seed) = if lottery {
            (ls.prefix(d)?.chart()?, SubspaceKind::Lottery, train.stream_id)
        } else {
            let s = stream(config, "basis", &[d as u64, run as u64]);
            (SubspaceBasis::random(ls.offset().to_vec(), d, &mut s.rng())?, baseline_kind, s.stream_id)
        };
        let label = RunLabel { kind, d, t, seed };
        let rec = train_in_subspace(&obj, &chart, &adam, label, &mut train.rng())?;
        Ok((lottery, rec.to_outcome(run)))
    })?;
    let (main, base): (Vec<_>, Vec<_>) = results.into_iter().partition(|(lottery, _)| *lottery);
    let curves_of = |grid: &SuccessGrid, label: &str| -> Result<Vec<ThresholdCurve>> {
        axes.iter()
            .map(|a| Ok(extract_threshold(grid, a.metric, config.delta, t)?.with_label(label)))
            .collect()
    };
    let grid =
        SuccessGrid::new(dims.clone(), vec![t], axes.clone(), main.into_iter().map(|x| x.1).collect())?;
    let curves = curves_of(&grid, "lottery")?;
    let baseline = if l.baseline {
        let g = SuccessGrid::new(dims, vec![t], axes.clone(), base.into_iter().map(|x| x.1).collect())?;
        let c = curves_of(&g, baseline_kind.as_str())?;
        Some((g, c))
    } else {
        None
    };
    let spectra = subspaces.iter().map(|s| s.singular_values().to_vec()).collect();
    Ok(LotteryResult { num_params: arch.num_params(), grid, curves, baseline, spectra })
}

pub fn run(config: &ExperimentConfig, l: &Lottery, svg: bool) -> Result<Artifacts> {
    let res = compute(config, l)?;
    let (dir, mut art) = prepare_out(config)?;
    let mut all: Vec<RunOutcome> = res.grid.outcomes().to_vec();
    if let Some((g, _)) = &res.baseline {
        all.extend(g.outcomes().iter().cloned());
    }
    write_runs(art.push(dir.join("runs.csv")), &config.name, &all)?;
    write_grid(art.push(dir.join("grid.csv")), &res.grid)?;
    write_thresholds(art.push(dir.join("thresholds.csv")), &res.curves)?;
    write_csv(
        art.push(dir.join("spectra.csv")),
        &["run", "index", "singular_value"],
        res.spectra.iter().enumerate().flat_map(|(r, s)| {
            s.iter().enumerate().map(move |(i, v)| vec![r.to_string(), i.to_string(), v.to_string()])
        }),
    )?;
    let mut rm_rows = vec![];
    for run in 0..config.runs {
        let per_run: Vec<&RunOutcome> = res.grid.outcomes().iter().filter(|o| o.run == run).collect();
        let accs: Vec<f64> = per_run.iter().map(|o| o.best_accuracy.unwrap_or(f64::NAN)).collect();
        for ((o, a), m) in per_run.iter().zip(&accs).zip(running_max(&accs)) {
            rm_rows.push(vec![run.to_string(), o.d.to_string(), a.to_string(), m.to_string()]);
        }
    }
    write_csv(art.push(dir.join("running_max.csv")), &["run", "d", "best_acc", "running_max_acc"], rm_rows)?;
    if let Some((g, c)) = &res.baseline {
        let sub = dir.join("baseline");
        ensure_dir(&sub)?;
        write_grid(art.push(sub.join("grid.csv")), g)?;
        write_thresholds(art.push(sub.join("thresholds.csv")), c)?;
    }
    if svg {
        for c in &res.curves {
            write_text(
                art.push(dir.join(format!("phase_{}.svg", c.metric.as_str()))),
                &render_phase_svg(&res.grid, c),
            )?;
        }
    }
    let choices = vec![
        "trajectory columns are step deltas unless trajectory = snapshots; no mean-centering",
        "directions added in order of descending singular value; subspaces are nested prefixes",
        "baseline random subspaces share the rewind offset and minibatch order",
    ];
    finish(&dir, art, config, choices, json!({ "num_params": res.num_params }))
}
