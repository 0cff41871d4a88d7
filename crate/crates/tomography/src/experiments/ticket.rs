//! One-shot magnitude-pruned lottery tickets, rewound to initialization.

use serde_json::json;
use tomography_core::neural::{init_params, train_full, AdamConfig, MlpArchitecture, MlpObjective, RunLabel};
use tomography_core::pruning::{compression_ratio, layer_collapse, lottery_ticket_mask, train_masked};
use tomography_core::sweep::{extract_threshold, RunOutcome, SubspaceKind, SuccessGrid, ThresholdCurve};

use super::{finish, load_data, parallel_map, prepare_out, stream, threshold_axes};
use crate::config::{ExperimentConfig, Ticket};
use crate::error::{CliError, Result};
use crate::output::{write_csv, write_grid, write_runs, write_text, write_thresholds, Artifacts};
use crate::svg::render_phase_svg;

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRecord {
    pub fraction: f64,
    pub kept: usize,
    pub run: usize,
    pub collapsed_layers: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TicketResult {
    pub num_params: usize,
    pub grid: SuccessGrid,
    pub curves: Vec<ThresholdCurve>,
    pub collapse: Vec<CollapseRecord>,
}

pub fn compute(config: &ExperimentConfig, tk: &Ticket) -> Result<TicketResult> {
    let data = load_data(config, &tk.data)?;
    let arch = MlpArchitecture::new(data.input_dim(), &tk.hidden, data.num_classes())?;
    let obj = MlpObjective::new(&arch, &data)?;
    let dim = arch.num_params();
    let axes = threshold_axes(&tk.thresholds)?;
    let adam: AdamConfig = tk.optimizer.into();
    let mut kept_counts: Vec<usize> =
        tk.keep_fractions.iter().map(|&f| (f * dim as f64 - 1e-9).ceil() as usize).collect();
    kept_counts.sort_unstable();
    if kept_counts.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Config {
            path: "experiment.keep_fractions".into(),
            message: format!("two fractions keep the same number of the {dim} parameters"),
        });
    }
    let runs: Vec<usize> = (0..config.runs).collect();
    let pretrained = parallel_map(config.workers, &runs, |&run| {
        let w0 = init_params(&arch, &mut stream(config, "init", &[run as u64]).rng());
        let cfg = AdamConfig { epochs: tk.pretrain_epochs, eval_every: usize::MAX, ..adam };
        let mut rng = stream(config, "pretrain", &[run as u64]).rng();
        let trained = train_full(&obj, &w0, &cfg, 0, 0, &mut rng)?.final_params;
        Ok((w0, trained))
    })?;
    let jobs: Vec<(usize, f64)> =
        runs.iter().flat_map(|&r| tk.keep_fractions.iter().map(move |&f| (r, f))).collect();
    let results: Vec<(RunOutcome, CollapseRecord)> = parallel_map(config.workers, &jobs, |&(run, f)| {
        let (w0, trained) = &pretrained[run];
        let mask = lottery_ticket_mask(trained, f)?;
        let collapsed_layers = layer_collapse(&arch, &mask)?;
        let s = stream(config, "train", &[mask.kept() as u64, run as u64]);
        let label = RunLabel { kind: SubspaceKind::Ticket, d: mask.kept(), t: 0, seed: s.stream_id };
        let rec = train_masked(&obj, w0, &mask, &adam, label, &mut s.rng())?;
        Ok((rec.to_outcome(run), CollapseRecord { fraction: f, kept: mask.kept(), run, collapsed_layers }))
    })?;
    let (outcomes, collapse): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let grid = SuccessGrid::new(kept_counts, vec![0], axes.clone(), outcomes)?;
    let curves = axes
        .iter()
        .map(|a| Ok(extract_threshold(&grid, a.metric, config.delta, 0)?.with_label("ticket")))
        .collect::<Result<Vec<_>>>()?;
    Ok(TicketResult { num_params: dim, grid, curves, collapse })
}

pub fn run(config: &ExperimentConfig, tk: &Ticket, svg: bool) -> Result<Artifacts> {
    let res = compute(config, tk)?;
    let (dir, mut art) = prepare_out(config)?;
    write_runs(art.push(dir.join("runs.csv")), &config.name, res.grid.outcomes())?;
    write_grid(art.push(dir.join("grid.csv")), &res.grid)?;
    write_thresholds(art.push(dir.join("thresholds.csv")), &res.curves)?;
    let rows = res
        .collapse
        .iter()
        .map(|c| {
            let layers: Vec<String> = c.collapsed_layers.iter().map(|l| l.to_string()).collect();
            Ok(vec![
                c.fraction.to_string(),
                c.kept.to_string(),
                compression_ratio(res.num_params, c.kept)?.to_string(),
                c.run.to_string(),
                layers.join(";"),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(
        art.push(dir.join("collapse.csv")),
        &["keep_fraction", "kept", "compression_ratio", "run", "collapsed_layers"],
        rows,
    )?;
    if svg {
        for c in &res.curves {
            write_text(
                art.push(dir.join(format!("phase_{}.svg", c.metric.as_str()))),
                &render_phase_svg(&res.grid, c),
            )?;
        }
    }
    let choices = vec![
        "global magnitude ranking over weights and biases, ties to the lower index",
        "pruned coordinates are zeroed; kept coordinates are rewound to the initialization",
        "one-shot pruning after pretrain_epochs of full training",
    ];
    finish(&dir, art, config, choices, json!({ "num_params": res.num_params }))
}
