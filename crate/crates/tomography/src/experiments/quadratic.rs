//! Success probabilities on quadratic wells.

use serde_json::json;
use tomography_core::geometry::threshold_upper_bound;
use tomography_core::landscapes::{
    make_bimodal_spectrum, make_bulk_spectrum, quadratic_job, quadratic_stream, sample_offset_at_distance,
    QuadraticWell, Spectrum, SubspaceBasis,
};
use tomography_core::neural::{train_in_subspace, AdamConfig, RunLabel};
use tomography_core::sweep::{
    extract_threshold, MetricKind, RunOutcome, SubspaceKind, SuccessGrid, ThresholdAxis, ThresholdCurve,
};

use super::{finish, grid_values, parallel_map, prepare_out, stream};
use crate::config::{ExperimentConfig, QuadraticSweep, Solver, SpectrumConfig};
use crate::error::Result;
use crate::output::{write_csv, write_grid, write_runs, write_text, write_thresholds, Artifacts};
use crate::svg::render_phase_svg;

pub fn build_spectrum(config: &ExperimentConfig, s: &SpectrumConfig) -> Result<Spectrum> {
    Ok(match s {
        SpectrumConfig::Bimodal { dimension, num_small, lambda_small, lambda_large } => {
            make_bimodal_spectrum(*dimension, *num_small, *lambda_small, *lambda_large)?
        }
        SpectrumConfig::Bulk { dimension, lambda_min, lambda_max } => {
            let mut rng = stream(config, "spectrum", &[]).rng();
            make_bulk_spectrum(*dimension, *lambda_min, *lambda_max, &mut rng)?
        }
        SpectrumConfig::Explicit { eigenvalues } => Spectrum::new(eigenvalues.clone())?,
    })
}

#[derive(Debug, Clone)]
pub struct QuadraticResult {
    pub spectrum: Spectrum,
    pub grid: SuccessGrid,
    pub curve: ThresholdCurve,
    /// `(ε, analytic upper bound on d*)`.
    pub bounds: Vec<(f64, f64)>,
}

fn label(config: &ExperimentConfig) -> String {
    format!("{}/quadratic", config.name)
}

/// The exact trial's offset and basis, minimized by Adam instead.
fn adam_job(
    well: &QuadraticWell,
    q: &QuadraticSweep,
    d: usize,
    run: usize,
    config: &ExperimentConfig,
) -> Result<RunOutcome> {
    let s = quadratic_stream(config.seed, &label(config), d, run);
    let mut rng = s.rng();
    let offset = sample_offset_at_distance(well.dimension(), q.distance, &mut rng)?;
    let basis = SubspaceBasis::random(offset, d, &mut rng)?;
    let run_label = RunLabel { kind: SubspaceKind::Random, d, t: 0, seed: s.stream_id };
    let adam: AdamConfig = q.optimizer.into();
    let rec = train_in_subspace(well, &basis, &adam, run_label, &mut rng)?;
    Ok(rec.to_outcome(run))
}

pub fn compute(config: &ExperimentConfig, q: &QuadraticSweep) -> Result<QuadraticResult> {
    let spectrum = build_spectrum(config, &q.spectrum)?;
    let well = QuadraticWell::new(spectrum.clone());
    let dims = grid_values(q.dims.values(), "experiment.dims")?;
    let epsilons = grid_values(q.epsilons.values(), "experiment.epsilons")?;
    if let Some(&d) = dims.iter().find(|&&d| d > well.dimension()) {
        return Err(crate::error::CliError::Config {
            path: "experiment.dims".into(),
            message: format!("d = {d} exceeds the well dimension {}", well.dimension()),
        });
    }
    let jobs: Vec<(usize, usize)> =
        dims.iter().flat_map(|&d| (0..config.runs).map(move |r| (d, r))).collect();
    let lbl = label(config);
    let outcomes = parallel_map(config.workers, &jobs, |&(d, run)| match q.solver {
        Solver::Exact => Ok(quadratic_job(&well, q.distance, d, run, config.seed, &lbl)?),
        Solver::Adam => adam_job(&well, q, d, run, config),
    })?;
    let axis = ThresholdAxis { metric: MetricKind::Loss, values: epsilons.clone() };
    let grid = SuccessGrid::new(dims, vec![0], vec![axis], outcomes)?;
    let curve = extract_threshold(&grid, MetricKind::Loss, config.delta, 0)?.with_label(config.name.clone());
    let bounds = epsilons
        .iter()
        .map(|&e| Ok((e, threshold_upper_bound(&spectrum, e, q.distance, spectrum.len())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadraticResult { spectrum, grid, curve, bounds })
}

pub fn run(config: &ExperimentConfig, q: &QuadraticSweep, svg: bool) -> Result<Artifacts> {
    let res = compute(config, q)?;
    let (dir, mut art) = prepare_out(config)?;
    write_runs(art.push(dir.join("runs.csv")), &config.name, res.grid.outcomes())?;
    write_grid(art.push(dir.join("grid.csv")), &res.grid)?;
    write_thresholds(art.push(dir.join("thresholds.csv")), std::slice::from_ref(&res.curve))?;
    write_csv(
        art.push(dir.join("bounds.csv")),
        &["threshold", "upper_bound", "d_star"],
        res.bounds.iter().zip(&res.curve.points).map(|((e, b), p)| {
            vec![e.to_string(), b.to_string(), p.d_star.map(|d| d.to_string()).unwrap_or_default()]
        }),
    )?;
    if svg {
        write_text(art.push(dir.join("phase.svg")), &render_phase_svg(&res.grid, &res.curve))?;
    }
    let choices = vec![
        "offset resampled per run at distance R",
        "exact subspace minimum via pseudo-inverse unless solver = adam",
    ];
    let derived = json!({
        "dimension": res.spectrum.len(),
        "eigenvalue_min": res.spectrum.values()[0],
        "eigenvalue_max": res.spectrum.values()[res.spectrum.len() - 1],
    });
    finish(&dir, art, config, choices, derived)
}
