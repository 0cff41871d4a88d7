//! Monte Carlo Gaussian widths.

use serde_json::json;
use tomography_core::geometry::{
    ellipsoid_width_mc, ellipsoid_width_sq_bounds, gaussian_width_mc, uniform_sphere_cloud, EllipsoidSpec,
    PointCloud, WidthEstimate,
};

use super::quadratic::build_spectrum;
use super::{finish, parallel_map, prepare_out, stream};
use crate::config::{ExperimentConfig, WidthEstimate as WidthConfig, WidthTarget};
use crate::error::Result;
use crate::output::{write_csv, Artifacts};

enum Target {
    Ellipsoid(EllipsoidSpec),
    Cloud(PointCloud),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidthRow {
    pub run: usize,
    pub seed: u64,
    pub estimate: WidthEstimate,
    /// Squared-width bounds, ellipsoids only.
    pub bounds: Option<(f64, f64)>,
}

fn target(config: &ExperimentConfig, w: &WidthConfig) -> Result<Target> {
    Ok(match &w.target {
        WidthTarget::Ellipsoid { radii } => Target::Ellipsoid(EllipsoidSpec::new(radii.clone())?),
        WidthTarget::Sublevel { spectrum, epsilon } => {
            Target::Ellipsoid(EllipsoidSpec::sublevel(&build_spectrum(config, spectrum)?, *epsilon)?)
        }
        WidthTarget::SphereCloud { dimension, points } => {
            let mut rng = stream(config, "cloud", &[]).rng();
            Target::Cloud(uniform_sphere_cloud(*dimension, *points, &mut rng)?)
        }
        WidthTarget::Points { points } => Target::Cloud(PointCloud::new(points.clone())?),
    })
}

pub fn compute(config: &ExperimentConfig, w: &WidthConfig) -> Result<Vec<WidthRow>> {
    let t = target(config, w)?;
    let runs: Vec<usize> = (0..config.runs).collect();
    parallel_map(config.workers, &runs, |&run| {
        let s = stream(config, "width", &[run as u64]);
        let mut rng = s.rng();
        let (estimate, bounds) = match &t {
            Target::Ellipsoid(e) => {
                (ellipsoid_width_mc(e, &mut rng, w.num_gaussians)?, Some(ellipsoid_width_sq_bounds(e)))
            }
            Target::Cloud(c) => (gaussian_width_mc(c, &mut rng, w.num_gaussians)?, None),
        };
        Ok(WidthRow { run, seed: s.stream_id, estimate, bounds })
    })
}

pub fn run(config: &ExperimentConfig, w: &WidthConfig) -> Result<Artifacts> {
    let rows = compute(config, w)?;
    let (dir, mut art) = prepare_out(config)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    write_csv(
        art.push(dir.join("widths.csv")),
        &["run", "seed", "mean", "std_error", "num_gaussians", "lower_sq", "upper_sq"],
        rows.iter().map(|r| {
            vec![
                r.run.to_string(),
                r.seed.to_string(),
                r.estimate.mean.to_string(),
                r.estimate.std_error.to_string(),
                r.estimate.num_gaussians.to_string(),
                opt(r.bounds.map(|b| b.0)),
                opt(r.bounds.map(|b| b.1)),
            ]
        }),
    )?;
    let choices = vec![
        "point clouds use the two-sided width: half the mean spread of <g, x> over the cloud",
        "ellipsoids use the closed-form support function sqrt(sum g_i^2 r_i^2)",
        "squared-width lower bound uses the constant 2/pi",
    ];
    let mean = rows.iter().map(|r| r.estimate.mean).sum::<f64>() / rows.len() as f64;
    finish(&dir, art, config, choices, json!({ "mean_width": mean }))
}
