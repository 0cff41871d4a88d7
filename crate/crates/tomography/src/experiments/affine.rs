//! Distances between random affine subspaces.

use serde_json::json;
use tomography_core::landscapes::{
    affine_target_distance, sample_offset_at_distance, AffineTarget, SubspaceBasis,
};

use super::{finish, parallel_map, prepare_out, stream};
use crate::config::{AffineDistance, ExperimentConfig};
use crate::error::Result;
use crate::output::{write_csv, Artifacts};

#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub n: usize,
    pub d: usize,
    pub mean: f64,
    pub std_error: f64,
    /// `√(D − n − d)/√D`, zero once the subspaces must meet.
    pub scaling: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineResult {
    /// `(n, d, trial, seed, distance)`.
    pub trials: Vec<(usize, usize, usize, u64, f64)>,
    pub summaries: Vec<PairSummary>,
}

/// Least-squares fit `y ≈ c·x` through the origin. Returns `(c, R²)`.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let c = sxy / sxx;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    (c, 1.0 - ss_res / ss_tot)
}

pub fn compute(config: &ExperimentConfig, a: &AffineDistance) -> Result<AffineResult> {
    let dim = a.dimension;
    let jobs: Vec<(usize, usize, usize)> =
        a.pairs.iter().flat_map(|&(n, d)| (0..config.runs).map(move |t| (n, d, t))).collect();
    let trials = parallel_map(config.workers, &jobs, |&(n, d, trial)| {
        let s = stream(config, "affine", &[n as u64, d as u64, trial as u64]);
        let mut rng = s.rng();
        let offset = sample_offset_at_distance(dim, a.offset_distance, &mut rng)?;
        let target = AffineTarget::random(offset, n, &mut rng)?;
        let basis = SubspaceBasis::random(vec![0.0; dim], d, &mut rng)?;
        Ok((n, d, trial, s.stream_id, affine_target_distance(&target, &basis)?))
    })?;
    let summaries = a
        .pairs
        .iter()
        .map(|&(n, d)| {
            let v: Vec<f64> = trials.iter().filter(|r| (r.0, r.1) == (n, d)).map(|r| r.4).collect();
            let k = v.len() as f64;
            let mean = v.iter().sum::<f64>() / k;
            let var =
                if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
            let gap = dim.saturating_sub(n + d) as f64;
            PairSummary { n, d, mean, std_error: (var / k).sqrt(), scaling: (gap / dim as f64).sqrt() }
        })
        .collect();
    Ok(AffineResult { trials, summaries })
}

pub fn run(config: &ExperimentConfig, a: &AffineDistance) -> Result<Artifacts> {
    let res = compute(config, a)?;
    let (dir, mut art) = prepare_out(config)?;
    write_csv(
        art.push(dir.join("distances.csv")),
        &["n", "d", "trial", "seed", "distance"],
        res.trials.iter().map(|r| {
            vec![r.0.to_string(), r.1.to_string(), r.2.to_string(), r.3.to_string(), r.4.to_string()]
        }),
    )?;
    write_csv(
        art.push(dir.join("summary.csv")),
        &["n", "d", "mean", "std_error", "scaling", "ratio"],
        res.summaries.iter().map(|s| {
            let ratio = if s.scaling > 0.0 { (s.mean / s.scaling).to_string() } else { String::new() };
            vec![
                s.n.to_string(),
                s.d.to_string(),
                s.mean.to_string(),
                s.std_error.to_string(),
                s.scaling.to_string(),
                ratio,
            ]
        }),
    )?;
    let open: Vec<&PairSummary> = res.summaries.iter().filter(|s| s.scaling > 0.0).collect();
    let fit = if open.len() >= 2 {
        let x: Vec<f64> = open.iter().map(|s| s.scaling).collect();
        let y: Vec<f64> = open.iter().map(|s| s.mean).collect();
        let (c, r2) = fit_through_origin(&x, &y);
        json!({ "constant": c, "r_squared": r2 })
    } else {
        serde_json::Value::Null
    };
    let choices = vec![
        "chart passes through the origin; target offset is a uniform direction at offset_distance",
        "distance is the least-squares residual of the joint system [A B]",
    ];
    finish(&dir, art, config, choices, json!({ "fit": fit }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_proportionality_fits_perfectly() {
        let x = [0.1, 0.5, 0.9];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v).collect();
        let (c, r2) = fit_through_origin(&x, &y);
        assert!((c - 2.5).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_matches_normal_equation() {
        // c = Σxy / Σx² = (1·1 + 2·3) / (1 + 4)
        let (c, _) = fit_through_origin(&[1.0, 2.0], &[1.0, 3.0]);
        assert!((c - 1.4).abs() < 1e-12);
    }
}
