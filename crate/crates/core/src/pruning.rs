//! Trained subspaces and sparse subnetworks: lottery subspaces from the
//! singular directions of a training trajectory, magnitude-pruned lottery
//! tickets, and compression accounting.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::error::{Error, Result};
use crate::landscapes::SubspaceBasis;
use crate::neural::{train_chart, AdamConfig, Chart, MlpArchitecture, Objective, RunLabel, TrainRecord};
use crate::numerics::{normalize_columns, top_k_svd, Matrix};

/// Which columns a trajectory matrix holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryMode {
    /// Step directions `w_{i+1} − w_i`.
    Deltas,
    /// Raw parameter snapshots `w_i`.
    Snapshots,
}

/// `D × T` matrix built from a recorded trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix {
    mode: TrajectoryMode,
    matrix: Matrix,
}

impl TrajectoryMatrix {
    /// From snapshots `w_0, …, w_T`. Deltas mode yields `T` columns,
    /// snapshots mode `T + 1`.
    pub fn from_snapshots(snapshots: &[Vec<f64>], mode: TrajectoryMode) -> Result<Self> {
        let dim = snapshots.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::invalid("snapshots", "need at least one nonempty snapshot"));
        }
        if let Some(s) = snapshots.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: s.len() });
        }
        let columns: Vec<Vec<f64>> = match mode {
            TrajectoryMode::Deltas => {
                snapshots.windows(2).map(|p| p[1].iter().zip(&p[0]).map(|(b, a)| b - a).collect()).collect()
            }
            TrajectoryMode::Snapshots => snapshots.to_vec(),
        };
        if columns.is_empty() {
            return Err(Error::invalid("snapshots", "deltas need at least two snapshots"));
        }
        Ok(Self { mode, matrix: Matrix::from_columns(dim, &columns)? })
    }

    pub fn mode(&self) -> TrajectoryMode {
        self.mode
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_columns(&self) -> usize {
        self.matrix.cols()
    }
}

/// Top singular directions of a trajectory, anchored at a rewind point.
#[derive(Debug, Clone, PartialEq)]
pub struct LotterySubspace {
    basis: Matrix,
    singular_values: Vec<f64>,
    offset: Vec<f64>,
}

impl LotterySubspace {
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// The nested subspace spanned by the first `d` directions.
    pub fn prefix(&self, d: usize) -> Result<Self> {
        if d > self.dim() {
            return Err(Error::RankTooLarge { requested: d, max: self.dim() });
        }
        Ok(Self {
            basis: self.basis.leading_columns(d),
            singular_values: self.singular_values[..d].to_vec(),
            offset: self.offset.clone(),
        })
    }

    /// Chart `w = U_d θ + w_t` for training.
    pub fn chart(&self) -> Result<SubspaceBasis> {
        let basis = if self.dim() == 0 { self.basis.clone() } else { normalize_columns(&self.basis)? };
        SubspaceBasis::new(basis, self.offset.clone())
    }
}

/// `U_d` = top-`d` left singular vectors of the trajectory, no centering.
pub fn build_lottery_subspace(traj: &TrajectoryMatrix, d: usize, rewind: &[f64]) -> Result<LotterySubspace> {
    if rewind.len() != traj.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: traj.ambient_dim(), found: rewind.len() });
    }
    if d > traj.num_columns() {
        return Err(Error::RankTooLarge { requested: d, max: traj.num_columns() });
    }
    let svd = top_k_svd(traj.matrix(), d)?;
    Ok(LotterySubspace { basis: svd.left, singular_values: svd.singular_values, offset: rewind.to_vec() })
}

/// `(index, singular value)` rows, descending.
pub fn spectra_report(ls: &LotterySubspace) -> Vec<(usize, f64)> {
    ls.singular_values().iter().copied().enumerate().collect()
}

/// `D/d`.
pub fn compression_ratio(full_dim: usize, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("d", "must be at least 1"));
    }
    Ok(full_dim as f64 / d as f64)
}

/// Prefix maxima, for nested subspace families.
pub fn running_max(values: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    values
        .iter()
        .map(|&v| {
            best = best.max(v);
            best
        })
        .collect()
}

/// Binary keep/prune mask over flat parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityMask {
    keep: Vec<bool>,
    kept: usize,
}

impl SparsityMask {
    pub fn new(keep: Vec<bool>) -> Self {
        let kept = keep.iter().filter(|&&k| k).count();
        Self { keep, kept }
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn kept(&self) -> usize {
        self.kept
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    /// Zeroes the pruned coordinates.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        w.iter().zip(&self.keep).map(|(&x, &k)| if k { x } else { 0.0 }).collect()
    }

    fn apply_into(&self, src: &[f64], dst: &mut [f64]) {
        for ((d, &s), &k) in dst.iter_mut().zip(src).zip(&self.keep) {
            *d = if k { s } else { 0.0 };
        }
    }
}

impl Chart for SparsityMask {
    fn dim(&self) -> usize {
        self.keep.len()
    }

    fn ambient_dim(&self) -> usize {
        self.keep.len()
    }

    fn point_into(&self, x: &[f64], w: &mut [f64]) {
        self.apply_into(x, w);
    }

    fn pullback_into(&self, grad_w: &[f64], grad_x: &mut [f64]) {
        self.apply_into(grad_w, grad_x);
    }
}

/// Keeps the `⌈fraction·D⌉` entries of largest magnitude across all layers;
/// equal magnitudes favour the lower index.
pub fn lottery_ticket_mask(trained: &[f64], fraction: f64) -> Result<SparsityMask> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid("fraction", "must lie in (0, 1]"));
    }
    if let Some(index) = trained.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let n = trained.len();
    let count = num_traits::Float::ceil(fraction * n as f64 - 1e-9).clamp(0.0, n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| trained[b].abs().total_cmp(&trained[a].abs()).then(a.cmp(&b)));
    let mut keep = vec![false; n];
    for &i in &order[..count] {
        keep[i] = true;
    }
    Ok(SparsityMask::new(keep))
}

/// Kept weight count per layer. Biases are not counted: a layer with no
/// surviving weights passes no signal from its inputs.
pub fn kept_weights_per_layer(arch: &MlpArchitecture, mask: &SparsityMask) -> Result<Vec<usize>> {
    if mask.len() != arch.num_params() {
        return Err(Error::DimensionMismatch { expected: arch.num_params(), found: mask.len() });
    }
    Ok(arch
        .layers()
        .iter()
        .map(|l| mask.keep()[l.weights..l.biases].iter().filter(|&&k| k).count())
        .collect())
}

/// Layers whose weights were pruned entirely.
pub fn layer_collapse(arch: &MlpArchitecture, mask: &SparsityMask) -> Result<Vec<usize>> {
    Ok(kept_weights_per_layer(arch, mask)?
        .into_iter()
        .enumerate()
        .filter_map(|(i, k)| (k == 0).then_some(i))
        .collect())
}

/// Retrains a ticket: kept coordinates start at `params0`, pruned ones are
/// zero and receive no gradient.
pub fn train_masked<O, R>(
    objective: &O,
    params0: &[f64],
    mask: &SparsityMask,
    config: &AdamConfig,
    label: RunLabel,
    rng: &mut R,
) -> Result<TrainRecord>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    if mask.len() != params0.len() {
        return Err(Error::DimensionMismatch { expected: params0.len(), found: mask.len() });
    }
    let steps = config.total_steps(objective.num_examples());
    Ok(train_chart(objective, mask, mask.apply(params0), config, steps, 0, label, rng)?.record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{init_params, make_blobs, train_full, MlpObjective};
    use crate::numerics::{dot, RngStream};
    use crate::sweep::SubspaceKind;

    #[test]
    fn single_step_trajectory_gives_its_direction() {
        let traj = TrajectoryMatrix::from_snapshots(
            &[vec![1.0, 1.0, 1.0], vec![1.0, 4.0, 5.0]],
            TrajectoryMode::Deltas,
        )
        .unwrap();
        let ls = build_lottery_subspace(&traj, 1, &[0.0; 3]).unwrap();
        let u = ls.basis().column(0);
        assert!((dot(&u, &[0.0, 0.6, 0.8]).abs() - 1.0).abs() < 1e-12);
        assert!(build_lottery_subspace(&traj, 2, &[0.0; 3]).is_err());
    }

    #[test]
    fn prefixes_nest_and_spectrum_matches_frobenius() {
        let mut rng = RngStream::new(3, 0).rng();
        let snaps: Vec<Vec<f64>> = (0..7).map(|_| crate::numerics::gaussian_vector(&mut rng, 30)).collect();
        let traj = TrajectoryMatrix::from_snapshots(&snaps, TrajectoryMode::Deltas).unwrap();
        let full = build_lottery_subspace(&traj, 6, &snaps[0]).unwrap();
        let three = build_lottery_subspace(&traj, 3, &snaps[0]).unwrap();
        for j in 0..3 {
            assert!((dot(&full.basis().column(j), &three.basis().column(j)).abs() - 1.0).abs() < 1e-8);
        }
        assert_eq!(full.prefix(3).unwrap().basis(), &full.basis().leading_columns(3));
        let report = spectra_report(&full);
        assert!(report.windows(2).all(|w| w[0].1 >= w[1].1));
        let ss: f64 = report.iter().map(|r| r.1 * r.1).sum();
        let fro = traj.matrix().frobenius_norm();
        assert!((ss - fro * fro).abs() <= 1e-6 * fro * fro);
    }

    #[test]
    fn rank_one_report() {
        let snaps = vec![vec![0.0; 4], vec![1.0, 2.0, 0.0, 0.0], vec![2.0, 4.0, 0.0, 0.0]];
        let traj = TrajectoryMatrix::from_snapshots(&snaps, TrajectoryMode::Deltas).unwrap();
        let ls = build_lottery_subspace(&traj, 2, &[0.0; 4]).unwrap();
        let r = spectra_report(&ls);
        assert!(r[0].1 > 0.0 && r[1].1 == 0.0);
    }

    #[test]
    fn compression_examples() {
        assert_eq!(compression_ratio(25_600, 256).unwrap(), 100.0);
        assert_eq!(compression_ratio(77, 77).unwrap(), 1.0);
        assert_eq!(compression_ratio(77, 1).unwrap(), 77.0);
        assert!(compression_ratio(5, 0).is_err());
        assert_eq!(running_max(&[0.2, 0.1, 0.5, 0.4]), vec![0.2, 0.2, 0.5, 0.5]);
    }

    #[test]
    fn magnitude_mask_examples() {
        let m = lottery_ticket_mask(&[3.0, -5.0, 1.0], 1.0 / 3.0).unwrap();
        assert_eq!(m.keep(), &[false, true, false]);
        assert_eq!(lottery_ticket_mask(&[3.0, -5.0, 1.0], 1.0).unwrap().kept(), 3);
        let tie = lottery_ticket_mask(&[2.0, -2.0, 2.0], 0.5).unwrap();
        assert_eq!(tie.keep(), &[true, true, false]);
        assert!(lottery_ticket_mask(&[1.0], 0.0).is_err());
        let w = [1.0, 2.0, 3.0];
        assert_eq!(m.apply(&m.apply(&w)), m.apply(&w));
    }

    #[test]
    fn collapse_detected_under_heavy_pruning() {
        let arch = MlpArchitecture::new(2, &[2], 2).unwrap();
        // second layer weights tiny, first layer large
        let mut w = vec![0.0; arch.num_params()];
        let l0 = arch.layers()[0];
        w[l0.weights..l0.biases].fill(10.0);
        let l1 = arch.layers()[1];
        w[l1.weights..l1.biases].fill(0.01);
        let m = lottery_ticket_mask(&w, 0.3).unwrap();
        assert_eq!(layer_collapse(&arch, &m).unwrap(), vec![1]);
        let all = lottery_ticket_mask(&w, 1.0).unwrap();
        assert!(layer_collapse(&arch, &all).unwrap().is_empty());
    }

    fn setup() -> (MlpArchitecture, crate::neural::Dataset, Vec<f64>) {
        let arch = MlpArchitecture::new(4, &[8], 3).unwrap();
        let data = make_blobs(3, 20, 4, 3.0, &mut RngStream::new(1, 0).rng()).unwrap();
        let w0 = init_params(&arch, &mut RngStream::new(2, 0).rng());
        (arch, data, w0)
    }

    #[test]
    fn full_mask_matches_full_training() {
        let (arch, data, w0) = setup();
        let obj = MlpObjective::new(&arch, &data).unwrap();
        let cfg = AdamConfig { batch_size: 16, epochs: 3, ..AdamConfig::default() };
        let full = train_full(&obj, &w0, &cfg, 0, 5, &mut RngStream::new(3, 0).rng()).unwrap().record;
        let mask = SparsityMask::new(vec![true; w0.len()]);
        let label = RunLabel { kind: SubspaceKind::Full, d: w0.len(), t: 0, seed: 5 };
        let masked = train_masked(&obj, &w0, &mask, &cfg, label, &mut RngStream::new(3, 0).rng()).unwrap();
        assert_eq!(full, masked);
    }

    #[test]
    fn pruned_coordinates_stay_zero() {
        let (arch, data, w0) = setup();
        let obj = MlpObjective::new(&arch, &data).unwrap();
        let cfg = AdamConfig { batch_size: 16, epochs: 3, ..AdamConfig::default() };
        let mask = lottery_ticket_mask(&w0, 0.4).unwrap();
        let label = RunLabel { kind: SubspaceKind::Ticket, d: mask.kept(), t: 0, seed: 0 };
        let steps = cfg.total_steps(data.len());
        let out =
            train_chart(&obj, &mask, mask.apply(&w0), &cfg, steps, 1, label, &mut RngStream::new(3, 0).rng())
                .unwrap();
        for w in &out.trajectory {
            assert!(w.iter().zip(mask.keep()).all(|(&x, &k)| k || x == 0.0));
        }
        let none = SparsityMask::new(vec![false; w0.len()]);
        let rec = train_masked(&obj, &w0, &none, &cfg, label, &mut RngStream::new(3, 0).rng()).unwrap();
        assert!(rec.steps.iter().all(|s| s.loss == rec.steps[0].loss));
    }
}
