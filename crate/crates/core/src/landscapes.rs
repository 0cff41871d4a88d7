//! Synthetic landscapes with analytic structure: diagonal quadratic wells and
//! random affine targets, plus exact minimization over affine charts.
//!
//! Gaussian subspace bases are rotation invariant, so a well is represented
//! by its Hessian spectrum alone (the Hessian is diagonal in its eigenbasis).

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when std is linked
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::neural::{Evaluation, Objective};
use crate::numerics::{
    gaussian_matrix, gaussian_vector, least_squares_residual, norm, normalize_columns, orthonormal_basis,
    solve_symmetric, Matrix, RngStream,
};
use crate::sweep::{MetricKind, RunOutcome, SubspaceKind, SuccessGrid, ThresholdAxis};

/// Positive Hessian eigenvalues in non-decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::invalid("eigenvalues", "spectrum must be nonempty"));
        }
        if let Some(index) = eigenvalues.iter().position(|l| !l.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::invalid("eigenvalues", "all eigenvalues must be positive"));
        }
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { eigenvalues })
    }

    pub fn values(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Semi-axes `r_i = sqrt(2ε/λ_i)` of the sublevel ellipsoid `{L ≤ ε}`.
    pub fn sublevel_radii(&self, epsilon: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|&l| (2.0 * epsilon / l).sqrt()).collect()
    }
}

/// `num_small` eigenvalues at `lambda_small`, the rest at `lambda_large`.
pub fn make_bimodal_spectrum(
    dimension: usize,
    num_small: usize,
    lambda_small: f64,
    lambda_large: f64,
) -> Result<Spectrum> {
    if dimension == 0 || num_small > dimension {
        return Err(Error::invalid("num_small", "need 0 < D and num_small <= D"));
    }
    if !(lambda_small > 0.0 && lambda_small < lambda_large) {
        return Err(Error::invalid("lambda_small", "need 0 < lambda_small < lambda_large"));
    }
    let mut values = vec![lambda_small; num_small];
    values.resize(dimension, lambda_large);
    Spectrum::new(values)
}

/// `dimension` eigenvalues drawn log-uniformly from `[lambda_min, lambda_max]`.
pub fn make_bulk_spectrum<R: Rng + ?Sized>(
    dimension: usize,
    lambda_min: f64,
    lambda_max: f64,
    rng: &mut R,
) -> Result<Spectrum> {
    if !(lambda_min > 0.0 && lambda_min <= lambda_max) {
        return Err(Error::invalid("lambda_min", "need 0 < lambda_min <= lambda_max"));
    }
    let (lo, hi) = (lambda_min.ln(), lambda_max.ln());
    let values = (0..dimension)
        .map(|_| {
            let u: f64 = rng.random();
            (lo + u * (hi - lo)).exp().clamp(lambda_min, lambda_max)
        })
        .collect();
    Spectrum::new(values)
}

/// `L(w) = ½ wᵀ diag(λ) w`, minimized at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticWell {
    spectrum: Spectrum,
}

impl QuadraticWell {
    pub fn new(spectrum: Spectrum) -> Self {
        Self { spectrum }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn dimension(&self) -> usize {
        self.spectrum.len()
    }

    pub fn loss(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), self.dimension());
        0.5 * self.spectrum.values().iter().zip(w).map(|(l, x)| l * x * x).sum::<f64>()
    }

    pub fn gradient_into(&self, w: &[f64], grad: &mut [f64]) {
        for ((g, l), x) in grad.iter_mut().zip(self.spectrum.values()).zip(w) {
            *g = l * x;
        }
    }
}

impl Objective for QuadraticWell {
    fn num_params(&self) -> usize {
        self.dimension()
    }

    fn num_examples(&self) -> usize {
        1
    }

    fn loss_and_grad(&self, w: &[f64], _batch: &[usize], grad: &mut [f64]) -> f64 {
        self.gradient_into(w, grad);
        self.loss(w)
    }

    fn evaluate(&self, w: &[f64]) -> Evaluation {
        Evaluation { loss: self.loss(w), accuracy: None }
    }
}

/// `½ Σ λ_i w_i²`, checking the dimension.
pub fn well_loss(well: &QuadraticWell, w: &[f64]) -> Result<f64> {
    if w.len() != well.dimension() {
        return Err(Error::DimensionMismatch { expected: well.dimension(), found: w.len() });
    }
    Ok(well.loss(w))
}

/// Affine chart `w(θ) = Aθ + offset` with unit-norm columns of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    basis: Matrix,
    offset: Vec<f64>,
}

impl SubspaceBasis {
    pub fn new(basis: Matrix, offset: Vec<f64>) -> Result<Self> {
        if basis.rows() != offset.len() {
            return Err(Error::DimensionMismatch { expected: basis.rows(), found: offset.len() });
        }
        if let Some(column) = basis.column_norms().iter().position(|n| (n - 1.0).abs() > 1e-12) {
            return Err(Error::invalid("basis", alloc::format!("column {column} does not have unit norm")));
        }
        Ok(Self { basis, offset })
    }

    /// Gaussian `D × d` matrix with columns normalized to 1, anchored at
    /// `offset`. `d = 0` gives the degenerate chart `{offset}`.
    pub fn random<R: Rng + ?Sized>(offset: Vec<f64>, d: usize, rng: &mut R) -> Result<Self> {
        let basis = if d == 0 {
            Matrix::zeros(offset.len(), 0)
        } else {
            normalize_columns(&gaussian_matrix(rng, offset.len(), d))?
        };
        Ok(Self { basis, offset })
    }

    pub fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn point(&self, theta: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.ambient_dim()];
        self.point_into(theta, &mut w);
        w
    }

    /// `w = Aθ + offset`
    pub fn point_into(&self, theta: &[f64], w: &mut [f64]) {
        if self.dim() == 0 {
            w.copy_from_slice(&self.offset);
            return;
        }
        self.basis.mul_vec_into(theta, w);
        for (wi, oi) in w.iter_mut().zip(&self.offset) {
            *wi += oi;
        }
    }

    /// Chain rule: `∇_θ L = Aᵀ ∇_w L`.
    pub fn pullback_into(&self, grad_w: &[f64], grad_theta: &mut [f64]) {
        self.basis.tr_mul_vec_into(grad_w, grad_theta);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceMinimum {
    pub theta: Vec<f64>,
    pub loss: f64,
}

/// Exact minimum of a quadratic well over an affine chart: `θ*` solves
/// `(AᵀHA)θ = −AᵀH·offset` with pseudo-inverse semantics.
pub fn min_loss_in_subspace_exact(well: &QuadraticWell, basis: &SubspaceBasis) -> Result<SubspaceMinimum> {
    let dim = well.dimension();
    if basis.ambient_dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: basis.ambient_dim() });
    }
    let d = basis.dim();
    let offset_loss = well.loss(basis.offset());
    if d == 0 {
        return Ok(SubspaceMinimum { theta: Vec::new(), loss: offset_loss });
    }
    let a = basis.basis();
    let lambda = well.spectrum().values();

    // M = Aᵀ diag(λ) A, accumulated row by row and mirrored.
    let mut m = Matrix::zeros(d, d);
    let mut rhs = vec![0.0; d];
    for i in 0..dim {
        let row = a.row(i);
        let l = lambda[i];
        let lo = l * basis.offset()[i];
        for (p, &ap) in row.iter().enumerate() {
            rhs[p] -= ap * lo;
            let s = l * ap;
            if s != 0.0 {
                let mrow = m.row_mut(p);
                for q in p..d {
                    mrow[q] += s * row[q];
                }
            }
        }
    }
    for p in 0..d {
        for q in 0..p {
            let x = m.get(q, p);
            m.set(p, q, x);
        }
    }
    let theta = solve_symmetric(&m, &rhs)?;
    let loss = well.loss(&basis.point(&theta));
    if loss > offset_loss {
        // θ = 0 is always feasible
        return Ok(SubspaceMinimum { theta: vec![0.0; d], loss: offset_loss });
    }
    Ok(SubspaceMinimum { theta, loss })
}

/// Uniformly random direction scaled to norm `distance`.
pub fn sample_offset_at_distance<R: Rng + ?Sized>(
    dimension: usize,
    distance: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(distance > 0.0) {
        return Err(Error::invalid("distance", "must be positive"));
    }
    if dimension == 0 {
        return Err(Error::invalid("dimension", "must be positive"));
    }
    loop {
        let mut g = gaussian_vector(rng, dimension);
        let n = norm(&g);
        if n > 0.0 {
            g.iter_mut().for_each(|x| *x *= distance / n);
            return Ok(g);
        }
    }
}

/// An `n`-dimensional affine subspace `{Bφ + offset}` with orthonormal `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTarget {
    basis: Matrix,
    offset: Vec<f64>,
}

impl AffineTarget {
    pub fn new(basis: Matrix, offset: Vec<f64>) -> Result<Self> {
        if basis.rows() != offset.len() {
            return Err(Error::DimensionMismatch { expected: basis.rows(), found: offset.len() });
        }
        if basis.cols() >= basis.rows() {
            return Err(Error::invalid("basis", "target dimension must be below ambient dimension"));
        }
        let gram = basis.transpose().matmul(&basis)?;
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram.get(i, j) - target).abs() > 1e-10 {
                    return Err(Error::invalid("basis", "columns must be orthonormal"));
                }
            }
        }
        Ok(Self { basis, offset })
    }

    /// Uniformly random `n`-dimensional subspace through `offset`.
    pub fn random<R: Rng + ?Sized>(offset: Vec<f64>, n: usize, rng: &mut R) -> Result<Self> {
        let basis = orthonormal_basis(rng, offset.len(), n)?;
        Self::new(basis, offset)
    }

    pub fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }
}

/// Minimum Euclidean distance between the chart `{Aθ + a}` and the target
/// `{Bφ + b}`: the least-squares residual of `[A B][θ; −φ] = b − a`.
pub fn affine_target_distance(target: &AffineTarget, basis: &SubspaceBasis) -> Result<f64> {
    let dim = target.ambient_dim();
    if basis.ambient_dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: basis.ambient_dim() });
    }
    let (d, n) = (basis.dim(), target.dim());
    let mut joint = Matrix::zeros(dim, d + n);
    for i in 0..dim {
        let row = joint.row_mut(i);
        row[..d].copy_from_slice(basis.basis().row(i));
        row[d..].copy_from_slice(target.basis().row(i));
    }
    let rhs: Vec<f64> = target.offset().iter().zip(basis.offset()).map(|(b, a)| b - a).collect();
    least_squares_residual(&joint, &rhs)
}

/// One exact trial: fresh offset at distance `distance`, fresh random
/// `d`-dimensional chart, exact minimum loss.
pub fn quadratic_trial<R: Rng + ?Sized>(
    well: &QuadraticWell,
    distance: f64,
    d: usize,
    rng: &mut R,
) -> Result<f64> {
    let offset = sample_offset_at_distance(well.dimension(), distance, rng)?;
    let basis = SubspaceBasis::random(offset, d, rng)?;
    Ok(min_loss_in_subspace_exact(well, &basis)?.loss)
}

/// Stream driving run `run` at dimension `d` of a quadratic sweep.
pub fn quadratic_stream(master_seed: u64, label: &str, d: usize, run: usize) -> RngStream {
    RngStream::derive(master_seed, label, &[d as u64, run as u64])
}

/// `quadratic_trial` on its own stream, packaged as a grid outcome.
pub fn quadratic_job(
    well: &QuadraticWell,
    distance: f64,
    d: usize,
    run: usize,
    master_seed: u64,
    label: &str,
) -> Result<RunOutcome> {
    let stream = quadratic_stream(master_seed, label, d, run);
    let loss = quadratic_trial(well, distance, d, &mut stream.rng())?;
    Ok(RunOutcome {
        kind: SubspaceKind::Random,
        t: 0,
        d,
        run,
        seed: stream.stream_id,
        best_loss: loss,
        best_accuracy: None,
    })
}

/// Success probabilities `P_s(d, ε, R)` on a quadratic well, sequentially.
/// Each run marks success for every `ε` at or above its exact minimum.
pub fn quadratic_success_grid(
    well: &QuadraticWell,
    distance: f64,
    dims: &[usize],
    epsilons: &[f64],
    runs: usize,
    master_seed: u64,
    label: &str,
) -> Result<SuccessGrid> {
    if dims.is_empty() || epsilons.is_empty() || runs == 0 {
        return Err(Error::invalid("grid", "dims, epsilons and runs must be nonempty"));
    }
    let mut outcomes = Vec::with_capacity(dims.len() * runs);
    for &d in dims {
        for run in 0..runs {
            outcomes.push(quadratic_job(well, distance, d, run, master_seed, label)?);
        }
    }
    SuccessGrid::new(
        dims.to_vec(),
        vec![0],
        vec![ThresholdAxis { metric: MetricKind::Loss, values: epsilons.to_vec() }],
        outcomes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_well(d: usize) -> QuadraticWell {
        QuadraticWell::new(Spectrum::new(vec![1.0; d]).unwrap())
    }

    #[test]
    fn bimodal_construction() {
        let s = make_bimodal_spectrum(4, 2, 0.01, 10.0).unwrap();
        assert_eq!(s.values(), &[0.01, 0.01, 10.0, 10.0]);
        let all = make_bimodal_spectrum(3, 3, 0.5, 1.0).unwrap();
        assert_eq!(all.values(), &[0.5, 0.5, 0.5]);
        assert!(make_bimodal_spectrum(3, 4, 0.5, 1.0).is_err());
        assert!(make_bimodal_spectrum(3, 1, 2.0, 1.0).is_err());
    }

    #[test]
    fn bulk_spectrum_range_and_median() {
        let mut rng = RngStream::new(4, 0).rng();
        let s = make_bulk_spectrum(100, 1e-3, 10.0, &mut rng).unwrap();
        assert!(s.values().iter().all(|&l| (1e-3..=10.0).contains(&l)));
        assert!(s.values().windows(2).all(|w| w[0] <= w[1]));
        // log-uniform median is the geometric mean of the endpoints
        let median = 0.5 * (s.values()[49] + s.values()[50]);
        let gm = (1e-3f64 * 10.0).sqrt();
        assert!(median > gm / 3.0 && median < gm * 3.0, "median {median}");
        let flat = make_bulk_spectrum(5, 2.0, 2.0, &mut rng).unwrap();
        assert!(flat.values().iter().all(|&l| l == 2.0));
    }

    #[test]
    fn well_loss_values() {
        let w = QuadraticWell::new(Spectrum::new(vec![2.0]).unwrap());
        assert_eq!(well_loss(&w, &[0.0]).unwrap(), 0.0);
        assert_eq!(well_loss(&w, &[1.0]).unwrap(), 1.0);
        let w = QuadraticWell::new(Spectrum::new(vec![1.0, 4.0]).unwrap());
        assert_eq!(well_loss(&w, &[2.0, 1.0]).unwrap(), 4.0);
        assert!(well_loss(&w, &[1.0]).is_err());
    }

    fn chart(direction: [f64; 2]) -> SubspaceBasis {
        SubspaceBasis::new(Matrix::from_row_major(2, 1, direction.to_vec()).unwrap(), vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn exact_minimum_on_lines() {
        let well = unit_well(2);
        let ortho = min_loss_in_subspace_exact(&well, &chart([0.0, 1.0])).unwrap();
        assert!(ortho.theta[0].abs() < 1e-15 && (ortho.loss - 0.5).abs() < 1e-15);
        let aligned = min_loss_in_subspace_exact(&well, &chart([1.0, 0.0])).unwrap();
        assert!((aligned.theta[0] + 1.0).abs() < 1e-15 && aligned.loss.abs() < 1e-15);
        for k in 0..16 {
            let phi = 0.37 * k as f64;
            let m = min_loss_in_subspace_exact(&well, &chart([phi.cos(), phi.sin()])).unwrap();
            let expected = 0.5 * phi.sin() * phi.sin();
            assert!((m.loss - expected).abs() < 1e-14, "phi {phi}: {} vs {expected}", m.loss);
        }
    }

    #[test]
    fn full_dimension_reaches_global_minimum() {
        let mut rng = RngStream::new(8, 0).rng();
        let spec = make_bimodal_spectrum(20, 10, 0.01, 10.0).unwrap();
        let well = QuadraticWell::new(spec);
        let loss = quadratic_trial(&well, 1.0, 20, &mut rng).unwrap();
        assert!(loss < 1e-12, "loss {loss}");
    }

    #[test]
    fn offset_norm_and_symmetry() {
        let mut rng = RngStream::new(5, 0).rng();
        let o = sample_offset_at_distance(50, 2.5, &mut rng).unwrap();
        assert!((norm(&o) - 2.5).abs() < 1e-12);
        let dim = 10_000;
        let mut mean = 0.0;
        for _ in 0..100 {
            mean += sample_offset_at_distance(dim, 1.0, &mut rng).unwrap()[0];
        }
        mean /= 100.0;
        assert!(mean.abs() <= 4.0 / (dim as f64).sqrt());
        assert!(sample_offset_at_distance(3, 0.0, &mut rng).is_err());
    }

    #[test]
    fn distinct_streams_not_collinear() {
        let a = sample_offset_at_distance(20, 1.0, &mut RngStream::new(1, 1).rng()).unwrap();
        let b = sample_offset_at_distance(20, 1.0, &mut RngStream::new(1, 2).rng()).unwrap();
        let cos = crate::numerics::dot(&a, &b);
        assert!(cos.abs() < 1.0 - 1e-9);
    }

    #[test]
    fn parallel_lines_distance() {
        let target =
            AffineTarget::new(Matrix::from_row_major(2, 1, vec![1.0, 0.0]).unwrap(), vec![0.0, 1.0]).unwrap();
        let basis = SubspaceBasis::new(Matrix::from_row_major(2, 1, vec![1.0, 0.0]).unwrap(), vec![0.0, 0.0])
            .unwrap();
        assert!((affine_target_distance(&target, &basis).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complementary_dimensions_intersect() {
        let mut rng = RngStream::new(21, 0).rng();
        for (n, d) in [(30, 70), (60, 50), (99, 1)] {
            let offset = sample_offset_at_distance(100, 3.0, &mut rng).unwrap();
            let target = AffineTarget::random(offset, n, &mut rng).unwrap();
            let basis = SubspaceBasis::random(vec![0.0; 100], d, &mut rng).unwrap();
            assert!(affine_target_distance(&target, &basis).unwrap() < 1e-8);
        }
    }

    #[test]
    fn grid_edge_cases() {
        let well = QuadraticWell::new(make_bimodal_spectrum(10, 5, 0.01, 10.0).unwrap());
        let grid = quadratic_success_grid(&well, 1.0, &[0, 3, 10], &[1e-6, 100.0], 5, 3, "q").unwrap();
        // the full space contains the minimum
        assert_eq!(grid.probability(0, 10, MetricKind::Loss, 0), Some(1.0));
        // every offset loss is below 100 since ½·10·1² = 5
        for d in [0, 3, 10] {
            assert_eq!(grid.probability(0, d, MetricKind::Loss, 1), Some(1.0));
        }
        assert_eq!(grid.probability(0, 0, MetricKind::Loss, 0), Some(0.0));
    }
}
