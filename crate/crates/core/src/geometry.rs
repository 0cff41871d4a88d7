//! Gaussian widths, projections onto the unit sphere, local angular dimension
//! and the escape-probability bound.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when std is linked
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::landscapes::Spectrum;
use crate::numerics::{dot, gaussian_vector};

/// A finite, nonempty set of points in `R^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dimension: usize,
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dimension = points.first().ok_or(Error::EmptyCloud)?.len();
        if dimension == 0 {
            return Err(Error::invalid("points", "dimension must be positive"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, found: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(Self { dimension, points })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Axis-aligned ellipsoid `{x : Σ x_i²/r_i² ≤ 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSpec {
    radii: Vec<f64>,
}

impl EllipsoidSpec {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::invalid("radii", "need at least one axis"));
        }
        if let Some(index) = radii.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if radii.iter().any(|&r| r <= 0.0) {
            return Err(Error::invalid("radii", "all radii must be positive"));
        }
        Ok(Self { radii })
    }

    /// The sublevel set `{½ wᵀ diag(λ) w ≤ ε}`.
    pub fn sublevel(spectrum: &Spectrum, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        Self::new(spectrum.sublevel_radii(epsilon))
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn dimension(&self) -> usize {
        self.radii.len()
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub num_gaussians: usize,
}

impl WidthEstimate {
    fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
        Self { mean: mean.max(0.0), std_error: (var.max(0.0) / n).sqrt(), num_gaussians: samples.len() }
    }
}

fn check_draws(num_gaussians: usize) -> Result<()> {
    if num_gaussians < 2 {
        return Err(Error::invalid("num_gaussians", "need at least 2 draws"));
    }
    Ok(())
}

/// `w(S) = ½ E sup_{x,y ∈ S} ⟨g, x − y⟩` over the cloud, estimated with
/// `num_gaussians` draws of `g ~ N(0, I_D)`.
///
/// Draws depend only on the dimension, so two clouds in the same space see
/// the same Gaussians under the same stream.
pub fn gaussian_width_mc<R: Rng + ?Sized>(
    cloud: &PointCloud,
    rng: &mut R,
    num_gaussians: usize,
) -> Result<WidthEstimate> {
    check_draws(num_gaussians)?;
    let mut samples = Vec::with_capacity(num_gaussians);
    for _ in 0..num_gaussians {
        let g = gaussian_vector(rng, cloud.dimension());
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for p in cloud.points() {
            let v = dot(&g, p);
            hi = hi.max(v);
            lo = lo.min(v);
        }
        samples.push(0.5 * (hi - lo));
    }
    if cloud.len() == 1 {
        return Ok(WidthEstimate { mean: 0.0, std_error: 0.0, num_gaussians });
    }
    Ok(WidthEstimate::from_samples(&samples))
}

/// Bounds `[(2/π) Σ r², Σ r²]` on the squared Gaussian width of an ellipsoid.
pub fn ellipsoid_width_sq_bounds(e: &EllipsoidSpec) -> (f64, f64) {
    let upper: f64 = e.radii().iter().map(|r| r * r).sum();
    (2.0 / core::f64::consts::PI * upper, upper)
}

/// Averages the support function `sup_{x∈E} ⟨g,x⟩ = √(Σ g_i² r_i²)`.
pub fn ellipsoid_width_mc<R: Rng + ?Sized>(
    e: &EllipsoidSpec,
    rng: &mut R,
    num_gaussians: usize,
) -> Result<WidthEstimate> {
    check_draws(num_gaussians)?;
    let samples: Vec<f64> = (0..num_gaussians)
        .map(|_| {
            let g = gaussian_vector(rng, e.dimension());
            g.iter().zip(e.radii()).map(|(g, r)| g * g * r * r).sum::<f64>().sqrt()
        })
        .collect();
    Ok(WidthEstimate::from_samples(&samples))
}

/// `(x_i − center) / ‖x_i − center‖` for every point.
pub fn project_onto_sphere(cloud: &PointCloud, center: &[f64]) -> Result<PointCloud> {
    if center.len() != cloud.dimension() {
        return Err(Error::DimensionMismatch { expected: cloud.dimension(), found: center.len() });
    }
    let mut out = Vec::with_capacity(cloud.len());
    for (index, p) in cloud.points().iter().enumerate() {
        let mut v: Vec<f64> = p.iter().zip(center).map(|(x, c)| x - c).collect();
        let n = dot(&v, &v).sqrt();
        if n == 0.0 {
            return Err(Error::PointAtCenter { index });
        }
        v.iter_mut().for_each(|x| *x /= n);
        out.push(v);
    }
    PointCloud::new(out)
}

fn check_eps_r(epsilon: f64, radius: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", "must be positive and finite"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("radius", "must be positive and finite"));
    }
    Ok(())
}

/// Lower estimate of the local angular dimension of `{L ≤ ε}` seen from
/// distance `radius`: `Σ r_i² / (R² + r_i²)` with `r_i = √(2ε/λ_i)`.
pub fn local_angular_dimension_bound(spectrum: &Spectrum, epsilon: f64, radius: f64) -> Result<f64> {
    check_eps_r(epsilon, radius)?;
    let r2 = radius * radius;
    // r²/(R²+r²) = 2ε / (λR² + 2ε)
    Ok(spectrum.values().iter().map(|&l| 2.0 * epsilon / (l * r2 + 2.0 * epsilon)).sum())
}

/// `D − local_angular_dimension_bound`, an upper bound on the threshold
/// training dimension of a quadratic well.
pub fn threshold_upper_bound(
    spectrum: &Spectrum,
    epsilon: f64,
    radius: f64,
    dimension: usize,
) -> Result<f64> {
    if spectrum.len() != dimension {
        return Err(Error::DimensionMismatch { expected: dimension, found: spectrum.len() });
    }
    Ok(dimension as f64 - local_angular_dimension_bound(spectrum, epsilon, radius)?)
}

/// Lower bound on the probability that a uniformly random codimension-`k`
/// subspace misses a subset of the unit sphere of Gaussian width `width`.
/// Returns 0 outside the regime `k > width²`.
pub fn escape_probability_bound(k: usize, width: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if !(width >= 0.0 && width.is_finite()) {
        return Err(Error::invalid("width", "must be finite and non-negative"));
    }
    let kf = k as f64;
    if kf <= width * width {
        return Ok(0.0);
    }
    let gap = kf / (kf + 1.0).sqrt() - width;
    Ok((1.0 - 3.5 * (-gap * gap / 18.0).exp()).clamp(0.0, 1.0))
}

/// Gaussian width squared bounds for the sublevel set `{L ≤ ε}` of a
/// quadratic well.
pub fn sublevel_width_sq_bounds(spectrum: &Spectrum, epsilon: f64) -> Result<(f64, f64)> {
    Ok(ellipsoid_width_sq_bounds(&EllipsoidSpec::sublevel(spectrum, epsilon)?))
}

/// `n` points drawn uniformly from the unit sphere in `R^dimension`.
pub fn uniform_sphere_cloud<R: Rng + ?Sized>(dimension: usize, n: usize, rng: &mut R) -> Result<PointCloud> {
    let mut points = vec![];
    while points.len() < n {
        let mut g = gaussian_vector(rng, dimension);
        let nrm = dot(&g, &g).sqrt();
        if nrm > 0.0 {
            g.iter_mut().for_each(|x| *x /= nrm);
            points.push(g);
        }
    }
    PointCloud::new(points)
}
