//! Labelled datasets: synthetic Gaussian blobs and IDX decoding.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, IdxError, Result};
use crate::numerics::{orthonormal_basis, Matrix};

/// Inputs (`N × k`, one example per row) with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(inputs: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("labels", "dataset must contain at least one example"));
        }
        if inputs.rows() != labels.len() {
            return Err(Error::DimensionMismatch { expected: inputs.rows(), found: labels.len() });
        }
        if num_classes < 2 {
            return Err(Error::invalid("num_classes", "need at least two classes"));
        }
        if let Some(i) = labels.iter().position(|&l| l >= num_classes) {
            return Err(Error::invalid(
                "labels",
                alloc::format!("label {} at index {i} exceeds class count {num_classes}", labels[i]),
            ));
        }
        Ok(Self { inputs, labels, num_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn input(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn one_hot(&self, i: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.num_classes];
        y[self.labels[i]] = 1.0;
        y
    }

    /// Examples at `indices`, in that order (repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let k = self.input_dim();
        let mut data = Vec::with_capacity(indices.len() * k);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid("indices", alloc::format!("index {i} out of range")));
            }
            data.extend_from_slice(self.input(i));
            labels.push(self.labels[i]);
        }
        Self::new(Matrix::from_row_major(indices.len(), k, data)?, labels, self.num_classes)
    }
}

/// Gaussian class clusters with unit isotropic noise. Class centers are
/// `(separation/√2)·q_c` for orthonormal `q_c`, so every pair of centers is
/// exactly `separation` apart. Examples cycle through the classes.
pub fn make_blobs<R: Rng + ?Sized>(
    num_classes: usize,
    samples_per_class: usize,
    input_dim: usize,
    separation: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if num_classes < 2 || samples_per_class == 0 || input_dim == 0 {
        return Err(Error::invalid("blobs", "need >= 2 classes and positive sizes"));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::invalid("separation", "must be finite and non-negative"));
    }
    if input_dim < num_classes {
        return Err(Error::invalid("input_dim", "must be at least the number of classes"));
    }
    let q = orthonormal_basis(rng, input_dim, num_classes)?;
    let scale = separation / core::f64::consts::SQRT_2;
    let n = num_classes * samples_per_class;
    let mut data = Vec::with_capacity(n * input_dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..samples_per_class {
        for c in 0..num_classes {
            for j in 0..input_dim {
                let noise: f64 = StandardNormal.sample(rng);
                data.push(scale * q.get(j, c) + noise);
            }
            labels.push(c);
        }
    }
    Dataset::new(Matrix::from_row_major(n, input_dim, data)?, labels, num_classes)
}

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, file: &'static str) -> core::result::Result<u32, IdxError> {
    let b =
        bytes.get(at..at + 4).ok_or(IdxError::Truncated { file, needed: at + 4, available: bytes.len() })?;
    Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

/// Decodes the first `limit` examples of an IDX image/label pair. Pixels are
/// scaled to `[0, 1]`; each image is flattened row-major.
pub fn parse_idx(
    images: &[u8],
    labels: &[u8],
    limit: usize,
    num_classes: usize,
) -> core::result::Result<Dataset, IdxError> {
    if limit == 0 {
        return Err(IdxError::Empty);
    }
    let magic = be_u32(images, 0, "images")?;
    if magic != IMAGE_MAGIC {
        return Err(IdxError::BadMagic { file: "images", expected: IMAGE_MAGIC, found: magic });
    }
    let magic = be_u32(labels, 0, "labels")?;
    if magic != LABEL_MAGIC {
        return Err(IdxError::BadMagic { file: "labels", expected: LABEL_MAGIC, found: magic });
    }
    let n_images = be_u32(images, 4, "images")? as usize;
    let rows = be_u32(images, 8, "images")? as usize;
    let cols = be_u32(images, 12, "images")? as usize;
    let n_labels = be_u32(labels, 4, "labels")? as usize;
    if n_images != n_labels {
        return Err(IdxError::ShapeMismatch { images: n_images, labels: n_labels });
    }
    let n = n_images.min(limit);
    if n == 0 {
        return Err(IdxError::Empty);
    }
    let pixels = rows * cols;
    let needed = 16 + n * pixels;
    if images.len() < needed {
        return Err(IdxError::Truncated { file: "images", needed, available: images.len() });
    }
    if labels.len() < 8 + n {
        return Err(IdxError::Truncated { file: "labels", needed: 8 + n, available: labels.len() });
    }
    let data: Vec<f64> = images[16..needed].iter().map(|&p| f64::from(p) / 255.0).collect();
    let mut out = Vec::with_capacity(n);
    for (index, &label) in labels[8..8 + n].iter().enumerate() {
        if usize::from(label) >= num_classes {
            return Err(IdxError::BadLabel { index, label, classes: num_classes });
        }
        out.push(usize::from(label));
    }
    let inputs = Matrix::from_vec_unchecked(n, pixels, data);
    Dataset::new(inputs, out, num_classes).map_err(|_| IdxError::Empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, RngStream};

    fn centroid_accuracy(train: &Dataset, test: &Dataset) -> f64 {
        let (c, k) = (train.num_classes(), train.input_dim());
        let mut centers = vec![vec![0.0; k]; c];
        let mut counts = vec![0usize; c];
        for i in 0..train.len() {
            let l = train.labels()[i];
            counts[l] += 1;
            centers[l].iter_mut().zip(train.input(i)).for_each(|(m, x)| *m += x);
        }
        for (m, n) in centers.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|x| *x /= *n as f64);
        }
        let mut hits = 0;
        for i in 0..test.len() {
            let x = test.input(i);
            let best = (0..c)
                .map(|j| {
                    let d: Vec<f64> = x.iter().zip(&centers[j]).map(|(a, b)| a - b).collect();
                    dot(&d, &d)
                })
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0;
            hits += usize::from(best == test.labels()[i]);
        }
        hits as f64 / test.len() as f64
    }

    fn split(d: &Dataset) -> (Dataset, Dataset) {
        let idx: Vec<usize> = (0..d.len()).collect();
        let (a, b) = idx.split_at(d.len() / 2);
        (d.subset(a).unwrap(), d.subset(b).unwrap())
    }

    #[test]
    fn blobs_balanced_and_separated() {
        let mut rng = RngStream::new(3, 0).rng();
        let d = make_blobs(4, 25, 6, 3.0, &mut rng).unwrap();
        let mut counts = [0; 4];
        d.labels().iter().for_each(|&l| counts[l] += 1);
        assert_eq!(counts, [25; 4]);
        assert_eq!((d.len(), d.input_dim()), (100, 6));
    }

    #[test]
    fn blobs_chance_level_without_separation() {
        let mut rng = RngStream::new(4, 0).rng();
        let d = make_blobs(5, 2000, 5, 0.0, &mut rng).unwrap();
        let (train, test) = split(&d);
        let acc = centroid_accuracy(&train, &test);
        assert!((acc - 0.2).abs() < 0.03, "acc {acc}");
    }

    #[test]
    fn blobs_separable_when_far_apart() {
        let mut rng = RngStream::new(5, 0).rng();
        let d = make_blobs(10, 100, 20, 20.0, &mut rng).unwrap();
        assert!(centroid_accuracy(&d, &d) >= 0.99);
    }

    fn fixture(n_img: u32, n_lab: u32) -> (Vec<u8>, Vec<u8>) {
        let mut img = vec![0, 0, 8, 3];
        for v in [n_img, 2, 2] {
            img.extend_from_slice(&v.to_be_bytes());
        }
        img.extend_from_slice(&[0, 255, 51, 102, 204, 0, 0, 255]);
        let mut lab = vec![0, 0, 8, 1];
        lab.extend_from_slice(&n_lab.to_be_bytes());
        lab.extend_from_slice(&[7, 2]);
        (img, lab)
    }

    #[test]
    fn idx_fixture_roundtrip() {
        let (img, lab) = fixture(2, 2);
        let d = parse_idx(&img, &lab, 10, 10).unwrap();
        assert_eq!(d.labels(), &[7, 2]);
        assert_eq!(d.input(0), &[0.0, 1.0, 0.2, 0.4]);
        assert_eq!(d.input(1), &[0.8, 0.0, 0.0, 1.0]);
        let one = parse_idx(&img, &lab, 1, 10).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn idx_error_kinds() {
        let (img, lab) = fixture(2, 2);
        assert_eq!(parse_idx(&img, &lab, 0, 10), Err(IdxError::Empty));
        let (img3, lab3) = fixture(2, 3);
        assert_eq!(parse_idx(&img3, &lab3, 5, 10), Err(IdxError::ShapeMismatch { images: 2, labels: 3 }));
        assert!(matches!(parse_idx(&lab, &img, 5, 10), Err(IdxError::BadMagic { .. })));
        assert!(matches!(parse_idx(&img[..20], &lab, 5, 10), Err(IdxError::Truncated { .. })));
        assert!(matches!(parse_idx(&img, &lab, 5, 5), Err(IdxError::BadLabel { index: 0, .. })));
    }
}
