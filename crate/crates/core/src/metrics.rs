//! Fréchet distance between Gaussian fits of two feature sets.
//!
//! `d² = ‖μ₁−μ₂‖² + tr(C₁ + C₂ − 2(C₂C₁)^{1/2})`
//!
//! The trace of `(C₂C₁)^{1/2}` is taken as `Σ √λ(S·C₂·S)` with
//! `S = C₁^{1/2}`, a symmetric PSD matrix similar to `C₂C₁`. When the
//! covariances come from fewer samples than feature dimensions,
//! [`frechet_distance_samples`] evaluates the same quantity through the small
//! cross-Gram matrix of the two centered sample sets instead.
//!
//! Features are raw pixels or PCA scores, not Inception activations, so
//! absolute values are only comparable between runs that use the same
//! extractor and reference set.

use crate::error::{Error, Result};
use crate::linalg::{check_psd, eigh_symmetric, mean_covariance, sqrtm_psd, Matrix};
use crate::pca::PcaModel;

/// Tolerance below zero that is treated as round-off.
const NEGATIVE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetStats {
    pub mean: Vec<f64>,
    pub cov: Matrix,
    pub n_samples: usize,
}

impl FrechetStats {
    pub fn new(mean: Vec<f64>, cov: Matrix, n_samples: usize) -> Result<Self> {
        if cov.rows() != mean.len() || cov.cols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                actual: cov.rows(),
            });
        }
        Ok(Self { mean, cov, n_samples })
    }

    pub fn from_samples(samples: &Matrix) -> Result<Self> {
        let (mean, cov) = mean_covariance(samples)?;
        Ok(Self {
            mean,
            cov,
            n_samples: samples.rows(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn finish(distance: f64) -> Result<f64> {
    if !distance.is_finite() {
        return Err(Error::Numeric(format!("Fréchet distance is {distance}")));
    }
    if distance < -NEGATIVE_SLACK * distance.abs().max(1.0) {
        return Err(Error::Numeric(format!("Fréchet distance {distance} is negative")));
    }
    Ok(distance.max(0.0))
}

fn mean_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Fréchet distance between two Gaussian summaries.
pub fn frechet_distance(a: &FrechetStats, b: &FrechetStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let s = sqrtm_psd(&a.cov)?;
    // b.cov is checked for PSD through its own spectrum; S·C₂·S alone would hide it
    check_psd(&eigh_symmetric(&b.cov)?, b.cov.frobenius_norm())?;
    let middle = s.matmul(&b.cov)?.matmul(&s)?;
    let cross = trace_sqrt(&middle)?;
    finish(mean_gap(&a.mean, &b.mean) + a.cov.trace() + b.cov.trace() - 2.0 * cross)
}

/// `Σ √max(λ, 0)` over the eigenvalues of a symmetric PSD matrix.
fn trace_sqrt(m: &Matrix) -> Result<f64> {
    // symmetrize round-off from the triple product
    let mut sym = m.clone();
    let n = sym.rows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (sym[(i, j)] + sym[(j, i)]);
            sym[(i, j)] = v;
            sym[(j, i)] = v;
        }
    }
    let eig = eigh_symmetric(&sym)?;
    Ok(eig.values.iter().map(|l| l.max(0.0).sqrt()).sum())
}

/// Fréchet distance between the Gaussian fits of two sample sets (rows).
///
/// With centered samples `X` (`n₁ × d`) and `Y` (`n₂ × d`), the nonzero
/// eigenvalues of `C₂C₁` equal those of `K·Kᵀ / ((n₁−1)(n₂−1))` where
/// `K = Y·Xᵀ`, so only a `min(n₁, n₂)`-sized eigenproblem is solved. Falls
/// back to [`frechet_distance`] when that would not be smaller than `d`.
pub fn frechet_distance_samples(x: &Matrix, y: &Matrix) -> Result<f64> {
    if x.cols() != y.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            actual: y.cols(),
        });
    }
    let (n1, n2, d) = (x.rows(), y.rows(), x.cols());
    if n1 < 2 || n2 < 2 {
        return Err(Error::InsufficientData(format!(
            "Fréchet distance needs at least 2 samples per set, got {n1} and {n2}"
        )));
    }
    if n1.min(n2) >= d {
        return frechet_distance(&FrechetStats::from_samples(x)?, &FrechetStats::from_samples(y)?);
    }
    let (mx, xc) = x.centered();
    let (my, yc) = y.centered();
    let (d1, d2) = ((n1 - 1) as f64, (n2 - 1) as f64);
    let tr1 = xc.frobenius_norm().powi(2) / d1;
    let tr2 = yc.frobenius_norm().powi(2) / d2;
    let k = yc.matmul_transposed(&xc)?;
    let small = if n2 <= n1 {
        k.matmul_transposed(&k)?
    } else {
        let kt = k.transpose();
        kt.matmul_transposed(&kt)?
    };
    let scale = 1.0 / (d1 * d2);
    let cross = trace_sqrt(&scaled(&small, scale))?;
    finish(mean_gap(&mx, &my) + tr1 + tr2 - 2.0 * cross)
}

fn scaled(m: &Matrix, s: f64) -> Matrix {
    let data = m.as_slice().iter().map(|v| v * s).collect();
    Matrix::from_vec(m.rows(), m.cols(), data).expect("same shape")
}

/// Which representation of an image feeds the distance.
#[derive(Debug, Clone, Copy)]
pub enum FeatureMode<'a> {
    Pixels,
    PcaScores(&'a PcaModel),
}

pub fn extract_features(images: &Matrix, mode: FeatureMode<'_>) -> Result<Matrix> {
    if images.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "feature extraction needs at least 2 images, got {}",
            images.rows()
        )));
    }
    match mode {
        FeatureMode::Pixels => Ok(images.clone()),
        FeatureMode::PcaScores(model) => model.transform_rows(images),
    }
}
