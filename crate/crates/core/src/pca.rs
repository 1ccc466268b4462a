//! Principal component projection of flattened images and the min-max
//! scaler that maps component scores into `[0, 1]`.

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{dot, eigh_symmetric, mean_covariance, Matrix};

/// How the principal axes are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaRoute {
    /// `Gram` when there are fewer samples than dimensions, else `Covariance`.
    Auto,
    /// Eigenvectors of the `N × N` Gram matrix of centered samples.
    Gram,
    /// Eigenvectors of the `d × d` sample covariance.
    Covariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `k × d`, orthonormal rows, descending variance.
    components: Matrix,
}

impl PcaModel {
    pub fn new(mean: Vec<f64>, components: Matrix) -> Result<Self> {
        if components.cols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                actual: components.cols(),
            });
        }
        Ok(Self { mean, components })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &Matrix {
        &self.components
    }

    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `components · (x − mean)`.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        Ok(self.components.row_iter().map(|c| dot(c, &centered)).collect())
    }

    /// `mean + componentsᵀ · scores`, without clamping.
    pub fn reconstruct(&self, scores: &[f64]) -> Result<Vec<f64>> {
        if scores.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                actual: scores.len(),
            });
        }
        let mut out = self.mean.clone();
        for (c, &s) in self.components.row_iter().zip(scores) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += s * v;
            }
        }
        Ok(out)
    }

    /// Reconstruction clamped to the pixel range `[0, 1]`.
    pub fn inverse(&self, scores: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.reconstruct(scores)?;
        out.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
        Ok(out)
    }

    pub fn transform_rows(&self, x: &Matrix) -> Result<Matrix> {
        let rows = x.row_iter().map(|r| self.transform(r)).collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(&rows, self.k())
    }
}

pub fn pca_fit(samples: &Matrix, k: usize) -> Result<PcaModel> {
    pca_fit_with(samples, k, PcaRoute::Auto)
}

pub fn pca_fit_with(samples: &Matrix, k: usize, route: PcaRoute) -> Result<PcaModel> {
    let (n, d) = (samples.rows(), samples.cols());
    if k == 0 || k > d {
        return Err(Error::Config(format!(
            "cannot keep {k} components of {d}-dimensional data"
        )));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "{n} samples cannot support {k} principal components"
        )));
    }
    let route = match route {
        PcaRoute::Auto if n < d => PcaRoute::Gram,
        PcaRoute::Auto => PcaRoute::Covariance,
        r => r,
    };
    let (mean, centered) = samples.centered();
    let mut rows: Vec<Vec<f64>> = match route {
        PcaRoute::Covariance => {
            let (_, cov) = mean_covariance(samples)?;
            let eig = eigh_symmetric(&cov)?;
            rank_check(&eig.values, k)?;
            (0..k).map(|j| eig.vector(j)).collect()
        }
        _ => {
            let gram = centered.matmul_transposed(&centered)?;
            let eig = eigh_symmetric(&gram)?;
            rank_check(&eig.values, k)?;
            // v_j = Xᵀ u_j / √λ_j
            (0..k)
                .map(|j| {
                    let u = eig.vector(j);
                    let scale = eig.values[j].sqrt();
                    let mut v = vec![0.0; d];
                    for (row, &w) in centered.row_iter().zip(&u) {
                        for (acc, x) in v.iter_mut().zip(row) {
                            *acc += w * x;
                        }
                    }
                    v.iter_mut().for_each(|x| *x /= scale);
                    v
                })
                .collect()
        }
    };
    rows.iter_mut().for_each(|r| fix_sign(r));
    PcaModel::new(mean, Matrix::from_rows(&rows, d)?)
}

fn rank_check(values: &[f64], k: usize) -> Result<()> {
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    if values[k - 1] <= 1e-12 * top.max(f64::MIN_POSITIVE) {
        return Err(Error::InsufficientData(format!(
            "data has fewer than {k} directions of nonzero variance"
        )));
    }
    Ok(())
}

/// Flips `v` so that its largest-magnitude entry is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Per-feature affine map of `[lo, hi]` onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

const DEGENERATE_WIDTH: f64 = 1e-9;

impl MinMaxScaler {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if let Some(j) = (0..lo.len()).find(|&j| !(hi[j] > lo[j])) {
            return Err(Error::Config(format!(
                "scaler range [{}, {}] for feature {j} is empty",
                lo[j], hi[j]
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn fit(scores: &Matrix) -> Result<Self> {
        if scores.rows() < 2 {
            return Err(Error::InsufficientData(format!(
                "min-max scaling needs at least 2 samples, got {}",
                scores.rows()
            )));
        }
        let k = scores.cols();
        let mut lo = vec![f64::INFINITY; k];
        let mut hi = vec![f64::NEG_INFINITY; k];
        for row in scores.row_iter() {
            for j in 0..k {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        for j in 0..k {
            if !(hi[j] > lo[j]) {
                warn!(
                    "feature {j} is constant ({}); widening its range by {DEGENERATE_WIDTH:e}",
                    lo[j]
                );
                hi[j] = lo[j] + DEGENERATE_WIDTH;
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    /// `(s − lo)/(hi − lo)`, clamped to `[0, 1]`.
    pub fn apply(&self, scores: &[f64]) -> Result<Vec<f64>> {
        self.check_len(scores.len())?;
        Ok(scores
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(s, (lo, hi))| ((s - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect())
    }

    /// `lo + u·(hi − lo)`.
    pub fn invert(&self, unit: &[f64]) -> Result<Vec<f64>> {
        self.check_len(unit.len())?;
        Ok(unit
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.lo.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lo.len(),
                actual: len,
            });
        }
        Ok(())
    }
}
