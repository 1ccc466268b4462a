//! Small dense real linear algebra: a row-major matrix, cyclic Jacobi
//! eigendecomposition for symmetric matrices, PSD square roots and sample
//! moments.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows. An empty list yields `0 × cols`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.data
            .chunks_exact(cols)
            .take(if self.cols == 0 { 0 } else { self.rows })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`, i.e. all pairwise row dot products.
    pub fn matmul_transposed(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.cols,
            });
        }
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out[(i, j)] = dot(self.row(i), other.row(j));
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                expected: self.data.len(),
                actual: other.data.len(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Rows minus the column means, together with those means.
    pub fn centered(&self) -> (Vec<f64>, Matrix) {
        let mean = column_means(self);
        let mut c = self.clone();
        for i in 0..c.rows {
            for (v, m) in c.row_mut(i).iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        (mean, c)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn column_means(m: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; m.cols];
    for row in m.row_iter() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    if m.rows > 0 {
        let n = m.rows as f64;
        mean.iter_mut().for_each(|v| *v /= n);
    }
    mean
}

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            let vi = self.vectors.row(i);
            for j in i..n {
                let vj = self.vectors.row(j);
                let s: f64 = vi.iter().zip(vj).zip(&weights).map(|((a, b), w)| a * b * w).sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOLERANCE: f64 = 1e-12;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps until the off-diagonal Frobenius norm drops below `1e-12 · ‖M‖_F`,
/// giving up after 100 sweeps.
pub fn eigh_symmetric(m: &Matrix) -> Result<SymmetricEigen> {
    let n = m.rows;
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch {
            expected: m.rows,
            actual: m.cols,
        });
    }
    let scale = m.frobenius_norm();
    if !scale.is_finite() {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    if !m.is_symmetric(1e-9 * scale.max(1.0)) {
        return Err(Error::Numeric("matrix is not symmetric".into()));
    }

    let mut a = m.clone();
    // symmetrize so that round-off asymmetry does not leak into the rotations
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    // vt row k holds eigenvector k
    let mut vt = Matrix::identity(n);
    let threshold = JACOBI_TOLERANCE * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                rotate_rows(&mut a, p, q, c, s);
                // column update via symmetry
                for k in 0..n {
                    a[(k, p)] = a[(p, k)];
                    a[(k, q)] = a[(q, k)];
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                rotate_rows(&mut vt, p, q, c, s);
            }
        }
    }
    let off = off_diagonal_norm(&a);
    if off > threshold {
        return Err(Error::Numeric(format!(
            "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal residual {off:e}, target {threshold:e})"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for (i, &v) in vt.row(k).iter().enumerate() {
            vectors[(i, col)] = v;
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Rows `p`, `q` ← `(c·r_p − s·r_q, s·r_p + c·r_q)`.
fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols;
    let (lo, hi) = m.data.split_at_mut(q * cols);
    let rp = &mut lo[p * cols..(p + 1) * cols];
    let rq = &mut hi[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.rows {
        for (j, v) in a.row(i).iter().enumerate() {
            if i != j {
                sum += v * v;
            }
        }
    }
    sum.sqrt()
}

/// Symmetric square root of a (numerically) positive semi-definite matrix.
///
/// Eigenvalues down to `-1e-8 · ‖M‖` are treated as round-off and clamped to zero.
pub fn sqrtm_psd(m: &Matrix) -> Result<Matrix> {
    let eig = eigh_symmetric(m)?;
    check_psd(&eig, m.frobenius_norm())?;
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

pub(crate) fn check_psd(eig: &SymmetricEigen, scale: f64) -> Result<()> {
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -1e-8 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// Sample mean and unbiased (`1/(N−1)`) covariance of the rows of `samples`.
pub fn mean_covariance(samples: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if samples.rows < 2 {
        return Err(Error::InsufficientData(format!(
            "covariance needs at least 2 samples, got {}",
            samples.rows
        )));
    }
    let (mean, centered) = samples.centered();
    let d = samples.cols;
    let mut cov = Matrix::zeros(d, d);
    for row in centered.row_iter() {
        for i in 0..d {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            let out = &mut cov.data[i * d + i..(i + 1) * d];
            for (o, &xj) in out.iter_mut().zip(&row[i..]) {
                *o += xi * xj;
            }
        }
    }
    let denom = (samples.rows - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok((mean, cov))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    pub(crate) fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn random_psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let data = (0..n * rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = Matrix::from_vec(n, rank, data).unwrap();
        b.matmul_transposed(&b).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        for n in [1, 3, 8] {
            let eig = eigh_symmetric(&Matrix::identity(n)).unwrap();
            assert!(eig.values.iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn two_by_two_eigenpairs() {
        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]], 2).unwrap();
        let eig = eigh_symmetric(&m).unwrap();
        assert_abs_diff_eq!(eig.values[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-14);
        let v = eig.vector(0);
        assert_abs_diff_eq!(v[0].abs(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(v[0], v[1], epsilon = 1e-14);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1, 2, 5, 20, 40] {
            let m = random_symmetric(n, &mut rng);
            let eig = eigh_symmetric(&m).unwrap();
            let back = eig.reconstruct_with(|l| l);
            assert!(back.max_abs_diff(&m) <= 1e-8 * m.frobenius_norm());
            let vtv = eig.vectors.transpose().matmul(&eig.vectors).unwrap();
            assert!(vtv.max_abs_diff(&Matrix::identity(n)) <= 1e-9);
            let sum: f64 = eig.values.iter().sum();
            assert_abs_diff_eq!(sum, m.trace(), epsilon = 1e-8 * m.frobenius_norm());
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]], 2).unwrap();
        assert!(matches!(eigh_symmetric(&m), Err(Error::Numeric(_))));
        assert!(eigh_symmetric(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sqrtm_examples() {
        let m = Matrix::from_diagonal(&[4.0, 9.0]);
        let s = sqrtm_psd(&m).unwrap();
        assert!(s.max_abs_diff(&Matrix::from_diagonal(&[2.0, 3.0])) <= 1e-14);

        let s = sqrtm_psd(&Matrix::identity(4)).unwrap();
        assert!(s.max_abs_diff(&Matrix::identity(4)) <= 1e-15);

        let m = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]], 2).unwrap();
        let s = sqrtm_psd(&m).unwrap();
        assert!(s.matmul(&s).unwrap().max_abs_diff(&m) <= 1e-8);

        let neg = Matrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(sqrtm_psd(&neg), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn sqrtm_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for (n, rank) in [(10, 10), (30, 5), (50, 50)] {
            let m = random_psd(n, rank, &mut rng);
            let s = sqrtm_psd(&m).unwrap();
            let err = s.matmul(&s).unwrap().sub(&m).unwrap().frobenius_norm();
            assert!(err <= 1e-6 * m.frobenius_norm(), "dim {n}: {err}");
        }
    }

    #[test]
    fn covariance_examples() {
        let same = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]], 2).unwrap();
        let (_, cov) = mean_covariance(&same).unwrap();
        assert!(cov.as_slice().iter().all(|&v| v == 0.0));

        let pts = Matrix::from_rows(&[[0.0, 0.0], [2.0, 2.0]], 2).unwrap();
        let (mean, cov) = mean_covariance(&pts).unwrap();
        assert_eq!(mean, vec![1.0, 1.0]);
        assert_eq!(cov.as_slice(), &[2.0, 2.0, 2.0, 2.0]);

        let one = Matrix::from_rows(&[[1.0, 2.0]], 2).unwrap();
        assert!(matches!(mean_covariance(&one), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn covariance_is_psd_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let (m1, c1) = mean_covariance(&Matrix::from_rows(&rows, 6).unwrap()).unwrap();
        let eig = eigh_symmetric(&c1).unwrap();
        assert!(eig.values.iter().all(|&l| l >= -1e-10));

        let mut shuffled = rows.clone();
        shuffled.reverse();
        shuffled.swap(3, 17);
        let (m2, c2) = mean_covariance(&Matrix::from_rows(&shuffled, 6).unwrap()).unwrap();
        for (a, b) in m1.iter().zip(&m2) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        assert!(c1.max_abs_diff(&c2) <= 1e-14);
    }
}
