//! Shared numerical substrate: the data carrier, standardization, covariance,
//! whitening, the Gaussian-derivative basis and the two decomposition
//! contracts used by every estimator.
//!
//! Covariances and standard deviations use the population convention
//! (divide by `n`), matching the `1/n` empirical averages used by the
//! estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{NgcaError, Result};

/// Default floor on covariance eigenvalues accepted by [`build_whitener`].
pub const DEFAULT_MIN_EIGENVALUE: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;

/// `n` samples by `d` features. Rows are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(NgcaError::InvalidData(format!(
                "need at least 2 samples, got {}",
                values.nrows()
            )));
        }
        if values.ncols() < 1 {
            return Err(NgcaError::InvalidData("need at least 1 feature".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % values.nrows(), pos / values.nrows());
            return Err(NgcaError::InvalidData(format!(
                "non-finite entry at row {row}, column {col}"
            )));
        }
        Ok(DataMatrix(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(NgcaError::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        let m = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(m)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn d(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.0.row(i).transpose()
    }

    /// Keeps the rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        Self::new(self.0.select_rows(indices))
    }
}

fn column_moments(x: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let mut means = DVector::zeros(x.ncols());
    let mut sds = DVector::zeros(x.ncols());
    for (j, col) in x.column_iter().enumerate() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        means[j] = mean;
        sds[j] = var.sqrt();
    }
    (means, sds)
}

/// Element-wise standardization to zero mean and unit (population) standard
/// deviation. Returns the standardized data along with the column means and
/// scales, so that `x = z * scale + mean`.
pub fn standardize(x: &DataMatrix) -> Result<(DataMatrix, DVector<f64>, DVector<f64>)> {
    let (means, sds) = column_moments(x.as_matrix());
    for (j, (&sd, &mean)) in sds.iter().zip(means.iter()).enumerate() {
        if !(sd > 1e-14 * (1.0 + mean.abs())) {
            return Err(NgcaError::ConstantFeature { column: j });
        }
    }
    let mut z = x.as_matrix().clone();
    for (j, mut col) in z.column_iter_mut().enumerate() {
        let (mean, sd) = (means[j], sds[j]);
        col.apply(|v| *v = (*v - mean) / sd);
    }
    Ok((DataMatrix(z), means, sds))
}

/// Population sample covariance, centered at the sample mean.
pub fn sample_covariance(x: &DataMatrix) -> DMatrix<f64> {
    let m = x.as_matrix();
    let n = m.nrows() as f64;
    let (means, _) = column_moments(m);
    let mut centered = m.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let mean = means[j];
        col.apply(|v| *v -= mean);
    }
    let mut cov = centered.transpose() * &centered / n;
    symmetrize(&mut cov);
    cov
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Affine map `y = Σ^{-1/2} (x - mean)`.
#[derive(Debug, Clone)]
pub struct Whitener {
    pub mean: DVector<f64>,
    pub inv_sqrt_cov: DMatrix<f64>,
    /// Covariance eigenvalues, descending.
    pub cov_eigenvalues: DVector<f64>,
}

impl Whitener {
    pub fn d(&self) -> usize {
        self.mean.len()
    }
}

/// Builds the symmetric whitening transform from the sample covariance.
///
/// Fails if any covariance eigenvalue is below `min_eigenvalue`; no
/// regularization is applied.
pub fn build_whitener(x: &DataMatrix, min_eigenvalue: f64) -> Result<Whitener> {
    if !(min_eigenvalue > 0.0) {
        return Err(NgcaError::InvalidParameter(format!(
            "min_eigenvalue must be positive, got {min_eigenvalue}"
        )));
    }
    let cov = sample_covariance(x);
    let (means, _) = column_moments(x.as_matrix());
    let (eigenvalues, vectors) = sorted_eigen(cov);
    let smallest = eigenvalues[eigenvalues.len() - 1];
    if !(smallest >= min_eigenvalue) {
        return Err(NgcaError::IllConditionedCovariance {
            eigenvalue: smallest,
            floor: min_eigenvalue,
        });
    }
    let scale = DMatrix::from_diagonal(&eigenvalues.map(|l| 1.0 / l.sqrt()));
    let mut inv_sqrt_cov = &vectors * scale * vectors.transpose();
    symmetrize(&mut inv_sqrt_cov);
    Ok(Whitener {
        mean: means,
        inv_sqrt_cov,
        cov_eigenvalues: eigenvalues,
    })
}

/// Applies `y = Σ^{-1/2} (x - mean)` to every row.
pub fn whiten(w: &Whitener, x: &DataMatrix) -> Result<DataMatrix> {
    if x.d() != w.d() {
        return Err(NgcaError::DimensionMismatch {
            expected: w.d(),
            got: x.d(),
        });
    }
    let mut centered = x.as_matrix().clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let mean = w.mean[j];
        col.apply(|v| *v -= mean);
    }
    // Rows transform as y^T = (x - mean)^T Σ^{-1/2}; the factor is symmetric.
    DataMatrix::new(centered * &w.inv_sqrt_cov)
}

/// Full eigendecomposition sorted by descending eigenvalue, with the sign of
/// each eigenvector fixed so its largest-magnitude entry is positive.
fn sorted_eigen(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = eig.eigenvectors.select_columns(&order);
    for mut col in vectors.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    (values, vectors)
}

/// Leading `m` eigenpairs of a symmetric matrix, eigenvalues descending.
pub fn symmetric_eig_topm(m: &DMatrix<f64>, count: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(NgcaError::DimensionMismatch {
            expected: d,
            got: m.ncols(),
        });
    }
    if count == 0 || count > d {
        return Err(NgcaError::InvalidParameter(format!(
            "number of eigenvectors must be in 1..={d}, got {count}"
        )));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(NgcaError::Asymmetric(asym));
    }
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let (values, vectors) = sorted_eigen(sym);
    Ok((
        values.rows(0, count).into_owned(),
        vectors.columns(0, count).into_owned(),
    ))
}

/// Orthonormal basis for the column span of `v`, by column-pivoted modified
/// Gram-Schmidt with one re-orthogonalization pass. Columns come out in pivot
/// order.
pub fn orthonormalize(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (d, m) = v.shape();
    if m == 0 || m > d {
        return Err(NgcaError::InvalidParameter(format!(
            "cannot orthonormalize {m} columns in dimension {d}"
        )));
    }
    let max_norm = v.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tolerance = RANK_TOL * max_norm;
    if !(max_norm > 0.0) {
        return Err(NgcaError::RankDeficient {
            residual: 0.0,
            tolerance,
        });
    }
    let mut work: Vec<DVector<f64>> = v.column_iter().map(|c| c.into_owned()).collect();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
    for _ in 0..m {
        let (pick, residual) = work
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("work columns remain");
        if !(residual > tolerance) {
            return Err(NgcaError::RankDeficient { residual, tolerance });
        }
        let mut q = work.swap_remove(pick);
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&q);
                q.axpy(-proj, b, 1.0);
            }
        }
        let norm = q.norm();
        if !(norm > tolerance) {
            return Err(NgcaError::RankDeficient {
                residual: norm,
                tolerance,
            });
        }
        q /= norm;
        for c in work.iter_mut() {
            let proj = q.dot(c);
            c.axpy(-proj, &q, 1.0);
        }
        basis.push(q);
    }
    Ok(DMatrix::from_columns(&basis))
}

/// Maximum entrywise deviation of `bᵀb` from the identity.
pub fn orthonormality_defect(b: &DMatrix<f64>) -> f64 {
    let gram = b.transpose() * b;
    (gram - DMatrix::identity(b.ncols(), b.ncols())).amax()
}

/// Family of partial derivatives `∂_j exp(-‖x - c_k‖² / (2σ²))` over shared
/// centers `c_k`. `deriv_index` is zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDerivBasis {
    centers: DMatrix<f64>,
    bandwidth: f64,
    deriv_index: usize,
}

impl GaussianDerivBasis {
    pub fn new(centers: DMatrix<f64>, bandwidth: f64, deriv_index: usize) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(NgcaError::InvalidParameter(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        if centers.nrows() == 0 || centers.ncols() == 0 {
            return Err(NgcaError::InvalidParameter("basis needs at least one center".into()));
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return Err(NgcaError::InvalidParameter("non-finite basis center".into()));
        }
        if deriv_index >= centers.ncols() {
            return Err(NgcaError::InvalidParameter(format!(
                "derivative index {deriv_index} out of range for dimension {}",
                centers.ncols()
            )));
        }
        Ok(GaussianDerivBasis {
            centers,
            bandwidth,
            deriv_index,
        })
    }

    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn deriv_index(&self) -> usize {
        self.deriv_index
    }

    pub fn len(&self) -> usize {
        self.centers.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    fn kernel(&self, x: &[f64], k: usize) -> f64 {
        let sq: f64 = x
            .iter()
            .enumerate()
            .map(|(l, &xl)| {
                let diff = xl - self.centers[(k, l)];
                diff * diff
            })
            .sum();
        (-sq / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }

    fn check(&self, x: &[f64]) {
        assert_eq!(x.len(), self.dim(), "point dimension does not match basis");
    }

    /// `ψ_k(x) = -((x_j - c_kj)/σ²) K_k(x)` for every center.
    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        self.check(x);
        let j = self.deriv_index;
        let s2 = self.bandwidth * self.bandwidth;
        DVector::from_fn(self.len(), |k, _| {
            -(x[j] - self.centers[(k, j)]) / s2 * self.kernel(x, k)
        })
    }

    /// `∂_j ψ_k(x) = ((x_j - c_kj)²/σ⁴ - 1/σ²) K_k(x)`.
    pub fn partial(&self, x: &[f64]) -> DVector<f64> {
        self.check(x);
        let j = self.deriv_index;
        let s2 = self.bandwidth * self.bandwidth;
        DVector::from_fn(self.len(), |k, _| {
            let u = x[j] - self.centers[(k, j)];
            (u * u / (s2 * s2) - 1.0 / s2) * self.kernel(x, k)
        })
    }

    /// Row `k` holds `∇_x ψ_k(x)`.
    pub fn gradient(&self, x: &[f64]) -> DMatrix<f64> {
        self.check(x);
        let j = self.deriv_index;
        let s2 = self.bandwidth * self.bandwidth;
        let mut out = DMatrix::zeros(self.len(), self.dim());
        for k in 0..self.len() {
            let kern = self.kernel(x, k);
            let uj = x[j] - self.centers[(k, j)];
            for l in 0..self.dim() {
                let ul = x[l] - self.centers[(k, l)];
                let delta = if l == j { 1.0 / s2 } else { 0.0 };
                out[(k, l)] = (uj * ul / (s2 * s2) - delta) * kern;
            }
        }
        out
    }

    /// Basis values and `∂_j` partials at every row of `x`, as two `n × k`
    /// matrices.
    pub fn design(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let sq = squared_distances(x, &self.centers);
        design_from_sqdist(x, &self.centers, &sq, self.bandwidth, self.deriv_index)
    }
}

/// `‖x_i - c_k‖²` for every sample row and center row.
pub fn squared_distances(x: &DMatrix<f64>, centers: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let b = centers.nrows();
    assert_eq!(d, centers.ncols(), "centers dimension does not match data");
    let mut out = DMatrix::zeros(n, b);
    for k in 0..b {
        for i in 0..n {
            let mut s = 0.0;
            for l in 0..d {
                let diff = x[(i, l)] - centers[(k, l)];
                s += diff * diff;
            }
            out[(i, k)] = s;
        }
    }
    out
}

pub(crate) fn design_from_sqdist(
    x: &DMatrix<f64>,
    centers: &DMatrix<f64>,
    sqdist: &DMatrix<f64>,
    bandwidth: f64,
    j: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, b) = sqdist.shape();
    let s2 = bandwidth * bandwidth;
    let mut values = DMatrix::zeros(n, b);
    let mut partials = DMatrix::zeros(n, b);
    for k in 0..b {
        let ck = centers[(k, j)];
        for i in 0..n {
            let kern = (-sqdist[(i, k)] / (2.0 * s2)).exp();
            let u = x[(i, j)] - ck;
            values[(i, k)] = -u / s2 * kern;
            partials[(i, k)] = (u * u / (s2 * s2) - 1.0 / s2) * kern;
        }
    }
    (values, partials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gauss(x: &[f64], c: &[f64], sigma: f64) -> f64 {
        let sq: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
        (-sq / (2.0 * sigma * sigma)).exp()
    }

    #[test]
    fn standardize_population_convention() {
        let x = DataMatrix::from_rows(&[vec![2.0, 1.0], vec![4.0, 5.0], vec![6.0, 0.0]]).unwrap();
        let (z, means, scales) = standardize(&x).unwrap();
        let expected = 1.5f64.sqrt();
        assert_relative_eq!(z.as_matrix()[(0, 0)], -expected, epsilon = 1e-12);
        assert_relative_eq!(z.as_matrix()[(1, 0)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(z.as_matrix()[(2, 0)], expected, epsilon = 1e-12);
        assert_relative_eq!(means[0], 4.0);
        assert_relative_eq!(scales[0], (8.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let x = DataMatrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 3.0], vec![4.0, 3.0]]).unwrap();
        match standardize(&x) {
            Err(NgcaError::ConstantFeature { column }) => assert_eq!(column, 1),
            other => panic!("expected constant-feature error, got {other:?}"),
        }
    }

    #[test]
    fn covariance_examples() {
        let x = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let cov = sample_covariance(&x);
        assert_eq!(cov, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));

        let x = DataMatrix::from_rows(&vec![vec![1.5, -2.0, 3.0]; 6]).unwrap();
        assert_eq!(sample_covariance(&x).amax(), 0.0);
    }

    #[test]
    fn whitener_diagonal_covariance() {
        // Columns with population variances 4 and 1, uncorrelated.
        let x = DataMatrix::from_rows(&[vec![2.0, 1.0], vec![-2.0, 1.0], vec![2.0, -1.0], vec![-2.0, -1.0]]).unwrap();
        let w = build_whitener(&x, DEFAULT_MIN_EIGENVALUE).unwrap();
        assert_relative_eq!(
            w.inv_sqrt_cov,
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]),
            epsilon = 1e-12
        );
        assert_relative_eq!(w.cov_eigenvalues[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn whitener_rejects_tiny_eigenvalue() {
        // Second column is the first scaled by a tiny offset; covariance
        // eigenvalue near 1e-18.
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let a = i as f64;
                vec![a, a + 1e-9 * ((i % 2) as f64 - 0.5)]
            })
            .collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        match build_whitener(&x, 1e-12) {
            Err(NgcaError::IllConditionedCovariance { eigenvalue, floor }) => {
                assert!(eigenvalue < 1e-12);
                assert_eq!(floor, 1e-12);
            }
            other => panic!("expected ill-conditioned error, got {other:?}"),
        }
    }

    #[test]
    fn whiten_maps_mean_to_zero_and_identity_is_noop() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.0], vec![2.0, 4.0]]).unwrap();
        let w = build_whitener(&x, DEFAULT_MIN_EIGENVALUE).unwrap();
        let mean_row = DataMatrix::from_rows(&[w.mean.as_slice().to_vec(), w.mean.as_slice().to_vec()]).unwrap();
        assert!(whiten(&w, &mean_row).unwrap().as_matrix().amax() < 1e-12);

        let id = Whitener {
            mean: DVector::zeros(2),
            inv_sqrt_cov: DMatrix::identity(2, 2),
            cov_eigenvalues: DVector::from_element(2, 1.0),
        };
        assert_eq!(whiten(&id, &x).unwrap(), x);

        let wrong = DataMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(whiten(&w, &wrong), Err(NgcaError::DimensionMismatch { .. })));
    }

    #[test]
    fn basis_values_at_known_points() {
        let b = GaussianDerivBasis::new(DMatrix::from_element(1, 1, 0.0), 1.0, 0).unwrap();
        assert_eq!(b.eval(&[0.0])[0], 0.0);
        let fd = {
            let h = 1e-5;
            (gauss(&[1.0 + h], &[0.0], 1.0) - gauss(&[1.0 - h], &[0.0], 1.0)) / (2.0 * h)
        };
        assert_relative_eq!(b.eval(&[1.0])[0], fd, max_relative = 1e-8);
        assert_relative_eq!(b.eval(&[1.0])[0], -0.6065306597126334, epsilon = 1e-15);
        assert!(b.eval(&[60.0])[0].abs() < 1e-300);

        assert_relative_eq!(b.partial(&[0.0])[0], -1.0);
        assert!(b.partial(&[60.0])[0].abs() < 1e-300);

        let b2 = GaussianDerivBasis::new(DMatrix::from_row_slice(1, 2, &[0.3, -0.7]), 1.0, 0).unwrap();
        let g = b2.gradient(&[0.3, -0.7]);
        assert_relative_eq!(g[(0, 0)], -1.0);
        assert_relative_eq!(g[(0, 1)], 0.0);
        assert!(b2.gradient(&[90.0, 90.0]).amax() < 1e-300);
    }

    #[test]
    fn partial_is_even_around_center() {
        let centers = DMatrix::from_row_slice(2, 3, &[0.5, -1.0, 2.0, 0.0, 0.3, -0.4]);
        let b = GaussianDerivBasis::new(centers.clone(), 0.8, 1).unwrap();
        for s in 0..20 {
            let x: Vec<f64> = (0..3).map(|l| ((s * 7 + l * 3) % 11) as f64 * 0.3 - 1.5).collect();
            let vals = b.partial(&x);
            for k in 0..2 {
                let mirrored: Vec<f64> = (0..3).map(|l| 2.0 * centers[(k, l)] - x[l]).collect();
                assert_relative_eq!(vals[k], b.partial(&mirrored)[k], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gradient_column_matches_partial() {
        let centers = DMatrix::from_row_slice(3, 2, &[0.1, 0.2, -0.5, 1.0, 1.5, -0.3]);
        let b = GaussianDerivBasis::new(centers, 0.7, 1).unwrap();
        let x = [0.4, -0.2];
        let g = b.gradient(&x);
        let p = b.partial(&x);
        for k in 0..3 {
            assert_eq!(g[(k, 1)], p[k]);
        }
    }

    #[test]
    fn design_matches_pointwise() {
        let centers = DMatrix::from_row_slice(3, 2, &[0.1, 0.2, -0.5, 1.0, 1.5, -0.3]);
        let b = GaussianDerivBasis::new(centers, 0.9, 0).unwrap();
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, -1.0, 0.3, 0.3, -2.0, 0.5]);
        let (vals, parts) = b.design(&x);
        for i in 0..4 {
            let xi: Vec<f64> = x.row(i).iter().copied().collect();
            assert_relative_eq!(vals.row(i).transpose(), b.eval(&xi), max_relative = 1e-14);
            assert_relative_eq!(parts.row(i).transpose(), b.partial(&xi), max_relative = 1e-14);
        }
    }

    #[test]
    fn eig_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 1.0]));
        let (vals, vecs) = symmetric_eig_topm(&m, 2).unwrap();
        assert_relative_eq!(vals, DVector::from_vec(vec![3.0, 2.0]), epsilon = 1e-12);
        assert_relative_eq!(
            vecs.column(0).into_owned(),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            vecs.column(1).into_owned(),
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            epsilon = 1e-12
        );

        let (vals, vecs) = symmetric_eig_topm(&DMatrix::identity(3, 3), 1).unwrap();
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(vecs.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_rejects_asymmetric_and_bad_count() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eig_topm(&m, 1), Err(NgcaError::Asymmetric(_))));
        assert!(symmetric_eig_topm(&DMatrix::identity(2, 2), 3).is_err());
        assert!(symmetric_eig_topm(&DMatrix::identity(2, 2), 0).is_err());
    }

    #[test]
    fn orthonormalize_examples() {
        let v = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let q = orthonormalize(&v).unwrap();
        assert!(orthonormality_defect(&q) < 1e-14);
        // pivot picks the longer column first
        assert_relative_eq!(q.column(0).abs().into_owned(), DVector::from_vec(vec![0.0, 1.0]));
        assert_relative_eq!(q.column(1).abs().into_owned(), DVector::from_vec(vec![1.0, 0.0]));

        let dup = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.5, 0.5]);
        assert!(matches!(orthonormalize(&dup), Err(NgcaError::RankDeficient { .. })));
    }
}
