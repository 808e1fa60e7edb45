//! Lag-0 covariance structures used for data generation and for the exact
//! null standard deviation.
//!
//! A model holds Sigma_0 together with its symmetric PSD square root, built
//! by symmetric eigendecomposition with small negative eigenvalues clamped
//! to zero.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::series::SeriesMatrix;

const PSD_EIGEN_FLOOR: f64 = -1e-10;

/// Sigma_0 with its symmetric square root.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    p: usize,
    sigma0: DMatrix<f64>,
    sqrt_sigma0: DMatrix<f64>,
    identity: bool,
}

impl CovarianceModel {
    /// Sigma_0 = I_p.
    pub fn identity(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension);
        }
        Ok(Self {
            p,
            sigma0: DMatrix::identity(p, p),
            sqrt_sigma0: DMatrix::identity(p, p),
            identity: true,
        })
    }

    /// Sigma_0 = (4/p) A A^T with A drawn i.i.d. uniform on (-1, 1).
    pub fn factor<R: Rng>(p: usize, rng: &mut R) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension);
        }
        let mut loadings = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                loadings[(i, j)] = 2.0 * rng.random::<f64>() - 1.0;
            }
        }
        Self::from_factor_loadings(&loadings)
    }

    /// Gram construction from explicit loadings (used to inject fixtures).
    pub fn from_factor_loadings(loadings: &DMatrix<f64>) -> Result<Self> {
        let p = loadings.nrows();
        if p == 0 || loadings.ncols() != p {
            return Err(Error::InvalidDimension);
        }
        let gram = loadings * loadings.transpose() * (4.0 / p as f64);
        Self::from_sigma0(symmetrize(&gram))
    }

    /// Wrap an explicit Sigma_0 (must be symmetric PSD up to the clamp).
    pub fn from_sigma0(sigma0: DMatrix<f64>) -> Result<Self> {
        let p = sigma0.nrows();
        if p == 0 {
            return Err(Error::InvalidDimension);
        }
        let sqrt_sigma0 = psd_sqrt(&sigma0)?;
        Ok(Self {
            p,
            sigma0,
            sqrt_sigma0,
            identity: false,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }

    pub fn sqrt_sigma0(&self) -> &DMatrix<f64> {
        &self.sqrt_sigma0
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// Entry-wise sum of |sigma_ij|^a.
    pub fn entrywise_abs_pow_sum(&self, a: usize) -> f64 {
        self.sigma0
            .iter()
            .map(|v| v.abs().powi(a as i32))
            .sum()
    }

    /// Map innovation columns through the square root: x_t = S z_t.
    pub fn mix(&self, z: &SeriesMatrix) -> SeriesMatrix {
        assert_eq!(z.p(), self.p, "innovation dimension mismatch");
        if self.identity {
            return z.clone();
        }
        let t_len = z.t_len();
        let zm = DMatrix::from_fn(self.p, t_len, |i, t| z.get(i, t));
        let xm = &self.sqrt_sigma0 * zm;
        let mut out = SeriesMatrix::zeros(self.p, t_len).expect("valid shape");
        for i in 0..self.p {
            for t in 0..t_len {
                out.set(i, t, xm[(i, t)]);
            }
        }
        out
    }

    /// Assumption-style spectral summaries; advisory only, never blocks a
    /// test run. `threshold` is the cutoff for "constant order" entries.
    pub fn diagnostics(&self, threshold: f64) -> SpectralDiagnostics {
        let abs = self.sigma0.map(f64::abs);
        let row_sum_max = (0..self.p)
            .map(|i| abs.row(i).iter().sum::<f64>())
            .fold(0.0f64, f64::max);
        let max_abs_entry = abs.iter().fold(0.0f64, |m, &v| m.max(v));
        let constant_order_entry_count = abs.iter().filter(|&&v| v >= threshold).count();
        let eig = nalgebra::SymmetricEigen::new(abs);
        let spectral_norm_abs = eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        SpectralDiagnostics {
            spectral_norm_abs,
            max_row_abs_sum_ratio: row_sum_max / (self.p as f64).sqrt(),
            max_abs_entry,
            constant_order_entry_count,
        }
    }
}

/// The four spectral summaries of Sigma_0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDiagnostics {
    /// Spectral norm of the entry-wise absolute matrix.
    pub spectral_norm_abs: f64,
    /// max_i sum_j |sigma_ij| divided by sqrt(p).
    pub max_row_abs_sum_ratio: f64,
    pub max_abs_entry: f64,
    /// Entries with |sigma_ij| at or above the threshold.
    pub constant_order_entry_count: usize,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-1e-10, 0) are clamped to zero; anything lower is an error.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m.nrows();
    if p == 0 || m.ncols() != p {
        return Err(Error::NotSymmetric);
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-8 * (1.0 + scale);
    for i in 0..p {
        for j in (i + 1)..p {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < PSD_EIGEN_FLOOR * (1.0 + scale) {
        return Err(Error::NotPsd(min_eig));
    }
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals);
    Ok(symmetrize(&(scaled * eig.eigenvectors.transpose())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rep_rng;

    fn max_entry_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn identity_examples() {
        let c = CovarianceModel::identity(3).unwrap();
        assert_eq!(c.sigma0(), &DMatrix::identity(3, 3));
        assert_eq!(c.sqrt_sigma0(), &DMatrix::identity(3, 3));

        let c1 = CovarianceModel::identity(1).unwrap();
        assert_eq!(c1.sigma0()[(0, 0)], 1.0);
        assert_eq!(c1.sqrt_sigma0()[(0, 0)], 1.0);

        assert!(matches!(
            CovarianceModel::identity(0),
            Err(Error::InvalidDimension)
        ));
    }

    #[test]
    fn factor_fixtures() {
        // p=1, A = [0.5]: Sigma = 4 * 0.25 = 1.
        let a = DMatrix::from_row_slice(1, 1, &[0.5]);
        let c = CovarianceModel::from_factor_loadings(&a).unwrap();
        assert!((c.sigma0()[(0, 0)] - 1.0).abs() < 1e-15);

        // p=2, A = I: Sigma = (4/2) I = 2I.
        let a = DMatrix::identity(2, 2);
        let c = CovarianceModel::from_factor_loadings(&a).unwrap();
        assert!(max_entry_diff(c.sigma0(), &(DMatrix::identity(2, 2) * 2.0)) < 1e-15);
    }

    #[test]
    fn factor_diagonal_mean_near_four_thirds() {
        // E[(4/p) sum_j a_ij^2] = 4/3 per diagonal entry.
        let p = 30;
        let mut total = 0.0;
        let mut n = 0usize;
        for seed in 0..60 {
            let mut rng = derive_rep_rng(seed, 0, 0);
            let c = CovarianceModel::factor(p, &mut rng).unwrap();
            total += c.sigma0().diagonal().iter().sum::<f64>();
            n += p;
        }
        let mean = total / n as f64;
        assert!(
            (mean - 4.0 / 3.0).abs() < 0.02,
            "diagonal mean {mean} far from 4/3"
        );
    }

    #[test]
    fn factor_is_psd_across_seeds() {
        for seed in 0..100 {
            let mut rng = derive_rep_rng(seed, 1, 0);
            let c = CovarianceModel::factor(8, &mut rng).unwrap();
            let eig = nalgebra::SymmetricEigen::new(c.sigma0().clone());
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-10, "seed {seed}: eigenvalue {min}");
        }
    }

    #[test]
    fn psd_sqrt_diagonal_and_identity() {
        let i = DMatrix::identity(4, 4);
        assert!(max_entry_diff(&psd_sqrt(&i).unwrap(), &i) < 1e-14);

        let d = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let want = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert!(max_entry_diff(&psd_sqrt(&d).unwrap(), &want) < 1e-12);
    }

    #[test]
    fn psd_sqrt_round_trip_on_random_factor() {
        let mut rng = derive_rep_rng(9, 2, 0);
        let c = CovarianceModel::factor(20, &mut rng).unwrap();
        let s = c.sqrt_sigma0();
        let err = max_entry_diff(&(s * s), c.sigma0());
        assert!(err <= 1e-8, "round-trip error {err}");

        // Idempotence: sqrt(S * S) reproduces S.
        let again = psd_sqrt(&(s * s)).unwrap();
        assert!(max_entry_diff(&again, s) <= 1e-6);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        // Eigenvalues 3 and -1.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn psd_sqrt_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert_eq!(psd_sqrt(&m).unwrap_err(), Error::NotSymmetric);
    }

    #[test]
    fn diagnostics_on_identity_and_scaled_identity() {
        let c = CovarianceModel::identity(16).unwrap();
        let d = c.diagnostics(0.5);
        assert!((d.spectral_norm_abs - 1.0).abs() < 1e-10);
        assert_eq!(d.constant_order_entry_count, 16);
        assert!((d.max_row_abs_sum_ratio - 1.0 / 4.0).abs() < 1e-12);
        assert_eq!(d.max_abs_entry, 1.0);

        let two_i = CovarianceModel::from_sigma0(DMatrix::identity(3, 3) * 2.0).unwrap();
        assert_eq!(two_i.diagnostics(0.5).max_abs_entry, 2.0);
    }

    #[test]
    fn diagnostics_factor_has_order_p_constant_entries() {
        let mut rng = derive_rep_rng(3, 3, 0);
        let c = CovarianceModel::factor(50, &mut rng).unwrap();
        let d = c.diagnostics(0.5);
        assert!(
            d.constant_order_entry_count >= 50,
            "count {}",
            d.constant_order_entry_count
        );
        assert!(d.constant_order_entry_count <= 50 * 50);
    }

    #[test]
    fn mix_maps_unit_column_through_sqrt() {
        let c = CovarianceModel::from_sigma0(DMatrix::from_row_slice(
            2,
            2,
            &[4.0, 0.0, 0.0, 1.0],
        ))
        .unwrap();
        let z = SeriesMatrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        let x = c.mix(&z);
        assert!((x.get(0, 0) - 2.0).abs() < 1e-12);
        assert!(x.get(1, 0).abs() < 1e-12);
    }
}
