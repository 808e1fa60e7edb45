//! Data generators: i.i.d. null panels, VAR(1) and VMA(1) alternatives,
//! Gaussian or shifted-Gamma innovations.
//!
//! Innovations are drawn column by column (time-major), so a generator's
//! output is a pure function of its model parameters and the stream it is
//! handed.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::series::SeriesMatrix;

/// Zero-state VAR(1) transients with spectral radius <= 0.2 decay below
/// 1e-30 well before this many steps.
pub const VAR1_BURN_IN: usize = 50;

/// Innovation law; both have mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationKind {
    Gaussian,
    /// Gamma(shape 4, scale 0.5) shifted by -2; kurtosis 4.5.
    ShiftedGamma,
}

/// Requested shape of the diagonal coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffKind {
    /// 0.2 on the first floor(0.95 p) diagonal entries.
    Dense,
    /// 0.2 on the first max(1, floor(0.05 p)) diagonal entries.
    Sparse,
    /// 1.0 on every diagonal entry.
    Identity,
}

/// A = diag(value, ..., value, 0, ..., 0) with d leading nonzeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagCoeff {
    p: usize,
    d: usize,
    value: f64,
}

impl DiagCoeff {
    pub fn new(p: usize, d: usize, value: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDimension);
        }
        if d > p {
            return Err(Error::InvalidDimension);
        }
        Ok(Self { p, d, value })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn nonzero_count(&self) -> usize {
        self.d
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// The standard coefficient shapes.
pub fn coeff_matrix(kind: CoeffKind, p: usize) -> Result<DiagCoeff> {
    if p == 0 {
        return Err(Error::InvalidDimension);
    }
    let coeff = match kind {
        CoeffKind::Dense => DiagCoeff {
            p,
            d: (0.95 * p as f64).floor() as usize,
            value: 0.2,
        },
        CoeffKind::Sparse => DiagCoeff {
            p,
            d: ((0.05 * p as f64).floor() as usize).max(1),
            value: 0.2,
        },
        CoeffKind::Identity => DiagCoeff {
            p,
            d: p,
            value: 1.0,
        },
    };
    Ok(coeff)
}

/// p x n panel of i.i.d. innovations, drawn column by column.
pub fn draw_innovations<R: Rng>(
    kind: InnovationKind,
    p: usize,
    n: usize,
    rng: &mut R,
) -> Result<SeriesMatrix> {
    let mut out = SeriesMatrix::zeros(p, n)?;
    match kind {
        InnovationKind::Gaussian => {
            for t in 0..n {
                for i in 0..p {
                    out.set(i, t, StandardNormal.sample(rng));
                }
            }
        }
        InnovationKind::ShiftedGamma => {
            let gamma = Gamma::new(4.0, 0.5).expect("valid gamma parameters");
            for t in 0..n {
                for i in 0..p {
                    out.set(i, t, gamma.sample(rng) - 2.0);
                }
            }
        }
    }
    Ok(out)
}

/// Null model: x_t = S z_t with i.i.d. columns.
pub fn gen_null<R: Rng>(
    cov: &CovarianceModel,
    kind: InnovationKind,
    t_len: usize,
    rng: &mut R,
) -> Result<SeriesMatrix> {
    let z = draw_innovations(kind, cov.p(), t_len, rng)?;
    Ok(cov.mix(&z))
}

/// VAR(1) alternative: y_t = A y_{t-1} + z_t from a zero initial state
/// with [`VAR1_BURN_IN`] discarded steps, then x_t = S y_t.
pub fn gen_var1<R: Rng>(
    cov: &CovarianceModel,
    coeff: &DiagCoeff,
    kind: InnovationKind,
    t_len: usize,
    rng: &mut R,
) -> Result<SeriesMatrix> {
    assert_eq!(coeff.p(), cov.p(), "coefficient dimension mismatch");
    if coeff.d > 0 && coeff.value.abs() >= 1.0 {
        return Err(Error::NonstationaryCoeff(coeff.value));
    }
    let p = cov.p();
    let total = VAR1_BURN_IN + t_len;
    let z = draw_innovations(kind, p, total, rng)?;
    let mut y = SeriesMatrix::zeros(p, total)?;
    for i in 0..p {
        if i < coeff.d {
            let v = coeff.value;
            let mut prev = 0.0;
            for t in 0..total {
                prev = v * prev + z.get(i, t);
                y.set(i, t, prev);
            }
        } else {
            for t in 0..total {
                y.set(i, t, z.get(i, t));
            }
        }
    }
    let mut window = SeriesMatrix::zeros(p, t_len)?;
    for i in 0..p {
        for t in 0..t_len {
            window.set(i, t, y.get(i, VAR1_BURN_IN + t));
        }
    }
    Ok(cov.mix(&window))
}

/// VMA(1) alternative: w_t = z_t + A z_{t-1} built from exactly T + 1
/// innovation columns, then x_t = S w_t. With the identity coefficient and
/// identity covariance this is the moving-average model whose lag-0 and
/// lag-1 covariances are 2 I_p and I_p.
pub fn gen_vma1<R: Rng>(
    cov: &CovarianceModel,
    coeff: &DiagCoeff,
    kind: InnovationKind,
    t_len: usize,
    rng: &mut R,
) -> Result<SeriesMatrix> {
    assert_eq!(coeff.p(), cov.p(), "coefficient dimension mismatch");
    let p = cov.p();
    let z = draw_innovations(kind, p, t_len + 1, rng)?;
    let mut w = SeriesMatrix::zeros(p, t_len)?;
    for i in 0..p {
        let v = if i < coeff.d { coeff.value } else { 0.0 };
        for t in 0..t_len {
            w.set(i, t, z.get(i, t + 1) + v * z.get(i, t));
        }
    }
    Ok(cov.mix(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rep_rng;

    #[test]
    fn coeff_shapes_match_definitions() {
        let dense = coeff_matrix(CoeffKind::Dense, 100).unwrap();
        assert_eq!(dense.nonzero_count(), 95);
        assert_eq!(dense.value(), 0.2);

        assert_eq!(coeff_matrix(CoeffKind::Sparse, 50).unwrap().nonzero_count(), 2);
        assert_eq!(coeff_matrix(CoeffKind::Sparse, 10).unwrap().nonzero_count(), 1);

        let ident = coeff_matrix(CoeffKind::Identity, 7).unwrap();
        assert_eq!(ident.nonzero_count(), 7);
        assert_eq!(ident.value(), 1.0);
    }

    fn moments(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        (mean, m2, m4 / (m2 * m2))
    }

    #[test]
    fn shifted_gamma_moments() {
        let mut rng = derive_rep_rng(11, 0, 0);
        let z = draw_innovations(InnovationKind::ShiftedGamma, 1, 1_000_000, &mut rng).unwrap();
        let (mean, var, kurt) = moments(z.series(0));
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
        assert!((kurt - 4.5).abs() < 0.2, "kurtosis {kurt}");
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = derive_rep_rng(12, 0, 0);
        let z = draw_innovations(InnovationKind::Gaussian, 1, 1_000_000, &mut rng).unwrap();
        let (mean, var, kurt) = moments(z.series(0));
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
        assert!((kurt - 3.0).abs() < 0.1, "kurtosis {kurt}");
    }

    #[test]
    fn null_sample_covariance_near_identity() {
        let cov = CovarianceModel::identity(5).unwrap();
        let mut rng = derive_rep_rng(13, 0, 0);
        let x = gen_null(&cov, InnovationKind::Gaussian, 100_000, &mut rng).unwrap();
        let t_len = x.t_len() as f64;
        for i in 0..5 {
            for j in 0..5 {
                let s: f64 = x
                    .series(i)
                    .iter()
                    .zip(x.series(j))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / t_len;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 0.05, "({i},{j}): {s}");
            }
        }
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let cov = CovarianceModel::identity(3).unwrap();
        let coeff = coeff_matrix(CoeffKind::Dense, 3).unwrap();
        let a = gen_null(&cov, InnovationKind::Gaussian, 50, &mut derive_rep_rng(5, 1, 2)).unwrap();
        let b = gen_null(&cov, InnovationKind::Gaussian, 50, &mut derive_rep_rng(5, 1, 2)).unwrap();
        assert_eq!(a, b);

        let c = gen_vma1(&cov, &coeff, InnovationKind::ShiftedGamma, 50, &mut derive_rep_rng(6, 1, 2)).unwrap();
        let d = gen_vma1(&cov, &coeff, InnovationKind::ShiftedGamma, 50, &mut derive_rep_rng(6, 1, 2)).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn var1_with_zero_coefficient_degenerates_to_null() {
        let cov = CovarianceModel::identity(4).unwrap();
        let coeff = DiagCoeff::new(4, 4, 0.0).unwrap();
        let x = gen_var1(&cov, &coeff, InnovationKind::Gaussian, 30, &mut derive_rep_rng(7, 0, 0)).unwrap();

        // Same stream with the burn-in draws consumed up front.
        let mut rng = derive_rep_rng(7, 0, 0);
        let _ = draw_innovations(InnovationKind::Gaussian, 4, VAR1_BURN_IN, &mut rng).unwrap();
        let y = gen_null(&cov, InnovationKind::Gaussian, 30, &mut rng).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn vma1_with_zero_coefficient_degenerates_to_null() {
        let cov = CovarianceModel::identity(3).unwrap();
        let coeff = DiagCoeff::new(3, 3, 0.0).unwrap();
        let x = gen_vma1(&cov, &coeff, InnovationKind::Gaussian, 25, &mut derive_rep_rng(8, 0, 0)).unwrap();

        let mut rng = derive_rep_rng(8, 0, 0);
        let _ = draw_innovations(InnovationKind::Gaussian, 3, 1, &mut rng).unwrap();
        let y = gen_null(&cov, InnovationKind::Gaussian, 25, &mut rng).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn var1_rejects_unit_root() {
        let cov = CovarianceModel::identity(2).unwrap();
        let coeff = coeff_matrix(CoeffKind::Identity, 2).unwrap();
        let got = gen_var1(&cov, &coeff, InnovationKind::Gaussian, 10, &mut derive_rep_rng(9, 0, 0));
        assert_eq!(got.unwrap_err(), Error::NonstationaryCoeff(1.0));
    }

    #[test]
    fn var1_lag_one_autocorrelation_matches_ar1() {
        let cov = CovarianceModel::identity(1).unwrap();
        let coeff = DiagCoeff::new(1, 1, 0.2).unwrap();
        let x = gen_var1(&cov, &coeff, InnovationKind::Gaussian, 1_000_000, &mut derive_rep_rng(10, 0, 0)).unwrap();
        let s = x.series(0);
        let num: f64 = s.windows(2).map(|w| w[0] * w[1]).sum();
        let den: f64 = s.iter().map(|v| v * v).sum();
        let rho = num / den;
        assert!((rho - 0.2).abs() < 0.01, "lag-1 autocorrelation {rho}");
    }

    #[test]
    fn var1_dense_lag_one_autocovariance_split() {
        // AR(1) with phi = 0.2 and unit innovations: gamma_1 = 0.2 / 0.96.
        let p = 10;
        let cov = CovarianceModel::identity(p).unwrap();
        let coeff = coeff_matrix(CoeffKind::Dense, p).unwrap(); // d = 9
        let t_len = 100_000;
        let x = gen_var1(&cov, &coeff, InnovationKind::Gaussian, t_len, &mut derive_rep_rng(14, 0, 0)).unwrap();
        let want = 0.2 / (1.0 - 0.04);
        let se = (1.0 / 0.96f64) / (t_len as f64).sqrt();
        for i in 0..p {
            let s = x.series(i);
            let g1: f64 = s.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (t_len as f64 - 1.0);
            let target = if i < coeff.nonzero_count() { want } else { 0.0 };
            assert!(
                (g1 - target).abs() < 3.0 * se,
                "series {i}: gamma1 {g1} vs {target}"
            );
        }
    }

    #[test]
    fn vma1_identity_covariances_match_theory() {
        let p = 5;
        let cov = CovarianceModel::identity(p).unwrap();
        let coeff = coeff_matrix(CoeffKind::Identity, p).unwrap();
        let t_len = 100_000;
        let x = gen_vma1(&cov, &coeff, InnovationKind::Gaussian, t_len, &mut derive_rep_rng(15, 0, 0)).unwrap();
        for i in 0..p {
            for j in 0..p {
                let lag0: f64 = x
                    .series(i)
                    .iter()
                    .zip(x.series(j))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / t_len as f64;
                let lag1: f64 = x.series(i)[1..]
                    .iter()
                    .zip(&x.series(j)[..t_len - 1])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / (t_len - 1) as f64;
                let want0 = if i == j { 2.0 } else { 0.0 };
                let want1 = if i == j { 1.0 } else { 0.0 };
                assert!((lag0 - want0).abs() < 0.05, "lag0 ({i},{j}) = {lag0}");
                assert!((lag1 - want1).abs() < 0.05, "lag1 ({i},{j}) = {lag1}");
            }
        }
    }

    #[test]
    fn outputs_stay_finite_across_random_configs() {
        for case in 0..1000u64 {
            let mut rng = derive_rep_rng(16, case, 0);
            let p = 1 + (case as usize % 6);
            let t_len = 1 + (case as usize % 40);
            let cov = if case % 2 == 0 {
                CovarianceModel::identity(p).unwrap()
            } else {
                CovarianceModel::factor(p, &mut rng).unwrap()
            };
            let kind = if case % 3 == 0 {
                InnovationKind::ShiftedGamma
            } else {
                InnovationKind::Gaussian
            };
            let x = match case % 3 {
                0 => gen_null(&cov, kind, t_len, &mut rng).unwrap(),
                1 => {
                    let coeff = coeff_matrix(CoeffKind::Dense, p).unwrap();
                    gen_var1(&cov, &coeff, kind, t_len, &mut rng).unwrap()
                }
                _ => {
                    let coeff = coeff_matrix(CoeffKind::Sparse, p).unwrap();
                    gen_vma1(&cov, &coeff, kind, t_len, &mut rng).unwrap()
                }
            };
            assert!(x.values().iter().all(|v| v.is_finite()), "case {case}");
        }
    }
}
