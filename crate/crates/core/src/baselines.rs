//! Competitor statistics: circular sample autocovariance/autocorrelation,
//! the max-type statistic over lagged autocorrelations, the sum-type
//! statistic over squared Frobenius norms, and Monte Carlo calibration of
//! their null critical values.
//!
//! The circular convention wraps indices modulo T so every lagged sum has
//! exactly T terms. The U-statistic core deliberately does not wrap; tuples
//! start late enough that all lagged indices stay inside the sample.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::SeriesMatrix;

/// A lag-tau sample moment matrix (autocovariance or autocorrelation).
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovEstimate {
    pub tau: usize,
    pub matrix: DMatrix<f64>,
}

/// Circular sample autocovariance: (1/T) sum_t x_t x_{t-tau}^T with
/// indices wrapped modulo T.
pub fn sample_autocov(x: &SeriesMatrix, tau: usize) -> Result<AutocovEstimate> {
    let t_len = x.t_len();
    if tau >= t_len {
        return Err(Error::InvalidLag { tau, t_len });
    }
    let p = x.p();
    let xm = DMatrix::from_fn(p, t_len, |i, t| x.get(i, t));
    let shifted = DMatrix::from_fn(p, t_len, |i, t| x.get(i, (t + t_len - tau) % t_len));
    let matrix = xm * shifted.transpose() / t_len as f64;
    Ok(AutocovEstimate { tau, matrix })
}

/// Circular sample autocorrelation: entries of [`sample_autocov`] divided
/// by the lag-0 standard deviations. Errors on a zero-variance series,
/// naming the offending index.
pub fn sample_autocorr(x: &SeriesMatrix, tau: usize) -> Result<AutocovEstimate> {
    let lag0 = sample_autocov(x, 0)?;
    let p = x.p();
    let mut inv_sd = Vec::with_capacity(p);
    for i in 0..p {
        let v = lag0.matrix[(i, i)];
        if v <= 0.0 {
            return Err(Error::ZeroVariance(i));
        }
        inv_sd.push(1.0 / v.sqrt());
    }
    let cov = if tau == 0 { lag0 } else { sample_autocov(x, tau)? };
    let mut matrix = cov.matrix;
    for i in 0..p {
        for j in 0..p {
            matrix[(i, j)] *= inv_sd[i] * inv_sd[j];
        }
    }
    Ok(AutocovEstimate { tau, matrix })
}

/// Max-type statistic: the largest |autocorrelation| over lags 1..=q and
/// all series pairs.
pub fn max_stat(x: &SeriesMatrix, q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidLagCap);
    }
    let mut best = 0.0f64;
    for tau in 1..=q {
        let r = sample_autocorr(x, tau)?;
        for v in r.matrix.iter() {
            best = best.max(v.abs());
        }
    }
    Ok(best)
}

/// Sum-type statistic: sum over lags 1..=q of the squared Frobenius norm
/// of the circular autocovariance.
pub fn sum_stat(x: &SeriesMatrix, q: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidLagCap);
    }
    let mut total = 0.0;
    for tau in 1..=q {
        let c = sample_autocov(x, tau)?;
        total += c.matrix.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total)
}

/// Which competitor statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    MaxType,
    SumType,
}

impl BaselineKind {
    pub fn evaluate(self, x: &SeriesMatrix, q: usize) -> Result<f64> {
        match self {
            BaselineKind::MaxType => max_stat(x, q),
            BaselineKind::SumType => sum_stat(x, q),
        }
    }
}

/// One calibrated baseline decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineResult {
    pub kind: BaselineKind,
    pub value: f64,
    pub critical_value: f64,
    pub reject: bool,
}

impl BaselineResult {
    pub fn decide(kind: BaselineKind, value: f64, critical_value: f64) -> Self {
        Self {
            kind,
            value,
            critical_value,
            reject: value > critical_value,
        }
    }
}

/// Upper empirical (1 - alpha) quantile: the ceil((1-alpha) n)-th order
/// statistic of the sample.
pub fn empirical_upper_quantile(values: &mut [f64], alpha: f64) -> f64 {
    let n = values.len();
    values.sort_unstable_by(f64::total_cmp);
    let k = ((1.0 - alpha) * n as f64).ceil() as usize;
    values[k.clamp(1, n) - 1]
}

/// Monte Carlo critical value under a matched simulated null: the
/// (1 - alpha) empirical quantile of the statistic over `nreps`
/// independent draws from `null_draw` (rep index -> dataset). Replications
/// run in parallel; `null_draw` must derive its own stream from the index.
pub fn calibrate_null<F>(
    kind: BaselineKind,
    q: usize,
    nreps: usize,
    alpha: f64,
    null_draw: F,
) -> Result<f64>
where
    F: Fn(u64) -> Result<SeriesMatrix> + Sync,
{
    if nreps < 500 {
        return Err(Error::TooFewReplications {
            needed: 500,
            got: nreps,
        });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let mut values = (0..nreps as u64)
        .into_par_iter()
        .map(|r| kind.evaluate(&null_draw(r)?, q))
        .collect::<Result<Vec<f64>>>()?;
    Ok(empirical_upper_quantile(&mut values, alpha))
}
