//! The white-noise test: raw U-statistics over lagged cross-product
//! channels, the moment estimator of their null standard deviation, exact
//! null standard deviations for known covariance structures, z-scores,
//! p-values, and the adaptive multi-order combination.
//!
//! Each statistic is a sweep over channels (i, j, tau) — or (i, j) for the
//! variance estimator — where every channel contributes the tuple-product
//! sum of s_t = x_{i,t} x_{j,t-tau} evaluated by the prefix-sum DP. The
//! sweep parallelizes across channels and reduces in channel-index order
//! with a pairwise sum, so results do not depend on the worker count.

use rayon::prelude::*;
use std::borrow::Cow;

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::normal;
use crate::series::SeriesMatrix;
use crate::ustat::{pairwise_sum, tuple_count, DpWorkspace, TupleSpec};

/// Configuration of a test run.
#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    /// Lag cap q >= 1.
    pub q: usize,
    /// Even tuple orders to compute, e.g. [2, 4, 6].
    pub orders: Vec<usize>,
    /// Significance level in (0, 1); 1.0 is accepted as the degenerate
    /// always-reject level for harness sanity checks.
    pub alpha: f64,
    /// Subtract each series' sample mean first.
    pub demean: bool,
    /// Divide each series by its sample standard deviation first.
    pub scale: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            q: 1,
            orders: vec![2, 4, 6],
            alpha: 0.05,
            demean: false,
            scale: false,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidLagCap);
        }
        if self.orders.is_empty() {
            return Err(Error::InvalidOrder(0));
        }
        for &a in &self.orders {
            if a == 0 || a % 2 != 0 {
                return Err(Error::InvalidOrder(a));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        Ok(())
    }

    fn critical_value(&self) -> Result<f64> {
        if self.alpha == 1.0 {
            Ok(f64::NEG_INFINITY)
        } else {
            normal::quantile(1.0 - self.alpha)
        }
    }
}

/// Successful per-order standardization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStats {
    pub u_raw: f64,
    pub sigma_hat: f64,
    pub z: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Result for one configured order; failures are per-order, never fatal
/// for the run.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub order: usize,
    pub outcome: std::result::Result<OrderStats, Error>,
}

/// The adaptive equal-weight combination of the standardized orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveStats {
    pub z: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Full report of a test run.
#[derive(Debug, Clone, PartialEq)]
pub struct UStatReport {
    pub q: usize,
    pub alpha: f64,
    pub orders: Vec<OrderReport>,
    /// Present only when every configured order standardized cleanly.
    pub adaptive: Option<AdaptiveStats>,
    /// Set when some channel term |x_{i,t} x_{j,s}| can exceed 1e6.
    pub conditioning_warning: bool,
}

impl UStatReport {
    pub fn order_stats(&self, order: usize) -> Option<&OrderStats> {
        self.orders
            .iter()
            .find(|o| o.order == order)
            .and_then(|o| o.outcome.as_ref().ok())
    }
}

fn validate_orders(t_len: usize, q: usize, orders: &[usize]) -> Result<()> {
    for &a in orders {
        let spec = TupleSpec::new(t_len, q, a)?;
        if t_len < spec.min_t_len() {
            return Err(Error::InsufficientSample {
                t_len,
                q,
                a,
                needed: spec.min_t_len(),
            });
        }
    }
    Ok(())
}

/// Raw U-statistics of the given orders in one channel sweep: the sum over
/// channels (i, j, tau) of gap-constrained tuple-product sums of
/// s_t = x_{i,t} x_{j,t-tau}, divided by the tuple count of each order.
pub fn u_statistic_multi(x: &SeriesMatrix, q: usize, orders: &[usize]) -> Result<Vec<f64>> {
    validate_orders(x.t_len(), q, orders)?;
    let p = x.p();
    let t_len = x.t_len();
    let m = orders.len();
    let nchan = p * p * q;
    let mut vals = vec![0.0f64; nchan * m];
    vals.par_chunks_mut(m)
        .enumerate()
        .for_each_init(
            || (DpWorkspace::new(), vec![0.0f64; t_len]),
            |(ws, sbuf), (c, out)| {
                let tau = c / (p * p) + 1;
                let rest = c % (p * p);
                let xi = x.series(rest / p);
                let xj = x.series(rest % p);
                sbuf[..q].fill(0.0);
                for t in q..t_len {
                    sbuf[t] = xi[t] * xj[t - tau];
                }
                ws.run(sbuf, q, orders, out);
            },
        );
    reduce_channels(&vals, nchan, orders, |k| {
        let n = count_as_f64(t_len, q, orders[k])?;
        Ok(1.0 / n)
    })
}

/// Null-standard-deviation estimates of the given orders in one sweep over
/// the (i, j) channels with s_t = x_{i,t} x_{j,t}, scaled by
/// sqrt(q) N^{-3/2}. May be zero for degenerate data; callers decide.
pub fn sigma_hat_multi(x: &SeriesMatrix, q: usize, orders: &[usize]) -> Result<Vec<f64>> {
    validate_orders(x.t_len(), q, orders)?;
    let p = x.p();
    let t_len = x.t_len();
    let m = orders.len();
    // Symmetric in (i, j): sweep i <= j and double the off-diagonal terms.
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (i..p).map(move |j| (i, j)))
        .collect();
    let mut vals = vec![0.0f64; pairs.len() * m];
    vals.par_chunks_mut(m)
        .zip(pairs.par_iter())
        .for_each_init(
            || (DpWorkspace::new(), vec![0.0f64; t_len]),
            |(ws, sbuf), (out, &(i, j))| {
                let xi = x.series(i);
                let xj = x.series(j);
                sbuf[..q].fill(0.0);
                for t in q..t_len {
                    sbuf[t] = xi[t] * xj[t];
                }
                ws.run(sbuf, q, orders, out);
                if i != j {
                    for v in out.iter_mut() {
                        *v *= 2.0;
                    }
                }
            },
        );
    reduce_channels(&vals, pairs.len(), orders, |k| {
        let n = count_as_f64(t_len, q, orders[k])?;
        Ok((q as f64).sqrt() * n.powf(-1.5))
    })
}

fn count_as_f64(t_len: usize, q: usize, a: usize) -> Result<f64> {
    let spec = TupleSpec::new(t_len, q, a)?;
    Ok(tuple_count(&spec)? as f64)
}

fn reduce_channels(
    vals: &[f64],
    nchan: usize,
    orders: &[usize],
    scale: impl Fn(usize) -> Result<f64>,
) -> Result<Vec<f64>> {
    let m = orders.len();
    let mut totals = Vec::with_capacity(m);
    let mut column = vec![0.0f64; nchan];
    for k in 0..m {
        for c in 0..nchan {
            column[c] = vals[c * m + k];
        }
        totals.push(pairwise_sum(&column) * scale(k)?);
    }
    Ok(totals)
}

/// The order-a statistic alone.
pub fn u_statistic(x: &SeriesMatrix, q: usize, a: usize) -> Result<f64> {
    Ok(u_statistic_multi(x, q, &[a])?[0])
}

/// The order-a null-standard-deviation estimate alone; errors when the
/// estimate is not strictly positive.
pub fn sigma_hat(x: &SeriesMatrix, q: usize, a: usize) -> Result<f64> {
    let v = sigma_hat_multi(x, q, &[a])?[0];
    if v <= 0.0 {
        return Err(Error::DegenerateVariance(v, a));
    }
    Ok(v)
}

/// Exact null standard deviation when Sigma_0 is known:
/// sqrt(q / N) * sum_{i,j} |sigma_ij|^a. Used to validate the estimator in
/// simulations.
pub fn sigma_exact(cov: &CovarianceModel, t_len: usize, q: usize, a: usize) -> Result<f64> {
    let spec = TupleSpec::new(t_len, q, a)?;
    if t_len < spec.min_t_len() {
        return Err(Error::InsufficientSample {
            t_len,
            q,
            a,
            needed: spec.min_t_len(),
        });
    }
    let n = tuple_count(&spec)? as f64;
    Ok((q as f64 / n).sqrt() * cov.entrywise_abs_pow_sum(a))
}

/// Run the full test: optional preprocessing, one standardized statistic
/// per configured order, and the adaptive combination. Per-order failures
/// (too-short sample, degenerate variance) are recorded in the report
/// rather than aborting the run.
pub fn run_test(x: &SeriesMatrix, cfg: &TestConfig) -> Result<UStatReport> {
    cfg.validate()?;
    let crit = cfg.critical_value()?;

    let data: Cow<'_, SeriesMatrix> = if cfg.demean || cfg.scale {
        let mut y = x.clone();
        if cfg.demean {
            y.demean();
        }
        if cfg.scale {
            y.scale_unit_sd()?;
        }
        Cow::Owned(y)
    } else {
        Cow::Borrowed(x)
    };
    let max_abs = data.max_abs();
    let conditioning_warning = max_abs * max_abs > 1e6;

    let t_len = data.t_len();
    let feasible: Vec<usize> = cfg
        .orders
        .iter()
        .copied()
        .filter(|&a| {
            TupleSpec::new(t_len, cfg.q, a)
                .map(|s| t_len >= s.min_t_len())
                .unwrap_or(false)
        })
        .collect();

    let (u_vals, s_vals) = if feasible.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        (
            u_statistic_multi(&data, cfg.q, &feasible)?,
            sigma_hat_multi(&data, cfg.q, &feasible)?,
        )
    };

    let mut orders = Vec::with_capacity(cfg.orders.len());
    for &a in &cfg.orders {
        let outcome = match feasible.iter().position(|&f| f == a) {
            None => {
                let needed = a * cfg.q + a;
                Err(Error::InsufficientSample {
                    t_len,
                    q: cfg.q,
                    a,
                    needed,
                })
            }
            Some(k) => {
                let sigma = s_vals[k];
                if sigma <= 0.0 {
                    Err(Error::DegenerateVariance(sigma, a))
                } else {
                    let z = u_vals[k] / sigma;
                    Ok(OrderStats {
                        u_raw: u_vals[k],
                        sigma_hat: sigma,
                        z,
                        p_value: normal::upper_tail(z),
                        reject: z > crit,
                    })
                }
            }
        };
        orders.push(OrderReport { order: a, outcome });
    }

    let adaptive = if orders.iter().all(|o| o.outcome.is_ok()) {
        let sum: f64 = orders
            .iter()
            .map(|o| o.outcome.as_ref().unwrap().z)
            .sum();
        let z = sum / (cfg.orders.len() as f64).sqrt();
        Some(AdaptiveStats {
            z,
            p_value: normal::upper_tail(z),
            reject: z > crit,
        })
    } else {
        None
    };

    Ok(UStatReport {
        q: cfg.q,
        alpha: cfg.alpha,
        orders,
        adaptive,
        conditioning_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rep_rng;
    use crate::simulate::{gen_null, InnovationKind};
    use crate::ustat::enumerate_tuples;
    use nalgebra::DMatrix;
    use rand::Rng;

    // Direct triple-sum references built on the enumeration oracle; these
    // never touch the DP path.
    fn u_oracle(x: &SeriesMatrix, q: usize, a: usize) -> f64 {
        let spec = TupleSpec::new(x.t_len(), q, a).unwrap();
        let tuples = enumerate_tuples(&spec).unwrap();
        let mut total = 0.0;
        for tuple in &tuples {
            for tau in 1..=q {
                for i in 0..x.p() {
                    for j in 0..x.p() {
                        let mut prod = 1.0;
                        for &t in tuple {
                            prod *= x.get(i, t - 1) * x.get(j, t - 1 - tau);
                        }
                        total += prod;
                    }
                }
            }
        }
        total / tuples.len() as f64
    }

    fn sigma_oracle(x: &SeriesMatrix, q: usize, a: usize) -> f64 {
        let spec = TupleSpec::new(x.t_len(), q, a).unwrap();
        let tuples = enumerate_tuples(&spec).unwrap();
        let mut total = 0.0;
        for tuple in &tuples {
            for i in 0..x.p() {
                for j in 0..x.p() {
                    let mut prod = 1.0;
                    for &t in tuple {
                        prod *= x.get(i, t - 1) * x.get(j, t - 1);
                    }
                    total += prod;
                }
            }
        }
        (q as f64).sqrt() * (tuples.len() as f64).powf(-1.5) * total
    }

    fn random_panel(p: usize, t_len: usize, seed: u64) -> SeriesMatrix {
        let mut rng = derive_rep_rng(seed, 77, 0);
        let vals: Vec<f64> = (0..p * t_len)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        SeriesMatrix::new(p, t_len, vals).unwrap()
    }

    #[test]
    fn single_tuple_case_by_hand() {
        // T=4, q=1, a=2: the unique tuple is (2, 4).
        let x = SeriesMatrix::new(1, 4, vec![1.5, -2.0, 0.5, 3.0]).unwrap();
        let u = u_statistic(&x, 1, 2).unwrap();
        let want = (-2.0 * 1.5) * (3.0 * 0.5);
        assert!((u - want).abs() < 1e-14, "u = {u}");

        let s = sigma_hat(&x, 1, 2).unwrap();
        let want_s = (-2.0f64).powi(2) * (3.0f64).powi(2);
        assert!((s - want_s).abs() < 1e-12, "sigma_hat = {s}");
    }

    #[test]
    fn zero_panel_gives_zero_u_and_degenerate_sigma() {
        let x = SeriesMatrix::zeros(2, 10).unwrap();
        assert_eq!(u_statistic(&x, 1, 2).unwrap(), 0.0);
        assert!(matches!(
            sigma_hat(&x, 1, 2),
            Err(Error::DegenerateVariance(_, 2))
        ));
    }

    #[test]
    fn statistics_match_enumeration_oracle() {
        let mut rng = derive_rep_rng(21, 0, 0);
        for case in 0..100 {
            let p = 1 + (case % 3);
            let q = 1 + (case % 2);
            let a = if case % 2 == 0 { 2 } else { 4 };
            let t_len = (a * q + a) + (case % 5);
            let x = random_panel(p, t_len, rng.random());
            let u = u_statistic(&x, q, a).unwrap();
            let want = u_oracle(&x, q, a);
            assert!(
                (u - want).abs() <= 1e-10 * (1.0 + want.abs()),
                "case {case}: u {u} vs {want}"
            );
            let s = sigma_hat_multi(&x, q, &[a]).unwrap()[0];
            let want_s = sigma_oracle(&x, q, a);
            assert!(
                (s - want_s).abs() <= 1e-10 * (1.0 + want_s.abs()),
                "case {case}: sigma {s} vs {want_s}"
            );
        }
    }

    #[test]
    fn sigma_exact_closed_forms() {
        // Identity: sqrt(q p^2 / N).
        let cov = CovarianceModel::identity(50).unwrap();
        for &(t_len, q, a) in &[(30usize, 1usize, 2usize), (40, 2, 2), (40, 1, 4)] {
            let n = count_as_f64(t_len, q, a).unwrap();
            let want = (q as f64 * 2500.0 / n).sqrt();
            let got = sigma_exact(&cov, t_len, q, a).unwrap();
            assert!((got - want).abs() < 1e-10 * want);
        }

        // 2 I_2, q=1, a=2, T=6: sqrt(64/6).
        let cov2 = CovarianceModel::from_sigma0(DMatrix::identity(2, 2) * 2.0).unwrap();
        let got = sigma_exact(&cov2, 6, 1, 2).unwrap();
        assert!((got - (64.0f64 / 6.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sigma_exact_is_degree_a_homogeneous() {
        let base = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let c = 1.7;
        for &a in &[2usize, 4, 6] {
            let s1 = sigma_exact(&CovarianceModel::from_sigma0(base.clone()).unwrap(), 30, 1, a).unwrap();
            let s2 = sigma_exact(&CovarianceModel::from_sigma0(&base * c).unwrap(), 30, 1, a).unwrap();
            assert!(
                (s2 - c.powi(a as i32) * s1).abs() < 1e-10 * s2.abs(),
                "a = {a}"
            );
        }
    }

    #[test]
    fn scaling_data_leaves_z_invariant() {
        let x = random_panel(3, 20, 31);
        let c = 2.5f64;
        let mut scaled_vals = x.values().to_vec();
        for v in &mut scaled_vals {
            *v *= c;
        }
        let xc = SeriesMatrix::new(3, 20, scaled_vals).unwrap();
        for &a in &[2usize, 4] {
            let u1 = u_statistic(&x, 1, a).unwrap();
            let u2 = u_statistic(&xc, 1, a).unwrap();
            let s1 = sigma_hat(&x, 1, a).unwrap();
            let s2 = sigma_hat(&xc, 1, a).unwrap();
            let factor = c.powi(2 * a as i32);
            assert!((u2 - factor * u1).abs() <= 1e-12 * u2.abs().max(1e-300));
            assert!((s2 - factor * s1).abs() <= 1e-12 * s2.abs());
            let z1 = u1 / s1;
            let z2 = u2 / s2;
            assert!((z1 - z2).abs() <= 1e-12 * z1.abs().max(1.0));
        }
    }

    #[test]
    fn adaptive_combination_is_equal_weight() {
        let cov = CovarianceModel::identity(10).unwrap();
        let x = gen_null(&cov, InnovationKind::Gaussian, 60, &mut derive_rep_rng(41, 0, 0)).unwrap();
        let report = run_test(&x, &TestConfig::default()).unwrap();
        let zs: Vec<f64> = report
            .orders
            .iter()
            .map(|o| o.outcome.as_ref().unwrap().z)
            .collect();
        let want = (zs[0] + zs[1] + zs[2]) / 3.0f64.sqrt();
        assert_eq!(report.adaptive.unwrap().z, want);
    }

    #[test]
    fn zero_z_means_half_p_value() {
        assert_eq!(normal::upper_tail(0.0), 0.5);
    }

    #[test]
    fn short_sample_fails_only_the_big_orders() {
        let x = random_panel(2, 11, 51);
        let report = run_test(&x, &TestConfig::default()).unwrap();
        assert!(report.orders[0].outcome.is_ok()); // a = 2 needs T >= 4
        assert!(report.orders[1].outcome.is_ok()); // a = 4 needs T >= 8
        assert!(matches!(
            report.orders[2].outcome,
            Err(Error::InsufficientSample { needed: 12, .. })
        ));
        assert!(report.adaptive.is_none());
    }

    #[test]
    fn constant_zero_panel_fails_loudly_not_nan() {
        let x = SeriesMatrix::zeros(3, 30).unwrap();
        let report = run_test(&x, &TestConfig::default()).unwrap();
        for o in &report.orders {
            assert!(matches!(o.outcome, Err(Error::DegenerateVariance(_, _))));
        }
        assert!(report.adaptive.is_none());
    }

    #[test]
    fn config_validation() {
        let mut cfg = TestConfig::default();
        cfg.orders = vec![2, 3];
        assert_eq!(run_test(&random_panel(1, 20, 1), &cfg).unwrap_err(), Error::InvalidOrder(3));
        cfg.orders = vec![2];
        cfg.alpha = 0.0;
        assert_eq!(
            run_test(&random_panel(1, 20, 1), &cfg).unwrap_err(),
            Error::InvalidAlpha(0.0)
        );
        cfg.alpha = 1.5;
        assert!(matches!(
            run_test(&random_panel(1, 20, 1), &cfg),
            Err(Error::InvalidAlpha(_))
        ));
    }

    #[test]
    fn conditioning_warning_fires_on_huge_values() {
        let x = SeriesMatrix::new(1, 8, vec![2000.0, -1500.0, 1200.0, 900.0, -2000.0, 1100.0, 800.0, -1700.0]).unwrap();
        let report = run_test(&x, &TestConfig { orders: vec![2], ..TestConfig::default() }).unwrap();
        assert!(report.conditioning_warning);

        let y = random_panel(1, 8, 3);
        let report = run_test(&y, &TestConfig { orders: vec![2], ..TestConfig::default() }).unwrap();
        assert!(!report.conditioning_warning);
    }

    #[test]
    fn preprocessing_flags_apply() {
        let mut vals = vec![0.0; 40];
        let mut rng = derive_rep_rng(61, 0, 0);
        for v in &mut vals {
            *v = 5.0 + 3.0 * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let x = SeriesMatrix::new(1, 40, vals).unwrap();
        let cfg = TestConfig {
            demean: true,
            scale: true,
            orders: vec![2],
            ..TestConfig::default()
        };
        let report = run_test(&x, &cfg).unwrap();
        assert!(report.orders[0].outcome.is_ok());

        // Manual preprocessing must agree.
        let mut y = x.clone();
        y.demean();
        y.scale_unit_sd().unwrap();
        let direct = run_test(&y, &TestConfig { orders: vec![2], ..TestConfig::default() }).unwrap();
        assert_eq!(
            report.orders[0].outcome.as_ref().unwrap().z,
            direct.orders[0].outcome.as_ref().unwrap().z
        );
    }
}
