//! Monte Carlo size and power studies over (p/T ratio, T) grids.
//!
//! Replications are independent tasks on streams derived from
//! (master seed, cell id, rep), so a study's tables are bit-identical
//! across worker counts and schedules. Factor covariance structures are
//! drawn once per grid cell and shared across replications unless
//! `redraw_cov_per_rep` asks otherwise; baseline critical values come from
//! a matched simulated null with the same p, T, covariance, and innovation
//! law, and are recorded in the output for audit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

use crate::baselines::{empirical_upper_quantile, max_stat, sum_stat};
use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::rng::derive_rep_rng;
use crate::series::SeriesMatrix;
use crate::simulate::{coeff_matrix, gen_null, gen_var1, gen_vma1, CoeffKind, DiagCoeff, InnovationKind};
use crate::whitenoise::{run_test, TestConfig};

/// Rep index reserved for the per-cell covariance draw.
pub const COV_DRAW_REP: u64 = u64::MAX;
/// Calibration replications live at this offset of the rep space.
pub const CALIBRATION_REP_BASE: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Size,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Null,
    Var1,
    Vma1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovKind {
    Identity,
    Factor,
}

/// A size- or power-study description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub study: StudyKind,
    pub model: ModelKind,
    pub cov: CovKind,
    pub innov: InnovationKind,
    /// Coefficient shape for the alternative models; must be absent for
    /// the null model.
    #[serde(default)]
    pub coeff: Option<CoeffKind>,
    /// p/T ratios of the grid.
    pub ratios: Vec<f64>,
    /// Sample sizes of the grid.
    pub t_values: Vec<usize>,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub nreps: usize,
    pub master_seed: u64,
    /// Null replications used to calibrate the baseline critical values.
    #[serde(default = "default_calibration_reps")]
    pub calibration_reps: usize,
    /// Compute the max/sum baselines in power studies.
    #[serde(default = "default_true")]
    pub include_baselines: bool,
    /// Redraw a factor covariance for every replication instead of fixing
    /// one per cell.
    #[serde(default)]
    pub redraw_cov_per_rep: bool,
}

fn default_q() -> usize {
    1
}
fn default_orders() -> Vec<usize> {
    vec![2, 4, 6]
}
fn default_alpha() -> f64 {
    0.05
}
fn default_calibration_reps() -> usize {
    2000
}
fn default_true() -> bool {
    true
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        match (self.study, self.model) {
            (StudyKind::Size, ModelKind::Null) => {
                if self.coeff.is_some() {
                    return Err(Error::InvalidExperiment(
                        "coefficient shape is meaningless for the null model".into(),
                    ));
                }
            }
            (StudyKind::Size, _) => {
                return Err(Error::InvalidExperiment(
                    "size studies use the null model".into(),
                ))
            }
            (StudyKind::Power, ModelKind::Var1 | ModelKind::Vma1) => {
                if self.coeff.is_none() {
                    return Err(Error::InvalidExperiment(
                        "power studies need a coefficient shape".into(),
                    ));
                }
            }
            (StudyKind::Power, ModelKind::Null) => {
                return Err(Error::InvalidExperiment(
                    "power studies use var1 or vma1".into(),
                ))
            }
        }
        if self.ratios.is_empty() || self.t_values.is_empty() {
            return Err(Error::InvalidExperiment("empty grid".into()));
        }
        for &r in &self.ratios {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidExperiment(format!("bad ratio {r}")));
            }
        }
        for (&r, &t) in self
            .ratios
            .iter()
            .flat_map(|r| self.t_values.iter().map(move |t| (r, t)))
        {
            if t == 0 || (r * t as f64).round() < 1.0 {
                return Err(Error::InvalidExperiment(format!(
                    "cell ratio {r}, T {t} gives p < 1"
                )));
            }
        }
        if self.nreps == 0 {
            return Err(Error::InvalidExperiment("nreps must be positive".into()));
        }
        let cfg = self.test_config();
        cfg.validate()?;
        if self.study == StudyKind::Power
            && self.include_baselines
            && self.calibration_reps < 500
        {
            return Err(Error::TooFewReplications {
                needed: 500,
                got: self.calibration_reps,
            });
        }
        Ok(())
    }

    fn test_config(&self) -> TestConfig {
        TestConfig {
            q: self.q,
            orders: self.orders.clone(),
            alpha: self.alpha,
            demean: false,
            scale: false,
        }
    }

    fn innov_token(&self) -> &'static str {
        match self.innov {
            InnovationKind::Gaussian => "gaussian",
            InnovationKind::ShiftedGamma => "gamma",
        }
    }

    fn scenario_label(&self) -> String {
        let cov = match self.cov {
            CovKind::Identity => "identity",
            CovKind::Factor => "factor",
        };
        match self.model {
            ModelKind::Null => format!("null-{}-{cov}", self.innov_token()),
            ModelKind::Var1 | ModelKind::Vma1 => {
                let model = if self.model == ModelKind::Var1 { "var1" } else { "vma1" };
                let coeff = match self.coeff.expect("validated") {
                    CoeffKind::Dense => "dense",
                    CoeffKind::Sparse => "sparse",
                    CoeffKind::Identity => "identity",
                };
                format!("{model}-{coeff}-{cov}-{}", self.innov_token())
            }
        }
    }

    /// Statistic column names, in output order.
    pub fn stat_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.orders.iter().map(|a| format!("u{a}")).collect();
        names.push("adp".into());
        if self.study == StudyKind::Power && self.include_baselines {
            names.push("mq".into());
            names.push("sq".into());
        }
        names
    }
}

/// Rejection rate of one statistic in one cell, in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatRate {
    pub stat: String,
    pub reject_pct: f64,
    pub mc_se_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalValue {
    pub stat: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub ratio: f64,
    pub p: usize,
    pub t_len: usize,
    pub scenario: String,
    /// "ok", or "skipped: reason".
    pub status: String,
    pub rates: Vec<StatRate>,
    pub critical_values: Vec<CriticalValue>,
    pub wall_seconds: f64,
}

impl CellResult {
    pub fn rate(&self, stat: &str) -> Option<f64> {
        self.rates.iter().find(|r| r.stat == stat).map(|r| r.reject_pct)
    }
}

/// Full study output: provenance plus one row per grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    pub spec: ExperimentSpec,
    pub software_version: String,
    pub cells: Vec<CellResult>,
    pub total_wall_seconds: f64,
}

impl ResultTable {
    /// Deterministic CSV: one row per cell, wide columns as in the study
    /// tables. Wall times are deliberately excluded.
    pub fn to_csv(&self) -> String {
        let names = self.spec.stat_names();
        let mut out = String::new();
        out.push_str("ratio,p,T,scenario,status");
        for n in &names {
            let _ = write!(out, ",{n},{n}_se");
        }
        if self.spec.study == StudyKind::Power && self.spec.include_baselines {
            out.push_str(",mq_cv,sq_cv");
        }
        out.push('\n');
        for cell in &self.cells {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                cell.ratio, cell.p, cell.t_len, cell.scenario, cell.status
            );
            for n in &names {
                match cell.rates.iter().find(|r| &r.stat == n) {
                    Some(r) => {
                        let _ = write!(out, ",{},{}", r.reject_pct, r.mc_se_pct);
                    }
                    None => out.push_str(",,"),
                }
            }
            if self.spec.study == StudyKind::Power && self.spec.include_baselines {
                for stat in ["mq", "sq"] {
                    match cell.critical_values.iter().find(|c| c.stat == stat) {
                        Some(c) => {
                            let _ = write!(out, ",{}", c.value);
                        }
                        None => out.push(','),
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// JSON with full provenance (includes wall times, so not byte-stable
    /// across runs; the CSV is).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable table")
    }
}

/// Run a size study (null model).
pub fn run_size_study(spec: &ExperimentSpec) -> Result<ResultTable> {
    if spec.study != StudyKind::Size {
        return Err(Error::InvalidExperiment("expected a size study".into()));
    }
    run_study(spec)
}

/// Run a power study (VAR(1) or VMA(1) alternative).
pub fn run_power_study(spec: &ExperimentSpec) -> Result<ResultTable> {
    if spec.study != StudyKind::Power {
        return Err(Error::InvalidExperiment("expected a power study".into()));
    }
    run_study(spec)
}

/// Run whichever study the spec describes.
pub fn run_study(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let start = Instant::now();
    let mut cells = Vec::with_capacity(spec.ratios.len() * spec.t_values.len());
    for (ri, &ratio) in spec.ratios.iter().enumerate() {
        for (ti, &t_len) in spec.t_values.iter().enumerate() {
            let cell_id = (ri * spec.t_values.len() + ti) as u64;
            cells.push(run_cell(spec, cell_id, ratio, t_len)?);
        }
    }
    Ok(ResultTable {
        spec: spec.clone(),
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        cells,
        total_wall_seconds: start.elapsed().as_secs_f64(),
    })
}

fn generate_rep(
    spec: &ExperimentSpec,
    cell_cov: &CovarianceModel,
    coeff: Option<&DiagCoeff>,
    p: usize,
    t_len: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<SeriesMatrix> {
    let redrawn;
    let cov = if spec.redraw_cov_per_rep && spec.cov == CovKind::Factor {
        redrawn = CovarianceModel::factor(p, rng)?;
        &redrawn
    } else {
        cell_cov
    };
    match spec.model {
        ModelKind::Null => gen_null(cov, spec.innov, t_len, rng),
        ModelKind::Var1 => gen_var1(cov, coeff.expect("validated"), spec.innov, t_len, rng),
        ModelKind::Vma1 => gen_vma1(cov, coeff.expect("validated"), spec.innov, t_len, rng),
    }
}

fn run_cell(spec: &ExperimentSpec, cell_id: u64, ratio: f64, t_len: usize) -> Result<CellResult> {
    let started = Instant::now();
    let p = (ratio * t_len as f64).round() as usize;
    let scenario = spec.scenario_label();
    let max_a = *spec.orders.iter().max().expect("validated");
    let needed = max_a * spec.q + max_a;
    if t_len < needed {
        return Ok(CellResult {
            ratio,
            p,
            t_len,
            scenario,
            status: format!("skipped: T={t_len} below {needed} needed for order {max_a}"),
            rates: Vec::new(),
            critical_values: Vec::new(),
            wall_seconds: started.elapsed().as_secs_f64(),
        });
    }

    let cell_cov = match spec.cov {
        CovKind::Identity => CovarianceModel::identity(p)?,
        CovKind::Factor => {
            let mut rng = derive_rep_rng(spec.master_seed, cell_id, COV_DRAW_REP);
            CovarianceModel::factor(p, &mut rng)?
        }
    };
    let coeff = match spec.coeff {
        Some(kind) => Some(coeff_matrix(kind, p)?),
        None => None,
    };

    let with_baselines = spec.study == StudyKind::Power && spec.include_baselines;
    let critical_values = if with_baselines {
        // Matched-null calibration: same p, T, covariance, innovations.
        let stats = (0..spec.calibration_reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng =
                    derive_rep_rng(spec.master_seed, cell_id, CALIBRATION_REP_BASE + r);
                let redrawn;
                let cov = if spec.redraw_cov_per_rep && spec.cov == CovKind::Factor {
                    redrawn = CovarianceModel::factor(p, &mut rng)?;
                    &redrawn
                } else {
                    &cell_cov
                };
                let x = gen_null(cov, spec.innov, t_len, &mut rng)?;
                Ok((max_stat(&x, spec.q)?, sum_stat(&x, spec.q)?))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let mut max_vals: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let mut sum_vals: Vec<f64> = stats.iter().map(|s| s.1).collect();
        vec![
            CriticalValue {
                stat: "mq".into(),
                value: empirical_upper_quantile(&mut max_vals, spec.alpha),
            },
            CriticalValue {
                stat: "sq".into(),
                value: empirical_upper_quantile(&mut sum_vals, spec.alpha),
            },
        ]
    } else {
        Vec::new()
    };

    let cfg = spec.test_config();
    let names = spec.stat_names();
    let width = names.len();
    let rejects_per_rep = (0..spec.nreps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = derive_rep_rng(spec.master_seed, cell_id, r);
            let x = generate_rep(spec, &cell_cov, coeff.as_ref(), p, t_len, &mut rng)?;
            let report = run_test(&x, &cfg)?;
            let mut rejects = Vec::with_capacity(width);
            for &a in &spec.orders {
                rejects.push(report.order_stats(a).map(|s| s.reject).unwrap_or(false));
            }
            rejects.push(report.adaptive.map(|a| a.reject).unwrap_or(false));
            if with_baselines {
                let mq = max_stat(&x, spec.q)?;
                let sq = sum_stat(&x, spec.q)?;
                rejects.push(mq > critical_values[0].value);
                rejects.push(sq > critical_values[1].value);
            }
            Ok(rejects)
        })
        .collect::<Result<Vec<Vec<bool>>>>()?;

    let mut counts = vec![0usize; width];
    for rep in &rejects_per_rep {
        for (k, &rej) in rep.iter().enumerate() {
            if rej {
                counts[k] += 1;
            }
        }
    }
    let n = spec.nreps as f64;
    let rates = names
        .into_iter()
        .zip(counts)
        .map(|(stat, c)| {
            let rate = c as f64 / n;
            StatRate {
                stat,
                reject_pct: rate * 100.0,
                mc_se_pct: (rate * (1.0 - rate) / n).sqrt() * 100.0,
            }
        })
        .collect();

    Ok(CellResult {
        ratio,
        p,
        t_len,
        scenario,
        status: "ok".into(),
        rates,
        critical_values,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
