//! Built-in self checks: the DP evaluator against the enumeration oracle
//! on random inputs, and the count identity dp(1, ..., 1) = C(T - aq, a)
//! over a dense grid. The CLI exposes these as the `verify` subcommand.

use rand::Rng;

use crate::rng::derive_rep_rng;
use crate::ustat::{brute_tuple_product_sum, dp_tuple_product_sum, tuple_count, TupleSpec};

const DP_SEED: u64 = 0x5eed_0001;

/// Outcome of the verification suites.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub dp_cases: usize,
    pub dp_max_rel_err: f64,
    pub count_cells: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random DP-vs-oracle agreement: `cases` draws with T <= 16, q in {1, 2},
/// a in {2, 4}, standard normal channel values, tolerance 1e-10 relative.
pub fn dp_oracle_suite(cases: usize) -> VerifyReport {
    let mut rng = derive_rep_rng(DP_SEED, 0, 0);
    let mut failures = Vec::new();
    let mut max_rel = 0.0f64;
    for case in 0..cases {
        let q = 1 + case % 2;
        let a = if case % 3 == 0 { 4 } else { 2 };
        let t_len = 4 + (case * 13 + 5) % 13; // 4..=16
        let spec = match TupleSpec::new(t_len, q, a) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("case {case}: bad spec: {e}"));
                continue;
            }
        };
        let s: Vec<f64> = (0..t_len)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let brute = brute_tuple_product_sum(&s, &spec).expect("oracle-scale spec");
        let dp = dp_tuple_product_sum(&s, &spec).expect("valid input");
        let rel = (dp - brute).abs() / (1.0 + brute.abs());
        max_rel = max_rel.max(rel);
        if rel > 1e-10 {
            failures.push(format!(
                "case {case} (T={t_len}, q={q}, a={a}): dp {dp} vs oracle {brute} (rel {rel:e})"
            ));
        }
    }
    VerifyReport {
        dp_cases: cases,
        dp_max_rel_err: max_rel,
        count_cells: 0,
        failures,
    }
}

/// Exact count identity over T <= t_max, q <= 3, a in {2, 4, 6}, covering
/// the N = 1 boundary and the N = 0 infeasible cells.
pub fn count_identity_suite(t_max: usize) -> VerifyReport {
    let mut failures = Vec::new();
    let mut cells = 0usize;
    for t_len in 1..=t_max {
        for q in 1..=3 {
            for &a in &[2usize, 4, 6] {
                cells += 1;
                let spec = TupleSpec::new(t_len, q, a).expect("valid spec");
                let ones = vec![1.0; t_len];
                let dp = dp_tuple_product_sum(&ones, &spec).expect("valid input");
                let count = tuple_count(&spec).expect("small count") as f64;
                if dp != count {
                    failures.push(format!(
                        "T={t_len} q={q} a={a}: dp {dp} != count {count}"
                    ));
                }
            }
        }
    }
    VerifyReport {
        dp_cases: 0,
        dp_max_rel_err: 0.0,
        count_cells: cells,
        failures,
    }
}

/// Both suites at their standard sizes.
pub fn run_all() -> VerifyReport {
    let mut dp = dp_oracle_suite(1000);
    let counts = count_identity_suite(60);
    dp.count_cells = counts.count_cells;
    dp.failures.extend(counts.failures);
    dp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_clean_build() {
        let report = run_all();
        assert!(report.passed(), "failures: {:?}", report.failures);
        assert_eq!(report.dp_cases, 1000);
        assert!(report.count_cells >= 60 * 9);
    }
}
