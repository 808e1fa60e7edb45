//! Gap-constrained tuple combinatorics and the per-channel product-sum
//! evaluators.
//!
//! A tuple spec (T, q, a) describes the set of strictly increasing a-tuples
//! (t_1, ..., t_a) with t_1 >= q+1 and consecutive gaps strictly larger
//! than q; its cardinality is C(T - aq, a) whenever T >= aq + a and 0
//! otherwise. Two evaluators compute sum over tuples of prod_k s[t_k]:
//! a brute-force enumeration (the oracle, guarded to small counts) and a
//! rolling prefix-sum dynamic program in O(aT) time and O(T) memory.
//!
//! Time indices are 1-based in every contract here; slices are indexed
//! `s[t - 1]`.

use crate::error::{Error, Result};

/// Guard for the enumeration oracle.
pub const ORACLE_TUPLE_LIMIT: u128 = 1_000_000;

/// Horizon T, lag cap q, and tuple length a (positive even).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleSpec {
    t_len: usize,
    q: usize,
    a: usize,
}

impl TupleSpec {
    pub fn new(t_len: usize, q: usize, a: usize) -> Result<Self> {
        if a == 0 || a % 2 != 0 {
            return Err(Error::InvalidOrder(a));
        }
        if q == 0 {
            return Err(Error::InvalidLagCap);
        }
        if t_len == 0 {
            return Err(Error::EmptySample);
        }
        Ok(Self { t_len, q, a })
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn a(&self) -> usize {
        self.a
    }

    /// Smallest horizon with a nonempty tuple set: aq + a.
    pub fn min_t_len(&self) -> usize {
        self.a * self.q + self.a
    }
}

fn binomial(n: u128, k: u128) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut res: u128 = 1;
    for i in 1..=k {
        // res * (n - k + i) is divisible by i at every step
        res = res.checked_mul(n - k + i).ok_or(Error::CountOverflow)? / i;
    }
    Ok(res)
}

/// Number of admissible tuples: C(T - aq, a) for T >= aq + a, else 0.
pub fn tuple_count(spec: &TupleSpec) -> Result<u128> {
    if spec.t_len < spec.min_t_len() {
        return Ok(0);
    }
    binomial((spec.t_len - spec.a * spec.q) as u128, spec.a as u128)
}

/// All admissible tuples, 1-based, in lexicographic order. Guarded to at
/// most [`ORACLE_TUPLE_LIMIT`] tuples; this is oracle-scale machinery.
pub fn enumerate_tuples(spec: &TupleSpec) -> Result<Vec<Vec<usize>>> {
    let count = tuple_count(spec)?;
    if count > ORACLE_TUPLE_LIMIT {
        return Err(Error::OracleTooLarge {
            count,
            limit: ORACLE_TUPLE_LIMIT,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut stack = Vec::with_capacity(spec.a);
    extend(spec, &mut stack, &mut out);
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

fn extend(spec: &TupleSpec, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if stack.len() == spec.a {
        out.push(stack.clone());
        return;
    }
    let lo = match stack.last() {
        Some(&prev) => prev + spec.q + 1,
        None => spec.q + 1,
    };
    // Leave room for the remaining positions.
    let remaining = spec.a - stack.len() - 1;
    let hi = spec.t_len.saturating_sub(remaining * (spec.q + 1));
    for t in lo..=hi {
        stack.push(t);
        extend(spec, stack, out);
        stack.pop();
    }
}

/// Oracle evaluator: direct sum of prod_k s[t_k] over the enumerated set.
pub fn brute_tuple_product_sum(s: &[f64], spec: &TupleSpec) -> Result<f64> {
    check_len(s, spec)?;
    let tuples = enumerate_tuples(spec)?;
    let mut total = 0.0;
    for tuple in &tuples {
        let mut prod = 1.0;
        for &t in tuple {
            prod *= s[t - 1];
        }
        total += prod;
    }
    Ok(total)
}

fn check_len(s: &[f64], spec: &TupleSpec) -> Result<()> {
    if s.len() != spec.t_len {
        return Err(Error::LengthMismatch {
            expected: spec.t_len,
            found: s.len(),
        });
    }
    Ok(())
}

/// Prefix-sum dynamic program for the same sum, O(aT) time, O(T) memory.
pub fn dp_tuple_product_sum(s: &[f64], spec: &TupleSpec) -> Result<f64> {
    check_len(s, spec)?;
    let mut ws = DpWorkspace::new();
    let mut out = [0.0];
    ws.run(s, spec.q, &[spec.a], &mut out);
    Ok(out[0])
}

/// Reusable scratch for the DP: two rolling prefix vectors of length T + 1.
///
/// One sweep to the largest requested order reads off every intermediate
/// even order along the way, which is what the p^2 q channel sweep wants.
#[derive(Debug, Default)]
pub struct DpWorkspace {
    prev: Vec<f64>,
    curr: Vec<f64>,
}

impl DpWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Evaluate the tuple-product sum of `s` for each tuple length in
    /// `orders`, writing results into `out` (same length as `orders`).
    /// Orders must be positive; infeasible orders yield 0.
    pub fn run(&mut self, s: &[f64], q: usize, orders: &[usize], out: &mut [f64]) {
        assert_eq!(orders.len(), out.len());
        let t_len = s.len();
        let a_max = orders.iter().copied().max().unwrap_or(0);
        out.fill(0.0);
        if a_max == 0 {
            return;
        }
        self.prev.clear();
        self.prev.resize(t_len + 1, 0.0);
        self.curr.clear();
        self.curr.resize(t_len + 1, 0.0);

        // Level 1: prefix sums of s over t >= q+1.
        let mut acc = 0.0;
        for t in (q + 1)..=t_len {
            acc += s[t - 1];
            self.prev[t] = acc;
        }
        harvest(orders, 1, self.prev.last().copied().unwrap_or(0.0), out);

        for level in 2..=a_max {
            let start = level * (q + 1);
            let upto = start.min(t_len + 1);
            self.curr[..upto].fill(0.0);
            let mut acc = 0.0;
            for t in start..=t_len {
                // dp(level, t) = s_t * prefix(level-1, t-q-1)
                acc += s[t - 1] * self.prev[t - q - 1];
                self.curr[t] = acc;
            }
            std::mem::swap(&mut self.prev, &mut self.curr);
            harvest(orders, level, self.prev[t_len], out);
        }
    }
}

fn harvest(orders: &[usize], level: usize, value: f64, out: &mut [f64]) {
    for (pos, &order) in orders.iter().enumerate() {
        if order == level {
            out[pos] = value;
        }
    }
}

/// Deterministic pairwise reduction; used for the channel-sweep totals.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}
