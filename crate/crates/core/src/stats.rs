//! Statistical primitives.
//!
//! The Mann-Whitney U-test here is the comparison engine for the whole crate:
//! its one-sided alternative is exactly "the first sample is stochastically
//! greater than the second". Small tie-free inputs get an exact p-value from
//! the combinatorial null distribution of U; everything else falls back to
//! the normal approximation with mid-ranks, tie-corrected variance, and a
//! continuity correction.
//!
//! The coefficient of variation follows the Var/Mean convention (not the
//! usual std/mean); [`CvConvention::Conventional`] is available for
//! cross-checking in analysis code.

use std::collections::HashMap;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Exact p-values are used when both samples are at most this large and the
/// pooled sample is tie-free.
pub const EXACT_SIZE_LIMIT: usize = 20;

/// Means closer to zero than this make Var/Mean meaningless.
pub const DEGENERATE_MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample must not be empty")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("sample mean {mean:e} is too close to zero for a Var/Mean ratio")]
    DegenerateMean { mean: f64 },
    #[error("degenerate correlation input: {0}")]
    DegenerateInput(&'static str),
    #[error("U statistic {u} outside [0, {max}]")]
    StatisticOutOfRange { u: f64, max: f64 },
}

/// Alternative hypothesis of the U-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    /// First sample stochastically greater than the second.
    FirstGreater,
    /// Second sample stochastically greater than the first.
    SecondGreater,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    Exact,
    NormalApprox,
}

/// Outcome of a Mann-Whitney U-test.
///
/// `u_first` counts pairs (x, y) with x > y plus half the tied pairs;
/// `u_second` is the symmetric statistic, so `u_first + u_second = n * m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub u_first: f64,
    pub u_second: f64,
    pub p_value: f64,
    pub alternative: Alternative,
    pub method_used: TestMethod,
}

fn check_finite(sample: &[f64]) -> Result<(), StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Mid-ranks of the pooled sample, plus the sum of t^3 - t over tie groups.
fn pooled_midranks(x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
    let n_total = x.len() + y.len();
    let mut order: Vec<usize> = (0..n_total).collect();
    let value = |i: usize| if i < x.len() { x[i] } else { y[i - x.len()] };
    order.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap());

    let mut ranks = vec![0.0; n_total];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n_total {
        let mut j = i;
        while j + 1 < n_total && value(order[j + 1]) == value(order[i]) {
            j += 1;
        }
        let group = (j - i + 1) as f64;
        // average of ranks i+1 ..= j+1
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mid;
        }
        tie_term += group * group * group - group;
        i = j + 1;
    }
    (ranks, tie_term)
}

/// Mann-Whitney U-test between two samples.
///
/// Tie-free inputs with both sizes at most [`EXACT_SIZE_LIMIT`] get an exact
/// p-value from the combinatorial null distribution; otherwise the normal
/// approximation with tie correction and a 0.5 continuity correction is
/// used. The two-sided p is `min(1, 2 * min(one-sided ps))`.
pub fn mann_whitney_u(x: &[f64], y: &[f64], alt: Alternative) -> Result<TestResult, StatsError> {
    check_finite(x)?;
    check_finite(y)?;
    let n = x.len();
    let m = y.len();
    let nm = (n * m) as f64;

    let (ranks, tie_term) = pooled_midranks(x, y);
    let rank_sum_x: f64 = ranks[..n].iter().sum();
    let u_first = rank_sum_x - (n * (n + 1)) as f64 / 2.0;
    let u_second = nm - u_first;
    let has_ties = tie_term > 0.0;

    let (p_first, p_second, method) = if !has_ties && n <= EXACT_SIZE_LIMIT && m <= EXACT_SIZE_LIMIT
    {
        // Tie-free U is an integer; P(U1 >= u1) = P(U <= nm - u1) = P(U <= u2)
        // by the symmetry of the null distribution.
        let p_first = exact_u_null_cdf(n, m, u_second)?;
        let p_second = exact_u_null_cdf(n, m, u_first)?;
        (p_first, p_second, TestMethod::Exact)
    } else {
        let total = (n + m) as f64;
        let mean = nm / 2.0;
        let var = nm / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
        if var <= 0.0 {
            // Every pooled observation is identical: no evidence either way.
            (1.0, 1.0, TestMethod::NormalApprox)
        } else {
            let sd = var.sqrt();
            let normal = Normal::new(0.0, 1.0).unwrap();
            let p_first = normal.sf((u_first - mean - 0.5) / sd).clamp(0.0, 1.0);
            let p_second = normal.sf((u_second - mean - 0.5) / sd).clamp(0.0, 1.0);
            (p_first, p_second, TestMethod::NormalApprox)
        }
    };

    let p_value = match alt {
        Alternative::FirstGreater => p_first,
        Alternative::SecondGreater => p_second,
        Alternative::TwoSided => (2.0 * p_first.min(p_second)).min(1.0),
    };

    Ok(TestResult {
        u_first,
        u_second,
        p_value,
        alternative: alt,
        method_used: method,
    })
}

/// P(U <= u) under the tie-free null, by the standard count recursion over
/// rank partitions. Non-integer `u` is floored (U is integral under the
/// null). Reaches 1 at `u = n * m`.
pub fn exact_u_null_cdf(n: usize, m: usize, u: f64) -> Result<f64, StatsError> {
    if n == 0 || m == 0 {
        return Err(StatsError::EmptySample);
    }
    let nm = n * m;
    if !u.is_finite() || u < 0.0 || u > nm as f64 {
        return Err(StatsError::StatisticOutOfRange { u, max: nm as f64 });
    }
    let target = (u.floor() as usize).min(nm);
    Ok(with_u_counts(n, m, |counts| {
        let total: u64 = counts.iter().sum();
        let below: u64 = counts[..=target].iter().sum();
        below as f64 / total as f64
    }))
}

type UCountMemo = std::cell::RefCell<HashMap<(usize, usize), std::rc::Rc<Vec<u64>>>>;

thread_local! {
    // Null distributions keyed by (n, m); bounded by EXACT_SIZE_LIMIT^2
    // entries of at most n*m+1 u64 each.
    static U_COUNT_MEMO: UCountMemo = std::cell::RefCell::new(HashMap::new());
}

fn with_u_counts<T>(n: usize, m: usize, f: impl FnOnce(&[u64]) -> T) -> T {
    U_COUNT_MEMO.with(|memo| {
        let counts = {
            let mut memo = memo.borrow_mut();
            std::rc::Rc::clone(
                memo.entry((n, m))
                    .or_insert_with(|| std::rc::Rc::new(u_count_distribution(n, m))),
            )
        };
        f(&counts)
    })
}

fn counts_at(row: &[u64], v: usize) -> u64 {
    row.get(v).copied().unwrap_or(0)
}

/// Number of rank arrangements with U = u for sample sizes (n, m), indexed
/// by u. Recursion on the largest pooled value: if it belongs to the first
/// sample it wins all m cross pairs, f(n, m, u) = f(n-1, m, u-m) + f(n, m-1, u).
/// Counts stay below C(40, 20) < 2^53, exact in u64 and f64.
fn u_count_distribution(n: usize, m: usize) -> Vec<u64> {
    // dp[j] holds the distribution for (current i, j).
    let mut dp: Vec<Vec<u64>> = (0..=m).map(|_| vec![1u64]).collect();
    for i in 1..=n {
        let mut next: Vec<Vec<u64>> = Vec::with_capacity(m + 1);
        next.push(vec![1u64]); // j = 0: no cross pairs
        for j in 1..=m {
            let mut cur = vec![0u64; i * j + 1];
            for (v, slot) in cur.iter_mut().enumerate() {
                let mut c = 0u64;
                if v >= j {
                    c += counts_at(&dp[j], v - j); // largest value is an x
                }
                c += counts_at(&next[j - 1], v); // largest value is a y
                *slot = c;
            }
            next.push(cur);
        }
        dp = next;
    }
    dp.pop().unwrap()
}

/// Which coefficient-of-variation formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CvConvention {
    /// Var(X) / Mean(X).
    #[default]
    Paper,
    /// std(X) / Mean(X).
    Conventional,
}

pub fn sample_mean(samples: &[f64]) -> Result<f64, StatsError> {
    check_finite(samples)?;
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Unbiased sample variance (denominator len - 1).
pub fn sample_variance(samples: &[f64]) -> Result<f64, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFewValues {
            needed: 2,
            got: samples.len(),
        });
    }
    let mean = sample_mean(samples)?;
    if samples.iter().all(|&v| v == samples[0]) {
        return Ok(0.0);
    }
    let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(ss / (samples.len() - 1) as f64)
}

/// Coefficient of variation, Var(X)/Mean(X).
///
/// Note this is the variance over the mean, not std over mean; under this
/// convention CV(c X) = c CV(X) for c > 0.
pub fn coefficient_of_variation(samples: &[f64]) -> Result<f64, StatsError> {
    coefficient_of_variation_with(CvConvention::Paper, samples)
}

pub fn coefficient_of_variation_with(
    convention: CvConvention,
    samples: &[f64],
) -> Result<f64, StatsError> {
    let var = sample_variance(samples)?;
    let mean = sample_mean(samples)?;
    if mean.abs() < DEGENERATE_MEAN_TOL {
        return Err(StatsError::DegenerateMean { mean });
    }
    Ok(match convention {
        CvConvention::Paper => var / mean,
        CvConvention::Conventional => var.sqrt() / mean,
    })
}

/// Kendall tau-b rank correlation with tie corrections in both variables.
///
/// Knight's O(n log n) algorithm: sort by x (then y), count discordant pairs
/// as merge-sort swaps on y, and correct for ties.
pub fn kendall_tau_b(pairs: &[(f64, f64)]) -> Result<f64, StatsError> {
    let n = pairs.len();
    if n < 2 {
        return Err(StatsError::TooFewValues { needed: 2, got: n });
    }
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if pairs.iter().all(|p| p.0 == pairs[0].0) {
        return Err(StatsError::DegenerateInput("all x values tied"));
    }
    if pairs.iter().all(|p| p.1 == pairs[0].1) {
        return Err(StatsError::DegenerateInput("all y values tied"));
    }

    let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
    sorted.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });

    // Tie counts: pairs tied in x, tied jointly in (x, y).
    let mut tied_x = 0u64;
    let mut tied_xy = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        let mut run_xy_start = i;
        while j + 1 < n && sorted[j + 1].0 == sorted[i].0 {
            j += 1;
            if sorted[j].1 != sorted[run_xy_start].1 {
                let run = (j - run_xy_start) as u64;
                tied_xy += run * (run - 1) / 2;
                run_xy_start = j;
            }
        }
        let run = (j - run_xy_start + 1) as u64;
        tied_xy += run * (run - 1) / 2;
        let group = (j - i + 1) as u64;
        tied_x += group * (group - 1) / 2;
        i = j + 1;
    }

    // Merge sort over y counting inversions (discordant pairs, with ties in
    // y contributing nothing because equal keys do not swap).
    let mut ys: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    // Pairs tied in y, from the now-sorted ys.
    let mut tied_y = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && ys[j + 1] == ys[i] {
            j += 1;
        }
        let group = (j - i + 1) as u64;
        tied_y += group * (group - 1) / 2;
        i = j + 1;
    }

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let concordant_minus_discordant =
        n0 as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    let denom = ((n0 - tied_x) as f64) * ((n0 - tied_y) as f64);
    Ok((concordant_minus_discordant / denom.sqrt()).clamp(-1.0, 1.0))
}

fn merge_count(values: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut values[..mid], buf) + merge_count(&mut values[mid..], buf);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid || j < n {
        if i < mid && (j >= n || values[i] <= values[j]) {
            buf[k] = values[i];
            i += 1;
        } else {
            buf[k] = values[j];
            swaps += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    values.copy_from_slice(&buf[..n]);
    swaps
}

/// MinMax normalization to [0, 1]; a degenerate range maps everything to 0.5.
pub fn minmax_normalize(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    check_finite(values)?;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![0.5; values.len()]);
    }
    let span = max - min;
    Ok(values.iter().map(|v| (v - min) / span).collect())
}

/// Standard deviation of the tie-free Kendall tau permutation null for n
/// points: sqrt(2(2n + 5) / (9 n (n - 1))).
pub fn kendall_tau_null_sd(n: usize) -> f64 {
    let n = n as f64;
    (2.0 * (2.0 * n + 5.0) / (9.0 * n * (n - 1.0))).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute-force one-sided p by enumerating every assignment of the pooled
    /// values into a group of size n (tie-free inputs only).
    fn brute_force_p_first_greater(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let total = n + y.len();
        assert!(total <= 20, "oracle limited to small pooled samples");
        let mut pooled: Vec<f64> = x.iter().chain(y.iter()).cloned().collect();
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let u_of = |xs: &[f64], ys: &[f64]| -> f64 {
            let mut u = 0.0;
            for a in xs {
                for b in ys {
                    if a > b {
                        u += 1.0;
                    }
                }
            }
            u
        };
        let u_obs = u_of(x, y);
        let mut hits = 0u64;
        let mut count = 0u64;
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != n {
                continue;
            }
            count += 1;
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(total - n);
            for (i, v) in pooled.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    xs.push(*v);
                } else {
                    ys.push(*v);
                }
            }
            if u_of(&xs, &ys) >= u_obs {
                hits += 1;
            }
        }
        hits as f64 / count as f64
    }

    #[test]
    fn exact_p_for_fully_separated_samples() {
        let r = mann_whitney_u(
            &[5.0, 6.0, 7.0],
            &[1.0, 2.0, 3.0],
            Alternative::FirstGreater,
        )
        .unwrap();
        assert_eq!(r.u_first, 9.0);
        assert_eq!(r.method_used, TestMethod::Exact);
        assert_abs_diff_eq!(r.p_value, 0.05, epsilon = 1e-15);
    }

    #[test]
    fn identical_samples_give_no_evidence() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.u_first, 4.5);
        assert_eq!(r.method_used, TestMethod::NormalApprox);
        assert!(r.p_value >= 0.99, "p = {}", r.p_value);
    }

    #[test]
    fn second_greater_on_separated_pairs() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0], Alternative::SecondGreater).unwrap();
        assert_eq!(r.u_second, 4.0);
        assert_abs_diff_eq!(r.p_value, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn u_statistics_always_sum_to_nm() {
        let r = mann_whitney_u(
            &[1.0, 1.0, 2.0, 9.0],
            &[1.0, 3.0, 3.0],
            Alternative::TwoSided,
        )
        .unwrap();
        assert_abs_diff_eq!(r.u_first + r.u_second, 12.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_and_non_finite_inputs_error() {
        assert_eq!(
            mann_whitney_u(&[], &[1.0], Alternative::TwoSided),
            Err(StatsError::EmptySample)
        );
        assert_eq!(
            mann_whitney_u(&[1.0], &[f64::NAN], Alternative::TwoSided),
            Err(StatsError::NonFinite)
        );
    }

    #[test]
    fn exact_cdf_small_cases() {
        assert_abs_diff_eq!(exact_u_null_cdf(1, 1, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(exact_u_null_cdf(3, 3, 0.0).unwrap(), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(exact_u_null_cdf(2, 2, 4.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_cdf_rejects_out_of_range() {
        assert!(matches!(
            exact_u_null_cdf(2, 3, 6.5),
            Err(StatsError::StatisticOutOfRange { .. })
        ));
        assert!(matches!(
            exact_u_null_cdf(2, 3, -0.5),
            Err(StatsError::StatisticOutOfRange { .. })
        ));
    }

    #[test]
    fn exact_p_matches_enumeration_oracle() {
        use rand::Rng;
        let mut rng = crate::seeding::rng_from_seed(42);
        for n in 1..=6usize {
            for m in 1..=6usize {
                // Distinct integers guarantee a tie-free pooled sample.
                let mut vals: Vec<f64> = Vec::new();
                while vals.len() < n + m {
                    let v = rng.gen_range(0..1000) as f64;
                    if !vals.contains(&v) {
                        vals.push(v);
                    }
                }
                let (x, y) = vals.split_at(n);
                let expected = brute_force_p_first_greater(x, y);
                let got = mann_whitney_u(x, y, Alternative::FirstGreater).unwrap();
                assert_eq!(got.method_used, TestMethod::Exact);
                assert_abs_diff_eq!(got.p_value, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn one_sided_symmetry() {
        let x = [3.0, 8.0, 1.5, 9.0];
        let y = [2.0, 2.5, 7.0];
        let a = mann_whitney_u(&x, &y, Alternative::FirstGreater).unwrap();
        let b = mann_whitney_u(&y, &x, Alternative::SecondGreater).unwrap();
        assert_eq!(a.p_value, b.p_value);
        assert_eq!(a.u_first, b.u_second);
    }

    #[test]
    fn cv_examples() {
        assert_eq!(
            coefficient_of_variation(&[2.0, 2.0, 2.0, 2.0]).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(coefficient_of_variation(&[1.0, 3.0]).unwrap(), 1.0);
        assert!(matches!(
            coefficient_of_variation(&[0.0, 0.0]),
            Err(StatsError::DegenerateMean { .. })
        ));
        assert!(matches!(
            coefficient_of_variation(&[1.0]),
            Err(StatsError::TooFewValues { .. })
        ));
    }

    #[test]
    fn cv_conventional_is_std_over_mean() {
        let samples = [1.0, 3.0];
        // variance 2, std sqrt(2), mean 2
        assert_abs_diff_eq!(
            coefficient_of_variation_with(CvConvention::Conventional, &samples).unwrap(),
            2.0f64.sqrt() / 2.0,
            epsilon = 1e-15
        );
    }

    /// Direct pair-counting tau-b, independent of the merge-sort path.
    fn tau_b_pair_counting(pairs: &[(f64, f64)]) -> f64 {
        let n = pairs.len();
        let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in i + 1..n {
                let dx = pairs[i].0 - pairs[j].0;
                let dy = pairs[i].1 - pairs[j].1;
                if dx == 0.0 && dy == 0.0 {
                    continue;
                } else if dx == 0.0 {
                    tx += 1;
                } else if dy == 0.0 {
                    ty += 1;
                } else if dx * dy > 0.0 {
                    conc += 1;
                } else {
                    disc += 1;
                }
            }
        }
        let pq = (conc + disc) as f64;
        (conc - disc) as f64 / ((pq + tx as f64) * (pq + ty as f64)).sqrt()
    }

    #[test]
    fn kendall_perfect_orders() {
        let up = [(1.0, 10.0), (2.0, 20.0), (3.0, 30.0)];
        let down = [(1.0, 30.0), (2.0, 20.0), (3.0, 10.0)];
        assert_eq!(kendall_tau_b(&up).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&down).unwrap(), -1.0);
    }

    #[test]
    fn kendall_with_ties_matches_pair_counting() {
        let pairs = [(1.0, 1.0), (2.0, 1.0), (3.0, 2.0)];
        assert_abs_diff_eq!(
            kendall_tau_b(&pairs).unwrap(),
            tau_b_pair_counting(&pairs),
            epsilon = 1e-12
        );
    }

    #[test]
    fn kendall_random_inputs_match_pair_counting() {
        use rand::Rng;
        let mut rng = crate::seeding::rng_from_seed(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..40);
            let pairs: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen_range(0..8) as f64, rng.gen_range(0..8) as f64 / 2.0))
                .collect();
            let all_x = pairs.iter().all(|p| p.0 == pairs[0].0);
            let all_y = pairs.iter().all(|p| p.1 == pairs[0].1);
            if all_x || all_y {
                continue;
            }
            assert_abs_diff_eq!(
                kendall_tau_b(&pairs).unwrap(),
                tau_b_pair_counting(&pairs),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn kendall_rejects_degenerate_input() {
        assert!(matches!(
            kendall_tau_b(&[(1.0, 1.0), (1.0, 2.0)]),
            Err(StatsError::DegenerateInput(_))
        ));
    }

    #[test]
    fn minmax_examples() {
        assert_eq!(
            minmax_normalize(&[0.0, 5.0, 10.0]).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(minmax_normalize(&[7.0]).unwrap(), vec![0.5]);
        assert_eq!(minmax_normalize(&[-1.0, 1.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(minmax_normalize(&[]), Err(StatsError::EmptySample));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn sample_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-50.0f64..50.0, 1..max_len)
        }

        proptest! {
            #[test]
            fn symmetry_of_one_sided_p(x in sample_strategy(12), y in sample_strategy(12)) {
                let a = mann_whitney_u(&x, &y, Alternative::FirstGreater).unwrap();
                let b = mann_whitney_u(&y, &x, Alternative::SecondGreater).unwrap();
                prop_assert_eq!(a.p_value, b.p_value);
            }

            #[test]
            fn shift_cannot_decrease_u_first(
                x in sample_strategy(10),
                y in sample_strategy(10),
                c in 0.001f64..10.0,
            ) {
                let base = mann_whitney_u(&x, &y, Alternative::FirstGreater).unwrap();
                let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
                let moved = mann_whitney_u(&shifted, &y, Alternative::FirstGreater).unwrap();
                prop_assert!(moved.u_first >= base.u_first);
            }

            #[test]
            fn positive_scaling_preserves_the_test(
                x in sample_strategy(10),
                y in sample_strategy(10),
                c in 0.001f64..100.0,
            ) {
                let base = mann_whitney_u(&x, &y, Alternative::TwoSided).unwrap();
                let sx: Vec<f64> = x.iter().map(|v| v * c).collect();
                let sy: Vec<f64> = y.iter().map(|v| v * c).collect();
                let scaled = mann_whitney_u(&sx, &sy, Alternative::TwoSided).unwrap();
                prop_assert_eq!(base.u_first, scaled.u_first);
                prop_assert_eq!(base.p_value, scaled.p_value);
                prop_assert_eq!(base.method_used, scaled.method_used);
            }

            #[test]
            fn cv_scales_linearly(
                samples in prop::collection::vec(0.5f64..20.0, 2..15),
                c in 0.01f64..25.0,
            ) {
                let base = coefficient_of_variation(&samples).unwrap();
                let scaled: Vec<f64> = samples.iter().map(|v| v * c).collect();
                let got = coefficient_of_variation(&scaled).unwrap();
                prop_assert!((got - c * base).abs() <= 1e-8 * (1.0 + got.abs()));
            }

            #[test]
            fn kendall_invariant_under_monotone_transform(
                pairs in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 3..30),
            ) {
                let all_x = pairs.iter().all(|p| p.0 == pairs[0].0);
                let all_y = pairs.iter().all(|p| p.1 == pairs[0].1);
                prop_assume!(!all_x && !all_y);
                let base = kendall_tau_b(&pairs).unwrap();
                let mapped: Vec<(f64, f64)> = pairs
                    .iter()
                    .map(|(a, b)| ((a / 7.0).exp(), 3.0 * b + 1.0))
                    .collect();
                let got = kendall_tau_b(&mapped).unwrap();
                prop_assert!((base - got).abs() < 1e-9);
            }

            #[test]
            fn minmax_preserves_order(values in sample_strategy(20)) {
                let normed = minmax_normalize(&values).unwrap();
                for i in 0..values.len() {
                    for j in 0..values.len() {
                        if values[i] < values[j] {
                            prop_assert!(normed[i] <= normed[j]);
                        }
                        if values[i] == values[j] {
                            prop_assert_eq!(normed[i], normed[j]);
                        }
                    }
                }
                prop_assert!(normed.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
