//! Finite-truncation density estimators and the sandwich harness.
//!
//! Estimators here are finite proxies: a prefix ratio, window extrema (a
//! finite stand-in for Banach-type densities), and a logarithmic ratio. All
//! outputs are exact rationals; none of them is ever passed off as a limit.
//! The sandwich harness ties an estimate back to a certified staged
//! interval: any monotone counting estimator of the limit set is squeezed
//! between its values on the inner and outer stage sets, so checking those
//! two against the interval (plus slack) covers the limit set as well.
//!
//! The factorial-interval tables use closed-form counting with big
//! integers; the checkpoints grow like `(4n+1)!` and enumeration is not an
//! option above desk scale.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::Rational;
use crate::density::{buck_upper, StagedSet};
use crate::periodic::EventuallyPeriodicSet;
use crate::{Error, Result};

/// Membership oracle for estimator inputs.
pub trait SetOracle {
    fn contains(&self, n: u64) -> bool;
}

impl SetOracle for EventuallyPeriodicSet {
    fn contains(&self, n: u64) -> bool {
        self.member(n)
    }
}

impl SetOracle for Vec<bool> {
    fn contains(&self, n: u64) -> bool {
        (n as usize) < self.len() && self[n as usize]
    }
}

/// Adapter for closure-defined sets.
pub struct FnOracle<F: Fn(u64) -> bool>(pub F);

impl<F: Fn(u64) -> bool> SetOracle for FnOracle<F> {
    fn contains(&self, n: u64) -> bool {
        (self.0)(n)
    }
}

/// Exact `|S ∩ [1, N]| / N`.
pub fn prefix_ratio<S: SetOracle + ?Sized>(set: &S, n_limit: u64) -> Rational {
    assert!(n_limit >= 1, "N must be positive");
    let count = (1..=n_limit).filter(|&n| set.contains(n)).count();
    Rational::new(BigInt::from(count), BigInt::from(n_limit))
}

/// Exact extrema of `|S ∩ window| / L` over all length-L windows inside
/// `[1, N]`.
pub fn window_extrema<S: SetOracle + ?Sized>(
    set: &S,
    n_limit: u64,
    window_len: u64,
) -> (Rational, Rational) {
    assert!(window_len >= 1 && window_len <= n_limit, "need 1 <= L <= N");
    let mut count: u64 = (1..=window_len).filter(|&n| set.contains(n)).count() as u64;
    let mut min = count;
    let mut max = count;
    let mut start = 1u64;
    while start + window_len <= n_limit {
        if set.contains(start) {
            count -= 1;
        }
        if set.contains(start + window_len) {
            count += 1;
        }
        min = min.min(count);
        max = max.max(count);
        start += 1;
    }
    let l = BigInt::from(window_len);
    (
        Rational::new(BigInt::from(min), l.clone()),
        Rational::new(BigInt::from(max), l),
    )
}

/// Exact `(sum of 1/n over S ∩ [1,N]) / (sum of 1/n over [1,N])`.
pub fn log_ratio<S: SetOracle + ?Sized>(set: &S, n_limit: u64) -> Rational {
    assert!(n_limit >= 1, "N must be positive");
    let numerator = harmonic_sum(set, 1, n_limit);
    let denominator = harmonic_sum(&FnOracle(|_| true), 1, n_limit);
    numerator / denominator
}

/// Exact sum of 1/n over members of `[lo, hi]`, by divide and conquer so the
/// intermediate fractions stay balanced.
fn harmonic_sum<S: SetOracle + ?Sized>(set: &S, lo: u64, hi: u64) -> Rational {
    if hi - lo < 32 {
        let mut acc = Rational::zero();
        for n in lo..=hi {
            if set.contains(n) {
                acc += Rational::new(BigInt::one(), BigInt::from(n));
            }
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    harmonic_sum(set, lo, mid) + harmonic_sum(set, mid + 1, hi)
}

/// Which estimator the sandwich harness should run.
#[derive(Clone, Copy, Debug)]
pub enum EstimatorKind {
    Prefix,
    WindowMin { len: u64 },
    WindowMax { len: u64 },
    Log,
}

impl EstimatorKind {
    fn evaluate(&self, set: &EventuallyPeriodicSet, n_limit: u64) -> Rational {
        match *self {
            EstimatorKind::Prefix => prefix_ratio(set, n_limit),
            EstimatorKind::WindowMin { len } => window_extrema(set, n_limit, len).0,
            EstimatorKind::WindowMax { len } => window_extrema(set, n_limit, len).1,
            EstimatorKind::Log => log_ratio(set, n_limit),
        }
    }
}

/// Outcome of a sandwich check, with all four numbers for the report.
#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub stage: u32,
    pub proxy_stage: u32,
    pub n_limit: u64,
    pub allowed_lo: Rational,
    pub allowed_hi: Rational,
    pub inner_estimate: Rational,
    pub outer_estimate: Rational,
    pub pass: bool,
}

/// Checks that the estimator value at truncation `n_limit` lies within
/// `[buck(inner_stage) - slack, buck(outer_stage) + slack]`.
///
/// The limit set of the sandwich lies between `inner_proxy` and
/// `outer_proxy` pointwise, and every estimator here is monotone under set
/// inclusion, so evaluating both proxies brackets the (uncomputable) value
/// on the limit set; the check passes when both land in the allowed band.
pub fn sandwich_check(
    staged: &StagedSet,
    estimator: EstimatorKind,
    stage: u32,
    proxy_stage: u32,
    n_limit: u64,
    slack: &Rational,
) -> Result<SandwichReport> {
    if proxy_stage < stage {
        return Err(Error::Precondition(
            "proxy stage must be at least the certificate stage".into(),
        ));
    }
    let certificate = staged.stage(stage)?;
    let proxy = staged.stage(proxy_stage)?;
    let allowed_lo = buck_upper(&certificate.inner) - slack;
    let allowed_hi = buck_upper(&certificate.outer) + slack;
    let inner_estimate = estimator.evaluate(&proxy.inner, n_limit);
    let outer_estimate = estimator.evaluate(&proxy.outer, n_limit);
    let pass = allowed_lo <= inner_estimate
        && inner_estimate <= outer_estimate
        && outer_estimate <= allowed_hi;
    Ok(SandwichReport {
        stage,
        proxy_stage,
        n_limit,
        allowed_lo,
        allowed_hi,
        inner_estimate,
        outer_estimate,
        pass,
    })
}

/// One checkpoint row of the factorial-interval table.
#[derive(Clone, Debug)]
pub struct FactorialIntervalRow {
    pub n: u32,
    /// `(4n+1)!` or `(4n+3)!`.
    pub checkpoint: BigInt,
    pub x_count: BigInt,
    pub y_count: BigInt,
    pub union_count: BigInt,
    pub x_ratio: Rational,
    pub y_ratio: Rational,
    pub union_ratio: Rational,
}

/// Closed-form prefix counts for
/// `X = (∪ [(4n)!, (4n+1)!]) ∩ 2N` and `Y = (∪ [(4n+2)!, (4n+3)!]) ∩ (2N+1)`
/// at the interval right endpoints. X and Y live in disjoint progressions
/// (2N and 2N+1), yet all three prefix ratios approach 1/2: the asymptotic
/// upper density is not additive on them, while the Buck densities are.
///
/// Everything is counted in closed form with big integers; nothing is
/// enumerated.
pub fn factorial_interval_table(n_max: u32) -> Result<Vec<FactorialIntervalRow>> {
    if n_max == 0 || n_max > 4 {
        return Err(Error::Precondition(
            "n_max must be between 1 and 4 (checkpoints grow factorially)".into(),
        ));
    }
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for odd_endpoint in [false, true] {
            let checkpoint = if odd_endpoint {
                big_factorial(4 * n + 3)
            } else {
                big_factorial(4 * n + 1)
            };
            let x_count = count_x_up_to(&checkpoint);
            let y_count = count_y_up_to(&checkpoint);
            let union_count = &x_count + &y_count;
            rows.push(FactorialIntervalRow {
                n,
                x_ratio: Rational::new(x_count.clone(), checkpoint.clone()),
                y_ratio: Rational::new(y_count.clone(), checkpoint.clone()),
                union_ratio: Rational::new(union_count.clone(), checkpoint.clone()),
                checkpoint,
                x_count,
                y_count,
                union_count,
            });
        }
    }
    Ok(rows)
}

fn big_factorial(n: u32) -> BigInt {
    crate::arith::factorial(n as u64)
}

/// Even members of `[a, b]`: floor(b/2) - floor((a-1)/2).
fn evens_in(a: &BigInt, b: &BigInt) -> BigInt {
    if b < a {
        return BigInt::zero();
    }
    b.div_floor(&BigInt::from(2)) - (a - BigInt::one()).div_floor(&BigInt::from(2))
}

/// Odd members of `[a, b]`: floor((b+1)/2) - floor(a/2).
fn odds_in(a: &BigInt, b: &BigInt) -> BigInt {
    if b < a {
        return BigInt::zero();
    }
    (b + BigInt::one()).div_floor(&BigInt::from(2)) - a.div_floor(&BigInt::from(2))
}

/// `|X ∩ [1, limit]|` in closed form, X = (∪_{j>=1} [(4j)!, (4j+1)!]) ∩ 2N.
fn count_x_up_to(limit: &BigInt) -> BigInt {
    let mut total = BigInt::zero();
    let mut j = 1u32;
    loop {
        let a = big_factorial(4 * j);
        if &a > limit {
            break;
        }
        let b = big_factorial(4 * j + 1).min(limit.clone());
        // Dual-route check on full intervals: both endpoints are even, so
        // the parity count must equal (b - a)/2 + 1.
        let count = evens_in(&a, &b);
        if b == big_factorial(4 * j + 1) {
            let direct = (&b - &a) / BigInt::from(2) + BigInt::one();
            assert_eq!(count, direct, "even-interval closed forms disagree at j={j}");
        }
        total += count;
        j += 1;
    }
    total
}

/// `|Y ∩ [1, limit]|` in closed form, Y = (∪_{j>=1} [(4j+2)!, (4j+3)!]) ∩ (2N+1).
fn count_y_up_to(limit: &BigInt) -> BigInt {
    let mut total = BigInt::zero();
    let mut j = 1u32;
    loop {
        let a = big_factorial(4 * j + 2);
        if &a > limit {
            break;
        }
        let b = big_factorial(4 * j + 3).min(limit.clone());
        let count = odds_in(&a, &b);
        if b == big_factorial(4 * j + 3) {
            // Both endpoints even: odd count over the full interval is (b-a)/2.
            let direct = (&b - &a) / BigInt::from(2);
            assert_eq!(count, direct, "odd-interval closed forms disagree at j={j}");
        }
        total += count;
        j += 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn ap(step: u64, offset: u64) -> EventuallyPeriodicSet {
        EventuallyPeriodicSet::arithmetic_progression(step, offset)
    }

    #[test]
    fn prefix_ratio_examples() {
        assert_eq!(prefix_ratio(&ap(4, 1), 100), rat(25, 100));
        assert_eq!(prefix_ratio(&EventuallyPeriodicSet::naturals(), 37), rat(1, 1));
        assert_eq!(prefix_ratio(&EventuallyPeriodicSet::empty(), 37), rat(0, 1));
    }

    #[test]
    fn prefix_ratio_converges_to_tail_density() {
        // |prefix_ratio(S, N) - |R|/q| <= (T + q)/N for N >= T.
        let s = EventuallyPeriodicSet::make(6, &[1, 4], 12, &[0, 2, 3]).unwrap();
        let density = buck_upper(&s);
        for n_limit in [12u64, 100, 1000, 10_000] {
            let gap = (prefix_ratio(&s, n_limit) - &density).abs();
            let bound = rat((s.threshold() + s.modulus()) as i64, n_limit as i64);
            assert!(gap <= bound, "N={n_limit}: {gap} > {bound}");
        }
    }

    #[test]
    fn window_extrema_examples() {
        // One member of 4N+1 in any window of 4.
        assert_eq!(window_extrema(&ap(4, 1), 100, 4), (rat(1, 4), rat(1, 4)));
        // A finite set has empty and full windows of length 3 inside [1,100].
        let f = EventuallyPeriodicSet::from_finite(&[1, 2, 3]);
        assert_eq!(window_extrema(&f, 100, 3), (rat(0, 1), rat(1, 1)));
        // {0} union 4N+{1,2}: every window of 8 holds exactly 4 members.
        let s = EventuallyPeriodicSet::make(4, &[1, 2], 4, &[0, 1, 2]).unwrap();
        assert_eq!(window_extrema(&s, 200, 8), (rat(1, 2), rat(1, 2)));
    }

    #[test]
    fn window_extrema_bracket_prefix_ratio() {
        let s = EventuallyPeriodicSet::make(5, &[0, 2], 10, &[1, 7]).unwrap();
        for n_limit in [10u64, 50, 200] {
            let (lo, hi) = window_extrema(&s, n_limit, n_limit);
            let p = prefix_ratio(&s, n_limit);
            assert!(lo <= p && p <= hi);
        }
    }

    #[test]
    fn log_ratio_examples() {
        assert_eq!(log_ratio(&EventuallyPeriodicSet::naturals(), 10), rat(1, 1));
        assert_eq!(log_ratio(&EventuallyPeriodicSet::empty(), 10), rat(0, 1));
        // (1/2 + 1/4) / (1 + 1/2 + 1/3 + 1/4) = 9/25.
        assert_eq!(log_ratio(&ap(2, 0), 4), rat(9, 25));
    }

    #[test]
    fn log_ratio_tracks_tail_density_at_desk_scale() {
        // Abel summation against the count bound |C(x) - d*x| <= T + q gives
        // |log_ratio(S, N) - |R|/q| <= (T + q)/H_N, assertable exactly.
        let n_limit = 100_000u64;
        let harmonic = harmonic_sum(&FnOracle(|_| true), 1, n_limit);
        for s in [ap(3, 1), ap(5, 2), EventuallyPeriodicSet::make(6, &[0, 1], 12, &[5]).unwrap()] {
            let value = log_ratio(&s, n_limit);
            let gap = (value - buck_upper(&s)).abs();
            let bound = rat((s.threshold() + s.modulus()) as i64, 1) / &harmonic;
            assert!(gap <= bound, "{s}: log ratio off by {gap}, bound {bound}");
        }
    }

    #[test]
    fn sandwich_check_passes_on_trivial_staging() {
        let staged = StagedSet::constant(ap(4, 0));
        let report = sandwich_check(
            &staged,
            EstimatorKind::Prefix,
            1,
            1,
            10_000,
            &rat(1, 100),
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn sandwich_check_reports_violations() {
        // A shifted certificate: the staged set advertises density 1/4 with
        // no slack to spare, while the tiny truncation distorts the ratio.
        let staged = StagedSet::constant(ap(4, 1));
        let report = sandwich_check(
            &staged,
            EstimatorKind::Prefix,
            1,
            1,
            3,
            &rat(1, 100),
        )
        .unwrap();
        assert!(!report.pass, "{report:?}");
        assert_eq!(report.inner_estimate, rat(1, 3));
    }

    #[test]
    fn sandwich_check_on_a_real_staging() {
        let sandwich =
            crate::construct::IrrationalSandwich::new(crate::IntervalReal::golden_conjugate(), 2);
        let staged = sandwich.staged();
        let report = sandwich_check(
            &staged,
            EstimatorKind::Prefix,
            4,
            4,
            1_000_000,
            &rat(1, 100),
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn factorial_interval_counts() {
        let rows = factorial_interval_table(3).unwrap();
        // n=1, N=120: |X ∩ [1,120]| = evens in [24,120] = 49.
        let row = &rows[0];
        assert_eq!(row.checkpoint, BigInt::from(120));
        assert_eq!(row.x_count, BigInt::from(49));
        assert_eq!(row.x_ratio, rat(49, 120));

        // n=2, N=9!: the X ratio approaches (1 - 1/9)/2 within 1e-3.
        let row = rows
            .iter()
            .find(|r| r.checkpoint == BigInt::from(362880))
            .unwrap();
        assert_eq!(row.x_count, BigInt::from(161330));
        let gap = (&row.x_ratio - rat(4, 9)).abs();
        assert!(gap < rat(1, 1000), "gap {gap}");

        // X ratios at the (4n+1)! checkpoints (even rows) increase toward 1/2.
        let x_ratios: Vec<&Rational> = rows.iter().step_by(2).map(|r| &r.x_ratio).collect();
        for pair in x_ratios.windows(2) {
            assert!(pair[0] < pair[1]);
        }
        for r in &x_ratios {
            assert!(**r < rat(1, 2));
        }
    }

    #[test]
    fn factorial_interval_counts_match_enumeration_at_small_scale() {
        // Direct enumeration oracle for n = 1 and 2 (checkpoints <= 9!).
        let rows = factorial_interval_table(2).unwrap();
        let in_x = |m: u64| -> bool {
            m.is_multiple_of(2) && (24..=120).contains(&m) || m.is_multiple_of(2) && (40320..=362880).contains(&m)
        };
        let in_y = |m: u64| -> bool { m % 2 == 1 && (720..=5040).contains(&m) };
        for row in rows.iter().filter(|r| r.checkpoint <= BigInt::from(362880)) {
            let limit = u64::try_from(&row.checkpoint).unwrap();
            let x_brute = (1..=limit).filter(|&m| in_x(m)).count();
            let y_brute = (1..=limit).filter(|&m| in_y(m)).count();
            assert_eq!(row.x_count, BigInt::from(x_brute), "X at {limit}");
            assert_eq!(row.y_count, BigInt::from(y_brute), "Y at {limit}");
        }
    }

    #[test]
    fn factorial_interval_table_rejects_large_nmax() {
        assert!(factorial_interval_table(5).is_err());
        assert!(factorial_interval_table(0).is_err());
    }
}
