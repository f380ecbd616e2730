//! Constructions with prescribed sumset densities.
//!
//! * Sets whose k-fold sumsets have density `k*alpha/n`, exactly for
//!   rational alpha and as a staged sandwich for irrational alpha.
//! * The sumset bound instance `S = (q*N + [0,t-1]) ∪ V` and its exact
//!   density chain.
//! * Translate sumsets `A + B` with prescribed density for finite B.
//! * An additive basis `A = Q ∪ Y` (Q the sums of two squares) with
//!   `2A = N` and prescribed density carried by Y.
//! * The non-domain counterexample built from `V = {n! + n}`: every residue
//!   class meets `2A` while counting bounds keep `2A` too sparse to contain
//!   a progression.

use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{factorial, isqrt, Rational};
use crate::conv::convolve_bool;
use crate::density::{buck_upper, Stage, StagedSet};
use crate::expansion::{expand, Expansion};
use crate::interval::{exact_floor_scaled, IntervalReal, DEFAULT_REFINEMENT_BUDGET};
use crate::periodic::EventuallyPeriodicSet;
use crate::{Error, Result};

/// Largest stage modulus the sandwich construction will materialize as an
/// explicit residue set; beyond this, exact sumset windows would not fit the
/// convolution budget.
pub const MAX_STAGE_MODULUS: u64 = 3_000_000;

/// A density target: an exact rational or an interval-enclosed irrational.
#[derive(Clone, Debug)]
pub enum Alpha {
    Rational(Rational),
    Irrational(IntervalReal),
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Alpha::Rational(r) => write!(f, "{r}"),
            Alpha::Irrational(x) => write!(f, "{x}"),
        }
    }
}

fn ratio_u64(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `step*N + {0, 1, ..., len-1}`; empty when `len = 0`.
fn block_progression(step: u64, len: u64) -> EventuallyPeriodicSet {
    assert!(len <= step, "block [0, {len}) does not fit modulus {step}");
    let residues: Vec<u64> = (0..len).collect();
    EventuallyPeriodicSet::make(step, &residues, 0, &[]).expect("validated block")
}

// ----------------------------------------------------------------------
// Prescribed k-fold sumset density, rational case
// ----------------------------------------------------------------------

/// The set `{0} ∪ (n*b*N + [1, a])` whose k-fold sumsets have density
/// `k*a/(n*b)` for every `k <= n`. Requires `0 <= a <= b` and `b, n >= 1`.
pub fn construct_rational(a: u64, b: u64, n: u64) -> Result<EventuallyPeriodicSet> {
    if b == 0 || n == 0 {
        return Err(Error::Precondition("b and n must be positive".into()));
    }
    if a > b {
        return Err(Error::Precondition(format!("a = {a} exceeds b = {b}")));
    }
    let step = n * b;
    let mut set = EventuallyPeriodicSet::from_finite(&[0]);
    for j in 1..=a {
        set = set.union(&EventuallyPeriodicSet::arithmetic_progression(step, j));
    }
    Ok(set)
}

// ----------------------------------------------------------------------
// Prescribed k-fold sumset density, irrational case (staged sandwich)
// ----------------------------------------------------------------------

/// Full per-stage data of the sandwich construction.
#[derive(Clone, Debug)]
pub struct SandwichStage {
    pub index: u32,
    pub q: u64,
    pub beta: u64,
    /// Newly split-off progression block at this stage.
    pub x: EventuallyPeriodicSet,
    /// Single progression carrying the remainder.
    pub y: EventuallyPeriodicSet,
    /// Inner set `X_1 ∪ ... ∪ X_i`.
    pub inner: EventuallyPeriodicSet,
    /// Outer set `inner ∪ Y_i`.
    pub outer: EventuallyPeriodicSet,
    /// Certified stage error bound.
    pub error: Rational,
}

struct SandwichState {
    expansion: Option<Expansion>,
    stages: Vec<SandwichStage>,
}

/// Sandwich construction for an irrational density target: at stage i the
/// exact sets `inner_i ⊆ A ⊆ outer_i` pin the k-fold sumset densities of the
/// limit set A within a certified shrinking interval around `k*alpha/n`.
pub struct IrrationalSandwich {
    alpha: IntervalReal,
    n: u64,
    state: Arc<Mutex<SandwichState>>,
}

impl IrrationalSandwich {
    pub fn new(alpha: IntervalReal, n: u64) -> Self {
        assert!(n >= 1);
        IrrationalSandwich {
            alpha,
            n,
            state: Arc::new(Mutex::new(SandwichState {
                expansion: None,
                stages: Vec::new(),
            })),
        }
    }

    pub fn alpha(&self) -> &IntervalReal {
        &self.alpha
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Per-stage construction data (1-based).
    pub fn detail(&self, i: u32) -> Result<SandwichStage> {
        assert!(i >= 1);
        let mut state = self.state.lock().expect("sandwich state poisoned");
        self.extend(&mut state, i)?;
        Ok(state.stages[i as usize - 1].clone())
    }

    fn extend(&self, state: &mut SandwichState, upto: u32) -> Result<()> {
        if state.stages.len() >= upto as usize {
            return Ok(());
        }
        // (Re-)expand to the needed depth; enclosure refinement on the shared
        // base value is memoized, so this stays cheap.
        let need_depth = upto;
        let have_depth = state.expansion.as_ref().map_or(0, |e| e.steps.len() as u32);
        if have_depth < need_depth {
            let expansion = expand(&self.alpha, self.n, need_depth)?;
            if expansion.steps.len() < need_depth as usize {
                let product = expansion.modulus_product(expansion.steps.len());
                return Err(Error::ModulusCapReached {
                    product: product.to_string(),
                    cap: crate::expansion::DEFAULT_MODULUS_CAP,
                });
            }
            state.expansion = Some(expansion);
        }
        let expansion = state.expansion.as_ref().expect("expansion just computed");
        let nm1_factorial =
            u64::try_from(&factorial(self.n - 1)).expect("(n-1)! fits u64 at desk scale");

        while state.stages.len() < upto as usize {
            let i = state.stages.len() + 1;
            let step = &expansion.steps[i - 1];
            let c = nm1_factorial
                .checked_mul(step.beta)
                .ok_or_else(|| Error::BudgetExceeded("stage digit overflow".into()))?;
            // (n-1)! * beta_i < q_i: follows from floor(q_i alpha_{i-1}) > n!.
            if c >= step.q {
                panic!("stage {i}: block length {c} reaches modulus {}", step.q);
            }
            let prev_y = if i == 1 {
                EventuallyPeriodicSet::naturals()
            } else {
                state.stages[i - 2].y.clone()
            };
            let prev_inner = if i == 1 {
                EventuallyPeriodicSet::empty()
            } else {
                state.stages[i - 2].inner.clone()
            };

            let modulus_product = expansion.modulus_product(i);
            if modulus_product > BigInt::from(MAX_STAGE_MODULUS) {
                return Err(Error::BudgetExceeded(format!(
                    "stage {i} modulus {modulus_product} exceeds materialization cap {MAX_STAGE_MODULUS}"
                )));
            }

            let x = prev_y.intersect(&block_progression(step.q, c));
            let y = prev_y.intersect(&EventuallyPeriodicSet::arithmetic_progression(step.q, c));
            // Pairwise coprime moduli make Y_i a single progression.
            debug_assert_eq!(y.residues().len(), 1);
            let inner = prev_inner.union(&x);
            let outer = inner.union(&y);

            // error_i = (alpha - partial_sum_{i-1}) + 2^{1-i}, with the exact
            // tail replaced by its enclosure-derived upper bound
            // hi(alpha_{i-1}) / (q_1...q_{i-1}).
            let tail_bound = if i == 1 {
                let e = self
                    .alpha
                    .refine_until_width_below(&ratio_u64(1, 1024), DEFAULT_REFINEMENT_BUDGET)?;
                e.hi
            } else {
                let prev_step = &expansion.steps[i - 2];
                let q_prod = expansion.modulus_product(i - 1);
                &prev_step.alpha_enclosure.hi / Rational::from(q_prod)
            };
            let error = tail_bound + Rational::new(BigInt::from(2), BigInt::one() << (i - 1));

            state.stages.push(SandwichStage {
                index: i as u32,
                q: step.q,
                beta: step.beta,
                x,
                y,
                inner,
                outer,
                error,
            });
        }
        Ok(())
    }

    /// Wraps the sandwich as a staged set sharing this cache.
    pub fn staged(&self) -> StagedSet {
        let state = Arc::clone(&self.state);
        let alpha = self.alpha.clone();
        let n = self.n;
        let this = IrrationalSandwich {
            alpha,
            n,
            state,
        };
        StagedSet::new(move |i| {
            let d = this.detail(i)?;
            Ok(Stage {
                inner: d.inner,
                outer: d.outer,
                error: d.error,
            })
        })
    }
}

/// Staged sandwich for `mu(kA) = k*alpha/n` with irrational alpha in (0,1).
pub fn construct_irrational(alpha: &IntervalReal, n: u64) -> Result<StagedSet> {
    let sandwich = IrrationalSandwich::new(alpha.clone(), n);
    // Probe stage 1 so bad inputs fail eagerly.
    sandwich.detail(1)?;
    Ok(sandwich.staged())
}

// ----------------------------------------------------------------------
// Sumset bound instances
// ----------------------------------------------------------------------

/// An instance of the sumset bound: `S = (q*N + [0, t-1]) ∪ V` with
/// `n*t < q` and non-empty `V ⊆ q*N + t`.
#[derive(Clone, Debug)]
pub struct SumsetBoundInstance {
    pub n: u64,
    pub t: u64,
    pub q: u64,
    pub v: EventuallyPeriodicSet,
    pub s: EventuallyPeriodicSet,
}

impl SumsetBoundInstance {
    pub fn new(n: u64, t: u64, q: u64, v: EventuallyPeriodicSet) -> Result<Self> {
        if n == 0 || t == 0 || q == 0 {
            return Err(Error::Precondition("n, t, q must be positive".into()));
        }
        if n * t >= q {
            return Err(Error::Precondition(format!("need n*t < q, got {n}*{t} >= {q}")));
        }
        if v.is_empty() {
            return Err(Error::Precondition("V must be non-empty".into()));
        }
        let carrier = EventuallyPeriodicSet::arithmetic_progression(q, t);
        if !v.is_subset_of(&carrier) {
            return Err(Error::Precondition(format!("V = ({v}) is not a subset of {q}N+{t}")));
        }
        let s = block_progression(q, t).union(&v);
        Ok(SumsetBoundInstance { n, t, q, v, s })
    }
}

/// Exact values of the density chain for one `k`.
#[derive(Clone, Debug)]
pub struct SumsetBoundReport {
    pub k: u64,
    /// `k*t/q`
    pub chain_lower: Rational,
    pub lower_ks: Rational,
    pub upper_ks: Rational,
    pub upper_kv: Rational,
    /// `(k*t+1)/q`
    pub chain_upper: Rational,
}

/// Computes `kS` and `kV` exactly and asserts
/// `kt/q <= b_*(kS) <= b^*(kS) = kt/q + b^*(kV) <= (kt+1)/q`.
pub fn verify_sumset_bound(inst: &SumsetBoundInstance, k: u64) -> Result<SumsetBoundReport> {
    if k == 0 || k > inst.n {
        return Err(Error::Precondition(format!("k must satisfy 1 <= k <= n = {}", inst.n)));
    }
    let ks = inst.s.k_fold_sumset(k as u32)?;
    let kv = inst.v.k_fold_sumset(k as u32)?;
    let report = SumsetBoundReport {
        k,
        chain_lower: ratio_u64(k * inst.t, inst.q),
        lower_ks: buck_upper(&ks),
        upper_ks: buck_upper(&ks),
        upper_kv: buck_upper(&kv),
        chain_upper: ratio_u64(k * inst.t + 1, inst.q),
    };
    assert!(
        report.chain_lower <= report.lower_ks,
        "chain failed at kt/q <= b_*(kS): {report:?}"
    );
    assert!(report.lower_ks <= report.upper_ks);
    assert!(
        report.upper_ks == &report.chain_lower + &report.upper_kv,
        "middle equality b^*(kS) = kt/q + b^*(kV) failed: {report:?}"
    );
    assert!(
        report.upper_ks <= report.chain_upper,
        "chain failed at b^*(kS) <= (kt+1)/q: {report:?}"
    );
    Ok(report)
}

// ----------------------------------------------------------------------
// Translate sumsets A + B
// ----------------------------------------------------------------------

/// Result of the translate construction.
pub enum TranslateResult {
    /// Exact sets: rational alpha or a trivial endpoint.
    Exact {
        a: EventuallyPeriodicSet,
        a_plus_b: EventuallyPeriodicSet,
        density: Rational,
    },
    /// Staged sandwich on A + B for irrational alpha.
    Staged(StagedSet),
}

pub struct TranslateConstruction {
    /// Original B, sorted.
    pub b: Vec<u64>,
    /// min B; the construction normalizes B to start at 0.
    pub shift: u64,
    /// max of the normalized B.
    pub y: u64,
    /// `(k, h)` with `h/k < alpha < (h+1)/k` and `h >= 2y+1`; `None` for the
    /// trivial endpoints and singleton-B fallback.
    pub params: Option<(u64, u64)>,
    pub result: TranslateResult,
}

/// Builds A with `b(A + B) = alpha` for a non-empty finite B.
///
/// For rational alpha the sets are exact and the decomposition
/// `A + B = (k*N + [0, h-1]) ∪ (k*C + h)` (translated by min B) is verified
/// as a set equality; for irrational alpha the result is a staged sandwich
/// on A + B whose stage intervals pin alpha.
pub fn construct_translate(alpha: &Alpha, b_elements: &[u64]) -> Result<TranslateConstruction> {
    if b_elements.is_empty() {
        return Err(Error::Precondition("B must be non-empty".into()));
    }
    let mut b: Vec<u64> = b_elements.to_vec();
    b.sort_unstable();
    b.dedup();
    let shift = b[0];
    let normalized: Vec<u64> = b.iter().map(|&e| e - shift).collect();
    let y = *normalized.last().expect("non-empty");
    let b_set = EventuallyPeriodicSet::from_finite(&b);

    // Range check and endpoint handling.
    match alpha {
        Alpha::Rational(r) => {
            if r.is_negative() || r > &Rational::one() {
                return Err(Error::Precondition(format!("alpha = {r} outside [0,1]")));
            }
            if r.is_zero() {
                let a = EventuallyPeriodicSet::empty();
                let ab = a.sumset(&b_set)?;
                return Ok(TranslateConstruction {
                    b,
                    shift,
                    y,
                    params: None,
                    result: TranslateResult::Exact {
                        a,
                        a_plus_b: ab,
                        density: Rational::zero(),
                    },
                });
            }
            if r.is_one() {
                let a = EventuallyPeriodicSet::naturals();
                let ab = a.sumset(&b_set)?;
                let density = buck_upper(&ab);
                assert!(density.is_one());
                return Ok(TranslateConstruction {
                    b,
                    shift,
                    y,
                    params: None,
                    result: TranslateResult::Exact { a, a_plus_b: ab, density },
                });
            }
        }
        Alpha::Irrational(_) => {}
    }

    // Singleton B: A + B is a translate of A, so the base construction with
    // n = 1 already does the job.
    if y == 0 {
        return match alpha {
            Alpha::Rational(r) => {
                let (num, den) = small_fraction(r)?;
                let a = construct_rational(num, den, 1)?;
                let ab = a.sumset(&b_set)?;
                let density = buck_upper(&ab);
                assert_eq!(density, *r);
                Ok(TranslateConstruction {
                    b,
                    shift,
                    y,
                    params: None,
                    result: TranslateResult::Exact { a, a_plus_b: ab, density },
                })
            }
            Alpha::Irrational(x) => {
                let sandwich = IrrationalSandwich::new(x.clone(), 1);
                sandwich.detail(1)?;
                let translate = shift;
                let staged = StagedSet::new(move |i| {
                    let d = sandwich.detail(i)?;
                    Ok(Stage {
                        inner: d.inner.affine(1, translate),
                        outer: d.outer.affine(1, translate),
                        error: d.error,
                    })
                });
                Ok(TranslateConstruction {
                    b,
                    shift,
                    y,
                    params: None,
                    result: TranslateResult::Staged(staged),
                })
            }
        };
    }

    // Pick the smallest k with floor(k*alpha) >= 2y+1 and k*alpha not an
    // integer; h = floor(k*alpha). Then h/k < alpha < (h+1)/k.
    let (k, h) = choose_translate_parameters(alpha, y)?;
    let block_a = block_progression(k, h - y); // k*N + [0, h-y-1]
    let block_ab = block_progression(k, h); // k*N + [0, h-1]

    match alpha {
        Alpha::Rational(r) => {
            // C has density k*alpha - h = (k*p - h*q') / q'.
            let frac = r * Rational::from(BigInt::from(k)) - Rational::from(BigInt::from(h));
            let (num, den) = small_fraction(&frac)?;
            let c = construct_rational(num, den, 1)?;
            let a = block_a.union(&c.affine(k, h - y)).affine(1, shift);
            let a_plus_b = a.sumset(&b_set)?;
            let expected = block_ab.union(&c.affine(k, h)).affine(1, 2 * shift);
            assert_eq!(
                a_plus_b, expected,
                "A+B decomposition equality failed for alpha = {r}"
            );
            let density = buck_upper(&a_plus_b);
            assert_eq!(&density, r, "b(A+B) must equal alpha exactly");
            Ok(TranslateConstruction {
                b,
                shift,
                y,
                params: Some((k, h)),
                result: TranslateResult::Exact { a, a_plus_b, density },
            })
        }
        Alpha::Irrational(x) => {
            // C is staged with density k*alpha - h.
            let frac = x.affine(
                Rational::from(BigInt::from(k)),
                Rational::from(-BigInt::from(h)),
            )?;
            let sandwich = IrrationalSandwich::new(frac, 1);
            sandwich.detail(1)?;
            let b_fin = b_set.clone();
            let staged = StagedSet::new(move |i| {
                let d = sandwich.detail(i)?;
                let mut stage_sets = Vec::with_capacity(2);
                for c_side in [&d.inner, &d.outer] {
                    let a_side = block_a.union(&c_side.affine(k, h - y)).affine(1, shift);
                    let ab = a_side.sumset(&b_fin)?;
                    let expected = block_ab.union(&c_side.affine(k, h)).affine(1, 2 * shift);
                    assert_eq!(ab, expected, "staged A+B decomposition equality failed");
                    stage_sets.push(ab);
                }
                let outer = stage_sets.pop().expect("two sides");
                let inner = stage_sets.pop().expect("two sides");
                Ok(Stage {
                    inner,
                    outer,
                    error: &d.error / Rational::from(BigInt::from(k)),
                })
            });
            Ok(TranslateConstruction {
                b,
                shift,
                y,
                params: Some((k, h)),
                result: TranslateResult::Staged(staged),
            })
        }
    }
}

/// Writes a rational in (0,1] as (numerator, denominator) u64 pair.
fn small_fraction(r: &Rational) -> Result<(u64, u64)> {
    let num = u64::try_from(r.numer())
        .map_err(|_| Error::BudgetExceeded(format!("numerator of {r} does not fit u64")))?;
    let den = u64::try_from(r.denom())
        .map_err(|_| Error::BudgetExceeded(format!("denominator of {r} does not fit u64")))?;
    Ok((num, den))
}

fn choose_translate_parameters(alpha: &Alpha, y: u64) -> Result<(u64, u64)> {
    let target = 2 * y + 1;
    match alpha {
        Alpha::Rational(r) => {
            let mut k = 1u64;
            loop {
                let scaled = r * Rational::from(BigInt::from(k));
                if !scaled.is_integer() {
                    let h_big = scaled.floor().to_integer();
                    if h_big >= BigInt::from(target) {
                        let h = u64::try_from(&h_big).map_err(|_| {
                            Error::BudgetExceeded("translate parameter h does not fit u64".into())
                        })?;
                        return Ok((k, h));
                    }
                }
                k += 1;
                if k > 1_000_000 {
                    return Err(Error::BudgetExceeded(
                        "no translate parameter k found below 10^6".into(),
                    ));
                }
            }
        }
        Alpha::Irrational(x) => {
            let mut k = 1u64;
            loop {
                let floor = exact_floor_scaled(x, &BigInt::from(k))?;
                if floor >= BigInt::from(target) {
                    let h = u64::try_from(&floor).map_err(|_| {
                        Error::BudgetExceeded("translate parameter h does not fit u64".into())
                    })?;
                    return Ok((k, h));
                }
                k += 1;
                if k > 1_000_000 {
                    return Err(Error::BudgetExceeded(
                        "no translate parameter k found below 10^6".into(),
                    ));
                }
            }
        }
    }
}

// ----------------------------------------------------------------------
// Sums of two squares, Lagrange decompositions, additive basis
// ----------------------------------------------------------------------

/// Membership bitmap of `{x^2 + y^2}` on `[0, limit]`.
pub fn two_squares_sieve(limit: u64) -> Vec<bool> {
    let mut hits = vec![false; limit as usize + 1];
    let mut x = 0u64;
    while x * x <= limit {
        let mut y = x;
        loop {
            let s = x * x + y * y;
            if s > limit {
                break;
            }
            hits[s as usize] = true;
            y += 1;
        }
        x += 1;
    }
    hits
}

/// Lexicographically smallest non-decreasing `(y1, y2, y3, y4)` with
/// `y1^2 + y2^2 + y3^2 + y4^2 = h`.
pub fn four_squares(h: u64) -> [u64; 4] {
    let mut y1 = 0u64;
    while 4 * y1 * y1 <= h {
        let mut y2 = y1;
        while y1 * y1 + 3 * y2 * y2 <= h {
            let mut y3 = y2;
            while y1 * y1 + y2 * y2 + 2 * y3 * y3 <= h {
                let rem = h - y1 * y1 - y2 * y2 - y3 * y3;
                let y4 = isqrt(rem);
                if y4 * y4 == rem && y4 >= y3 {
                    return [y1, y2, y3, y4];
                }
                y3 += 1;
            }
            y2 += 1;
        }
        y1 += 1;
    }
    unreachable!("every non-negative integer is a sum of four squares")
}

/// Certificate for the density carried by the Y part of a basis.
pub enum BasisDensity {
    Exact(Rational),
    /// Stage index and the exact sandwich interval at that stage.
    Interval { stage: u32, lo: Rational, hi: Rational },
}

/// Verification report for the additive basis `A = Q ∪ Y`.
pub struct BasisReport {
    pub zero_in_a: bool,
    pub gcd_of_prefix: u64,
    /// `2A ⊇ [0, limit]`, checked by sieve and convolution.
    pub doubling_limit: u64,
    pub doubling_holds: bool,
    pub y_density: BasisDensity,
    /// Cover bounds for Q along a divisibility chain of moduli.
    pub q_cover_bounds: Vec<(u64, Rational)>,
}

impl BasisReport {
    pub fn pass(&self) -> bool {
        self.zero_in_a && self.gcd_of_prefix == 1 && self.doubling_holds
    }
}

/// Builds `A = Q ∪ Y` with Y carrying the prescribed density, and verifies
/// `0 ∈ A`, `gcd(A ∩ [0,100]) = 1`, and `2A ⊇ [0, limit]`. The cover bounds
/// are computed along the default chain `4 | 8 | 72 | 5544`.
pub fn construct_basis(alpha: &Alpha, stage: u32, limit: u64) -> Result<BasisReport> {
    let y_density = match alpha {
        Alpha::Rational(r) => {
            if r.is_negative() || r > &Rational::one() {
                return Err(Error::Precondition(format!("alpha = {r} outside [0,1]")));
            }
            BasisDensity::Exact(r.clone())
        }
        Alpha::Irrational(x) => {
            let staged = construct_irrational(x, 1)?;
            let (lo, hi) = crate::density::staged_density_interval(&staged, stage, 1)?;
            BasisDensity::Interval { stage, lo, hi }
        }
    };

    // Members of A up to the limit. Q alone already gives 2Q = N, so the
    // doubling check does not depend on which Y representative is used; the
    // Y members below the limit are included for the record.
    let sieve = two_squares_sieve(limit);
    let mut a_bits = crate::conv::Bits::new(limit as usize + 1);
    for (i, &hit) in sieve.iter().enumerate() {
        if hit {
            a_bits.set(i);
        }
    }
    match alpha {
        Alpha::Rational(r) if !r.is_zero() => {
            let (num, den) = small_fraction(r)?;
            let y = construct_rational(num, den, 1)?;
            for m in y.enumerate(limit) {
                a_bits.set(m as usize);
            }
        }
        _ => {}
    }

    let zero_in_a = a_bits.get(0);
    let mut gcd_of_prefix = 0u64;
    for m in 0..=limit.min(100) {
        if a_bits.get(m as usize) {
            gcd_of_prefix = gcd_of_prefix.gcd(&m);
        }
    }

    let doubled = convolve_bool(&a_bits, &a_bits, limit as usize + 1);
    let doubling_holds = (0..=limit).all(|n| doubled.get(n as usize));

    let chain = [4u64, 8, 72, 5544];
    let q_cover_bounds: Vec<(u64, Rational)> = chain
        .iter()
        .map(|&m| {
            let rs = crate::density::two_squares_residues(m);
            (m, ratio_u64(rs.len() as u64, m))
        })
        .collect();

    Ok(BasisReport {
        zero_in_a,
        gcd_of_prefix,
        doubling_limit: limit,
        doubling_holds,
        y_density,
        q_cover_bounds,
    })
}

// ----------------------------------------------------------------------
// The non-domain counterexample: V = {n! + n}, A = {x^2 + y^2 : x,y in V}
// ----------------------------------------------------------------------

/// Witness that the residue class `k*N + h` meets `2A`.
#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub k: u64,
    pub h: u64,
    /// Lagrange decomposition of h.
    pub y: [u64; 4],
    /// `n_i = (h+1)*k + y_i`; the witness is `sum (n_i! + n_i)^2 ∈ 2A`.
    pub n: [u64; 4],
    /// `sum (n_i! + n_i)^2 mod k`, computed purely modularly.
    pub residue: u64,
    pub pass: bool,
}

/// Verifies the witness congruence `sum (n_i! + n_i)^2 = h (mod k)` entirely
/// in modular arithmetic (no big factorials): `n_i >= k` makes `n_i! = 0`
/// mod k.
pub fn counterexample_witness(k: u64, h: u64) -> Result<WitnessReport> {
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    if h >= k {
        return Err(Error::Precondition(format!("h = {h} must lie in [0, {k})")));
    }
    let y = four_squares(h);
    let mut n = [0u64; 4];
    for (ni, &yi) in n.iter_mut().zip(y.iter()) {
        *ni = (h + 1) * k + yi;
    }
    let residue = n
        .iter()
        .map(|&ni| {
            let x_mod = (factorial_mod(ni, k) + ni % k) % k;
            x_mod * x_mod % k
        })
        .fold(0u64, |acc, sq| (acc + sq) % k);
    Ok(WitnessReport {
        k,
        h,
        y,
        n,
        residue,
        pass: residue == h % k,
    })
}

fn factorial_mod(n: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    // n >= m forces a factor of m into n!.
    if n >= m {
        return 0;
    }
    let mut acc = 1u64;
    for i in 2..=n {
        acc = acc * (i % m) % m;
    }
    acc
}

/// Counting bound showing `2A` contains no arithmetic progression.
#[derive(Clone, Debug)]
pub struct SparsityReport {
    pub m: u64,
    pub sqrt_m: u64,
    /// `|V ∩ [1, sqrt(m)]|` with `V = {n! + n}`.
    pub v_count: u64,
    /// Largest n with `n! <= sqrt(m)`.
    pub n_max: u64,
    /// `v_count^4`, an upper bound for `|2A ∩ [1, m]|`.
    pub count_bound: BigInt,
    /// `v_count^4 / m`.
    pub ratio_bound: Rational,
}

/// Scans `n` with `n! + n <= sqrt(m)` and returns the fourth-power bound on
/// `|2A ∩ [1, m]|` together with its ratio to m.
pub fn counterexample_sparsity(m: u64) -> Result<SparsityReport> {
    if m == 0 {
        return Err(Error::Precondition("m must be positive".into()));
    }
    let sqrt_m = isqrt(m);
    let sqrt_big = BigInt::from(sqrt_m);
    let mut v_count = 0u64;
    let mut n_max = 0u64;
    let mut n = 0u64;
    let mut fact = BigInt::one();
    loop {
        if n > 1 {
            fact *= n;
        }
        if fact > sqrt_big {
            break;
        }
        n_max = n;
        let value = &fact + BigInt::from(n);
        if value >= BigInt::one() && value <= sqrt_big {
            v_count += 1;
        }
        n += 1;
    }
    // Every counted n has n! <= sqrt(m), so the count cannot exceed
    // n_max + 1; that keeps the fourth-power bound o(m).
    assert!(v_count <= n_max + 1);
    let count_bound = BigInt::from(v_count).pow(4);
    let ratio_bound = Rational::new(count_bound.clone(), BigInt::from(m));
    Ok(SparsityReport {
        m,
        sqrt_m,
        v_count,
        n_max,
        count_bound,
        ratio_bound,
    })
}

/// True when the counting bound rules out every progression of step at most
/// `k_max` inside `2A ∩ [1, m]`: such a progression has at least
/// `floor(m/k) - 1` members there, which must exceed the count bound.
pub fn sparsity_excludes_progressions(report: &SparsityReport, k_max: u64) -> bool {
    assert!(k_max >= 1);
    let min_ap_members = BigInt::from(report.m / k_max) - BigInt::one();
    report.count_bound < min_ap_members
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::buck_lower;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rational_case_examples() {
        // a=1, b=2, n=2: {0} union (4N+1); buck(2A) = 1/2.
        let a = construct_rational(1, 2, 2).unwrap();
        assert_eq!(a, EventuallyPeriodicSet::make(4, &[1], 4, &[0, 1]).unwrap());
        let two_a = a.k_fold_sumset(2).unwrap();
        assert_eq!(buck_upper(&two_a), rat(1, 2));

        // a=0: the singleton {0}, density 0 at every k.
        let z = construct_rational(0, 1, 3).unwrap();
        assert_eq!(z, EventuallyPeriodicSet::from_finite(&[0]));
        assert_eq!(buck_upper(&z.k_fold_sumset(3).unwrap()), rat(0, 1));

        // a=3, b=4, n=2, k=2: density 6/8 = 3/4.
        let a = construct_rational(3, 4, 2).unwrap();
        assert_eq!(buck_upper(&a.k_fold_sumset(2).unwrap()), rat(3, 4));

        assert!(construct_rational(5, 4, 1).is_err());
    }

    #[test]
    fn rational_case_kfold_is_displayed_set() {
        // kA = {0} union (nb*N + [1, ka]) for k <= n.
        for (a, b, n) in [(1u64, 2u64, 2u64), (2, 5, 3), (3, 3, 2)] {
            let set = construct_rational(a, b, n).unwrap();
            for k in 1..=n {
                let ka = set.k_fold_sumset(k as u32).unwrap();
                let mut expected = EventuallyPeriodicSet::from_finite(&[0]);
                for j in 1..=(k * a) {
                    expected = expected
                        .union(&EventuallyPeriodicSet::arithmetic_progression(n * b, j));
                }
                assert_eq!(ka, expected, "a={a} b={b} n={n} k={k}");
                assert_eq!(buck_upper(&ka), ratio_u64(k * a, n * b));
            }
        }
    }

    #[test]
    fn sandwich_stage_one_shape() {
        // Stage 1: X_1 = q_1*N + [0, (n-1)! beta_1 - 1], Y_1 = q_1*N + (n-1)! beta_1.
        let sandwich = IrrationalSandwich::new(IntervalReal::golden_conjugate(), 2);
        let d = sandwich.detail(1).unwrap();
        assert_eq!((d.q, d.beta), (7, 2));
        assert_eq!(d.x, block_progression(7, 2));
        assert_eq!(d.y, EventuallyPeriodicSet::arithmetic_progression(7, 2));
        assert_eq!(d.inner, d.x);
        assert_eq!(d.outer, d.x.union(&d.y));
    }

    #[test]
    fn sandwich_y_density_halves() {
        // b(k Y_i) = 1/(q_1...q_i) <= 2^-i.
        let sandwich = IrrationalSandwich::new(IntervalReal::golden_conjugate(), 2);
        let mut product = 1u64;
        for i in 1..=3u32 {
            let d = sandwich.detail(i).unwrap();
            product *= d.q;
            for k in 1..=2u32 {
                let ky = d.y.k_fold_sumset(k).unwrap();
                assert_eq!(buck_upper(&ky), ratio_u64(1, product));
            }
            assert!(ratio_u64(1, product) <= Rational::new(BigInt::one(), BigInt::one() << i));
        }
    }

    #[test]
    fn sandwich_intervals_contain_k_alpha_over_n() {
        let alpha = IntervalReal::golden_conjugate();
        let staged = construct_irrational(&alpha, 2).unwrap();
        let enc = alpha
            .refine_until_width_below(&rat(1, 10_000_000), 256)
            .unwrap();
        for k in 1..=2u32 {
            let (lo, hi) = crate::density::staged_density_interval(&staged, 4, k).unwrap();
            let scale = rat(k as i64, 2);
            let target_lo = &enc.lo * &scale;
            let target_hi = &enc.hi * &scale;
            assert!(lo <= target_lo, "k={k}: {lo} > {target_lo}");
            assert!(target_hi <= hi, "k={k}: {target_hi} > {hi}");
        }
    }

    #[test]
    fn sumset_bound_examples() {
        // n=1, t=1, q=3, V = 3N+1: chain 1/3 <= 2/3 = 1/3 + 1/3 <= 2/3.
        let v = EventuallyPeriodicSet::arithmetic_progression(3, 1);
        let inst = SumsetBoundInstance::new(1, 1, 3, v).unwrap();
        let r = verify_sumset_bound(&inst, 1).unwrap();
        assert_eq!(r.upper_ks, rat(2, 3));
        assert_eq!(r.upper_kv, rat(1, 3));

        // n=2, t=1, q=5, V={6}: kV finite, so b(kS) = k/5.
        let v = EventuallyPeriodicSet::from_finite(&[6]);
        let inst = SumsetBoundInstance::new(2, 1, 5, v).unwrap();
        for k in 1..=2u64 {
            let r = verify_sumset_bound(&inst, k).unwrap();
            assert_eq!(r.upper_ks, ratio_u64(k, 5));
            assert_eq!(r.upper_kv, rat(0, 1));
        }

        // n=1, t=2, q=5, V = 10N+7: chain 2/5 <= 1/2 = 2/5 + 1/10 <= 3/5.
        let v = EventuallyPeriodicSet::arithmetic_progression(10, 7);
        let inst = SumsetBoundInstance::new(1, 2, 5, v).unwrap();
        let r = verify_sumset_bound(&inst, 1).unwrap();
        assert_eq!(r.upper_ks, rat(1, 2));
        assert_eq!(r.upper_kv, rat(1, 10));
    }

    #[test]
    fn sumset_bound_rejects_bad_instances() {
        let v = EventuallyPeriodicSet::arithmetic_progression(3, 1);
        assert!(SumsetBoundInstance::new(2, 2, 3, v.clone()).is_err()); // nt >= q
        assert!(SumsetBoundInstance::new(1, 1, 3, EventuallyPeriodicSet::empty()).is_err());
        // V not inside qN + t.
        let bad_v = EventuallyPeriodicSet::arithmetic_progression(3, 2);
        assert!(SumsetBoundInstance::new(1, 1, 3, bad_v).is_err());
        let inst = SumsetBoundInstance::new(
            2,
            1,
            5,
            EventuallyPeriodicSet::from_finite(&[6]),
        )
        .unwrap();
        assert!(verify_sumset_bound(&inst, 3).is_err()); // k > n
    }

    #[test]
    fn translate_rational_example() {
        // alpha = 1/3, B = {0,1}: k=10, h=3, C = {0} union 3N+1, b(A+B) = 1/3.
        let t = construct_translate(&Alpha::Rational(rat(1, 3)), &[0, 1]).unwrap();
        assert_eq!(t.params, Some((10, 3)));
        match &t.result {
            TranslateResult::Exact { a_plus_b, density, .. } => {
                assert_eq!(density, &rat(1, 3));
                assert_eq!(buck_lower(a_plus_b), rat(1, 3));
            }
            TranslateResult::Staged(_) => panic!("expected exact result"),
        }
    }

    #[test]
    fn translate_endpoints_and_singleton() {
        let t = construct_translate(&Alpha::Rational(rat(1, 1)), &[0, 5]).unwrap();
        match &t.result {
            TranslateResult::Exact { a, a_plus_b, density } => {
                assert_eq!(a, &EventuallyPeriodicSet::naturals());
                assert_eq!(a_plus_b, &EventuallyPeriodicSet::naturals());
                assert!(density.is_one());
            }
            _ => panic!("expected exact"),
        }
        let t = construct_translate(&Alpha::Rational(rat(0, 1)), &[2, 7]).unwrap();
        match &t.result {
            TranslateResult::Exact { a_plus_b, density, .. } => {
                assert!(a_plus_b.is_empty());
                assert!(density.is_zero());
            }
            _ => panic!("expected exact"),
        }
        // Singleton B falls back to the base construction plus a shift.
        let t = construct_translate(&Alpha::Rational(rat(2, 5)), &[3]).unwrap();
        match &t.result {
            TranslateResult::Exact { a_plus_b, density, .. } => {
                assert_eq!(density, &rat(2, 5));
                assert!(!a_plus_b.member(0)); // shifted by 3
            }
            _ => panic!("expected exact"),
        }
    }

    #[test]
    fn translate_staged_interval_pins_alpha() {
        let alpha = IntervalReal::golden_conjugate();
        let t = construct_translate(&Alpha::Irrational(alpha.clone()), &[0, 1]).unwrap();
        let staged = match &t.result {
            TranslateResult::Staged(s) => s,
            _ => panic!("expected staged"),
        };
        let (lo, hi) = crate::density::staged_density_interval(staged, 4, 1).unwrap();
        let enc = alpha.refine_until_width_below(&rat(1, 1_000_000), 256).unwrap();
        assert!(lo <= enc.lo && enc.hi <= hi, "[{lo}, {hi}] must contain alpha");
        assert!(&hi - &lo < rat(5, 100), "stage-4 interval must be narrower than 0.05");
    }

    #[test]
    fn two_squares_examples() {
        let sieve = two_squares_sieve(10);
        let members: Vec<u64> = (0..=10).filter(|&n| sieve[n as usize]).collect();
        assert_eq!(members, vec![0, 1, 2, 4, 5, 8, 9, 10]);
        assert!(!two_squares_sieve(100)[3]);

        // 2Q covers [0, 100].
        let sieve = two_squares_sieve(100);
        let mut bits = crate::conv::Bits::new(101);
        for (i, &s) in sieve.iter().enumerate() {
            if s {
                bits.set(i);
            }
        }
        let doubled = convolve_bool(&bits, &bits, 101);
        assert!((0..=100).all(|n| doubled.get(n)));
    }

    #[test]
    fn four_squares_examples() {
        assert_eq!(four_squares(0), [0, 0, 0, 0]);
        assert_eq!(four_squares(7), [1, 1, 1, 2]);
        assert_eq!(four_squares(15), [1, 1, 2, 3]);
        for h in 0..60u64 {
            let y = four_squares(h);
            assert_eq!(y.iter().map(|&v| v * v).sum::<u64>(), h);
            assert!(y.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn basis_report_rational() {
        let report = construct_basis(&Alpha::Rational(rat(1, 2)), 1, 10_000).unwrap();
        assert!(report.pass());
        assert!(report.zero_in_a);
        assert_eq!(report.gcd_of_prefix, 1);
        assert!(report.doubling_holds);
        assert_eq!(report.q_cover_bounds[1], (8, rat(5, 8)));
        // Bounds are non-increasing along the divisibility chain.
        for w in report.q_cover_bounds.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn basis_report_zero_density_is_the_sieve_alone() {
        // alpha = 0: A is the two-squares set itself; the cover bounds are
        // the only density evidence and the doubling still holds.
        let report = construct_basis(&Alpha::Rational(rat(0, 1)), 1, 2_000).unwrap();
        assert!(report.pass());
        match &report.y_density {
            BasisDensity::Exact(d) => assert!(d.is_zero()),
            BasisDensity::Interval { .. } => panic!("rational alpha"),
        }
        assert_eq!(report.q_cover_bounds[1], (8, rat(5, 8)));
    }

    #[test]
    fn sandwich_errors_strictly_decrease() {
        // error_{i+1} <= 2^(1-i) < error_i since the tail bound is positive
        // and every modulus is at least 2.
        let sandwich = IrrationalSandwich::new(IntervalReal::golden_conjugate(), 2);
        let mut previous: Option<Rational> = None;
        for i in 1..=4u32 {
            let d = sandwich.detail(i).unwrap();
            assert!(d.error.is_positive());
            if let Some(prev) = &previous {
                assert!(&d.error < prev, "stage {i}: error did not shrink");
            }
            previous = Some(d.error);
        }
    }

    #[test]
    fn witness_examples() {
        // k=5, h=3: y = (0,1,1,1), n_i = 20 + y_i.
        let w = counterexample_witness(5, 3).unwrap();
        assert_eq!(w.y, [0, 1, 1, 1]);
        assert_eq!(w.n, [20, 21, 21, 21]);
        assert!(w.pass);

        let w = counterexample_witness(1, 0).unwrap();
        assert!(w.pass);

        for k in 1..=20u64 {
            for h in 0..k {
                assert!(counterexample_witness(k, h).unwrap().pass, "k={k} h={h}");
            }
        }
    }

    #[test]
    fn sparsity_examples() {
        // m = 10^12: n!+n <= 10^6 holds exactly for n <= 9.
        let r = counterexample_sparsity(1_000_000_000_000).unwrap();
        assert_eq!(r.sqrt_m, 1_000_000);
        assert_eq!(r.v_count, 10);
        assert_eq!(r.n_max, 9);
        assert_eq!(r.count_bound, BigInt::from(10_000));
        assert!(r.ratio_bound <= rat(1, 10_000_000)); // 1e-8 <= 1e-7
        assert!(sparsity_excludes_progressions(&r, 20));

        // m = 100: V ∩ [1,10] = {1, 2, 4, 9}.
        let r = counterexample_sparsity(100).unwrap();
        assert_eq!(r.v_count, 4);

        // Ratio bound decreases along growing m.
        let ratios: Vec<Rational> = [1_000_000u64, 1_000_000_000, 1_000_000_000_000]
            .iter()
            .map(|&m| counterexample_sparsity(m).unwrap().ratio_bound)
            .collect();
        assert!(ratios[1] <= ratios[0] && ratios[2] <= ratios[1]);
    }
}
