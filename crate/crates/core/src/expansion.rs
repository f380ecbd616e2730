//! Positional representation of an irrational with divisibility and
//! coprimality constraints on the digits.
//!
//! For an irrational `alpha` in (0,1) and a fixed `n`, the expansion picks
//! moduli `q_i` and digits `beta_i` such that
//!
//! * `gcd(q_i, n * q_1 ... q_{i-1}) = 1`,
//! * `floor(q_i * alpha_{i-1})` is a positive multiple of `n!`, and
//! * `alpha = sum_i n! * beta_i / (q_1 ... q_i)` with remainders
//!   `alpha_i = q_i * alpha_{i-1} - n! * beta_i` staying in (0,1),
//!
//! so partial sums approach `alpha` strictly from below with error less than
//! `2^-i`. The smallest admissible `q_i` is always chosen: the expansion is
//! deterministic and the modulus products stay as small as the rule allows.
//!
//! Termination of the modulus search is guaranteed for irrational inputs;
//! rational inputs surface as refinement-budget errors instead of loops.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{factorial, Rational};
use crate::interval::{Enclosure, IntervalReal, DEFAULT_REFINEMENT_BUDGET};
use crate::{Error, Result};

/// Default cap on the running product `q_1 ... q_i`.
pub const DEFAULT_MODULUS_CAP: u64 = 1_000_000_000;

/// Cap on the linear search for a single `q_i`.
const Q_SEARCH_CAP: u64 = 100_000_000;

/// One step of the expansion.
#[derive(Clone, Debug)]
pub struct ExpansionStep {
    /// 1-based step index.
    pub index: u32,
    pub q: u64,
    pub beta: u64,
    /// Certified enclosure of the remainder `alpha_i`, strictly inside (0,1).
    pub alpha_enclosure: Enclosure,
}

/// A computed expansion prefix.
#[derive(Debug)]
pub struct Expansion {
    pub n: u64,
    pub steps: Vec<ExpansionStep>,
    /// True when the modulus cap stopped the expansion before the requested
    /// depth; `steps` then holds the valid prefix.
    pub capped: bool,
    alpha: IntervalReal,
}

impl Expansion {
    /// The expanded number.
    pub fn alpha(&self) -> &IntervalReal {
        &self.alpha
    }

    /// Product `q_1 ... q_i` (i = 0 gives 1).
    pub fn modulus_product(&self, i: usize) -> BigInt {
        self.steps[..i]
            .iter()
            .fold(BigInt::one(), |acc, s| acc * BigInt::from(s.q))
    }

    /// Exact partial sum of the first `i` terms.
    pub fn partial_sum(&self, i: usize) -> Rational {
        assert!(i <= self.steps.len(), "partial sum index out of range");
        let nf = factorial(self.n);
        let mut acc = Rational::zero();
        let mut product = BigInt::one();
        for step in &self.steps[..i] {
            product *= BigInt::from(step.q);
            acc += Rational::new(&nf * BigInt::from(step.beta), product.clone());
        }
        acc
    }
}

/// Smallest `q >= 2` with `gcd(q, coprime_to) = 1` and `floor(q*x)` a
/// positive multiple of `n!`. Terminates for irrational `x` in (0,1);
/// a rational input shows up as a refinement-budget error.
pub fn find_q(x: &IntervalReal, coprime_to: &BigInt, n: u64) -> Result<u64> {
    let nf = factorial(n);
    let mut q = 2u64;
    while q <= Q_SEARCH_CAP {
        if coprime_to.gcd(&BigInt::from(q)).is_one() {
            let (floor, _) = certified_floor(x, q)?;
            if floor.is_positive() && (&floor % &nf).is_zero() {
                return Ok(q);
            }
        }
        q += 1;
    }
    Err(Error::BudgetExceeded(format!(
        "no admissible modulus found with q <= {Q_SEARCH_CAP}"
    )))
}

/// `floor(scale * x)` together with the refined enclosure certifying it:
/// `floor <= scale*lo` and `scale*hi < floor+1`.
fn certified_floor(x: &IntervalReal, scale: u64) -> Result<(BigInt, Enclosure)> {
    let scale_q = Rational::from(BigInt::from(scale));
    for j in 0..DEFAULT_REFINEMENT_BUDGET {
        let e = x.enclosure(j)?;
        let flo = (&e.lo * &scale_q).floor();
        let fhi = (&e.hi * &scale_q).floor();
        if flo == fhi {
            return Ok((flo.to_integer(), e));
        }
    }
    Err(Error::UndecidableAtPrecision {
        budget: DEFAULT_REFINEMENT_BUDGET,
    })
}

/// Expands `alpha` (irrational, in (0,1)) to `depth` steps, subject to the
/// modulus-product cap.
pub fn expand(alpha: &IntervalReal, n: u64, depth: u32) -> Result<Expansion> {
    expand_with_cap(alpha, n, depth, DEFAULT_MODULUS_CAP)
}

pub fn expand_with_cap(alpha: &IntervalReal, n: u64, depth: u32, cap: u64) -> Result<Expansion> {
    assert!(n >= 1, "n must be positive");
    let nf = factorial(n);
    let one = Rational::one();

    // The input must certifiably lie in (0,1).
    refine_into_unit_interval(alpha)?;

    let mut steps: Vec<ExpansionStep> = Vec::new();
    let mut capped = false;
    let mut current = alpha.clone();
    let mut product = BigInt::one();

    for index in 1..=depth {
        let coprime_to = BigInt::from(n) * &product;
        let q = find_q(&current, &coprime_to, n)?;

        let next_product = &product * BigInt::from(q);
        if next_product > BigInt::from(cap) {
            capped = true;
            break;
        }

        let (floor, certificate) = certified_floor(&current, q)?;
        debug_assert!(floor.is_positive() && (&floor % &nf).is_zero());
        let beta_big: BigInt = &floor / &nf;
        let beta = beta_big
            .to_u64()
            .ok_or_else(|| Error::BudgetExceeded("digit exceeds u64".into()))?;

        // q > q*alpha > n! since floor(q*alpha) >= n! and alpha < 1.
        assert!(
            BigInt::from(q) > nf,
            "step {index}: q = {q} does not exceed n! = {nf}"
        );
        // Floor bracketing on the certifying enclosure:
        // n!*beta <= q*lo and q*hi < n!*beta + 1.
        let fq = Rational::from(floor.clone());
        let scale = Rational::from(BigInt::from(q));
        assert!(fq <= &certificate.lo * &scale);
        assert!(&certificate.hi * &scale < &fq + &one);

        // Remainder alpha_i = q * alpha_{i-1} - n! * beta, certified in (0,1)
        // and refined to a usable width for downstream error bounds.
        let offset = Rational::from(-(&nf * BigInt::from(beta)));
        let next = current.affine(scale, offset)?;
        refine_into_unit_interval(&next)?;
        let enclosure = next.refine_until_width_below(
            &Rational::new(BigInt::one(), BigInt::from(1024)),
            DEFAULT_REFINEMENT_BUDGET,
        )?;

        // Self-check against interval blow-up: the recursive enclosure must
        // intersect the one recomputed from scratch off alpha's enclosure,
        // alpha_i = Q_i * (alpha - partial_sum_i).
        let product_i = &next_product;
        let ps: Rational = {
            let mut acc = Rational::zero();
            let mut p = BigInt::one();
            for s in &steps {
                p *= BigInt::from(s.q);
                acc += Rational::new(&nf * BigInt::from(s.beta), p.clone());
            }
            acc + Rational::new(&nf * BigInt::from(beta), product_i.clone())
        };
        // Depth proportional to the modulus product keeps the scratch
        // interval comparable in width to the recursive one.
        let depth_for_check = (product_i.bits() as usize) + 20;
        let base = alpha.enclosure(depth_for_check)?;
        let scratch = Enclosure {
            lo: (&base.lo - &ps) * Rational::from(product_i.clone()),
            hi: (&base.hi - &ps) * Rational::from(product_i.clone()),
        };
        assert!(
            enclosure.intersects(&scratch),
            "step {index}: recursive and from-scratch enclosures of the remainder diverged"
        );

        steps.push(ExpansionStep {
            index,
            q,
            beta,
            alpha_enclosure: enclosure,
        });
        product = next_product;
        current = next;
    }

    Ok(Expansion {
        n,
        steps,
        capped,
        alpha: alpha.clone(),
    })
}

/// Refines until the enclosure is strictly inside (0,1).
fn refine_into_unit_interval(x: &IntervalReal) -> Result<Enclosure> {
    let zero = Rational::zero();
    let one = Rational::one();
    for j in 0..DEFAULT_REFINEMENT_BUDGET {
        let e = x.enclosure(j)?;
        if e.strictly_inside(&zero, &one) {
            return Ok(e);
        }
        // Bail out early if the value is certifiably outside [0,1].
        if e.hi < zero || e.lo > one {
            return Err(Error::Precondition(format!(
                "{x} does not lie in (0,1)"
            )));
        }
    }
    Err(Error::UndecidableAtPrecision {
        budget: DEFAULT_REFINEMENT_BUDGET,
    })
}
