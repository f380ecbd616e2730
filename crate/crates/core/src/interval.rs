//! Refinable interval enclosures of irrational numbers.
//!
//! An [`IntervalReal`] is a demand-driven producer of nested rational
//! enclosures `[lo_j, hi_j]` whose widths converge to zero; each refinement
//! at least halves the width. Values are immutable after construction and
//! refinements are memoized under a single-writer, many-reader lock, so
//! sharing across threads is safe.
//!
//! Irrationality of the represented value is a caller-asserted contract:
//! there is no decision procedure for it here. Operations that would not
//! terminate on a rational input carry a refinement budget and report an
//! "undecidable at precision" error instead of looping.

use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::Rational;
use crate::{Error, Result};

/// Default number of refinement steps granted to a deciding loop before it
/// reports the input as possibly rational.
pub const DEFAULT_REFINEMENT_BUDGET: usize = 4096;

/// A nested rational enclosure `[lo, hi]` of the represented value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enclosure {
    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    /// True when the closed interval lies strictly inside `(a, b)`.
    pub fn strictly_inside(&self, a: &Rational, b: &Rational) -> bool {
        &self.lo > a && &self.hi < b
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn intersects(&self, other: &Enclosure) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

enum Generator {
    /// Bisection enclosure of the square root of a positive rational.
    SqrtBisect { radicand: Rational },
    /// scale * parent + offset with scale > 0.
    Affine {
        parent: IntervalReal,
        scale: Rational,
        offset: Rational,
    },
    /// Finite stream of base-10 digits after `int_part`. Runs dry once the
    /// digits are consumed, which surfaces as a refinement error.
    Digits { int_part: BigInt, digits: Vec<u8> },
}

struct Inner {
    label: String,
    gen: Generator,
    cache: RwLock<Vec<Enclosure>>,
}

/// A real number presented as a refinable stream of nested rational
/// enclosures. Cloning shares the memoized refinement state.
#[derive(Clone)]
pub struct IntervalReal {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for IntervalReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "IntervalReal({})", self.inner.label)
    }
}

impl std::fmt::Display for IntervalReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.inner.label)
    }
}

impl IntervalReal {
    fn from_generator(label: String, gen: Generator) -> Self {
        IntervalReal {
            inner: Arc::new(Inner {
                label,
                gen,
                cache: RwLock::new(Vec::new()),
            }),
        }
    }

    /// Square root of a positive rational. Rejects perfect squares, whose
    /// root would be rational and break the irrationality contract.
    pub fn sqrt_rational(radicand: Rational) -> Result<Self> {
        if !radicand.is_positive() {
            return Err(Error::Precondition(format!(
                "sqrt requires a positive radicand, got {radicand}"
            )));
        }
        let ns = radicand.numer().sqrt();
        let ds = radicand.denom().sqrt();
        if &(&ns * &ns) == radicand.numer() && &(&ds * &ds) == radicand.denom() {
            return Err(Error::Precondition(format!(
                "sqrt({radicand}) is rational ({ns}/{ds}); irrational input required"
            )));
        }
        Ok(Self::from_generator(
            format!("sqrt({radicand})"),
            Generator::SqrtBisect { radicand },
        ))
    }

    /// `scale * self + offset` with `scale > 0`.
    pub fn affine(&self, scale: Rational, offset: Rational) -> Result<Self> {
        if !scale.is_positive() {
            return Err(Error::Precondition(format!(
                "affine scale must be positive, got {scale}"
            )));
        }
        let label = format!("({} * {} + {})", scale, self.inner.label, offset);
        Ok(Self::from_generator(
            label,
            Generator::Affine {
                parent: self.clone(),
                scale,
                offset,
            },
        ))
    }

    /// The golden ratio conjugate `(sqrt(5) - 1) / 2`.
    pub fn golden_conjugate() -> Self {
        let sqrt5 = Self::sqrt_rational(Rational::from(BigInt::from(5)))
            .expect("5 is not a perfect square");
        let v = sqrt5
            .affine(
                Rational::new(BigInt::one(), BigInt::from(2)),
                Rational::new(BigInt::from(-1), BigInt::from(2)),
            )
            .expect("positive scale");
        v.with_label("golden-conjugate")
    }

    /// Same value, friendlier name in reports.
    fn with_label(self, label: &str) -> Self {
        IntervalReal {
            inner: Arc::new(Inner {
                label: label.to_string(),
                gen: Generator::Affine {
                    parent: self,
                    scale: Rational::one(),
                    offset: Rational::zero(),
                },
                cache: RwLock::new(Vec::new()),
            }),
        }
    }

    /// A value given by an integer part and a finite stream of base-10
    /// digits. The stream is finite, so deciding loops may exhaust it; that
    /// is reported rather than looping, since a finite expansion cannot
    /// certify irrationality anyway.
    pub fn from_digits(int_part: BigInt, digits: Vec<u8>) -> Result<Self> {
        if digits.iter().any(|&d| d > 9) {
            return Err(Error::Precondition("digits must be in 0..=9".into()));
        }
        if digits.is_empty() {
            return Err(Error::Precondition("digit stream must be non-empty".into()));
        }
        Ok(Self::from_generator(
            format!("digits({int_part}.<{} digits>)", digits.len()),
            Generator::Digits { int_part, digits },
        ))
    }

    pub fn label(&self) -> &str {
        &self.inner.label
    }

    /// The enclosure after `j` refinement steps, computing and memoizing any
    /// missing prefix. Enclosures are nested and widths at least halve per
    /// step (digit streams shrink by a factor of ten but are finite).
    pub fn enclosure(&self, j: usize) -> Result<Enclosure> {
        {
            let cache = self.inner.cache.read().expect("interval cache poisoned");
            if let Some(e) = cache.get(j) {
                return Ok(e.clone());
            }
        }
        let mut cache = self.inner.cache.write().expect("interval cache poisoned");
        while cache.len() <= j {
            let next = self.produce(cache.len(), cache.last())?;
            if let Some(prev) = cache.last() {
                debug_assert!(
                    prev.lo <= next.lo && next.hi <= prev.hi,
                    "refinement must produce nested enclosures"
                );
            }
            cache.push(next);
        }
        Ok(cache[j].clone())
    }

    fn produce(&self, index: usize, prev: Option<&Enclosure>) -> Result<Enclosure> {
        match &self.inner.gen {
            Generator::SqrtBisect { radicand } => Ok(match prev {
                None => {
                    // Initial bracket: [0, max(1, r)] always contains sqrt(r).
                    let one = Rational::one();
                    let hi = if radicand > &one { radicand.clone() } else { one };
                    Enclosure {
                        lo: Rational::zero(),
                        hi,
                    }
                }
                Some(e) => {
                    let mid = (&e.lo + &e.hi) / Rational::from(BigInt::from(2));
                    if &(&mid * &mid) <= radicand {
                        Enclosure {
                            lo: mid,
                            hi: e.hi.clone(),
                        }
                    } else {
                        Enclosure {
                            lo: e.lo.clone(),
                            hi: mid,
                        }
                    }
                }
            }),
            Generator::Affine {
                parent,
                scale,
                offset,
            } => {
                let e = parent.enclosure(index)?;
                Ok(Enclosure {
                    lo: &e.lo * scale + offset,
                    hi: &e.hi * scale + offset,
                })
            }
            Generator::Digits { int_part, digits } => {
                if index >= digits.len() {
                    return Err(Error::DigitStreamExhausted);
                }
                // Enclosure after j+1 digits: [0.d1..d_{j+1}, same + 10^-(j+1)].
                let k = index + 1;
                let mut num = BigInt::zero();
                for &d in &digits[..k] {
                    num = num * 10 + d;
                }
                let den = BigInt::from(10).pow(k as u32);
                let lo = Rational::from(int_part.clone())
                    + Rational::new(num, den.clone());
                let hi = &lo + Rational::new(BigInt::one(), den);
                Ok(Enclosure { lo, hi })
            }
        }
    }

    /// Refines until the width drops below `eps` or the budget runs out.
    pub fn refine_until_width_below(&self, eps: &Rational, budget: usize) -> Result<Enclosure> {
        for j in 0..budget {
            let e = self.enclosure(j)?;
            if &e.width() < eps {
                return Ok(e);
            }
        }
        Err(Error::UndecidableAtPrecision { budget })
    }
}

/// Exact `floor(scale * x)` for irrational `x`, refining the enclosure until
/// it no longer straddles an integer boundary.
///
/// The returned `f` is certified by a final enclosure with
/// `f <= scale*lo` and `scale*hi < f+1`. When the budget is exhausted the
/// input may be rational (a value exactly on a boundary can never be
/// separated from it), and an error is reported.
pub fn exact_floor_scaled(x: &IntervalReal, scale: &BigInt) -> Result<BigInt> {
    exact_floor_scaled_with_budget(x, scale, DEFAULT_REFINEMENT_BUDGET)
}

pub fn exact_floor_scaled_with_budget(
    x: &IntervalReal,
    scale: &BigInt,
    budget: usize,
) -> Result<BigInt> {
    if !scale.is_positive() {
        return Err(Error::Precondition(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let scale_q = Rational::from(scale.clone());
    for j in 0..budget {
        let e = x.enclosure(j)?;
        let flo = (&e.lo * &scale_q).floor();
        let fhi = (&e.hi * &scale_q).floor();
        if flo == fhi {
            return Ok(flo.to_integer());
        }
    }
    Err(Error::UndecidableAtPrecision { budget })
}
