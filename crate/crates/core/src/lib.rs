//! Exact computational machinery for Buck densities of sumsets.
//!
//! Everything here is exact: integers are arbitrary precision, densities are
//! rationals in lowest terms, and irrational inputs are handled through
//! refinable interval enclosures. No floating point appears anywhere in the
//! computation paths; decimal strings in reports are produced by exact long
//! division and labeled approximate.
//!
//! The crate is organized around a small number of value types:
//!
//! * [`EventuallyPeriodicSet`]: a finite exceptional part plus a fully
//!   periodic tail; closed under union, intersection, complement, affine
//!   images, and exact sumsets.
//! * [`IntervalReal`]: a demand-driven stream of nested rational enclosures
//!   standing in for an irrational number.
//! * [`StagedSet`]: a stage-indexed inner/outer sandwich of eventually
//!   periodic sets whose exact densities pin the density of a limit set
//!   within a certified shrinking interval.
//!
//! On top of these, [`construct`] builds sets with prescribed sumset
//! densities, translate-sumset densities, and an additive basis, and
//! [`estimate`] provides finite-truncation density estimators together with
//! the sandwich harness that ties them back to exact interval certificates.

pub mod arith;
pub mod construct;
mod conv;
pub mod density;
pub mod estimate;
pub mod expansion;
pub mod interval;
pub mod periodic;

pub use arith::{crt_solve, factorial, Rational};
pub use density::{buck_lower, buck_upper, Stage, StagedSet};
pub use interval::IntervalReal;
pub use periodic::EventuallyPeriodicSet;

use std::fmt;

/// Errors surfaced by the exact computation layer.
///
/// Internal invariant breaches (a sumset post-verification mismatch, a broken
/// sandwich containment) are not represented here: those abort via panic, as
/// they indicate a bug rather than an input condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// CRT input moduli share a common factor; carries the offending pair.
    NonCoprimeModuli { a: String, b: String },
    /// Residue or exception out of the range demanded by the constructor.
    OutOfRange(String),
    /// An enclosure could not be refined past an integer boundary within the
    /// refinement budget. Signals a possibly-rational input where an
    /// irrational one was asserted.
    UndecidableAtPrecision { budget: usize },
    /// A user-supplied digit stream ran out before the computation could be
    /// decided.
    DigitStreamExhausted,
    /// The running product of expansion moduli exceeded the configured cap.
    ModulusCapReached { product: String, cap: u64 },
    /// A staged construction would require materializing a set too large for
    /// exact computation.
    BudgetExceeded(String),
    /// A documented precondition does not hold for the supplied arguments.
    Precondition(String),
    /// Malformed textual input (set grammar, rationals, alpha specs); carries
    /// a byte position when one is known.
    Parse { position: Option<usize>, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonCoprimeModuli { a, b } => {
                write!(f, "moduli {a} and {b} are not coprime")
            }
            Error::OutOfRange(msg) => write!(f, "out of range: {msg}"),
            Error::UndecidableAtPrecision { budget } => write!(
                f,
                "undecidable at precision: refinement budget of {budget} steps exhausted \
                 while the enclosure still straddles an integer (input may be rational)"
            ),
            Error::DigitStreamExhausted => {
                write!(f, "digit stream exhausted before the computation was decided")
            }
            Error::ModulusCapReached { product, cap } => {
                write!(f, "stage budget reached: modulus product {product} exceeds cap {cap}")
            }
            Error::BudgetExceeded(msg) => write!(f, "computation budget exceeded: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Parse { position, message } => match position {
                Some(p) => write!(f, "parse error at byte {p}: {message}"),
                None => write!(f, "parse error: {message}"),
            },
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
