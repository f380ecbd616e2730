//! Exact integers, rationals, CRT, and factorials.
//!
//! All quantities are arbitrary precision: factorials and running modulus
//! products overflow fixed-width integers quickly. `Rational` is kept in
//! lowest terms with a positive denominator by construction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// Exact fraction in lowest terms; the value type for every density.
pub type Rational = BigRational;

/// Exact n!.
pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Solves a system of congruences with pairwise coprime moduli.
///
/// Returns `(r, M)` with `M` the product of the moduli, `0 <= r < M`, and
/// `r` congruent to each residue modulo its modulus. Non-coprime moduli are a
/// contract violation and name the offending pair.
pub fn crt_solve(congruences: &[(BigInt, BigInt)]) -> Result<(BigInt, BigInt)> {
    for (r, m) in congruences {
        if !m.is_positive() {
            return Err(Error::Precondition(format!("modulus {m} is not positive")));
        }
        if r.is_negative() || r >= m {
            return Err(Error::Precondition(format!(
                "residue {r} is not reduced modulo {m}"
            )));
        }
    }
    for i in 0..congruences.len() {
        for j in (i + 1)..congruences.len() {
            let a = &congruences[i].1;
            let b = &congruences[j].1;
            if !a.gcd(b).is_one() {
                return Err(Error::NonCoprimeModuli {
                    a: a.to_string(),
                    b: b.to_string(),
                });
            }
        }
    }

    let mut r0 = BigInt::zero();
    let mut m0 = BigInt::one();
    for (r, m) in congruences {
        // Find x = r0 + m0*t with x = r (mod m): t = (r - r0) * m0^{-1} (mod m).
        let gcd = m0.extended_gcd(m);
        debug_assert!(gcd.gcd.is_one());
        let inv = gcd.x.mod_floor(m);
        let t = ((r - &r0) * inv).mod_floor(m);
        r0 += &m0 * t;
        m0 *= m;
        r0 = r0.mod_floor(&m0);
    }
    // Direct congruence check of the output against every input pair.
    for (r, m) in congruences {
        assert!(
            r0.mod_floor(m) == *r,
            "solver bug: {r0} is not {r} mod {m}"
        );
    }
    Ok((r0, m0))
}

/// Convenience wrapper for small moduli.
pub fn crt_solve_u64(congruences: &[(u64, u64)]) -> Result<(BigInt, BigInt)> {
    let big: Vec<(BigInt, BigInt)> = congruences
        .iter()
        .map(|&(r, m)| (BigInt::from(r), BigInt::from(m)))
        .collect();
    crt_solve(&big)
}

/// Floor of the square root of a non-negative integer. Integer Newton
/// iteration; converges in a few dozen steps.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = 1u64 << (n.ilog2() / 2 + 1);
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// Renders a rational as `p/q` in lowest terms, with an explicit `/1` for
/// integers. This is the form used in machine-readable records.
pub fn rational_to_fraction_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal expansion of a rational, truncated toward zero to `digits`
/// fractional digits. Exact long division; no floating point.
pub fn rational_to_decimal_string(r: &Rational, digits: u32) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    let abs = r.abs();
    let int_part = abs.numer() / abs.denom();
    let mut rem = abs.numer() - &int_part * abs.denom();
    let mut frac = String::with_capacity(digits as usize);
    for _ in 0..digits {
        rem *= 10;
        let d = &rem / abs.denom();
        rem -= &d * abs.denom();
        let d: u8 = u8::try_from(&d).expect("single decimal digit");
        frac.push(char::from(b'0' + d));
    }
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac}")
    }
}

/// Parses `p/q` or a bare integer into a rational.
pub fn rational_from_str(text: &str) -> Result<Rational> {
    let text = text.trim();
    let parse_int = |s: &str| -> Result<BigInt> {
        s.trim().parse::<BigInt>().map_err(|_| Error::Parse {
            position: None,
            message: format!("invalid integer {s:?}"),
        })
    };
    match text.split_once('/') {
        Some((p, q)) => {
            let num = parse_int(p)?;
            let den = parse_int(q)?;
            if den.is_zero() {
                return Err(Error::Parse {
                    position: None,
                    message: "zero denominator".into(),
                });
            }
            Ok(Rational::new(num, den))
        }
        None => Ok(Rational::from(parse_int(text)?)),
    }
}
