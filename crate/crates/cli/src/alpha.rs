//! Parsing of density targets from the command line.
//!
//! Accepted forms:
//!
//! * `p/q` or `p`: an exact rational;
//! * `sqrt(p/q)`, optionally followed by `+p/q` or `-p/q`: square roots of
//!   rationals with a rational offset;
//! * `golden-conjugate`: (sqrt(5) - 1)/2;
//! * `digits:<path>`: a decimal digit file, e.g. `0.41421356...` (the value
//!   is treated as asserted-irrational; a finite file can exhaust during
//!   refinement, which is reported rather than guessed around).
//!
//! Free-form decimals are rejected on purpose: `0.5` silently means the
//! rational 1/2, and the irrational-input machinery must not be handed
//! rationals dressed up as decimals.

use buckdens::arith::{rational_from_str, Rational};
use buckdens::construct::Alpha;
use buckdens::interval::IntervalReal;
use num_bigint::BigInt;
use num_traits::Zero;

pub fn parse_alpha(text: &str) -> Result<Alpha, String> {
    let text = text.trim();
    if text == "golden-conjugate" {
        return Ok(Alpha::Irrational(IntervalReal::golden_conjugate()));
    }
    if let Some(path) = text.strip_prefix("digits:") {
        return parse_digit_file(path);
    }
    if let Some(rest) = text.strip_prefix("sqrt(") {
        let (inside, tail) = rest
            .split_once(')')
            .ok_or_else(|| "missing ')' in sqrt(...) alpha".to_string())?;
        let radicand = rational_from_str(inside).map_err(|e| e.to_string())?;
        let base = IntervalReal::sqrt_rational(radicand).map_err(|e| e.to_string())?;
        let value = match tail.chars().next() {
            None => base,
            Some('+') => base
                .affine(Rational::from(BigInt::from(1)), rational_from_str(&tail[1..]).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?,
            Some('-') => {
                let offset = rational_from_str(&tail[1..]).map_err(|e| e.to_string())?;
                base.affine(Rational::from(BigInt::from(1)), -offset)
                    .map_err(|e| e.to_string())?
            }
            Some(c) => return Err(format!("unexpected {c:?} after sqrt(...)")),
        };
        return Ok(Alpha::Irrational(value));
    }
    if text.contains('.') {
        return Err(format!(
            "decimal alpha {text:?} rejected: use a rational p/q, sqrt(p/q)[+-p/q], \
             golden-conjugate, or digits:<file>"
        ));
    }
    let r = rational_from_str(text).map_err(|e| e.to_string())?;
    Ok(Alpha::Rational(r))
}

fn parse_digit_file(path: &str) -> Result<Alpha, String> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read digit file {path}: {e}"))?;
    let cleaned: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    let (int_text, frac_text) = match cleaned.split_once('.') {
        Some((i, f)) => (i, f),
        None => ("0", cleaned.as_str()),
    };
    let int_part: BigInt = if int_text.is_empty() {
        BigInt::zero()
    } else {
        int_text
            .parse()
            .map_err(|_| format!("bad integer part {int_text:?} in digit file"))?
    };
    let digits: Vec<u8> = frac_text
        .chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as u8)
                .ok_or_else(|| format!("non-digit {c:?} in digit file"))
        })
        .collect::<Result<_, _>>()?;
    let value = IntervalReal::from_digits(int_part, digits).map_err(|e| e.to_string())?;
    Ok(Alpha::Irrational(value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_named_and_sqrt_forms() {
        assert!(matches!(parse_alpha("golden-conjugate"), Ok(Alpha::Irrational(_))));
        assert!(matches!(parse_alpha("sqrt(1/2)"), Ok(Alpha::Irrational(_))));
        assert!(matches!(parse_alpha("sqrt(3)-1"), Ok(Alpha::Irrational(_))));
        assert!(matches!(parse_alpha("2/5"), Ok(Alpha::Rational(_))));
    }

    #[test]
    fn rejects_decimals_and_rational_sqrts() {
        assert!(parse_alpha("0.5").is_err());
        assert!(parse_alpha("sqrt(4)").is_err());
    }
}
