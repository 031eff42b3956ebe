//! Exact rational scalars: the field Q used everywhere in this crate.
//!
//! Values are arbitrary-precision fractions kept in lowest terms with a
//! positive denominator. `num_rational::BigRational` already guarantees both
//! invariants for every value produced through its constructors and
//! arithmetic, so it serves as the scalar type directly.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::str::FromStr;
use thiserror::Error;

/// Arbitrary-precision rational number, always reduced, denominator > 0.
pub type Q = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed integer `{0}`")]
    BadInteger(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("decimal notation `{0}` is not accepted; write an exact fraction p/q")]
    DecimalNotation(String),
}

/// Rational from machine integers; `d` must be nonzero.
pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Rational from a machine integer.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `p/q` or a plain integer, exactly. Decimal notation is rejected so
/// no value can be silently rounded on the way in.
pub fn parse_rational(s: &str) -> Result<Q, RationalParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    if s.contains('.') {
        return Err(RationalParseError::DecimalNotation(s.to_string()));
    }
    let parse_int = |t: &str| {
        BigInt::from_str(t).map_err(|_| RationalParseError::BadInteger(t.to_string()))
    };
    match s.split_once('/') {
        None => Ok(Q::from_integer(parse_int(s)?)),
        Some((num, den)) => {
            let num = parse_int(num)?;
            let den = parse_int(den)?;
            if den.is_zero() {
                return Err(RationalParseError::ZeroDenominator(s.to_string()));
            }
            Ok(Q::new(num, den))
        }
    }
}

/// True when the value is stored in lowest terms with a positive denominator.
/// All values built through this crate satisfy this; the check exists for
/// property tests over whole pipelines.
pub fn is_reduced(q: &Q) -> bool {
    use num_integer::Integer;
    q.denom().is_positive()
        && (q.numer().is_zero() && q.denom().is_one()
            || q.numer().gcd(q.denom()).is_one())
}
