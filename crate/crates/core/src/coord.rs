//! Exact rational coordinates.
//!
//! Every coordinate in this crate is a [`Coord`]: an arbitrary-precision
//! rational kept in lowest terms with a positive denominator. Arithmetic
//! never rounds. The `p/q` string form used here is the one file formats
//! serialize; it is decimal-free and round-trips bit-exactly.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational coordinate. Always in lowest terms, denominator > 0.
pub type Coord = BigRational;

/// Errors from parsing a `p/q` coordinate string.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoordParseError {
    #[error("empty coordinate string")]
    Empty,
    #[error("invalid integer `{0}`")]
    BadInt(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Coord from an integer.
pub fn coord(n: i64) -> Coord {
    BigRational::from_integer(BigInt::from(n))
}

/// Coord from a numerator/denominator pair. Panics on zero denominator.
pub fn ratio(n: i64, d: i64) -> Coord {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p/q` (or a bare integer `p`) into an exact rational.
pub fn parse_coord(s: &str) -> Result<Coord, CoordParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(CoordParseError::Empty);
    }
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let numer: BigInt = num_str
        .parse()
        .map_err(|_| CoordParseError::BadInt(num_str.to_string()))?;
    let denom: BigInt = den_str
        .parse()
        .map_err(|_| CoordParseError::BadInt(den_str.to_string()))?;
    if denom.is_zero() {
        return Err(CoordParseError::ZeroDenominator(s.to_string()));
    }
    Ok(BigRational::new(numer, denom))
}

/// Renders a rational as `p/q` in lowest terms, denominator always written.
pub fn render_coord(c: &Coord) -> String {
    format!("{}/{}", c.numer(), c.denom())
}

/// Sign of a rational as -1, 0, or +1.
pub fn sign(c: &Coord) -> i8 {
    if c.is_zero() {
        0
    } else if c.is_positive() {
        1
    } else {
        -1
    }
}

/// True if the rational is exactly one.
pub fn is_one(c: &Coord) -> bool {
    c.is_one()
}
