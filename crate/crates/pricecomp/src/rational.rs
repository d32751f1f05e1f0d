//! Exact rational arithmetic helpers.
//!
//! All quantities in this crate (budgets, prices, valuations, allocations,
//! flows, LP coefficients) are `BigRational`s in canonical form: positive
//! denominator, gcd(|num|, den) = 1. `num-rational` maintains that invariant
//! for every arithmetic result, so exactness is preserved end to end.
//! Rationals render as `"p/q"` (or `"p"` for integers) in every file format.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

pub type Rational = BigRational;

/// Shorthand for small rational constants.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn zero() -> Rational {
    BigRational::zero()
}

pub fn one() -> Rational {
    BigRational::one()
}

/// Parses `"p/q"` or `"p"`. The denominator must be non-zero; the result is
/// reduced to canonical form.
pub fn parse_rational(s: &str) -> Result<Rational, Error> {
    let s = s.trim();
    let mut parts = s.splitn(2, '/');
    let num_str = parts.next().unwrap_or("");
    let num: BigInt = num_str
        .parse()
        .map_err(|_| Error::Parse(format!("invalid rational {s:?}")))?;
    let den: BigInt = match parts.next() {
        None => BigInt::one(),
        Some(d) => d
            .parse()
            .map_err(|_| Error::Parse(format!("invalid rational {s:?}")))?,
    };
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(num, den))
}

/// Renders in the same format `parse_rational` accepts; round-trips exactly.
pub fn render_rational(q: &Rational) -> String {
    q.to_string()
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Nearest rational with denominator at most `max_den`, via the continued
/// fraction expansion of `x`. Used to lift numeric equilibrium prices back
/// into exact arithmetic before verification.
pub fn from_f64_capped(x: f64, max_den: u64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let negative = x < 0.0;
    let mut x = x.abs();
    // Convergents p/q of the continued fraction.
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let cap = BigInt::from(max_den);
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e18 {
            break;
        }
        let ab = BigInt::from(a as i64);
        let p2 = &ab * &p1 + &p0;
        let q2 = &ab * &q1 + &q0;
        if q2 > cap {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = x - a;
        if frac < 1e-13 {
            break;
        }
        x = 1.0 / frac;
    }
    if q1.is_zero() {
        return None;
    }
    let mut r = BigRational::new(p1, q1);
    if negative {
        r = -r;
    }
    Some(r)
}

/// First continued-fraction convergent of `x` within `tol`, with denominator
/// at most `max_den`. Coarse tolerances deliberately snap to the simplest
/// nearby rational; callers must verify the result exactly.
pub fn snap_to_rational(x: f64, max_den: u64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let negative = x < 0.0;
    let target = x.abs();
    let mut rest = target;
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let cap = BigInt::from(max_den);
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e18 {
            break;
        }
        let ab = BigInt::from(a as i64);
        let p2 = &ab * &p1 + &p0;
        let q2 = &ab * &q1 + &q0;
        if q2 > cap {
            break;
        }
        let approx = p2.to_f64().unwrap_or(f64::NAN) / q2.to_f64().unwrap_or(f64::NAN);
        let close = (target - approx).abs() <= tol;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if close {
            let mut r = BigRational::new(p1, q1);
            if negative {
                r = -r;
            }
            return Some(r);
        }
        let frac = rest - a;
        if frac <= f64::EPSILON {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}

pub fn is_nonneg(q: &Rational) -> bool {
    !q.is_negative()
}
