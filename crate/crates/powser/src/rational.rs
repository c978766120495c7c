//! Small helpers on arbitrary-precision rationals: factorials, binomials,
//! and overflow-free conversion to (sign, ln |value|).

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact conversion of an `f64` to a rational. Finite floats are dyadic
/// rationals, so this is lossless.
pub fn from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}

/// Natural log of a positive big integer, accurate to ~1e-15 relative.
/// Uses the top 53 bits as mantissa and counts the rest in `ln 2`.
fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 53 {
        return n.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 53;
    let top = (n >> shift).to_f64().expect("53-bit value");
    top.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Sign and natural log of the magnitude of a rational, computed without
/// ever materializing the value as a float. Returns `None` for zero.
pub fn log_magnitude(r: &BigRational) -> Option<(i8, f64)> {
    if r.is_zero() {
        return None;
    }
    let sign = if r.is_negative() { -1 } else { 1 };
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    Some((sign, ln_biguint(num) - ln_biguint(den)))
}

/// `ln` of a positive rational; panics on zero or negative input.
pub fn ln_positive(r: &BigRational) -> f64 {
    match log_magnitude(r) {
        Some((1, ln)) => ln,
        _ => panic!("ln_positive called on a non-positive rational"),
    }
}

/// Render a nonnegative rational as a decimal string with `digits` digits
/// after the decimal point (truncated towards zero).
pub fn to_decimal_string(r: &BigRational, digits: usize) -> String {
    assert!(!r.is_negative(), "decimal rendering expects nonnegative values");
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (r * BigRational::from_integer(scale.clone())).trunc();
    let scaled = scaled.to_integer();
    let (int_part, frac_part) = (scaled.clone() / &scale, scaled % &scale);
    if digits == 0 {
        int_part.to_string()
    } else {
        format!("{}.{:0width$}", int_part, frac_part, width = digits)
    }
}

pub fn sign_of(n: &BigInt) -> Sign {
    n.sign()
}
