//! Dense truncated power series over arbitrary-precision rationals.
//!
//! Every operation truncates at an explicit degree cap and never reads
//! beyond it, so results are exact Taylor coefficients of the stated
//! operation. This module is the ground truth that every asymptotic
//! estimate in the crate is checked against.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Truncated power series: `coeffs[j]` is the coefficient of `z^j`,
/// for `0 <= j <= degree_cap()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactSeries {
    coeffs: Vec<BigRational>,
}

impl ExactSeries {
    /// Build from a coefficient list; the cap is `coeffs.len() - 1`.
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least the z^0 coefficient");
        ExactSeries { coeffs }
    }

    pub fn zero(degree_cap: usize) -> Self {
        ExactSeries { coeffs: vec![BigRational::zero(); degree_cap + 1] }
    }

    pub fn one(degree_cap: usize) -> Self {
        let mut s = Self::zero(degree_cap);
        s.coeffs[0] = BigRational::one();
        s
    }

    pub fn degree_cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> BigRational {
        self.coeffs.get(j).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Copy, truncated or zero-extended to the given cap.
    pub fn resized(&self, degree_cap: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree_cap + 1, BigRational::zero());
        ExactSeries { coeffs }
    }

    /// Cauchy product truncated at `degree_cap`.
    pub fn mul_trunc(&self, other: &ExactSeries, degree_cap: usize) -> ExactSeries {
        let mut out = vec![BigRational::zero(); degree_cap + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(degree_cap + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(degree_cap + 1 - i) {
                if b.is_zero() {
                    continue;
                }
                out[i + j] += a * b;
            }
        }
        ExactSeries { coeffs: out }
    }

    /// Binary exponentiation with every intermediate product truncated.
    /// Integer-coefficient series skip the rational layer: same algorithm,
    /// but without a gcd reduction per product term.
    pub fn pow_trunc(&self, n: u64, degree_cap: usize) -> ExactSeries {
        if let Some(ints) = self.integer_coeffs() {
            return Self::pow_trunc_integer(ints, n, degree_cap);
        }
        let mut base = self.resized(degree_cap);
        let mut acc = ExactSeries::one(degree_cap);
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul_trunc(&base, degree_cap);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul_trunc(&base, degree_cap);
            }
        }
        acc
    }

    fn integer_coeffs(&self) -> Option<Vec<num_bigint::BigInt>> {
        self.coeffs
            .iter()
            .map(|c| One::is_one(c.denom()).then(|| c.numer().clone()))
            .collect()
    }

    fn pow_trunc_integer(base: Vec<num_bigint::BigInt>, mut n: u64, cap: usize) -> ExactSeries {
        use num_bigint::BigInt;
        let mul = |a: &[BigInt], b: &[BigInt]| -> Vec<BigInt> {
            let mut out = vec![BigInt::from(0); cap + 1];
            for (i, x) in a.iter().enumerate().take(cap + 1) {
                if x.is_zero() {
                    continue;
                }
                for (j, y) in b.iter().enumerate().take(cap + 1 - i) {
                    if !y.is_zero() {
                        out[i + j] += x * y;
                    }
                }
            }
            out
        };
        let mut base = {
            let mut b = base;
            b.resize(cap + 1, BigInt::from(0));
            b.truncate(cap + 1);
            b
        };
        let mut acc = vec![BigInt::from(0); cap + 1];
        acc[0] = BigInt::from(1);
        while n > 0 {
            if n & 1 == 1 {
                acc = mul(&acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = mul(&base, &base);
            }
        }
        ExactSeries {
            coeffs: acc.into_iter().map(BigRational::from_integer).collect(),
        }
    }

    /// Termwise derivative; the cap drops by one (a constant keeps cap 0).
    pub fn derivative(&self) -> ExactSeries {
        if self.coeffs.len() == 1 {
            return ExactSeries::zero(0);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c * BigRational::from_integer(j.into()))
            .collect();
        ExactSeries { coeffs }
    }

    /// Multiplicative inverse mod `z^(degree_cap+1)`; requires a nonzero
    /// constant term.
    pub fn inverse_trunc(&self, degree_cap: usize) -> Result<ExactSeries> {
        let a0 = self.coeff(0);
        if a0.is_zero() {
            return Err(Error::InverseNeedsNonzeroConstant);
        }
        let inv_a0 = a0.recip();
        let mut out = vec![BigRational::zero(); degree_cap + 1];
        out[0] = inv_a0.clone();
        for n in 1..=degree_cap {
            let mut sum = BigRational::zero();
            for k in 1..=n {
                let ak = self.coeff(k);
                if ak.is_zero() {
                    continue;
                }
                sum += ak * &out[n - k];
            }
            out[n] = -(&inv_a0 * sum);
        }
        Ok(ExactSeries { coeffs: out })
    }

    /// Formal logarithm of `f / f(0)`, i.e. the series of `ln f(z) - ln f(0)`,
    /// which has zero constant term and rational coefficients. Requires
    /// `f(0) > 0`. Uses `(ln f)' = f'/f` integrated termwise.
    pub fn log_trunc(&self, degree_cap: usize) -> Result<ExactSeries> {
        let a0 = self.coeff(0);
        if a0.is_zero() || a0 < BigRational::zero() {
            return Err(Error::LogNeedsPositiveConstant);
        }
        if degree_cap == 0 {
            return Ok(ExactSeries::zero(0));
        }
        let deriv = self.derivative().resized(degree_cap - 1);
        let inv = self.inverse_trunc(degree_cap - 1)?;
        let logderiv = deriv.mul_trunc(&inv, degree_cap - 1);
        let mut coeffs = vec![BigRational::zero(); degree_cap + 1];
        for (j, c) in coeffs.iter_mut().enumerate().skip(1) {
            *c = logderiv.coeff(j - 1) / BigRational::from_integer(j.into());
        }
        Ok(ExactSeries { coeffs })
    }

    /// Formal exponential; requires a zero constant term (the only case with
    /// rational output). Recurrence: `E' = a' E`.
    pub fn exp_trunc(&self, degree_cap: usize) -> Result<ExactSeries> {
        if !self.coeff(0).is_zero() {
            return Err(Error::ExpNeedsZeroConstant);
        }
        let mut out = vec![BigRational::zero(); degree_cap + 1];
        out[0] = BigRational::one();
        // n e_n = sum_{k=1..n} k a_k e_{n-k}
        for n in 1..=degree_cap {
            let mut sum = BigRational::zero();
            for k in 1..=n {
                let ak = self.coeff(k);
                if ak.is_zero() {
                    continue;
                }
                sum += ak * BigRational::from_integer(k.into()) * &out[n - k];
            }
            out[n] = sum / BigRational::from_integer(n.into());
        }
        Ok(ExactSeries { coeffs: out })
    }

    /// Composition `outer(inner(z))` truncated at the cap; requires
    /// `inner(0) = 0` so the composition is a formal power series.
    pub fn compose_trunc(&self, inner: &ExactSeries, degree_cap: usize) -> Result<ExactSeries> {
        if !inner.coeff(0).is_zero() {
            return Err(Error::ComposeNeedsZeroConstant);
        }
        // Horner from the top coefficient of `outer`.
        let top = self.coeffs.len().min(degree_cap + 1);
        let mut acc = ExactSeries::zero(degree_cap);
        for j in (0..top).rev() {
            acc = acc.mul_trunc(inner, degree_cap);
            acc.coeffs[0] += self.coeff(j);
        }
        Ok(acc)
    }

    /// Index dilation: maps `f(z)` to `f(z^q)`, i.e. coefficient `c_j` moves
    /// to degree `j*q`.
    pub fn dilate(&self, q: usize) -> ExactSeries {
        assert!(q >= 1);
        let mut coeffs = vec![BigRational::zero(); (self.coeffs.len() - 1) * q + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            coeffs[j * q] = c.clone();
        }
        ExactSeries { coeffs }
    }

    /// Evaluate at a rational point (plain Horner, exact).
    pub fn eval(&self, t: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }
}
