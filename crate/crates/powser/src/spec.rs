//! Symbolic descriptions of power series with nonnegative coefficients.
//!
//! A `SeriesSpec` names a series either by a builtin closed form or by a
//! truncated coefficient list with a user-supplied radius hint. Exact
//! expansion, gauge and radius queries live here; analytic evaluation of the
//! attached family (mean, variance, ...) lives in [`crate::khinchin`].

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational;
use crate::series::ExactSeries;

/// Evaluations of truncated specs refuse points beyond this fraction of the
/// radius hint: partial sums near the radius are silently wrong.
pub const TRUNCATED_EVAL_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesSpec {
    /// `e^z`
    Exp,
    /// `a + b z` with `a > 0`, `b > 0`
    Affine(BigRational, BigRational),
    /// `1 / (1 - z)`
    Geometric,
    /// `(1 + z)^d` for an integer `d >= 1`
    BinomialPower(u32),
    /// Explicit polynomial `c_0 + c_1 z + ...` (a complete coefficient list)
    Polynomial(Vec<BigRational>),
    /// `e^{g(z)}` for a polynomial `g` with nonnegative coefficients and
    /// `g(0) = 0`; `g_coeffs[j]` is the coefficient of `z^j`.
    ExpPolynomial(Vec<BigRational>),
    /// `e^{t0 (z - 1)}`, the Poisson probability generating function with
    /// parameter `t0 > 0` (already normalized, i.e. pre-tilted).
    PoissonPgf(f64),
    /// Truncated coefficient list of an otherwise unknown series, together
    /// with a radius hint for the full series. The gauge read off the list
    /// is observational (absent tail coefficients could lower the gcd);
    /// `asserted_gauge` lets the caller vouch for the true value.
    Truncated {
        coeffs: Vec<BigRational>,
        radius_hint: f64,
        asserted_gauge: Option<u64>,
    },
}

impl SeriesSpec {
    pub fn polynomial_i64(coeffs: &[i64]) -> SeriesSpec {
        SeriesSpec::Polynomial(coeffs.iter().map(|&c| rational::big(c)).collect())
    }

    pub fn affine_i64(a: i64, b: i64) -> SeriesSpec {
        SeriesSpec::Affine(rational::big(a), rational::big(b))
    }

    pub fn truncated_i64(coeffs: &[i64], radius_hint: f64) -> SeriesSpec {
        SeriesSpec::Truncated {
            coeffs: coeffs.iter().map(|&c| rational::big(c)).collect(),
            radius_hint,
            asserted_gauge: None,
        }
    }

    /// Membership check for the working class: nonnegative coefficients,
    /// positive constant term, and at least two nonzero coefficients.
    pub fn validate(&self) -> Result<()> {
        self.validate_positive_constant()?;
        if self.is_constant() {
            return Err(Error::InvalidSpec(
                "series must be nonconstant (at least two nonzero coefficients)".into(),
            ));
        }
        Ok(())
    }

    /// Weaker check used for prefactor series `h`: coefficients nonnegative
    /// and `h(0) > 0`, but constants are allowed.
    pub fn validate_positive_constant(&self) -> Result<()> {
        self.validate_nonnegative()?;
        let c0_positive = match self {
            SeriesSpec::Exp | SeriesSpec::Geometric | SeriesSpec::PoissonPgf(_) => true,
            SeriesSpec::Affine(a, _) => a.is_positive(),
            SeriesSpec::BinomialPower(_) | SeriesSpec::ExpPolynomial(_) => true,
            SeriesSpec::Polynomial(cs) | SeriesSpec::Truncated { coeffs: cs, .. } => {
                cs.first().map(|c| c.is_positive()).unwrap_or(false)
            }
        };
        if c0_positive {
            Ok(())
        } else {
            Err(Error::InvalidSpec("constant term must be positive".into()))
        }
    }

    /// Structural check only: parameters in range and all coefficients
    /// nonnegative. This is what a plain expansion needs; series like
    /// `z^q` (zero constant term) pass.
    pub fn validate_nonnegative(&self) -> Result<()> {
        let nonneg = |cs: &[BigRational]| cs.iter().all(|c| !c.is_negative());
        match self {
            SeriesSpec::Exp | SeriesSpec::Geometric => Ok(()),
            SeriesSpec::Affine(a, b) => {
                if a.is_negative() || b.is_negative() {
                    Err(Error::InvalidSpec("affine coefficients must be nonnegative".into()))
                } else {
                    Ok(())
                }
            }
            SeriesSpec::BinomialPower(d) => {
                if *d >= 1 {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec("binomial power needs d >= 1".into()))
                }
            }
            SeriesSpec::Polynomial(cs) => {
                if cs.is_empty() {
                    Err(Error::InvalidSpec("polynomial needs at least one coefficient".into()))
                } else if !nonneg(cs) {
                    Err(Error::InvalidSpec("polynomial coefficients must be nonnegative".into()))
                } else {
                    Ok(())
                }
            }
            SeriesSpec::ExpPolynomial(gs) => {
                if gs.is_empty() || !gs[0].is_zero() {
                    return Err(Error::InvalidSpec(
                        "exponent polynomial must have zero constant term".into(),
                    ));
                }
                if !nonneg(gs) {
                    return Err(Error::InvalidSpec(
                        "exponent polynomial coefficients must be nonnegative".into(),
                    ));
                }
                if gs.iter().skip(1).all(|c| c.is_zero()) {
                    return Err(Error::InvalidSpec("exponent polynomial must be nonconstant".into()));
                }
                Ok(())
            }
            SeriesSpec::PoissonPgf(t0) => {
                if *t0 > 0.0 && t0.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec("Poisson parameter must be positive and finite".into()))
                }
            }
            SeriesSpec::Truncated { coeffs, radius_hint, asserted_gauge } => {
                if coeffs.is_empty() {
                    return Err(Error::InvalidSpec("truncated list must be nonempty".into()));
                }
                if !nonneg(coeffs) {
                    return Err(Error::InvalidSpec(
                        "truncated coefficients must be nonnegative".into(),
                    ));
                }
                if radius_hint.is_nan() || *radius_hint <= 0.0 {
                    return Err(Error::InvalidSpec("radius hint must be positive".into()));
                }
                if let Some(q) = asserted_gauge {
                    if *q == 0 || !support_gcd(coeffs).is_multiple_of(*q) {
                        return Err(Error::InvalidSpec(format!(
                            "asserted gauge {q} is inconsistent with the observed support"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            SeriesSpec::Exp | SeriesSpec::Geometric | SeriesSpec::PoissonPgf(_) => false,
            SeriesSpec::Affine(_, b) => b.is_zero(),
            SeriesSpec::BinomialPower(d) => *d == 0,
            SeriesSpec::Polynomial(cs) | SeriesSpec::Truncated { coeffs: cs, .. } => {
                cs.iter().skip(1).all(|c| c.is_zero())
            }
            SeriesSpec::ExpPolynomial(gs) => gs.iter().skip(1).all(|c| c.is_zero()),
        }
    }

    /// Radius of convergence (`f64::INFINITY` for entire functions).
    pub fn radius(&self) -> f64 {
        match self {
            SeriesSpec::Geometric => 1.0,
            SeriesSpec::Truncated { radius_hint, .. } => *radius_hint,
            _ => f64::INFINITY,
        }
    }

    /// Largest admissible evaluation point: the radius, or 95% of the hint
    /// for truncated lists.
    pub fn eval_limit(&self) -> f64 {
        match self {
            SeriesSpec::Truncated { radius_hint, .. } => TRUNCATED_EVAL_FRACTION * radius_hint,
            _ => self.radius(),
        }
    }

    /// Whether an exact rational Taylor expansion exists. The Poisson pgf
    /// carries the transcendental factor `e^{-t0}` and is float-only.
    pub fn is_exactly_expandable(&self) -> bool {
        !matches!(self, SeriesSpec::PoissonPgf(_))
    }

    /// Exact Taylor coefficients `b_0..b_degree_cap`.
    pub fn expand(&self, degree_cap: usize) -> Result<ExactSeries> {
        self.validate_nonnegative()?;
        match self {
            SeriesSpec::Exp => {
                let mut coeffs = Vec::with_capacity(degree_cap + 1);
                let mut c = BigRational::one();
                coeffs.push(c.clone());
                for j in 1..=degree_cap {
                    c /= BigRational::from_integer(j.into());
                    coeffs.push(c.clone());
                }
                Ok(ExactSeries::from_coeffs(coeffs))
            }
            SeriesSpec::Affine(a, b) => {
                let mut coeffs = vec![BigRational::zero(); degree_cap + 1];
                coeffs[0] = a.clone();
                if degree_cap >= 1 {
                    coeffs[1] = b.clone();
                }
                Ok(ExactSeries::from_coeffs(coeffs))
            }
            SeriesSpec::Geometric => {
                Ok(ExactSeries::from_coeffs(vec![BigRational::one(); degree_cap + 1]))
            }
            SeriesSpec::BinomialPower(d) => {
                let mut coeffs = Vec::with_capacity(degree_cap + 1);
                for j in 0..=degree_cap {
                    coeffs.push(BigRational::from_integer(rational::binomial(
                        *d as u64, j as u64,
                    )));
                }
                Ok(ExactSeries::from_coeffs(coeffs))
            }
            SeriesSpec::Polynomial(cs) => {
                let mut coeffs = cs.clone();
                coeffs.resize(degree_cap + 1, BigRational::zero());
                coeffs.truncate(degree_cap + 1);
                Ok(ExactSeries::from_coeffs(coeffs))
            }
            SeriesSpec::ExpPolynomial(gs) => {
                let mut g = gs.clone();
                g.resize(degree_cap + 1, BigRational::zero());
                g.truncate(degree_cap + 1);
                ExactSeries::from_coeffs(g).exp_trunc(degree_cap)
            }
            SeriesSpec::PoissonPgf(_) => Err(Error::NotExactlyExpandable),
            SeriesSpec::Truncated { coeffs, .. } => {
                if coeffs.len() < degree_cap + 1 {
                    return Err(Error::InsufficientCoefficients {
                        have: coeffs.len(),
                        need: degree_cap,
                    });
                }
                Ok(ExactSeries::from_coeffs(coeffs[..=degree_cap].to_vec()))
            }
        }
    }

    /// Gauge: gcd of the indices of nonzero coefficients. For truncated
    /// lists without an asserted value this is computed over the observed
    /// support only; see [`SeriesSpec::gauge_is_observed`].
    pub fn gauge(&self) -> u64 {
        match self {
            SeriesSpec::Exp
            | SeriesSpec::Geometric
            | SeriesSpec::Affine(_, _)
            | SeriesSpec::BinomialPower(_)
            | SeriesSpec::PoissonPgf(_) => 1,
            SeriesSpec::Truncated { coeffs, asserted_gauge: Some(q), .. } => {
                debug_assert!(support_gcd(coeffs).is_multiple_of(*q));
                *q
            }
            SeriesSpec::Polynomial(cs) | SeriesSpec::Truncated { coeffs: cs, .. } => {
                support_gcd(cs)
            }
            // supp(e^g) is the semigroup generated by supp(g): same gcd.
            SeriesSpec::ExpPolynomial(gs) => support_gcd(gs),
        }
    }

    /// True when the gauge was read off a truncated list: coefficients
    /// beyond the cap could lower the gcd, so the value is observational.
    /// An observed gcd of 1 is still certain (extra support only lowers a
    /// gcd); values above 1 need [`SeriesSpec::Truncated::asserted_gauge`].
    pub fn gauge_is_observed(&self) -> bool {
        matches!(self, SeriesSpec::Truncated { asserted_gauge: None, .. })
    }

    /// Whether the spec is flagged uniformly Gaussian. Exponentials of
    /// polynomials qualify when the exponent support has gcd 1; nothing
    /// else is certified (polynomials are not even Gaussian).
    pub fn is_uniformly_gaussian(&self) -> bool {
        match self {
            SeriesSpec::Exp | SeriesSpec::PoissonPgf(_) => true,
            SeriesSpec::ExpPolynomial(gs) => support_gcd(gs) == 1,
            _ => false,
        }
    }

    /// First two Taylor coefficients, exact. Errors for the Poisson pgf.
    pub fn b0_b1(&self) -> Result<(BigRational, BigRational)> {
        let s = self.expand(1)?;
        Ok((s.coeff(0), s.coeff(1)))
    }

    /// Degree when the series is a polynomial presented as such.
    pub fn polynomial_degree(&self) -> Option<usize> {
        match self {
            SeriesSpec::Affine(_, b) => Some(if b.is_zero() { 0 } else { 1 }),
            SeriesSpec::BinomialPower(d) => Some(*d as usize),
            SeriesSpec::Polynomial(cs) => {
                Some(cs.iter().rposition(|c| !c.is_zero()).unwrap_or(0))
            }
            _ => None,
        }
    }

    /// Builds the index-dilated series `z -> f(z^q)` for polynomial-like
    /// specs; used by the scaling-law tests.
    pub fn dilated(&self, q: usize) -> Result<SeriesSpec> {
        match self {
            SeriesSpec::Polynomial(cs) => {
                let s = ExactSeries::from_coeffs(cs.clone()).dilate(q);
                Ok(SeriesSpec::Polynomial(s.coeffs().to_vec()))
            }
            SeriesSpec::Affine(a, b) => {
                let mut cs = vec![BigRational::zero(); q + 1];
                cs[0] = a.clone();
                cs[q] = b.clone();
                Ok(SeriesSpec::Polynomial(cs))
            }
            SeriesSpec::ExpPolynomial(gs) => {
                let g = ExactSeries::from_coeffs(gs.clone()).dilate(q);
                Ok(SeriesSpec::ExpPolynomial(g.coeffs().to_vec()))
            }
            SeriesSpec::Exp => {
                let mut g = vec![BigRational::zero(); q + 1];
                g[q] = BigRational::one();
                Ok(SeriesSpec::ExpPolynomial(g))
            }
            _ => Err(Error::InvalidSpec("dilation is defined for polynomial-like specs".into())),
        }
    }

    /// Float value of coefficient `j` (normalized Poisson included).
    pub fn coeff_f64(&self, j: usize) -> Result<f64> {
        match self {
            SeriesSpec::PoissonPgf(t0) => {
                let lj = statrs::function::gamma::ln_gamma(j as f64 + 1.0);
                Ok((-t0 + (j as f64) * t0.ln() - lj).exp())
            }
            _ => {
                let s = self.expand(j)?;
                Ok(s.coeff(j).to_f64().unwrap_or_else(|| {
                    rational::log_magnitude(&s.coeff(j))
                        .map(|(sgn, ln)| sgn as f64 * ln.exp())
                        .unwrap_or(0.0)
                }))
            }
        }
    }
}

fn support_gcd(cs: &[BigRational]) -> u64 {
    let mut g: u64 = 0;
    for (j, c) in cs.iter().enumerate().skip(1) {
        if !c.is_zero() {
            g = num_integer::gcd(g, j as u64);
        }
    }
    if g == 0 {
        1
    } else {
        g
    }
}

/// Exact k-th coefficient of `psi^n`, by binary exponentiation with every
/// intermediate product truncated at degree `k`.
pub fn coeff_of_power(spec: &SeriesSpec, k: usize, n: u64) -> Result<BigRational> {
    spec.validate()?;
    let base = spec.expand(k)?;
    Ok(base.pow_trunc(n, k).coeff(k))
}
