//! Numeric diagnostics for uniform Gaussianity: the normalized
//! characteristic function, the central-limit integral `I_n(t)`, the cubic
//! modulus bound `omega_g`, and major/minor-arc checks with explicit cuts
//! for exponentials of polynomials.
//!
//! Suprema are grid maxima over 4096 points, not certified global maxima:
//! the diagnostics are trend evidence for asymptotic statements, and every
//! report carries its grid size so tolerances stay interpretable.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::khinchin;
use crate::spec::SeriesSpec;

/// Characteristic function of the family variable at radius `t`:
/// `f(t e^{i theta}) / f(t)`.
pub fn char_fn(spec: &SeriesSpec, t: f64, theta: f64) -> Result<Complex64> {
    spec.validate()?;
    let limit = spec.eval_limit();
    if !(t > 0.0 && t <= limit) || (t == limit && !matches!(spec, SeriesSpec::Truncated { .. })) {
        return Err(Error::RangeError { t, limit });
    }
    let w = Complex64::from_polar(t, theta);
    Ok(match spec {
        SeriesSpec::Exp => (w - t).exp(),
        SeriesSpec::PoissonPgf(t0) => ((w - t) * *t0).exp(),
        SeriesSpec::ExpPolynomial(gs) => {
            let g = to_f64_coeffs(gs);
            (horner_complex(&g, w) - horner_f64(&g, t)).exp()
        }
        SeriesSpec::Geometric => {
            Complex64::new(1.0 - t, 0.0) / (Complex64::new(1.0, 0.0) - w)
        }
        SeriesSpec::Affine(a, b) => {
            let (a, b) = (rat_f64(a), rat_f64(b));
            (w * b + a) / (a + b * t)
        }
        SeriesSpec::BinomialPower(d) => {
            ((Complex64::new(1.0, 0.0) + w) / (1.0 + t)).powu(*d)
        }
        SeriesSpec::Polynomial(cs) | SeriesSpec::Truncated { coeffs: cs, .. } => {
            let c = to_f64_coeffs(cs);
            horner_complex(&c, w) / horner_f64(&c, t)
        }
    })
}

fn rat_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

fn to_f64_coeffs(cs: &[BigRational]) -> Vec<f64> {
    cs.iter().map(rat_f64).collect()
}

fn horner_complex(cs: &[f64], w: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in cs.iter().rev() {
        acc = acc * w + c;
    }
    acc
}

fn horner_f64(cs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for &c in cs.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

/// The exponent polynomial of a Gaussian-eligible spec (`f = e^g`), as
/// float coefficients. Eligibility is limited to exponentials: polynomials
/// are not Gaussian, and nothing certifies an arbitrary truncated list.
fn exponent_polynomial(spec: &SeriesSpec) -> Result<Vec<f64>> {
    match spec {
        SeriesSpec::Exp => Ok(vec![0.0, 1.0]),
        SeriesSpec::PoissonPgf(t0) => Ok(vec![0.0, *t0]),
        SeriesSpec::ExpPolynomial(gs) => Ok(to_f64_coeffs(gs)),
        _ => Err(Error::NotUniformlyGaussian),
    }
}

/// `ln` of the characteristic function of the normalized variable, times
/// `n`, for `f = e^g`: `n (g(t e^{i phi}) - g(t) - i phi m)` at
/// `phi = theta / (sigma sqrt(n))`.
fn log_char_normalized_pow(
    g: &[f64],
    t: f64,
    m: f64,
    sigma: f64,
    theta: f64,
    n: u64,
) -> Complex64 {
    let phi = theta / (sigma * (n as f64).sqrt());
    let w = Complex64::from_polar(t, phi);
    (horner_complex(g, w) - horner_f64(g, t) - Complex64::new(0.0, phi * m)) * n as f64
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    debug_assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Composite Simpson with interval doubling until two successive estimates
/// agree to the tolerance. Returns (value, intervals used).
fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, usize) {
    let mut intervals = 64usize;
    let mut last = simpson(&f, a, b, intervals);
    loop {
        intervals *= 2;
        let next = simpson(&f, a, b, intervals);
        if (next - last).abs() <= rel_tol * next.abs() + 1e-12 || intervals >= (1 << 20) {
            return (next, intervals);
        }
        last = next;
    }
}

/// The uniform-Gaussianity integral
/// `I_n(t) = \int_{|theta| <= pi sigma(t) sqrt(n)}
///     | E(e^{i theta X_norm / sqrt(n)})^n - e^{-theta^2/2} | d theta`,
/// by adaptive composite Simpson. Only exponential kinds are eligible.
pub fn gaussian_integral_i(spec: &SeriesSpec, t: f64, n: u64) -> Result<f64> {
    Ok(gaussian_integral_detail(spec, t, n)?.0)
}

fn gaussian_integral_detail(spec: &SeriesSpec, t: f64, n: u64) -> Result<(f64, usize)> {
    spec.validate()?;
    let g = exponent_polynomial(spec)?;
    let eval = khinchin::evaluate(spec, t)?;
    let (m, sigma) = (eval.mean, eval.variance.sqrt());
    let range = std::f64::consts::PI * sigma * (n as f64).sqrt();
    let integrand = |theta: f64| {
        let log_e = log_char_normalized_pow(&g, t, m, sigma, theta, n);
        let gauss = (-theta * theta / 2.0).exp();
        (log_e.exp() - gauss).norm()
    };
    // even integrand: integrate the right half and double
    let (half, points) = adaptive_simpson(integrand, 0.0, range, 1e-7);
    Ok((2.0 * half, points))
}

/// Cubic modulus bound entering the major-arc estimate for `f = e^g`:
/// `omega_g(t) = (1/6) (b1 t + 8 b2 t^2 + (9/2) t^3 g'''(t))`.
pub fn omega_g(g_coeffs: &[BigRational], t: f64) -> f64 {
    let g = to_f64_coeffs(g_coeffs);
    let b1 = g.get(1).copied().unwrap_or(0.0);
    let b2 = g.get(2).copied().unwrap_or(0.0);
    let mut gppp = 0.0;
    for (j, &c) in g.iter().enumerate().skip(3).rev() {
        let jf = j as f64;
        gppp = gppp * t + c * jf * (jf - 1.0) * (jf - 2.0);
    }
    (b1 * t + 8.0 * b2 * t * t + 4.5 * t * t * t * gppp) / 6.0
}

/// Major/minor-arc diagnostic report for `f = e^g` at one `(n, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ArcReport {
    pub n: u64,
    pub t: f64,
    /// The cut `h(n, t) = t^{-5N/12} n^{-5/12}` separating the arcs.
    pub cut: f64,
    pub major_sup: f64,
    pub minor_sup: f64,
    pub integral_i: f64,
    /// Grid size used for the suprema and Simpson intervals for the
    /// integral.
    pub quadrature_points: u64,
}

const ARC_GRID: usize = 4096;

/// Evaluate the uniformly-Hayman arc conditions for `f = e^g` with the cut
/// `h(n,t) = t^{-5N/12} n^{-5/12}` (`N` the degree of `g`):
///
/// - major: `sup_{|theta| <= h sigma sqrt(n)}
///     |E(e^{i theta X_norm/sqrt(n)})^n e^{theta^2/2} - 1|`
/// - minor: `sqrt(n) sigma(t) sup_{h <= |theta| <= pi} |E(e^{i theta X_t})^n|`
///
/// Requires the support gcd of `g` to be 1 and `t >= 1`.
pub fn hayman_cut_check(g_coeffs: &[BigRational], n: u64, t: f64) -> Result<ArcReport> {
    let spec = SeriesSpec::ExpPolynomial(normalize_exponent(g_coeffs));
    spec.validate()?;
    let q = spec.gauge();
    if q != 1 {
        return Err(Error::ExponentGaugeNotOne(q));
    }
    if t < 1.0 {
        return Err(Error::InvalidSpec(
            "cut exponent t^{-5N/12} assumes t >= 1".into(),
        ));
    }
    let g = exponent_polynomial(&spec)?;
    let degree = g.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    let cut = t.powf(-(5.0 * degree as f64) / 12.0) * (n as f64).powf(-5.0 / 12.0);

    let eval = khinchin::evaluate(&spec, t)?;
    let (m, sigma) = (eval.mean, eval.variance.sqrt());
    let sqrt_n = (n as f64).sqrt();

    // major arc: |theta| <= cut * sigma * sqrt(n)
    let major_range = cut * sigma * sqrt_n;
    let mut major_sup = 0.0f64;
    for i in 0..ARC_GRID {
        let theta = major_range * i as f64 / (ARC_GRID - 1) as f64;
        let log_e = log_char_normalized_pow(&g, t, m, sigma, theta, n);
        let value = ((log_e + theta * theta / 2.0).exp() - 1.0).norm();
        major_sup = major_sup.max(value);
    }

    // minor arc: cut <= |theta| <= pi, un-normalized variable
    let gt = horner_f64(&g, t);
    let mut minor_sup = 0.0f64;
    for i in 0..ARC_GRID {
        let theta =
            cut + (std::f64::consts::PI - cut) * i as f64 / (ARC_GRID - 1) as f64;
        let w = Complex64::from_polar(t, theta);
        let re = horner_complex(&g, w).re - gt;
        minor_sup = minor_sup.max((re * n as f64).exp());
    }
    minor_sup *= sqrt_n * sigma;

    let (integral_i, simpson_points) = gaussian_integral_detail(&spec, t, n)?;
    Ok(ArcReport {
        n,
        t,
        cut,
        major_sup,
        minor_sup,
        integral_i,
        quadrature_points: ARC_GRID.max(simpson_points) as u64,
    })
}

/// Accept exponent coefficient lists given from index 0 or with the
/// constant term implied; the constant cancels from every normalized
/// quantity and is pinned to zero.
fn normalize_exponent(g_coeffs: &[BigRational]) -> Vec<BigRational> {
    let mut g = g_coeffs.to_vec();
    if g.first().map(|c| !c.is_zero()).unwrap_or(false) {
        g.insert(0, BigRational::zero());
    } else if g.is_empty() {
        g.push(BigRational::zero());
    }
    if g.first().map(|c| !c.is_zero()).unwrap_or(false) {
        g[0] = BigRational::zero();
    }
    g
}
