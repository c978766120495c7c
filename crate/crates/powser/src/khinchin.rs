//! Mean/variance functionals of the family attached to a series, the mean
//! limit, inversion of the mean function, and the boundary extension at the
//! radius for truncated specs.
//!
//! For a series `f` with nonnegative coefficients, the attached family of
//! discrete variables has `P(X_t = n)` proportional to `a_n t^n`; its mean
//! and variance are `m(t) = t f'(t)/f(t)` and `sigma^2(t) = t m'(t)`.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational;
use crate::series::ExactSeries;
use crate::spec::SeriesSpec;

/// Evaluation record of the family functionals at one radius `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KhinchinEval {
    pub t: f64,
    /// `f(t)`; may overflow to `inf` for extreme arguments (use `log_f`).
    pub f_val: f64,
    pub f_prime: f64,
    pub f_double_prime: f64,
    /// `ln f(t)`, finite whenever `t` is in the evaluation domain.
    pub log_f: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Limit of the mean function as `t` approaches the radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanLimit {
    Finite(f64),
    Infinite,
}

impl MeanLimit {
    pub fn is_finite(&self) -> bool {
        matches!(self, MeanLimit::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            MeanLimit::Finite(v) => *v,
            MeanLimit::Infinite => f64::INFINITY,
        }
    }
}

fn check_domain(spec: &SeriesSpec, t: f64) -> Result<()> {
    let limit = spec.eval_limit();
    let ok = if matches!(spec, SeriesSpec::Truncated { .. }) {
        (0.0..=limit).contains(&t)
    } else {
        (0.0..limit).contains(&t)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::RangeError { t, limit })
    }
}

/// Exact rational Horner for `f`, `f'`, `f''` of a coefficient list at a
/// rational point, then conversion to floats via log-magnitude when needed.
fn eval_list_exact(coeffs: &[BigRational], t: f64) -> (f64, f64, f64, f64) {
    let tq = rational::from_f64(t).expect("finite t");
    let f = ExactSeries::from_coeffs(coeffs.to_vec());
    let fp = f.derivative();
    let fpp = fp.derivative();
    let fv = f.eval(&tq);
    let fpv = fp.eval(&tq);
    let fppv = fpp.eval(&tq);
    let log_f = rational::log_magnitude(&fv).map(|(_, l)| l).unwrap_or(f64::NEG_INFINITY);
    (to_f64_sat(&fv), to_f64_sat(&fpv), to_f64_sat(&fppv), log_f)
}

fn to_f64_sat(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        rational::log_magnitude(r)
            .map(|(sgn, ln)| sgn as f64 * ln.exp())
            .unwrap_or(0.0)
    })
}

/// Evaluate the family functionals at `t`. Closed forms for the builtin
/// kinds; exact rational Horner for coefficient lists.
pub fn evaluate(spec: &SeriesSpec, t: f64) -> Result<KhinchinEval> {
    spec.validate()?;
    check_domain(spec, t)?;
    let (f_val, f_prime, f_double_prime, log_f, mean, variance) = match spec {
        SeriesSpec::Exp => {
            let f = t.exp();
            (f, f, f, t, t, t)
        }
        SeriesSpec::Affine(a, b) => {
            let (a, b) = (to_f64_sat(a), to_f64_sat(b));
            let f = a + b * t;
            let m = b * t / f;
            (f, b, 0.0, f.ln(), m, m * (1.0 - m))
        }
        SeriesSpec::Geometric => {
            let u = 1.0 - t;
            (1.0 / u, 1.0 / (u * u), 2.0 / (u * u * u), -u.ln(), t / u, t / (u * u))
        }
        SeriesSpec::BinomialPower(d) => {
            let d = *d as f64;
            let f = (1.0 + t).powf(d);
            let m = d * t / (1.0 + t);
            (
                f,
                d * (1.0 + t).powf(d - 1.0),
                d * (d - 1.0) * (1.0 + t).powf(d - 2.0),
                d * (1.0 + t).ln(),
                m,
                d * t / ((1.0 + t) * (1.0 + t)),
            )
        }
        SeriesSpec::PoissonPgf(t0) => {
            let log_f = t0 * (t - 1.0);
            let f = log_f.exp();
            (f, t0 * f, t0 * t0 * f, log_f, t0 * t, t0 * t)
        }
        SeriesSpec::ExpPolynomial(gs) => {
            // ln f = g(t); m = t g'(t); sigma^2 = t g'(t) + t^2 g''(t)
            let (g, gp, gpp, _) = eval_list_exact(gs, t);
            let log_f = g;
            let f = log_f.exp();
            let m = t * gp;
            (f, gp * f, (gpp + gp * gp) * f, log_f, m, t * gp + t * t * gpp)
        }
        SeriesSpec::Polynomial(cs) | SeriesSpec::Truncated { coeffs: cs, .. } => {
            let (f, fp, fpp, log_f) = eval_list_exact(cs, t);
            let m = t * fp / f;
            let var = m + t * t * fpp / f - m * m;
            (f, fp, fpp, log_f, m, var)
        }
    };
    Ok(KhinchinEval { t, f_val, f_prime, f_double_prime, log_f, mean, variance })
}

/// Limit of the mean function at the radius. Finite exactly for polynomials
/// (value = degree) and for finite-radius series whose first-moment sum
/// converges at the radius.
pub fn mean_limit(spec: &SeriesSpec) -> Result<MeanLimit> {
    spec.validate()?;
    Ok(match spec {
        SeriesSpec::Exp | SeriesSpec::Geometric | SeriesSpec::PoissonPgf(_) => MeanLimit::Infinite,
        SeriesSpec::ExpPolynomial(_) => MeanLimit::Infinite,
        SeriesSpec::Affine(_, _) => MeanLimit::Finite(1.0),
        SeriesSpec::BinomialPower(d) => MeanLimit::Finite(*d as f64),
        SeriesSpec::Polynomial(cs) => {
            let deg = cs.iter().rposition(|c| !c.is_zero()).unwrap_or(0);
            MeanLimit::Finite(deg as f64)
        }
        SeriesSpec::Truncated { coeffs, radius_hint, .. } => {
            if !radius_hint.is_finite() {
                return Ok(MeanLimit::Infinite);
            }
            match boundary_sums(coeffs, *radius_hint) {
                Ok(b) if b.first_moment_converges => MeanLimit::Finite(b.mean),
                _ => MeanLimit::Infinite,
            }
        }
    })
}

struct BoundarySums {
    f: BigRational,
    mean: f64,
    variance: f64,
    first_moment_converges: bool,
    second_moment_converges: bool,
}

/// Partial sums of `f`, `f'`, `f''` at the declared radius, with a decay
/// heuristic deciding whether the weighted tails can be trusted. Short
/// supports are taken at face value (a complete polynomial supplied as a
/// list); longer ones must show their weighted terms dying out inside the
/// observed window.
fn boundary_sums(coeffs: &[BigRational], radius: f64) -> Result<BoundarySums> {
    let r = rational::from_f64(radius)
        .ok_or_else(|| Error::InvalidSpec("radius hint must be finite here".into()))?;
    let f = ExactSeries::from_coeffs(coeffs.to_vec());
    let fv = f.eval(&r);
    let fpv = f.derivative().eval(&r);
    let fppv = f.derivative().derivative().eval(&r);

    let weighted = |w: fn(f64) -> f64| -> Vec<f64> {
        let mut rn = 1.0f64;
        coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| {
                let v = w(n as f64) * to_f64_sat(c) * rn;
                rn *= radius;
                v
            })
            .collect()
    };
    let first = trusts_tail(&weighted(|n| n));
    let second = trusts_tail(&weighted(|n| n * n));

    let m = to_f64_sat(&(&fpv * rational::from_f64(radius).unwrap() / &fv));
    let var = m + radius * radius * to_f64_sat(&fppv) / to_f64_sat(&fv) - m * m;
    Ok(BoundarySums {
        f: fv,
        mean: m,
        variance: var,
        first_moment_converges: first,
        second_moment_converges: second,
    })
}

/// Decay heuristic on a nonnegative term sequence: a handful of nonzero
/// terms is accepted as a complete sum; otherwise the final third of the
/// window must be negligible against the whole.
fn trusts_tail(terms: &[f64]) -> bool {
    let nonzero = terms.iter().filter(|&&v| v > 0.0).count();
    if nonzero <= 6 {
        return true;
    }
    let total: f64 = terms.iter().sum();
    let tail_start = terms.len() - terms.len() / 3;
    let tail_max = terms[tail_start..].iter().cloned().fold(0.0f64, f64::max);
    tail_max <= 1e-6 * total
}

/// Family functionals at `t = R` for a truncated spec with finite declared
/// radius. Requires the first- and second-moment sums to pass the decay
/// heuristic; a divergent second moment is reported as such.
pub fn boundary_eval(spec: &SeriesSpec) -> Result<KhinchinEval> {
    spec.validate()?;
    let SeriesSpec::Truncated { coeffs, radius_hint, .. } = spec else {
        return Err(Error::NoBoundaryExtension(
            "boundary evaluation needs a truncated spec with a finite declared radius".into(),
        ));
    };
    if !radius_hint.is_finite() {
        return Err(Error::NoBoundaryExtension("declared radius is infinite".into()));
    }
    let sums = boundary_sums(coeffs, *radius_hint)?;
    if !sums.first_moment_converges {
        return Err(Error::NoBoundaryExtension(
            "first-moment sum shows no decay at the declared radius".into(),
        ));
    }
    if !sums.second_moment_converges {
        return Err(Error::InfiniteBoundaryVariance);
    }
    let r = *radius_hint;
    let rq = rational::from_f64(r).unwrap();
    let f = ExactSeries::from_coeffs(coeffs.to_vec());
    let fp = f.derivative().eval(&rq);
    let fpp = f.derivative().derivative().eval(&rq);
    let log_f = rational::log_magnitude(&sums.f).map(|(_, l)| l).unwrap_or(f64::NEG_INFINITY);
    Ok(KhinchinEval {
        t: r,
        f_val: to_f64_sat(&sums.f),
        f_prime: to_f64_sat(&fp),
        f_double_prime: to_f64_sat(&fpp),
        log_f,
        mean: sums.mean,
        variance: sums.variance,
    })
}

/// Relative tolerance on the mean reached by [`solve_mean`].
pub const SOLVE_MEAN_TOL: f64 = 1e-12;

/// Invert the mean function: the unique `t` with `m(t) = x`. Geometric
/// bracketing, then bisection (the mean is strictly increasing), then a few
/// Newton steps using `m'(t) = sigma^2(t)/t`.
pub fn solve_mean(spec: &SeriesSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    let limit_value = mean_limit(spec)?;
    let m_limit = limit_value.value();
    if x.is_nan() || x <= 0.0 {
        return Err(Error::MeanOutOfRange { target: x, limit: m_limit });
    }
    let tol = SOLVE_MEAN_TOL * x.max(1.0);
    if x >= m_limit - tol {
        // Exactly the limit: admissible when the family extends to t = R.
        if (x - m_limit).abs() <= tol && boundary_eval(spec).is_ok() {
            return Ok(spec.radius());
        }
        return Err(Error::MeanOutOfRange { target: x, limit: m_limit });
    }

    let t_limit = spec.eval_limit();
    let m_at = |t: f64| evaluate(spec, t).map(|e| e.mean);

    // Bracket: grow t towards the evaluation limit until the mean crosses x.
    let mut lo = 0.0f64;
    let mut hi = if t_limit.is_finite() { t_limit / 2.0 } else { 1.0 };
    let mut crossed = false;
    for _ in 0..1100 {
        match m_at(hi) {
            Ok(m) if m >= x => {
                crossed = true;
                break;
            }
            Ok(_) => {
                lo = hi;
                hi = if t_limit.is_finite() { (hi + t_limit) / 2.0 } else { hi * 2.0 };
                if !t_limit.is_finite() && hi > 1e300 {
                    break;
                }
            }
            Err(_) => break,
        }
    }
    if !crossed {
        // The window (truncated specs stop at 95% of the hint) cannot reach x.
        let reachable = m_at(t_limit.min(1e300)).unwrap_or(0.0);
        return Err(Error::MeanOutOfRange { target: x, limit: reachable });
    }

    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let m = m_at(t)?;
        if (m - x).abs() <= tol {
            break;
        }
        if m < x {
            lo = t;
        } else {
            hi = t;
        }
        t = 0.5 * (lo + hi);
        if (hi - lo) <= f64::EPSILON * hi.abs() {
            break;
        }
    }

    // Newton polish with the exact derivative m'(t) = sigma^2(t)/t.
    for _ in 0..5 {
        let e = evaluate(spec, t)?;
        if (e.mean - x).abs() <= tol {
            break;
        }
        if e.variance <= 0.0 || e.t <= 0.0 {
            break;
        }
        let step = (e.mean - x) * e.t / e.variance;
        let candidate = t - step;
        if candidate > lo && candidate < hi {
            t = candidate;
        } else {
            break;
        }
    }
    Ok(t)
}
