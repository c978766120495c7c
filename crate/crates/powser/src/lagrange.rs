//! Coefficients of the solution of `g(w) = w psi(g(w))` and their
//! asymptotics (Otter–Meir–Moon, in all three mean-limit cases).
//!
//! Exact coefficients always come from the inversion identity
//! `A_n = (1/n) coeff_{n-1}(psi^n)` — one truncated power computation —
//! never from iterating the functional equation; the equation itself is
//! kept as a test oracle.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::khinchin::{self, MeanLimit};
use crate::powers::{FactorLabel, LogEstimate, RegimeTag, UpperEnvelope};
use crate::rational;
use crate::spec::{coeff_of_power, SeriesSpec};

use crate::powers::HALF_LN_TWO_PI;

/// `A_n`, the n-th coefficient of the solution of Lagrange's equation with
/// data `psi`, by the inversion identity.
pub fn lagrange_coeff(spec: &SeriesSpec, n: u64) -> Result<BigRational> {
    assert!(n >= 1);
    let c = coeff_of_power(spec, n as usize - 1, n)?;
    Ok(c / BigRational::from_integer(n.into()))
}

/// `B_{n,q}`, the n-th coefficient of `g^q`: `(q/n) coeff_{n-q}(psi^n)`,
/// zero for `n < q`.
pub fn lagrange_power_coeff(spec: &SeriesSpec, n: u64, q: u64) -> Result<BigRational> {
    assert!(n >= 1 && q >= 1);
    if n < q {
        return Ok(BigRational::zero());
    }
    let c = coeff_of_power(spec, (n - q) as usize, n)?;
    Ok(c * BigRational::new(q.into(), n.into()))
}

/// n-th coefficient of `H(g)` for a series `H` with nonnegative
/// coefficients: `(1/n) coeff_{n-1}(H'(z) psi(z)^n)`; `H(0)` for `n = 0`.
pub fn lagrange_h_coeff(h: &SeriesSpec, spec: &SeriesSpec, n: u64) -> Result<BigRational> {
    h.validate_nonnegative()?;
    if n == 0 {
        return Ok(h.expand(0)?.coeff(0));
    }
    let cap = n as usize - 1;
    let h_prime = h.expand(n as usize)?.derivative().resized(cap);
    let psi_n = spec.expand(cap)?.pow_trunc(n, cap);
    let c = h_prime.mul_trunc(&psi_n, cap).coeff(cap);
    Ok(c / BigRational::from_integer(n.into()))
}

/// Result of the coefficient asymptotics for Lagrange solutions. The
/// sub-unit mean-limit case only yields a little-o bound, which is kept as
/// a distinct variant so it cannot be mistaken for an equivalent.
#[derive(Debug, Clone, PartialEq)]
pub enum OmmAsymptotic {
    Estimate(LogEstimate),
    Envelope(UpperEnvelope),
}

impl OmmAsymptotic {
    pub fn estimate(&self) -> Option<&LogEstimate> {
        match self {
            OmmAsymptotic::Estimate(e) => Some(e),
            OmmAsymptotic::Envelope(_) => None,
        }
    }
}

fn omm_factors(
    regime: RegimeTag,
    q_gauge: u64,
    q_power: u64,
    eval: &khinchin::KhinchinEval,
    n: u64,
) -> LogEstimate {
    let tau = eval.t;
    let factors = vec![
        (FactorLabel::GaugeLogQ, (q_gauge as f64).ln()),
        (FactorLabel::PrefactorLog, (q_power as f64).ln()),
        (FactorLabel::LogPrefactor, -HALF_LN_TWO_PI),
        (FactorLabel::LogTauPower, q_power as f64 * tau.ln()),
        (FactorLabel::NegLogSigmaTau, -0.5 * eval.variance.ln()),
        (FactorLabel::NegThreeHalvesLogN, -1.5 * (n as f64).ln()),
        (FactorLabel::NLogPsiOverTau, n as f64 * (eval.log_f - tau.ln())),
    ];
    LogEstimate::from_factors(regime, tau, factors)
}

/// Otter–Meir–Moon asymptotics for `A_n`.
///
/// - mean limit above 1: saddle at `m(tau) = 1`,
///   `A_n ~ Q/sqrt(2 pi) * tau/sigma(tau) * n^{-3/2} * (psi(tau)/tau)^n`;
/// - mean limit exactly 1 with finite radius and boundary variance: same
///   with `tau = R`;
/// - mean limit exactly 1 with infinite radius: the data is affine and the
///   solution is the closed geometric form, reported exactly;
/// - mean limit below 1: only an upper envelope (little-o, not equivalent).
pub fn omm_asymptotic(spec: &SeriesSpec, n: u64) -> Result<OmmAsymptotic> {
    spec.validate()?;
    let q = spec.gauge();
    if q > 1 && spec.gauge_is_observed() {
        return Err(Error::InvalidSpec(
            "observed gauge of a truncated list is a lower-confidence value".into(),
        ));
    }
    if n % q != 1 % q {
        // A_n vanishes off the residue class 1 mod Q
        return Ok(OmmAsymptotic::Estimate(LogEstimate::zero_flagged(RegimeTag::Omm)));
    }
    let limit = khinchin::mean_limit(spec)?;
    match limit {
        MeanLimit::Infinite => {
            let tau = khinchin::solve_mean(spec, 1.0)?;
            let eval = khinchin::evaluate(spec, tau)?;
            Ok(OmmAsymptotic::Estimate(omm_factors(RegimeTag::Omm, q, 1, &eval, n)))
        }
        MeanLimit::Finite(m) if m > 1.0 + 1e-12 => {
            let tau = khinchin::solve_mean(spec, 1.0)?;
            let eval = khinchin::evaluate(spec, tau)?;
            Ok(OmmAsymptotic::Estimate(omm_factors(RegimeTag::Omm, q, 1, &eval, n)))
        }
        MeanLimit::Finite(m) if (m - 1.0).abs() <= 1e-12 => {
            if spec.radius().is_finite() {
                let eval = khinchin::boundary_eval(spec)?;
                Ok(OmmAsymptotic::Estimate(omm_factors(RegimeTag::OmmBoundary, q, 1, &eval, n)))
            } else {
                affine_closed_form(spec, n).map(OmmAsymptotic::Estimate)
            }
        }
        MeanLimit::Finite(_) => {
            // sub-unit mean limit: R is finite, little-o envelope only
            let eval = khinchin::boundary_eval(spec)?;
            let r = eval.t;
            let log_value =
                (n as f64 - 1.0) * (eval.log_f - r.ln()) + eval.log_f - 1.5 * (n as f64).ln();
            Ok(OmmAsymptotic::Envelope(UpperEnvelope {
                log_value,
                note: "little-o, not an asymptotic equivalent".into(),
            }))
        }
    }
}

/// `A_n = a b^{n-1}` exactly when the data is `a + b z`.
fn affine_closed_form(spec: &SeriesSpec, n: u64) -> Result<LogEstimate> {
    if spec.polynomial_degree() != Some(1) {
        return Err(Error::UncertifiableCase(
            "mean limit 1 with infinite radius requires affine data presented as such".into(),
        ));
    }
    let s = spec.expand(1)?;
    let (a, b) = (s.coeff(0), s.coeff(1));
    let factors = vec![
        (FactorLabel::PrefactorLog, rational::ln_positive(&a)),
        (FactorLabel::BasePower, (n as f64 - 1.0) * rational::ln_positive(&b)),
    ];
    Ok(LogEstimate::from_factors(RegimeTag::AffineClosedForm, 0.0, factors))
}

/// Asymptotics of `B_{n,q}`, fixed `q` or sliding `q ~ alpha n + beta
/// sqrt(n)`; assumes gauge 1 and a mean limit above `1 - alpha`.
pub fn omm_power_asymptotic(
    spec: &SeriesSpec,
    n: u64,
    q: u64,
    alpha: f64,
    beta: f64,
) -> Result<LogEstimate> {
    spec.validate()?;
    if spec.gauge() != 1 {
        return Err(Error::RegimeMismatch(
            "power asymptotics of Lagrange solutions assume gauge 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::RegimeMismatch("alpha must lie in [0, 1)".into()));
    }
    if n < q {
        return Ok(LogEstimate::zero_flagged(RegimeTag::OmmPower));
    }
    let target = 1.0 - alpha;
    let limit = khinchin::mean_limit(spec)?.value();
    if limit <= target {
        return Err(Error::MeanOutOfRange { target, limit });
    }
    let tau = khinchin::solve_mean(spec, target)?;
    let eval = khinchin::evaluate(spec, tau)?;
    let mut est = omm_factors(RegimeTag::OmmPower, 1, q, &eval, n);
    if alpha != 0.0 || beta != 0.0 {
        let correction = -beta * beta / (2.0 * eval.variance);
        let mut factors: Vec<(FactorLabel, f64)> =
            est.factors.iter().map(|(l, v)| (*l, *v)).collect();
        factors.push((FactorLabel::Correction, correction));
        est = LogEstimate::from_factors(RegimeTag::OmmPower, tau, factors);
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionRadiusKind {
    /// `tau / psi(tau)` with `m(tau) = 1`
    Saddle,
    /// `R / psi(R)` in the boundary case (mean limit exactly 1)
    Boundary,
    /// `1/b` for affine data `a + b z`
    AffineClosedForm,
    /// `R / psi(R)` when the mean limit is below 1: read off the envelope
    /// rather than an asymptotic equivalent
    FromEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionRadius {
    pub value: f64,
    pub kind: SolutionRadiusKind,
}

/// Radius of convergence of the solution of Lagrange's equation.
pub fn solution_radius(spec: &SeriesSpec) -> Result<SolutionRadius> {
    spec.validate()?;
    let limit = khinchin::mean_limit(spec)?;
    match limit {
        MeanLimit::Infinite => saddle_radius(spec),
        MeanLimit::Finite(m) if m > 1.0 + 1e-12 => saddle_radius(spec),
        MeanLimit::Finite(m) if (m - 1.0).abs() <= 1e-12 => {
            if spec.radius().is_finite() {
                let eval = khinchin::boundary_eval(spec)?;
                Ok(SolutionRadius {
                    value: (eval.t.ln() - eval.log_f).exp(),
                    kind: SolutionRadiusKind::Boundary,
                })
            } else {
                if spec.polynomial_degree() != Some(1) {
                    return Err(Error::UncertifiableCase(
                        "mean limit 1 with infinite radius requires affine data".into(),
                    ));
                }
                let b = spec.expand(1)?.coeff(1);
                Ok(SolutionRadius {
                    value: (-rational::ln_positive(&b)).exp(),
                    kind: SolutionRadiusKind::AffineClosedForm,
                })
            }
        }
        MeanLimit::Finite(_) => {
            let eval = khinchin::boundary_eval(spec)?;
            Ok(SolutionRadius {
                value: (eval.t.ln() - eval.log_f).exp(),
                kind: SolutionRadiusKind::FromEnvelope,
            })
        }
    }
}

fn saddle_radius(spec: &SeriesSpec) -> Result<SolutionRadius> {
    let tau = khinchin::solve_mean(spec, 1.0)?;
    let eval = khinchin::evaluate(spec, tau)?;
    Ok(SolutionRadius {
        value: (tau.ln() - eval.log_f).exp(),
        kind: SolutionRadiusKind::Saddle,
    })
}
