//! Regime-dispatched asymptotic estimators for the k-th coefficient of
//! `psi^n` and of `h(z) psi(z)^n`.
//!
//! All estimates are returned in log space as a [`LogEstimate`]: the
//! quantities `psi(tau)^n / tau^k` overflow any fixed-width float long
//! before the regimes become accurate. Each estimate carries a labeled
//! factor breakdown whose sum is the log value.
//!
//! The caller names the regime; there is no silent auto-dispatch. The
//! hypotheses differ per regime (gauge divisibility, `psi'(0) != 0`,
//! uniform Gaussianity, boundary moments) and picking one implicitly would
//! mask precondition failures. [`suggest_regime`] exists as a convenience
//! and reports the unmet preconditions of the regimes it rejects.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::khinchin;
use crate::rational;
use crate::series::ExactSeries;
use crate::spec::SeriesSpec;

pub(crate) const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RegimeTag {
    Comparable,
    LimitRatio,
    Boundary,
    SmallK,
    SmallKUnsimplified,
    SmallKClosed,
    LargeK,
    FixedK,
    Omm,
    OmmBoundary,
    OmmPower,
    AffineClosedForm,
    LagrangianAsymptotic,
}

/// Labels for the additive factors of a log estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FactorLabel {
    /// `ln Q` for gauge `Q`
    GaugeLogQ,
    /// `-(1/2) ln(2 pi)` and similar constant prefactors
    LogPrefactor,
    /// `n ln psi(tau)`
    NLogPsiTau,
    /// `-k ln tau`
    NegKLogTau,
    /// `-ln sigma(tau)`
    NegLogSigmaTau,
    /// `-(1/2) ln n`
    NegHalfLogN,
    /// `-(1/2) ln k` (simplified small-k prefactor)
    NegHalfLogK,
    /// `-(3/2) ln n`
    NegThreeHalvesLogN,
    /// `q ln tau`
    LogTauPower,
    /// `n ln(psi(tau)/tau)`
    NLogPsiOverTau,
    /// damping or series corrections, e.g. `-omega^2/(2 sigma^2)`
    Correction,
    /// `ln h(tau)`, `ln h(0)`, or a leading-coefficient log
    PrefactorLog,
    /// `(n-k) ln b0 + k ln b1 + k ln n + k - k ln k`
    StirlingBlock,
    /// `(n - gamma) ln b0`
    BasePower,
    /// `gamma ln n`
    NPower,
    /// initial-distribution weight of a Lagrangian estimate
    InitialWeight,
    /// tilt ratio block of a Lagrangian estimate
    TiltRatio,
}

/// An asymptotic coefficient estimate carried as the natural log of its
/// (positive) magnitude, with the additive factor breakdown. A `None`
/// log value means the coefficient is exactly zero (gauge divisibility
/// failed), not that the estimate is unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEstimate {
    pub regime: RegimeTag,
    /// Saddle radius used, when the regime has one (0.0 otherwise).
    pub tau: f64,
    pub log_value: Option<f64>,
    pub factors: BTreeMap<FactorLabel, f64>,
}

impl LogEstimate {
    pub fn from_factors(regime: RegimeTag, tau: f64, factors: Vec<(FactorLabel, f64)>) -> Self {
        let mut map = BTreeMap::new();
        let mut sum = 0.0;
        for (label, value) in factors {
            sum += value;
            let collision = map.insert(label, value);
            debug_assert!(collision.is_none(), "duplicate factor label {label:?}");
        }
        LogEstimate { regime, tau, log_value: Some(sum), factors: map }
    }

    pub fn zero_flagged(regime: RegimeTag) -> Self {
        LogEstimate { regime, tau: 0.0, log_value: None, factors: BTreeMap::new() }
    }

    pub fn is_zero_flagged(&self) -> bool {
        self.log_value.is_none()
    }

    /// The estimate as a float; 0 when zero-flagged, `inf` on overflow.
    pub fn value(&self) -> f64 {
        self.log_value.map(f64::exp).unwrap_or(0.0)
    }

    pub fn factor_sum(&self) -> f64 {
        self.factors.values().sum()
    }
}

/// A bound that is `o(exp(log_value))`, not an asymptotic equivalent.
/// Returned instead of a [`LogEstimate`] where the theory only gives a
/// little-o statement, so callers cannot confuse the two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpperEnvelope {
    pub log_value: f64,
    pub note: String,
}

/// Gauge usable by the estimators. An observed gauge of 1 is certain
/// (extra support can only lower a gcd); an observed gauge above 1 is not,
/// and truncated specs are refused in that case.
fn certified_gauge(spec: &SeriesSpec) -> Result<u64> {
    let q = spec.gauge();
    if q > 1 && spec.gauge_is_observed() {
        return Err(Error::InvalidSpec(format!(
            "observed gauge {q} of a truncated list is a lower-confidence value; \
             supply the companion series in z^{q} instead"
        )));
    }
    Ok(q)
}

fn mean_limit_value(spec: &SeriesSpec) -> Result<f64> {
    Ok(khinchin::mean_limit(spec)?.value())
}

/// Shared master formula: `ln Q - ln sqrt(2 pi) + n ln psi(tau) - k ln tau
/// - (1/2) ln n - ln sigma(tau)`, assembled from an evaluation record.
fn master_factors(q: u64, eval: &khinchin::KhinchinEval, k: u64, n: u64) -> Vec<(FactorLabel, f64)> {
    vec![
        (FactorLabel::GaugeLogQ, (q as f64).ln()),
        (FactorLabel::LogPrefactor, -HALF_LN_TWO_PI),
        (FactorLabel::NLogPsiTau, n as f64 * eval.log_f),
        (FactorLabel::NegKLogTau, -(k as f64) * eval.t.ln()),
        (FactorLabel::NegHalfLogN, -0.5 * (n as f64).ln()),
        (FactorLabel::NegLogSigmaTau, -0.5 * eval.variance.ln()),
    ]
}

/// Estimator for the regime `k` comparable to `n`: saddle at `m(tau) = k/n`.
pub fn estimate_comparable(spec: &SeriesSpec, k: u64, n: u64) -> Result<LogEstimate> {
    spec.validate()?;
    let q = certified_gauge(spec)?;
    if !k.is_multiple_of(q) {
        return Ok(LogEstimate::zero_flagged(RegimeTag::Comparable));
    }
    let ratio = k as f64 / n as f64;
    let limit = mean_limit_value(spec)?;
    if !(ratio > 0.0 && ratio < limit) {
        return Err(Error::RatioOutOfRange { ratio, limit });
    }
    let tau = khinchin::solve_mean(spec, ratio)?;
    let eval = khinchin::evaluate(spec, tau)?;
    Ok(LogEstimate::from_factors(RegimeTag::Comparable, tau, master_factors(q, &eval, k, n)))
}

/// Estimator for `k/n -> L` with fluctuation scale `omega`: fixed saddle at
/// `m(tau) = L` and Gaussian damping `exp(-omega^2 / (2 sigma^2(tau)))`.
pub fn estimate_limit_ratio(
    spec: &SeriesSpec,
    n: u64,
    ratio_limit: f64,
    omega: f64,
    k: u64,
) -> Result<LogEstimate> {
    spec.validate()?;
    let q = certified_gauge(spec)?;
    if !k.is_multiple_of(q) {
        return Ok(LogEstimate::zero_flagged(RegimeTag::LimitRatio));
    }
    let limit = mean_limit_value(spec)?;
    if ratio_limit.is_nan() || ratio_limit <= 0.0 {
        return Err(Error::RatioOutOfRange { ratio: ratio_limit, limit });
    }
    if ratio_limit >= limit {
        return Err(Error::UseBoundaryEstimator);
    }
    let tau = khinchin::solve_mean(spec, ratio_limit)?;
    let eval = khinchin::evaluate(spec, tau)?;
    let mut factors = master_factors(q, &eval, k, n);
    factors.push((FactorLabel::Correction, -omega * omega / (2.0 * eval.variance)));
    Ok(LogEstimate::from_factors(RegimeTag::LimitRatio, tau, factors))
}

/// Boundary regime `k/n -> M` for a finite-radius spec whose family extends
/// to `t = R` with finite variance. The fluctuation scale is read off the
/// pair `(k, n)` as `omega = (k - n M)/sqrt(n)`.
pub fn estimate_boundary(spec: &SeriesSpec, k: u64, n: u64) -> Result<LogEstimate> {
    spec.validate()?;
    let q = certified_gauge(spec)?;
    if !k.is_multiple_of(q) {
        return Ok(LogEstimate::zero_flagged(RegimeTag::Boundary));
    }
    let eval = khinchin::boundary_eval(spec)?;
    let omega = (k as f64 - n as f64 * eval.mean) / (n as f64).sqrt();
    let mut factors = master_factors(q, &eval, k, n);
    factors.push((FactorLabel::Correction, -omega * omega / (2.0 * eval.variance)));
    Ok(LogEstimate::from_factors(RegimeTag::Boundary, eval.t, factors))
}

fn require_positive_linear(spec: &SeriesSpec) -> Result<(BigRational, BigRational)> {
    let (b0, b1) = spec.b0_b1()?;
    if !b1.is_positive() {
        return Err(Error::NeedsPositiveLinearCoefficient);
    }
    Ok((b0, b1))
}

/// Small-index regime `k = o(n)` with the `1/sqrt(k)` prefactor
/// (`sigma(tau_n) sqrt(n) ~ sqrt(k)` along this regime).
pub fn estimate_small_k(spec: &SeriesSpec, k: u64, n: u64) -> Result<LogEstimate> {
    small_k_impl(spec, k, n, true)
}

/// Small-index regime with the un-simplified `1/(sigma(tau_n) sqrt(n))`
/// prefactor; differs from [`estimate_small_k`] at finite `n`.
pub fn estimate_small_k_unsimplified(spec: &SeriesSpec, k: u64, n: u64) -> Result<LogEstimate> {
    small_k_impl(spec, k, n, false)
}

fn small_k_impl(spec: &SeriesSpec, k: u64, n: u64, simplified: bool) -> Result<LogEstimate> {
    spec.validate()?;
    require_positive_linear(spec)?;
    if k == 0 {
        return Err(Error::RatioOutOfRange { ratio: 0.0, limit: mean_limit_value(spec)? });
    }
    let ratio = k as f64 / n as f64;
    let limit = mean_limit_value(spec)?;
    if ratio >= limit {
        return Err(Error::RatioOutOfRange { ratio, limit });
    }
    let tau = khinchin::solve_mean(spec, ratio)?;
    let eval = khinchin::evaluate(spec, tau)?;
    let (regime, factors) = if simplified {
        (
            RegimeTag::SmallK,
            vec![
                (FactorLabel::LogPrefactor, -HALF_LN_TWO_PI),
                (FactorLabel::NLogPsiTau, n as f64 * eval.log_f),
                (FactorLabel::NegKLogTau, -(k as f64) * tau.ln()),
                (FactorLabel::NegHalfLogK, -0.5 * (k as f64).ln()),
            ],
        )
    } else {
        (
            RegimeTag::SmallKUnsimplified,
            vec![
                (FactorLabel::LogPrefactor, -HALF_LN_TWO_PI),
                (FactorLabel::NLogPsiTau, n as f64 * eval.log_f),
                (FactorLabel::NegKLogTau, -(k as f64) * tau.ln()),
                (FactorLabel::NegHalfLogN, -0.5 * (n as f64).ln()),
                (FactorLabel::NegLogSigmaTau, -0.5 * eval.variance.ln()),
            ],
        )
    };
    Ok(LogEstimate::from_factors(regime, tau, factors))
}

/// Coefficients `B_1..B_j_max` of the expansion of `ln psi` composed with
/// the inverse mean function: `B_j = (1/j) coeff_{j-1}((psi/psi')^{j-1})`.
/// Always `B_1 = 1`; each `B_j` depends only on `b_0..b_j`.
pub fn expansion_b(spec: &SeriesSpec, j_max: usize) -> Result<Vec<BigRational>> {
    spec.validate()?;
    require_positive_linear(spec)?;
    assert!(j_max >= 1);
    let cap = j_max.saturating_sub(1);
    let u = psi_over_psi_prime(spec, cap)?;
    let mut out = Vec::with_capacity(j_max);
    let mut power = ExactSeries::one(cap);
    for j in 1..=j_max {
        out.push(power.coeff(j - 1) / BigRational::from_integer(j.into()));
        if j < j_max {
            power = power.mul_trunc(&u, cap);
        }
    }
    Ok(out)
}

/// Coefficients `C_1..C_j_max` of the expansion of `ln(m^{-1}(z)/z)`:
/// `C_j = (1/j) coeff_j((psi/psi')^j)`, equal to `(j+1)/j * B_{j+1}`.
pub fn expansion_c(spec: &SeriesSpec, j_max: usize) -> Result<Vec<BigRational>> {
    spec.validate()?;
    require_positive_linear(spec)?;
    assert!(j_max >= 1);
    let cap = j_max;
    let u = psi_over_psi_prime(spec, cap)?;
    let mut out = Vec::with_capacity(j_max);
    let mut power = u.clone();
    for j in 1..=j_max {
        out.push(power.coeff(j) / BigRational::from_integer(j.into()));
        if j < j_max {
            power = power.mul_trunc(&u, cap);
        }
    }
    Ok(out)
}

fn psi_over_psi_prime(spec: &SeriesSpec, cap: usize) -> Result<ExactSeries> {
    let psi = spec.expand(cap + 1)?;
    let dpsi = psi.derivative().resized(cap);
    Ok(psi.resized(cap).mul_trunc(&dpsi.inverse_trunc(cap)?, cap))
}

/// Closed small-index formula in `k` and `n` alone, to expansion order `J`:
/// Stirling block plus the correction `-sum_{j=2}^{J} B_j k^j/((j-1) n^{j-1})`.
pub fn estimate_small_k_closed(spec: &SeriesSpec, k: u64, n: u64, j_order: usize) -> Result<LogEstimate> {
    spec.validate()?;
    if j_order < 1 {
        return Err(Error::ExpansionOrderTooSmall);
    }
    let (b0, b1) = require_positive_linear(spec)?;
    if k == 0 {
        return Err(Error::RatioOutOfRange { ratio: 0.0, limit: mean_limit_value(spec)? });
    }
    let (kf, nf) = (k as f64, n as f64);
    let ln_b0 = rational::ln_positive(&b0);
    let ln_b1 = rational::ln_positive(&b1);
    let stirling =
        (nf - kf) * ln_b0 + kf * ln_b1 + kf * nf.ln() + kf - kf * kf.ln();
    let mut correction = 0.0;
    if j_order >= 2 {
        let bs = expansion_b(spec, j_order)?;
        // k^j / n^{j-1} = k (k/n)^{j-1}, accumulated without overflow
        let mut pow = kf / nf;
        for j in 2..=j_order {
            let bj = bs[j - 1].to_f64().unwrap_or(0.0);
            correction -= bj * kf * pow / (j as f64 - 1.0);
            pow *= kf / nf;
        }
    }
    let factors = vec![
        (FactorLabel::LogPrefactor, -HALF_LN_TWO_PI),
        (FactorLabel::StirlingBlock, stirling),
        (FactorLabel::NegHalfLogK, -0.5 * kf.ln()),
        (FactorLabel::Correction, correction),
    ];
    Ok(LogEstimate::from_factors(RegimeTag::SmallKClosed, 0.0, factors))
}

/// The exact fixed-k structure of `coeff_k(psi^n)` as a polynomial in `n`:
/// `coeff_k(psi^n) = sum_l C(n,l) b0^{n-l} C_l` with the `C_l` independent
/// of `n`, `gamma` the degree in the binomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedKExpansion {
    pub k: usize,
    pub b0: BigRational,
    /// `C_0..C_k`
    pub c: Vec<BigRational>,
    /// Largest `l` with `C_l != 0`; `None` when the coefficient is
    /// identically zero (no way to write `k` from the support).
    pub gamma: Option<usize>,
}

impl FixedKExpansion {
    /// The exact coefficient of `z^k` in `psi^n`, via the identity.
    pub fn exact_coeff(&self, n: u64) -> BigRational {
        let mut acc = BigRational::zero();
        for (l, c_l) in self.c.iter().enumerate() {
            if c_l.is_zero() || (l as u64) > n {
                continue;
            }
            let binom = BigRational::from_integer(rational::binomial(n, l as u64));
            let base = power_rational(&self.b0, n - l as u64);
            acc += binom * base * c_l;
        }
        acc
    }

    /// Leading behaviour `C_gamma / gamma! * b0^{n-gamma} * n^gamma`.
    pub fn leading_estimate(&self, n: u64) -> LogEstimate {
        let Some(gamma) = self.gamma else {
            return LogEstimate::zero_flagged(RegimeTag::FixedK);
        };
        let c_gamma = &self.c[gamma];
        let ln_c = rational::ln_positive(c_gamma)
            - rational::ln_positive(&BigRational::from_integer(rational::factorial(gamma as u64)));
        let ln_b0 = rational::ln_positive(&self.b0);
        let factors = vec![
            (FactorLabel::PrefactorLog, ln_c),
            (FactorLabel::BasePower, (n as f64 - gamma as f64) * ln_b0),
            (FactorLabel::NPower, gamma as f64 * (n as f64).ln()),
        ];
        LogEstimate::from_factors(RegimeTag::FixedK, 0.0, factors)
    }
}

fn power_rational(base: &BigRational, mut n: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut b = base.clone();
    while n > 0 {
        if n & 1 == 1 {
            acc *= &b;
        }
        n >>= 1;
        if n > 0 {
            b = &b * &b;
        }
    }
    acc
}

/// Largest index accepted by the multinomial enumeration; the partition
/// count grows subexponentially and passes 10^8 near k = 100.
pub const FIXED_K_MAX: usize = 60;

/// Multinomial analysis for fixed `k`: enumerate all part multiplicities
/// `(j_1..j_k)` with `sum i j_i = k`, classify by `l = sum j_i`, and
/// accumulate `C_l += multinomial(l; j_1..j_k) * prod b_i^{j_i}`.
pub fn fixed_k_polynomial(spec: &SeriesSpec, k: usize) -> Result<FixedKExpansion> {
    spec.validate()?;
    if k > FIXED_K_MAX {
        return Err(Error::RegimeMismatch(format!(
            "fixed-k multinomial enumeration is impractical for k > {FIXED_K_MAX} (got {k})"
        )));
    }
    let psi = spec.expand(k)?;
    let b: Vec<BigRational> = (0..=k).map(|j| psi.coeff(j)).collect();
    let mut c = vec![BigRational::zero(); k + 1];
    if k == 0 {
        c[0] = BigRational::one();
    } else {
        // partitions of k with parts in 1..=k, largest part first
        let mut mults = vec![0u64; k + 1];
        enumerate_partitions(k, k, &mut mults, &mut |mults| {
            let l: u64 = mults.iter().sum();
            let mut term = BigRational::from_integer(rational::factorial(l));
            for (i, &ji) in mults.iter().enumerate() {
                if ji > 0 {
                    if b[i].is_zero() {
                        return;
                    }
                    term /= BigRational::from_integer(rational::factorial(ji));
                    term *= power_rational(&b[i], ji);
                }
            }
            c[l as usize] += term;
        });
    }
    let gamma = c.iter().rposition(|v| !v.is_zero());
    Ok(FixedKExpansion { k, b0: b[0].clone(), c, gamma })
}

fn enumerate_partitions(
    remaining: usize,
    max_part: usize,
    mults: &mut Vec<u64>,
    visit: &mut impl FnMut(&[u64]),
) {
    if remaining == 0 {
        visit(&mults[..]);
        return;
    }
    if max_part == 0 {
        return;
    }
    let max_count = remaining / max_part;
    for count in (0..=max_count).rev() {
        mults[max_part] = count as u64;
        enumerate_partitions(remaining - count * max_part, max_part - 1, mults, visit);
    }
    mults[max_part] = 0;
}

/// Leading fixed-k estimate `C_gamma/gamma! * b0^{n-gamma} * n^gamma`.
pub fn estimate_fixed_k(spec: &SeriesSpec, k: usize, n: u64) -> Result<LogEstimate> {
    Ok(fixed_k_polynomial(spec, k)?.leading_estimate(n))
}

/// Large-index regime `n = o(k)`; requires the spec to be flagged uniformly
/// Gaussian (exponentials of gcd-1 polynomials).
pub fn estimate_large_k(spec: &SeriesSpec, k: u64, n: u64) -> Result<LogEstimate> {
    spec.validate()?;
    if !spec.is_uniformly_gaussian() {
        return Err(Error::NotUniformlyGaussian);
    }
    if k == 0 {
        return Err(Error::RatioOutOfRange { ratio: 0.0, limit: f64::INFINITY });
    }
    let ratio = k as f64 / n as f64;
    let tau = khinchin::solve_mean(spec, ratio)?;
    let eval = khinchin::evaluate(spec, tau)?;
    Ok(LogEstimate::from_factors(RegimeTag::LargeK, tau, master_factors(1, &eval, k, n)))
}

/// Which base regime a prefactor estimate runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefactorRegime {
    Comparable,
    SmallK,
    FixedK,
}

/// `ln h(t)` for a prefactor series (constants allowed). Points within
/// floating error of the radius count as outside: the saddle solver can
/// land a hair inside a circle the true saddle sits on.
fn prefactor_log_at(h: &SeriesSpec, t: f64) -> Result<f64> {
    h.validate_positive_constant()?;
    if t >= h.radius() * (1.0 - 1e-9) {
        return Err(Error::PrefactorNotAnalytic { tau: t, radius: h.radius() });
    }
    if t == 0.0 || h.is_constant() {
        let c0 = match h {
            SeriesSpec::PoissonPgf(t0) => return Ok(t0 * (t - 1.0)),
            _ => h.expand(0)?.coeff(0),
        };
        return Ok(rational::ln_positive(&c0));
    }
    Ok(khinchin::evaluate(h, t)?.log_f)
}

/// Coefficient estimate for `h(z) psi(z)^n`.
///
/// - comparable: the base estimate times `h(tau_n)`;
/// - small-k (with `k -> infinity`): the base estimate times `h(0)`;
/// - fixed-k: the leading term of the exact polynomial-in-`n` identity for
///   `coeff_k(h psi^n)`, which generalizes the minimal-index selection.
pub fn estimate_with_prefactor(
    h: &SeriesSpec,
    spec: &SeriesSpec,
    k: u64,
    n: u64,
    regime: PrefactorRegime,
) -> Result<LogEstimate> {
    h.validate_positive_constant()?;
    spec.validate()?;
    match regime {
        PrefactorRegime::Comparable => {
            if spec.gauge() != 1 {
                return Err(Error::RegimeMismatch(
                    "prefactor estimates in the comparable regime need gauge 1".into(),
                ));
            }
            let base = estimate_comparable(spec, k, n)?;
            let ln_h = prefactor_log_at(h, base.tau)?;
            let mut factors: Vec<(FactorLabel, f64)> =
                base.factors.iter().map(|(l, v)| (*l, *v)).collect();
            factors.push((FactorLabel::PrefactorLog, ln_h));
            Ok(LogEstimate::from_factors(RegimeTag::Comparable, base.tau, factors))
        }
        PrefactorRegime::SmallK => {
            if spec.gauge() != 1 {
                return Err(Error::RegimeMismatch(
                    "prefactor estimates in the small-k regime need gauge 1".into(),
                ));
            }
            let base = estimate_small_k(spec, k, n)?;
            let ln_h = prefactor_log_at(h, 0.0)?;
            let mut factors: Vec<(FactorLabel, f64)> =
                base.factors.iter().map(|(l, v)| (*l, *v)).collect();
            factors.push((FactorLabel::PrefactorLog, ln_h));
            Ok(LogEstimate::from_factors(RegimeTag::SmallK, base.tau, factors))
        }
        PrefactorRegime::FixedK => {
            let k = usize::try_from(k).expect("fixed k fits usize");
            let h_coeffs = h.expand(k)?;
            // Exact identity: coeff_k(h psi^n) = sum_l C(n,l) b0^{n-l} D_l
            // with D_l = sum_j c_j C_l^{(k-j)}.
            let mut d = vec![BigRational::zero(); k + 1];
            let mut b0 = BigRational::zero();
            for j in 0..=k {
                let cj = h_coeffs.coeff(j);
                if cj.is_zero() {
                    continue;
                }
                let fx = fixed_k_polynomial(spec, k - j)?;
                b0 = fx.b0.clone();
                for (l, cl) in fx.c.iter().enumerate() {
                    if !cl.is_zero() {
                        d[l] += &cj * cl;
                    }
                }
            }
            let gamma = d.iter().rposition(|v| !v.is_zero());
            let fx = FixedKExpansion { k, b0, c: d, gamma };
            Ok(fx.leading_estimate(n))
        }
    }
}

/// A regime suggestion plus the unmet preconditions of the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegimeSuggestion {
    pub suggested: RegimeTag,
    pub unmet: BTreeMap<String, Vec<String>>,
}

/// Convenience classifier. The estimators themselves never auto-dispatch;
/// this reports which regimes are admissible at `(k, n)` and a heuristic
/// pick among them.
pub fn suggest_regime(spec: &SeriesSpec, k: u64, n: u64) -> Result<RegimeSuggestion> {
    spec.validate()?;
    let ratio = k as f64 / n as f64;
    let limit = mean_limit_value(spec)?;
    let q = spec.gauge();
    let b1_positive = spec
        .b0_b1()
        .map(|(_, b1)| b1.is_positive())
        .unwrap_or(false);
    let boundary_ok = khinchin::boundary_eval(spec).is_ok();

    let mut unmet: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut note = |regime: &str, msg: String| {
        unmet.entry(regime.into()).or_default().push(msg);
    };

    if !(ratio > 0.0 && ratio < limit) {
        note("comparable", format!("needs 0 < k/n < mean limit (k/n={ratio}, limit={limit})"));
    }
    if !k.is_multiple_of(q) {
        note("comparable", format!("k is not a multiple of the gauge {q} (coefficient is zero)"));
    }
    if !b1_positive {
        note("small-k", "needs psi'(0) != 0".into());
    }
    if ratio >= limit {
        note("small-k", format!("needs k/n < mean limit (k/n={ratio}, limit={limit})"));
    }
    if !spec.is_uniformly_gaussian() {
        note("large-k", "spec is not flagged uniformly Gaussian".into());
    }
    if k > 60 {
        note("fixed-k", "multinomial enumeration is impractical for k > 60".into());
    }
    if !boundary_ok {
        note("boundary", "no boundary extension with finite variance at t = R".into());
    } else if limit.is_finite() && ratio < 0.9 * limit {
        note("boundary", format!("k/n = {ratio} is not close to the mean limit {limit}"));
    }

    let admissible = |name: &str| !unmet.contains_key(name);
    let suggested = if admissible("large-k") && ratio >= 4.0 {
        RegimeTag::LargeK
    } else if admissible("fixed-k") && k <= 12 && n >= 50 * k.max(1) {
        RegimeTag::FixedK
    } else if admissible("small-k") && ratio <= 0.15 {
        RegimeTag::SmallK
    } else if admissible("boundary") {
        RegimeTag::Boundary
    } else if admissible("comparable") {
        RegimeTag::Comparable
    } else if admissible("fixed-k") {
        RegimeTag::FixedK
    } else if admissible("small-k") {
        RegimeTag::SmallK
    } else {
        RegimeTag::Comparable
    };
    Ok(RegimeSuggestion { suggested, unmet })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{big, ratio as rat};
    use crate::spec::coeff_of_power;

    const TWO_PI: f64 = std::f64::consts::TAU;

    fn log_exact(spec: &SeriesSpec, k: u64, n: u64) -> f64 {
        let c = coeff_of_power(spec, k as usize, n).unwrap();
        rational::ln_positive(&c)
    }

    #[test]
    fn comparable_central_binomial_formula() {
        let est = estimate_comparable(&SeriesSpec::affine_i64(1, 1), 1000, 2000).unwrap();
        let expected = 2001.0 * std::f64::consts::LN_2 - 0.5 * (4000.0 * std::f64::consts::PI).ln();
        assert!((est.log_value.unwrap() - expected).abs() < 1e-9);
        assert!((est.tau - 1.0).abs() < 1e-9);
    }

    #[test]
    fn comparable_small_case_close_to_oracle() {
        let est = estimate_comparable(&SeriesSpec::affine_i64(1, 1), 3, 10).unwrap();
        let ratio = (est.log_value.unwrap() - log_exact(&SeriesSpec::affine_i64(1, 1), 3, 10)).exp();
        assert!((ratio - 1.0).abs() < 0.10, "ratio {ratio}");
    }

    #[test]
    fn comparable_zero_flags_gauge_violation() {
        let est = estimate_comparable(&SeriesSpec::polynomial_i64(&[1, 0, 1]), 5, 9).unwrap();
        assert!(est.is_zero_flagged());
    }

    #[test]
    fn limit_ratio_with_zero_omega_matches_comparable_at_same_tau() {
        let spec = SeriesSpec::Geometric;
        let n = 500u64;
        let k = 250u64;
        let a = estimate_comparable(&spec, k, n).unwrap();
        let b = estimate_limit_ratio(&spec, n, 0.5, 0.0, k).unwrap();
        assert!((a.log_value.unwrap() - b.log_value.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn limit_ratio_central_binomial_damping() {
        // at L = 1/2 the variance is 1/4, so the correction factor is
        // exactly -2 lambda^2
        for lambda in [0.5f64, 1.0, 2.0] {
            let n = 900u64;
            let k = (n as f64 / 2.0 + lambda * (n as f64).sqrt()) as u64;
            let est =
                estimate_limit_ratio(&SeriesSpec::affine_i64(1, 1), n, 0.5, lambda, k).unwrap();
            let correction = est.factors[&FactorLabel::Correction];
            assert!((correction + 2.0 * lambda * lambda).abs() < 1e-10, "lambda={lambda}");
        }
    }

    #[test]
    fn limit_ratio_redirects_to_boundary() {
        let err = estimate_limit_ratio(&SeriesSpec::affine_i64(1, 1), 100, 1.0, 0.0, 100).unwrap_err();
        assert_eq!(err, Error::UseBoundaryEstimator);
    }

    #[test]
    fn limit_ratio_exp_near_one() {
        // coeff_{n-1}(e^{nz}) = n^{n-1}/(n-1)!
        let n = 100u64;
        let est = estimate_limit_ratio(&SeriesSpec::Exp, n, 1.0, 0.0, n - 1).unwrap();
        let exact = 99.0 * 100.0f64.ln() - statrs::function::gamma::ln_gamma(100.0);
        let ratio = (est.log_value.unwrap() - exact).exp();
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn boundary_matches_hand_formula() {
        // [1,1] at declared R=1, k = n*M = 50, n = 100: same value as the
        // central binomial estimate.
        let spec = SeriesSpec::truncated_i64(&[1, 1], 1.0);
        let est = estimate_boundary(&spec, 50, 100).unwrap();
        let expected = -0.5 * TWO_PI.ln() - 0.5f64.ln() - 0.5 * 100.0f64.ln()
            + 100.0 * std::f64::consts::LN_2;
        assert!((est.log_value.unwrap() - expected).abs() < 1e-10);
        // correction term is exactly 1 at k = n*M
        assert_eq!(est.factors[&FactorLabel::Correction], 0.0);
        // and the estimate referees against the oracle C(100,50)
        let exact = log_exact(&SeriesSpec::affine_i64(1, 1), 50, 100);
        let ratio = (est.log_value.unwrap() - exact).exp();
        assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn boundary_rejects_divergent_variance() {
        let ones = SeriesSpec::truncated_i64(&vec![1; 40], 1.0);
        assert!(estimate_boundary(&ones, 10, 20).is_err());
    }

    #[test]
    fn small_k_geometric_close_to_oracle() {
        // coeff_k((1/(1-z))^n) = C(n+k-1, k)
        let (k, n) = (10u64, 10_000u64);
        let est = estimate_small_k(&SeriesSpec::Geometric, k, n).unwrap();
        let exact = rational::ln_positive(&BigRational::from_integer(rational::binomial(
            n + k - 1,
            k,
        )));
        let ratio = (est.log_value.unwrap() - exact).exp();
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn small_k_requires_linear_coefficient() {
        let err = estimate_small_k(&SeriesSpec::polynomial_i64(&[1, 0, 1]), 4, 100).unwrap_err();
        assert_eq!(err, Error::NeedsPositiveLinearCoefficient);
    }

    #[test]
    fn expansion_b_matches_closed_form_b2() {
        // B_2 = 1/2 - b_2 b_0 / b_1^2
        for spec in [
            SeriesSpec::Exp,
            SeriesSpec::Geometric,
            SeriesSpec::polynomial_i64(&[2, 3, 5, 7]),
        ] {
            let bs = expansion_b(&spec, 2).unwrap();
            assert_eq!(bs[0], big(1), "B_1 = 1 for {spec:?}");
            let s = spec.expand(2).unwrap();
            let expected = rat(1, 2) - s.coeff(2) * s.coeff(0) / (s.coeff(1) * s.coeff(1));
            assert_eq!(bs[1], expected, "B_2 for {spec:?}");
        }
        // e^z: B_2 = 1/2 - (1/2 * 1)/1 = 0
        assert_eq!(expansion_b(&SeriesSpec::Exp, 2).unwrap()[1], big(0));
    }

    #[test]
    fn expansion_c_two_routes_agree() {
        // direct formula vs C_j = (j+1)/j B_{j+1}
        let spec = SeriesSpec::polynomial_i64(&[1, 1, 1, 1, 1, 1, 1]);
        let cs = expansion_c(&spec, 5).unwrap();
        let bs = expansion_b(&spec, 6).unwrap();
        for j in 1..=5usize {
            let via_b = &bs[j] * rat(j as i64 + 1, j as i64);
            assert_eq!(cs[j - 1], via_b, "C_{j}");
        }
    }

    #[test]
    fn small_k_closed_reduces_to_binomial_leading_term() {
        // J=1: b0^{n-k} b1^k n^k / k! via Stirling; ratio to the exact
        // coefficient of (b0 + b1 z)^n tends to 1.
        let spec = SeriesSpec::affine_i64(1, 1);
        let k = 5u64;
        let mut last = f64::INFINITY;
        for n in [200u64, 2000] {
            let est = estimate_small_k_closed(&spec, k, n, 1).unwrap();
            let exact = log_exact(&spec, k, n);
            let err = ((est.log_value.unwrap() - exact).exp() - 1.0).abs();
            assert!(err < last, "monotone improvement at n={n}");
            last = err;
        }
        assert!(last < 0.05);
    }

    #[test]
    fn fixed_k_examples() {
        // b1 != 0: gamma = k, C_k = b1^k
        let fx = fixed_k_polynomial(&SeriesSpec::polynomial_i64(&[1, 2, 1]), 4).unwrap();
        assert_eq!(fx.gamma, Some(4));
        assert_eq!(fx.c[4], big(16));

        // b1 = 0, b2 != 0, k = 2q: gamma = q, C_q = b2^q
        let spec = SeriesSpec::polynomial_i64(&[1, 0, 3]);
        let fx = fixed_k_polynomial(&spec, 6).unwrap();
        assert_eq!(fx.gamma, Some(3));
        assert_eq!(fx.c[3], big(27));

        // b1 = 0, b2, b3 != 0, k = 2q+1: C_q = q b2^{q-1} b3
        let spec = SeriesSpec::polynomial_i64(&[1, 0, 3, 5]);
        let fx = fixed_k_polynomial(&spec, 7).unwrap();
        assert_eq!(fx.gamma, Some(3));
        assert_eq!(fx.c[3], big(3) * big(9) * big(5));
    }

    #[test]
    fn fixed_k_exact_identity() {
        let spec = SeriesSpec::polynomial_i64(&[1, 1, 1]);
        for k in 0..=8usize {
            let fx = fixed_k_polynomial(&spec, k).unwrap();
            for n in 1..=30u64 {
                assert_eq!(
                    fx.exact_coeff(n),
                    coeff_of_power(&spec, k, n).unwrap(),
                    "k={k} n={n}"
                );
            }
        }
    }

    #[test]
    fn fixed_k_refuses_impractical_indices() {
        let err = fixed_k_polynomial(&SeriesSpec::polynomial_i64(&[1, 1]), 61).unwrap_err();
        assert!(matches!(err, Error::RegimeMismatch(_)));
    }

    #[test]
    fn large_k_requires_uniform_gaussianity() {
        let err = estimate_large_k(&SeriesSpec::affine_i64(1, 1), 1000, 10).unwrap_err();
        assert_eq!(err, Error::NotUniformlyGaussian);
    }

    #[test]
    fn large_k_exp_against_closed_form() {
        // coeff_k(e^{nz}) = n^k/k!
        let (k, n) = (100_000u64, 100u64);
        let est = estimate_large_k(&SeriesSpec::Exp, k, n).unwrap();
        let exact = k as f64 * (n as f64).ln() - statrs::function::gamma::ln_gamma(k as f64 + 1.0);
        let ratio = (est.log_value.unwrap() - exact).exp();
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn large_k_overlaps_comparable_at_ratio_one() {
        let n = 500u64;
        let a = estimate_large_k(&SeriesSpec::Exp, n, n).unwrap();
        let b = estimate_comparable(&SeriesSpec::Exp, n, n).unwrap();
        assert!((a.log_value.unwrap() - b.log_value.unwrap()).abs() < 1e-10);
        assert!((a.tau - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prefactor_constant_one_reproduces_comparable() {
        let h = SeriesSpec::polynomial_i64(&[1]);
        let spec = SeriesSpec::affine_i64(1, 1);
        let base = estimate_comparable(&spec, 300, 1000).unwrap();
        let with = estimate_with_prefactor(&h, &spec, 300, 1000, PrefactorRegime::Comparable).unwrap();
        assert!((with.log_value.unwrap() - base.log_value.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn prefactor_rejects_non_analytic_point() {
        // tau = 1 for k = n/2 sits on the geometric prefactor's circle
        let h = SeriesSpec::Geometric;
        let spec = SeriesSpec::affine_i64(1, 1);
        let err =
            estimate_with_prefactor(&h, &spec, 500, 1000, PrefactorRegime::Comparable).unwrap_err();
        assert!(matches!(err, Error::PrefactorNotAnalytic { .. }));
    }

    #[test]
    fn prefactor_comparable_against_product_oracle() {
        // h = 1/(1-z), psi = 1+z, k = n/4: tau = 1/3 inside h's disk.
        // oracle: coeff_k(h psi^n) = sum_{j<=k} C(n,j)
        let h = SeriesSpec::Geometric;
        let spec = SeriesSpec::affine_i64(1, 1);
        let mut last = f64::INFINITY;
        for n in [400u64, 1600] {
            let k = n / 4;
            let est = estimate_with_prefactor(&h, &spec, k, n, PrefactorRegime::Comparable).unwrap();
            let mut exact = BigRational::zero();
            for j in 0..=k {
                exact += BigRational::from_integer(rational::binomial(n, j));
            }
            let err = ((est.log_value.unwrap() - rational::ln_positive(&exact)).exp() - 1.0).abs();
            assert!(err < last, "monotone improvement at n={n}");
            last = err;
        }
        assert!(last < 0.05, "final error {last}");
    }

    #[test]
    fn small_k_exp_large_scale_against_closed_form() {
        // coeff_k(e^{nz}) = n^k/k! at k = floor(sqrt(n)), n = 1e6
        let (k, n) = (1000u64, 1_000_000u64);
        let est = estimate_small_k(&SeriesSpec::Exp, k, n).unwrap();
        let exact = k as f64 * (n as f64).ln() - statrs::function::gamma::ln_gamma(k as f64 + 1.0);
        let ratio = (est.log_value.unwrap() - exact).exp();
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn prefactor_small_k_multiplies_by_h_at_zero() {
        // h = 2 + z, psi = 1/(1-z), k = floor(sqrt(n)):
        // exact coeff_k(h psi^n) = 2 C(n+k-1, k) + C(n+k-2, k-1)
        let h = SeriesSpec::polynomial_i64(&[2, 1]);
        let spec = SeriesSpec::Geometric;
        let mut last = f64::INFINITY;
        for n in [200u64, 2000] {
            let k = (n as f64).sqrt() as u64;
            let est = estimate_with_prefactor(&h, &spec, k, n, PrefactorRegime::SmallK).unwrap();
            assert!(
                (est.factors[&FactorLabel::PrefactorLog] - 2.0f64.ln()).abs() < 1e-15
            );
            let exact = BigRational::from_integer(rational::binomial(n + k - 1, k)) * big(2)
                + BigRational::from_integer(rational::binomial(n + k - 2, k - 1));
            let err = ((est.log_value.unwrap() - rational::ln_positive(&exact)).exp() - 1.0).abs();
            assert!(err < last, "n={n}");
            last = err;
        }
        assert!(last < 0.05, "final error {last}");
    }

    #[test]
    fn prefactor_fixed_k_minimal_index_rule() {
        // psi = 1 + z^2 (Q=2), h = 1/(1-z): for even k the leading term is
        // c_0 b_Q^{k/2} n^{k/2} / (k/2)!.
        let h = SeriesSpec::Geometric;
        let spec = SeriesSpec::polynomial_i64(&[1, 0, 1]);
        let k = 6u64;
        let n = 5000u64;
        let est = estimate_with_prefactor(&h, &spec, k, n, PrefactorRegime::FixedK).unwrap();
        let expected = (n as f64).ln() * 3.0
            - rational::ln_positive(&BigRational::from_integer(rational::factorial(3)));
        assert!((est.log_value.unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn prefactor_fixed_k_zero_flags_unreachable_parity() {
        // psi = 1 + z^2 and h = 1 + z^2: odd k has no admissible index
        let h = SeriesSpec::polynomial_i64(&[1, 0, 1]);
        let spec = SeriesSpec::polynomial_i64(&[1, 0, 1]);
        let est = estimate_with_prefactor(&h, &spec, 5, 100, PrefactorRegime::FixedK).unwrap();
        assert!(est.is_zero_flagged());
        // referee: the coefficient really is identically zero
        let product = h
            .expand(5)
            .unwrap()
            .mul_trunc(&spec.expand(5).unwrap().pow_trunc(100, 5), 5);
        assert!(product.coeff(5).is_zero());
    }

    #[test]
    fn factor_sum_matches_log_value() {
        let ests = [
            estimate_comparable(&SeriesSpec::Exp, 7, 11).unwrap(),
            estimate_small_k(&SeriesSpec::Geometric, 3, 500).unwrap(),
            estimate_small_k_closed(&SeriesSpec::Exp, 10, 1000, 3).unwrap(),
            estimate_fixed_k(&SeriesSpec::polynomial_i64(&[1, 1, 1]), 4, 100).unwrap(),
        ];
        for est in ests {
            assert!((est.factor_sum() - est.log_value.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn suggest_regime_reports_unmet_preconditions() {
        let s = suggest_regime(&SeriesSpec::polynomial_i64(&[1, 0, 1]), 4, 2000).unwrap();
        assert_eq!(s.suggested, RegimeTag::FixedK);
        assert!(s.unmet["small-k"].iter().any(|m| m.contains("psi'(0)")));
        assert!(s.unmet["large-k"][0].contains("uniformly Gaussian"));

        let s = suggest_regime(&SeriesSpec::Exp, 4000, 100).unwrap();
        assert_eq!(s.suggested, RegimeTag::LargeK);
    }
}
