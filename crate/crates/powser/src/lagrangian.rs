//! Lagrangian probability distributions: total-progeny laws of
//! Galton–Watson processes with tilted offspring and initial
//! distributions, their exact and asymptotic mass functions, the
//! Borel–Tanner and Poisson–Poisson closed forms, and a Monte Carlo
//! referee.
//!
//! Mass functions are computed from tilted coefficient vectors. Tilted
//! powers are probability generating functions, so every intermediate
//! coefficient lies in `[0, 1]` and plain `f64` convolution is stable;
//! the closed forms go through log space instead, since `(tn)^{n-j}/(n-j)!`
//! leaves the float range past `n` of about 170.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::khinchin::{self, MeanLimit};
use crate::lagrange;
use crate::powers::{FactorLabel, LogEstimate, RegimeTag};
use crate::rational;
use crate::series::ExactSeries;
use crate::spec::SeriesSpec;

use crate::powers::HALF_LN_TWO_PI;

/// Offspring pgf tilted to radius `t`: the series `psi(t z)/psi(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedPgf {
    pub base: SeriesSpec,
    pub t: f64,
}

/// Tilt a spec: represents `psi_t(z) = psi(t z)/psi(t)`. `t = 0` is the
/// degenerate point mass at zero (the family's canonical `X_0`).
pub fn tilt(spec: &SeriesSpec, t: f64) -> Result<TiltedPgf> {
    spec.validate()?;
    if t < 0.0 || (t > spec.eval_limit() && t != 0.0) {
        return Err(Error::RangeError { t, limit: spec.eval_limit() });
    }
    Ok(TiltedPgf { base: spec.clone(), t })
}

impl TiltedPgf {
    /// Mean of the tilted variable: `m_psi(t)`.
    pub fn mean(&self) -> Result<f64> {
        if self.t == 0.0 {
            return Ok(0.0);
        }
        Ok(khinchin::evaluate(&self.base, self.t)?.mean)
    }

    /// A spec for the tilted series, when one of the builtin kinds
    /// represents it: `e^z` tilts to the Poisson pgf, polynomial kinds to
    /// an exactly re-normalized polynomial.
    pub fn closed_form(&self) -> Option<SeriesSpec> {
        match &self.base {
            SeriesSpec::Exp => Some(SeriesSpec::PoissonPgf(self.t)),
            SeriesSpec::PoissonPgf(t0) => Some(SeriesSpec::PoissonPgf(t0 * self.t)),
            _ => self.exact_coeffs_all().map(SeriesSpec::Polynomial),
        }
    }

    /// Exact tilted coefficients for finite-support bases with rational
    /// normalizer `psi(t)`.
    fn exact_coeffs_all(&self) -> Option<Vec<BigRational>> {
        let support = match &self.base {
            SeriesSpec::Affine(_, _) => 1usize,
            SeriesSpec::BinomialPower(d) => *d as usize,
            SeriesSpec::Polynomial(cs) => cs.len() - 1,
            SeriesSpec::Truncated { coeffs, .. } => coeffs.len() - 1,
            _ => return None,
        };
        self.exact_coeffs(support)
    }

    /// Exact tilted coefficients up to `len`, when the base expands exactly
    /// and `psi(t)` is rational (all kinds except the exponentials).
    pub fn exact_coeffs(&self, len: usize) -> Option<Vec<BigRational>> {
        match &self.base {
            SeriesSpec::Exp | SeriesSpec::ExpPolynomial(_) | SeriesSpec::PoissonPgf(_) => None,
            SeriesSpec::Geometric => {
                let t = rational::from_f64(self.t)?;
                // (1-t) t^j
                let mut out = Vec::with_capacity(len + 1);
                let one_minus = BigRational::from_integer(1.into()) - &t;
                let mut p = one_minus;
                for _ in 0..=len {
                    out.push(p.clone());
                    p *= &t;
                }
                Some(out)
            }
            SeriesSpec::Affine(_, _)
            | SeriesSpec::BinomialPower(_)
            | SeriesSpec::Polynomial(_)
            | SeriesSpec::Truncated { .. } => {
                let t = rational::from_f64(self.t)?;
                let support = match &self.base {
                    SeriesSpec::Affine(_, _) => 1usize,
                    SeriesSpec::BinomialPower(d) => *d as usize,
                    SeriesSpec::Polynomial(cs) => cs.len() - 1,
                    SeriesSpec::Truncated { coeffs, .. } => coeffs.len() - 1,
                    _ => unreachable!(),
                };
                let series = self.base.expand(support).ok()?;
                let norm = series.eval(&t);
                let mut out = Vec::with_capacity(len + 1);
                let mut tj = BigRational::from_integer(1.into());
                for j in 0..=len {
                    out.push(series.coeff(j) * &tj / &norm);
                    tj *= &t;
                }
                Some(out)
            }
        }
    }

    /// Tilted probabilities `P(Y_t = j)` for `j = 0..len`, as floats.
    pub fn coeffs(&self, len: usize) -> Result<Vec<f64>> {
        let t = self.t;
        if t == 0.0 {
            let mut v = vec![0.0; len + 1];
            v[0] = 1.0;
            return Ok(v);
        }
        match &self.base {
            SeriesSpec::Exp => Ok(poisson_pmf_vec(t, len)),
            SeriesSpec::PoissonPgf(t0) => Ok(poisson_pmf_vec(t0 * t, len)),
            SeriesSpec::ExpPolynomial(gs) => {
                // log-space: ln c_j + j ln t - g(t)
                let series = self.base.expand(len)?;
                let g = ExactSeries::from_coeffs(gs.clone());
                let gt = g.eval(&rational::from_f64(t).expect("finite t"));
                let gt = gt.to_f64().unwrap_or(f64::INFINITY);
                let ln_t = t.ln();
                Ok((0..=len)
                    .map(|j| match rational::log_magnitude(&series.coeff(j)) {
                        Some((_, ln_c)) => (ln_c + j as f64 * ln_t - gt).exp(),
                        None => 0.0,
                    })
                    .collect())
            }
            _ => {
                let exact = self
                    .exact_coeffs(len)
                    .ok_or_else(|| Error::InvalidSpec("tilt has no coefficient form".into()))?;
                Ok(exact.iter().map(|c| c.to_f64().unwrap_or(0.0)).collect())
            }
        }
    }
}

fn poisson_pmf_vec(lambda: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    let mut p = (-lambda).exp();
    for j in 0..=len {
        out.push(p);
        p *= lambda / (j as f64 + 1.0);
    }
    out
}

/// Initial-generation distribution: a fixed size `j`, or a spec tilted by `s`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// Exactly `j >= 1` initial individuals (`f(z) = z^j`).
    Monomial(u64),
    /// Initial size drawn from the tilt of this spec at `s`.
    Spec(SeriesSpec),
}

/// A Lagrangian law: total progeny of a Galton–Watson process with
/// offspring `psi` tilted at `t` and initial distribution `f` tilted at `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSpec {
    pub offspring: SeriesSpec,
    pub initial: InitialSpec,
    pub t: f64,
    pub s: f64,
}

impl LagrangianSpec {
    pub fn new(offspring: SeriesSpec, initial: InitialSpec, t: f64, s: f64) -> Self {
        LagrangianSpec { offspring, initial, t, s }
    }

    fn offspring_tilt(&self) -> Result<TiltedPgf> {
        let tilted = tilt(&self.offspring, self.t)?;
        let mean = tilted.mean()?;
        if mean > 1.0 + 1e-12 {
            return Err(Error::SupercriticalTilt { mean });
        }
        Ok(tilted)
    }

    /// Tilted initial probabilities `P(X_s = j)` up to `len`.
    fn initial_coeffs(&self, len: usize) -> Result<Vec<f64>> {
        match &self.initial {
            InitialSpec::Monomial(j) => {
                let mut v = vec![0.0; len + 1];
                if (*j as usize) <= len {
                    v[*j as usize] = 1.0;
                }
                Ok(v)
            }
            InitialSpec::Spec(f) => {
                f.validate_positive_constant()?;
                tilt(f, self.s)?.coeffs(len)
            }
        }
    }
}

/// Exact or empirical probability mass over `{0, 1, 2, ...}`, truncated at
/// `truncation`; `tail_mass` is the mass beyond it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Pmf {
    pub masses: BTreeMap<u64, f64>,
    pub truncation: u64,
    pub tail_mass: f64,
}

/// Mass function of the Lagrangian law up to `n_max`:
/// `P(Z = n) = (1/n) coeff_{n-1}(f_s'(z) psi_t(z)^n)` and `P(Z = 0) = f_s(0)`.
pub fn lagrangian_pmf(lspec: &LagrangianSpec, n_max: u64) -> Result<Pmf> {
    let tilted = lspec.offspring_tilt()?;
    let cap = n_max as usize;
    let base = trim_underflow(tilted.coeffs(cap)?);
    let initial = lspec.initial_coeffs(cap + 1)?;

    let mut masses = BTreeMap::new();
    masses.insert(0u64, initial[0]);

    // fs'(z) has coefficient (i+1) q_{i+1} at index i
    let fs_prime: Vec<f64> =
        (0..cap).map(|i| (i as f64 + 1.0) * initial[i + 1]).collect();

    // incremental powers of the tilted offspring pgf, truncated at cap - 1
    let mut power = vec![1.0f64];
    for n in 1..=n_max {
        power = mul_trunc_f64(&power, &base, cap.saturating_sub(1));
        let idx = (n - 1) as usize;
        let mut acc = 0.0;
        for (i, &fp) in fs_prime.iter().enumerate().take(idx + 1) {
            if fp != 0.0 {
                acc += fp * power.get(idx - i).copied().unwrap_or(0.0);
            }
        }
        masses.insert(n, acc / n as f64);
    }
    let total: f64 = masses.values().sum();
    Ok(Pmf { masses, truncation: n_max, tail_mass: 1.0 - total })
}

/// Exact-rational mass values `P(Z = 1..n_max)` for offspring whose tilt has
/// rational coefficients (polynomial kinds and the geometric series) and a
/// fixed initial size. Referee for the float pipeline.
pub fn lagrangian_pmf_exact(
    offspring: &SeriesSpec,
    t: f64,
    initial_size: u64,
    n_max: u64,
) -> Result<Vec<BigRational>> {
    let tilted = tilt(offspring, t)?;
    let coeffs = tilted
        .exact_coeffs(n_max as usize)
        .ok_or(Error::NotExactlyExpandable)?;
    let tilted_spec = ExactSeries::from_coeffs(coeffs);
    let j = initial_size;
    let mut out = Vec::new();
    for n in 1..=n_max {
        // (j/n) coeff_{n-j}(psi_t^n)
        let v = if n < j {
            BigRational::zero()
        } else {
            let k = (n - j) as usize;
            tilted_spec.pow_trunc(n, k).coeff(k) * BigRational::new(j.into(), n.into())
        };
        out.push(v);
    }
    Ok(out)
}

fn trim_underflow(mut v: Vec<f64>) -> Vec<f64> {
    while v.len() > 1 && v.last() == Some(&0.0) {
        v.pop();
    }
    v
}

fn mul_trunc_f64(a: &[f64], b: &[f64], cap: usize) -> Vec<f64> {
    let len = (a.len() + b.len() - 1).min(cap + 1);
    let mut out = vec![0.0f64; len];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 || i >= len {
            continue;
        }
        for (k, &bk) in b.iter().enumerate().take(len - i) {
            out[i + k] += ai * bk;
        }
    }
    out
}

/// The critical saddle of the offspring: `tau` with `m(tau) = 1`, or the
/// boundary radius when the mean limit is exactly 1 there.
fn critical_eval(spec: &SeriesSpec) -> Result<khinchin::KhinchinEval> {
    match khinchin::mean_limit(spec)? {
        MeanLimit::Infinite => {
            let tau = khinchin::solve_mean(spec, 1.0)?;
            khinchin::evaluate(spec, tau)
        }
        MeanLimit::Finite(m) if m > 1.0 + 1e-12 => {
            let tau = khinchin::solve_mean(spec, 1.0)?;
            khinchin::evaluate(spec, tau)
        }
        MeanLimit::Finite(m) if (m - 1.0).abs() <= 1e-12 && spec.radius().is_finite() => {
            khinchin::boundary_eval(spec)
        }
        _ => Err(Error::UncertifiableCase(
            "no critical tilt: mean limit below 1 or reached only at infinite radius".into(),
        )),
    }
}

/// Asymptotic mass `P(Z_{s,t} = n)` of the Lagrangian law, valid under the
/// constraint `s tau < t S` (`S` the radius of the initial spec):
/// `(1/sqrt(2 pi)) * s/f(s) * (psi(tau)/psi(t))^n (t/tau)^{n-1} *
///  n^{-3/2} / sigma(tau) * f'(s tau / t)`.
pub fn lagrangian_pmf_asymptotic(lspec: &LagrangianSpec, n: u64) -> Result<LogEstimate> {
    let tilted = lspec.offspring_tilt()?;
    let t = tilted.t;
    if t <= 0.0 {
        return Err(Error::RangeError { t, limit: lspec.offspring.eval_limit() });
    }
    let crit = critical_eval(&lspec.offspring)?;
    let tau = crit.t;
    let t_eval = if (t - tau).abs() < 1e-15 {
        crit.clone()
    } else {
        khinchin::evaluate(&lspec.offspring, t)?
    };

    let initial_weight = match &lspec.initial {
        InitialSpec::Monomial(j) => {
            let j = *j as f64;
            // s cancels: ln j + (j-1) ln(tau/t)
            j.ln() + (j - 1.0) * (tau / t).ln()
        }
        InitialSpec::Spec(f) => {
            f.validate_positive_constant()?;
            let s = lspec.s;
            let cap = f.radius();
            if s * tau >= t * cap {
                return Err(Error::TiltConstraint { s, tau, t, cap });
            }
            let fs = khinchin::evaluate(f, s)?;
            let fps = khinchin::evaluate(f, s * tau / t)?.f_prime;
            s.ln() - fs.log_f + fps.ln()
        }
    };

    let factors = vec![
        (FactorLabel::LogPrefactor, -HALF_LN_TWO_PI),
        (FactorLabel::InitialWeight, initial_weight),
        (
            FactorLabel::TiltRatio,
            n as f64 * (crit.log_f - t_eval.log_f) + (n as f64 - 1.0) * (t / tau).ln(),
        ),
        (FactorLabel::NegThreeHalvesLogN, -1.5 * (n as f64).ln()),
        (FactorLabel::NegLogSigmaTau, -0.5 * crit.variance.ln()),
    ];
    Ok(LogEstimate::from_factors(RegimeTag::LagrangianAsymptotic, tau, factors))
}

/// Borel–Tanner mass function: total progeny of `j` ancestors with
/// Poisson(`t`) offspring. Exact formula
/// `P(Z = n) = (j/n) e^{-tn} (tn)^{n-j} / (n-j)!`, in log space.
pub fn borel_tanner_pmf(t: f64, j: u64, n: u64) -> f64 {
    assert!(t > 0.0 && t <= 1.0, "need 0 < t <= 1");
    assert!(j >= 1);
    if n < j {
        return 0.0;
    }
    let (nf, jf) = (n as f64, j as f64);
    let log = jf.ln() - nf.ln() - t * nf + (nf - jf) * (t * nf).ln() - ln_gamma(nf - jf + 1.0);
    log.exp()
}

/// Poisson(`s`) ancestors with Poisson(`t`) offspring:
/// `P(Z = n) = (1/n!) e^{-tn-s} (tn+s)^{n-1} s` for `n >= 1`, `e^{-s}` at 0.
pub fn poisson_poisson_pmf(s: f64, t: f64, n: u64) -> f64 {
    assert!(s > 0.0 && t > 0.0 && t <= 1.0);
    if n == 0 {
        return (-s).exp();
    }
    let nf = n as f64;
    let log = s.ln() - t * nf - s + (nf - 1.0) * (t * nf + s).ln() - ln_gamma(nf + 1.0);
    log.exp()
}

/// Empirical distribution of total progeny from `samples` simulated
/// Galton–Watson cascades.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Histogram {
    pub counts: BTreeMap<u64, u64>,
    pub samples: u64,
    /// Runs whose population passed `cap` before dying out.
    pub escaped: u64,
    pub cap: u64,
}

impl Histogram {
    pub fn frequency(&self, n: u64) -> f64 {
        *self.counts.get(&n).unwrap_or(&0) as f64 / self.samples as f64
    }

    pub fn escaped_mass(&self) -> f64 {
        self.escaped as f64 / self.samples as f64
    }
}

enum OffspringSampler {
    /// Inversion by sequential search; parameters here stay small.
    Poisson(f64),
    /// `P(j) = (1-t) t^j`
    Geometric(f64),
    /// Cumulative table for finite or fast-decaying supports.
    Table(Vec<f64>),
    /// No offspring at all (tilt at zero).
    Zero,
}

impl OffspringSampler {
    fn for_tilt(tilted: &TiltedPgf) -> Result<OffspringSampler> {
        if tilted.t == 0.0 {
            return Ok(OffspringSampler::Zero);
        }
        Ok(match &tilted.base {
            SeriesSpec::Exp => OffspringSampler::Poisson(tilted.t),
            SeriesSpec::PoissonPgf(t0) => OffspringSampler::Poisson(t0 * tilted.t),
            SeriesSpec::Geometric => OffspringSampler::Geometric(tilted.t),
            _ => {
                let probs = adaptive_table(tilted)?;
                let mut cum = Vec::with_capacity(probs.len());
                let mut acc = 0.0;
                for p in probs {
                    acc += p;
                    cum.push(acc);
                }
                OffspringSampler::Table(cum)
            }
        })
    }

    fn sample(&self, rng: &mut impl RngCore) -> u64 {
        match self {
            OffspringSampler::Zero => 0,
            OffspringSampler::Poisson(lambda) => {
                let u: f64 = rng.gen();
                let mut p = (-lambda).exp();
                let mut cum = p;
                let mut j = 0u64;
                while u >= cum && j < 10_000 {
                    j += 1;
                    p *= lambda / j as f64;
                    cum += p;
                }
                j
            }
            OffspringSampler::Geometric(t) => {
                let u: f64 = rng.gen();
                let mut p = 1.0 - t;
                let mut cum = p;
                let mut j = 0u64;
                while u >= cum && j < 100_000 {
                    j += 1;
                    p *= t;
                    cum += p;
                }
                j
            }
            OffspringSampler::Table(cum) => {
                let u: f64 = rng.gen();
                match cum.iter().position(|&c| u < c) {
                    Some(j) => j as u64,
                    None => (cum.len() - 1) as u64,
                }
            }
        }
    }
}

/// Tilted probabilities extended until the observed tail is negligible.
fn adaptive_table(tilted: &TiltedPgf) -> Result<Vec<f64>> {
    let mut len = 16usize;
    loop {
        match tilted.coeffs(len) {
            Ok(v) => {
                let total: f64 = v.iter().sum();
                if 1.0 - total < 1e-13 || len >= 1 << 14 {
                    return Ok(v);
                }
                len *= 2;
            }
            // finite support shorter than requested (truncated lists)
            Err(Error::InsufficientCoefficients { have, .. }) => {
                return tilted.coeffs(have - 1);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Number of independently seeded sample chunks. Fixed, so the merged
/// histogram depends only on the seed, not on the worker count.
const SIMULATION_CHUNKS: u64 = 64;

/// Simulate total progeny of the Lagrangian cascade. Runs whose population
/// exceeds `cap` are binned as escaped (the critical case has heavy tails
/// and unbounded running time otherwise). Deterministic for a fixed seed.
pub fn gw_simulate(lspec: &LagrangianSpec, samples: u64, seed: u64, cap: u64) -> Result<Histogram> {
    let tilted = lspec.offspring_tilt()?;
    let offspring = OffspringSampler::for_tilt(&tilted)?;
    let initial: Box<dyn Fn(&mut ChaCha8Rng) -> u64 + Sync> = match &lspec.initial {
        InitialSpec::Monomial(j) => {
            let j = *j;
            Box::new(move |_| j)
        }
        InitialSpec::Spec(f) => {
            let init_tilt = tilt(f, lspec.s)?;
            let sampler = OffspringSampler::for_tilt(&init_tilt)?;
            Box::new(move |rng| sampler.sample(rng))
        }
    };

    let chunks: Vec<(u64, u64)> = (0..SIMULATION_CHUNKS)
        .map(|i| {
            let base = samples / SIMULATION_CHUNKS;
            let extra = u64::from(i < samples % SIMULATION_CHUNKS);
            (i, base + extra)
        })
        .collect();

    let partials: Vec<(BTreeMap<u64, u64>, u64)> = chunks
        .par_iter()
        .map(|&(stream, count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
            let mut escaped = 0u64;
            for _ in 0..count {
                let mut alive = initial(&mut rng);
                let mut total = alive;
                let mut fled = false;
                while alive > 0 {
                    let mut next = 0u64;
                    for _ in 0..alive {
                        next += offspring.sample(&mut rng);
                    }
                    total += next;
                    alive = next;
                    if total > cap {
                        fled = true;
                        break;
                    }
                }
                if fled {
                    escaped += 1;
                } else {
                    *counts.entry(total).or_insert(0) += 1;
                }
            }
            (counts, escaped)
        })
        .collect();

    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut escaped = 0u64;
    for (c, e) in partials {
        for (k, v) in c {
            *counts.entry(k).or_insert(0) += v;
        }
        escaped += e;
    }
    Ok(Histogram { counts, samples, escaped, cap })
}

/// Check the rescaling identity for the tilted solution: the solution of
/// Lagrange's equation with data `psi_t` equals `(1/t) g((t/psi(t)) z)` for
/// the untilted solution `g`. Returns the largest absolute coefficient
/// discrepancy through `degree`.
pub fn rescale_check(spec: &SeriesSpec, t: f64, degree: usize) -> Result<f64> {
    spec.validate()?;
    if t <= 0.0 {
        return Err(Error::RangeError { t, limit: spec.eval_limit() });
    }
    let tilted = tilt(spec, t)?;
    let mean = tilted.mean()?;
    if mean > 1.0 + 1e-12 {
        return Err(Error::SupercriticalTilt { mean });
    }

    if let Some(exact) = tilted.exact_coeffs(degree) {
        // exact route: both pipelines in rational arithmetic
        let tilted_series = ExactSeries::from_coeffs(exact);
        let tq = rational::from_f64(t).expect("finite t");
        let psi_t = spec.expand(spec_support(spec))?.eval(&tq);
        let scale = &tq / &psi_t; // t/psi(t)
        let mut max_diff: f64 = 0.0;
        let mut scale_n = scale.clone();
        for n in 1..=degree as u64 {
            let k = (n - 1) as usize;
            let via_tilt = tilted_series.pow_trunc(n, k).coeff(k)
                / BigRational::from_integer(n.into());
            let via_rescale = lagrange::lagrange_coeff(spec, n)? * &scale_n / &tq;
            let diff = &via_tilt - &via_rescale;
            max_diff = max_diff.max(diff.to_f64().map(f64::abs).unwrap_or(f64::INFINITY));
            scale_n *= &scale;
        }
        return Ok(max_diff);
    }

    // float route (exponential kinds)
    let eval = khinchin::evaluate(spec, t)?;
    let base = trim_underflow(tilted.coeffs(degree.saturating_sub(1))?);
    let mut power = vec![1.0f64];
    let mut max_diff: f64 = 0.0;
    for n in 1..=degree as u64 {
        power = mul_trunc_f64(&power, &base, degree - 1);
        let k = (n - 1) as usize;
        let via_tilt = power.get(k).copied().unwrap_or(0.0) / n as f64;
        let a_n = lagrange::lagrange_coeff(spec, n)?;
        let ln_a = rational::ln_positive(&a_n);
        let via_rescale = (ln_a + n as f64 * (t.ln() - eval.log_f) - t.ln()).exp();
        max_diff = max_diff.max((via_tilt - via_rescale).abs());
    }
    Ok(max_diff)
}

fn spec_support(spec: &SeriesSpec) -> usize {
    match spec {
        SeriesSpec::Affine(_, _) => 1,
        SeriesSpec::BinomialPower(d) => *d as usize,
        SeriesSpec::Polynomial(cs) => cs.len() - 1,
        SeriesSpec::Truncated { coeffs, .. } => coeffs.len() - 1,
        _ => 0,
    }
}

/// Normalized critical-tilt mass values `n^{3/2} P(Z_{tau, s_n} = n) / m_f(s_n)`
/// along caller-supplied `(s_n, n)` pairs; the trend target is
/// `1/(sigma(tau) sqrt(2 pi))`.
pub fn limit_case_ratio(
    spec: &SeriesSpec,
    f_spec: &SeriesSpec,
    s_sequence: &[f64],
    n_sequence: &[u64],
) -> Result<Vec<f64>> {
    assert_eq!(s_sequence.len(), n_sequence.len());
    let crit = critical_eval(spec)?;
    let tau = crit.t;
    let mut out = Vec::with_capacity(s_sequence.len());
    for (&s, &n) in s_sequence.iter().zip(n_sequence) {
        let lspec = LagrangianSpec::new(
            spec.clone(),
            InitialSpec::Spec(f_spec.clone()),
            tau,
            s,
        );
        let pmf = lagrangian_pmf(&lspec, n)?;
        let p = pmf.masses[&n];
        let fe = khinchin::evaluate(f_spec, s)?;
        out.push((n as f64).powf(1.5) * p / fe.mean);
    }
    Ok(out)
}

/// The trend target of [`limit_case_ratio`].
pub fn limit_case_target(spec: &SeriesSpec) -> Result<f64> {
    let crit = critical_eval(spec)?;
    Ok(1.0 / (crit.variance.sqrt() * (2.0 * std::f64::consts::PI).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn tilt_examples() {
        let t = tilt(&SeriesSpec::Exp, 0.7).unwrap();
        assert_eq!(t.closed_form(), Some(SeriesSpec::PoissonPgf(0.7)));

        let t = tilt(&SeriesSpec::affine_i64(1, 1), 1.0).unwrap();
        let cs = t.exact_coeffs(1).unwrap();
        assert_eq!(cs, vec![ratio(1, 2), ratio(1, 2)]);

        // mean of the tilted pgf equals m(t)
        let t = tilt(&SeriesSpec::Geometric, 0.4).unwrap();
        let m = khinchin::evaluate(&SeriesSpec::Geometric, 0.4).unwrap().mean;
        let coeffs = t.coeffs(200).unwrap();
        let mean_from_coeffs: f64 =
            coeffs.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
        assert!((t.mean().unwrap() - m).abs() < 1e-14);
        assert!((mean_from_coeffs - m).abs() < 1e-12);
    }

    #[test]
    fn pmf_borel_small_cases() {
        let lspec = LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Monomial(1), 0.5, 1.0);
        let pmf = lagrangian_pmf(&lspec, 4).unwrap();
        // P(Z=1) = P(no children) = e^{-1/2}
        assert!((pmf.masses[&1] - (-0.5f64).exp()).abs() < 1e-14);
        // P(Z=2) = e^{-1}/2
        assert!((pmf.masses[&2] - (-1.0f64).exp() / 2.0).abs() < 1e-14);
        assert_eq!(pmf.masses[&0], 0.0);
    }

    #[test]
    fn pmf_matches_exact_rational_pipeline() {
        // offspring 1+z tilted at 1: progeny is geometric with ratio 1/2
        let lspec = LagrangianSpec::new(
            SeriesSpec::affine_i64(1, 1),
            InitialSpec::Monomial(1),
            1.0,
            1.0,
        );
        let pmf = lagrangian_pmf(&lspec, 16).unwrap();
        let exact = lagrangian_pmf_exact(&SeriesSpec::affine_i64(1, 1), 1.0, 1, 16).unwrap();
        for n in 1..=16u64 {
            let e = exact[(n - 1) as usize].to_f64().unwrap();
            assert!((pmf.masses[&n] - e).abs() < 1e-14, "n={n}");
            assert!((e - 0.5f64.powi(n as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn pmf_rejects_supercritical_tilt() {
        let lspec = LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Monomial(1), 1.4, 1.0);
        assert!(matches!(
            lagrangian_pmf(&lspec, 5),
            Err(Error::SupercriticalTilt { .. })
        ));
    }

    #[test]
    fn borel_tanner_values() {
        assert!((borel_tanner_pmf(0.5, 1, 2) - (-1.0f64).exp() / 2.0).abs() < 1e-15);
        for (t, j) in [(0.3, 2u64), (0.8, 1), (1.0, 3)] {
            assert!((borel_tanner_pmf(t, j, j) - (-t * j as f64).exp()).abs() < 1e-14);
        }
        assert_eq!(borel_tanner_pmf(0.5, 3, 2), 0.0);
    }

    #[test]
    fn borel_tanner_no_overflow_past_170() {
        let p = borel_tanner_pmf(0.9, 1, 5000);
        assert!(p.is_finite() && p > 0.0);
    }

    #[test]
    fn critical_borel_mass_accumulates_to_one() {
        let partial = |n_max: u64| -> f64 {
            (1..=n_max).map(|n| borel_tanner_pmf(1.0, 1, n)).sum()
        };
        let tails = [1e3, 1e4, 1e5].map(|n| 1.0 - partial(n as u64));
        assert!(tails[1] < tails[0] && tails[2] < tails[1]);
        assert!(tails[2] < 0.01, "tail at 1e5: {}", tails[2]);
    }

    #[test]
    fn poisson_poisson_values() {
        assert!((poisson_poisson_pmf(0.8, 0.7, 0) - (-0.8f64).exp()).abs() < 1e-15);
        let expected = 0.8 * (-0.7f64 - 0.8).exp();
        assert!((poisson_poisson_pmf(0.8, 0.7, 1) - expected).abs() < 1e-15);
    }

    #[test]
    fn poisson_poisson_conditioning_identity() {
        // P(Z=n) = sum_j Poisson(s; j) BorelTanner(t, j, n)
        let (s, t) = (0.8, 0.7);
        for n in 1..=30u64 {
            let direct = poisson_poisson_pmf(s, t, n);
            let mut cond = 0.0;
            let mut pj = (-s).exp();
            for j in 1..=n {
                pj *= s / j as f64;
                cond += pj * borel_tanner_pmf(t, j, n);
            }
            assert!((direct - cond).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn asymptotic_borel_tanner_form() {
        // psi = e^z, f = z^j: (j/sqrt(2 pi)) n^{-3/2} t^{n-j} e^{n(1-t)}
        let (t, j, n) = (0.6, 3u64, 40u64);
        let lspec = LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Monomial(j), t, 1.0);
        let est = lagrangian_pmf_asymptotic(&lspec, n).unwrap();
        let expected = (j as f64).ln() - HALF_LN_TWO_PI - 1.5 * (n as f64).ln()
            + (n as f64 - j as f64) * t.ln()
            + n as f64 * (1.0 - t);
        assert!((est.log_value.unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn pmf_with_spec_initial_matches_poisson_poisson() {
        // exercises the f_s' convolution path for non-monomial initials
        let (s, t) = (0.8, 0.7);
        let lspec =
            LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Spec(SeriesSpec::Exp), t, s);
        let pmf = lagrangian_pmf(&lspec, 40).unwrap();
        for n in 0..=40u64 {
            let closed = poisson_poisson_pmf(s, t, n);
            let rel = (pmf.masses[&n] - closed).abs() / closed;
            assert!(rel < 1e-12, "n={n}: {} vs {closed}", pmf.masses[&n]);
        }
    }

    #[test]
    fn asymptotic_poisson_poisson_form() {
        // psi = e^z, f = e^z tilted s:
        // (1/sqrt(2 pi)) e^{s/t - s} s t^{n-1} e^{n(1-t)} n^{-3/2}
        let (s, t, n) = (0.8, 0.7, 50u64);
        let lspec =
            LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Spec(SeriesSpec::Exp), t, s);
        let est = lagrangian_pmf_asymptotic(&lspec, n).unwrap();
        let expected = -HALF_LN_TWO_PI + s / t - s + s.ln() + (n as f64 - 1.0) * t.ln()
            + n as f64 * (1.0 - t)
            - 1.5 * (n as f64).ln();
        assert!((est.log_value.unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn asymptotic_critical_tilt_form() {
        // t = tau: (1/sqrt(2 pi)) m_f(s) / sigma(tau) * n^{-3/2}
        let (s, n) = (0.4, 64u64);
        let lspec = LagrangianSpec::new(
            SeriesSpec::Exp,
            InitialSpec::Spec(SeriesSpec::Geometric),
            1.0,
            s,
        );
        let est = lagrangian_pmf_asymptotic(&lspec, n).unwrap();
        let m_f = khinchin::evaluate(&SeriesSpec::Geometric, s).unwrap().mean;
        let expected = m_f.ln() - HALF_LN_TWO_PI - 1.5 * (n as f64).ln();
        assert!((est.log_value.unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn asymptotic_enforces_tilt_constraint() {
        // f = geometric (S = 1): s tau >= t requires rejection
        let lspec = LagrangianSpec::new(
            SeriesSpec::Exp,
            InitialSpec::Spec(SeriesSpec::Geometric),
            0.5,
            0.9,
        );
        assert!(matches!(
            lagrangian_pmf_asymptotic(&lspec, 10),
            Err(Error::TiltConstraint { .. })
        ));
    }

    #[test]
    fn simulate_no_offspring_is_deterministic() {
        let lspec = LagrangianSpec::new(SeriesSpec::affine_i64(1, 1), InitialSpec::Monomial(3), 0.0, 1.0);
        let h = gw_simulate(&lspec, 10_000, 7, 1_000).unwrap();
        assert_eq!(h.counts[&3], 10_000);
        assert_eq!(h.escaped, 0);
    }

    #[test]
    fn simulate_seed_repeatable() {
        let lspec = LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Monomial(1), 0.6, 1.0);
        let a = gw_simulate(&lspec, 20_000, 42, 100_000).unwrap();
        let b = gw_simulate(&lspec, 20_000, 42, 100_000).unwrap();
        assert_eq!(a, b);
        let c = gw_simulate(&lspec, 20_000, 43, 100_000).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn simulate_matches_borel_pmf() {
        let lspec = LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Monomial(1), 0.6, 1.0);
        let samples = 200_000u64;
        let h = gw_simulate(&lspec, samples, 42, 10_000_000).unwrap();
        for n in 1..=8u64 {
            let p = borel_tanner_pmf(0.6, 1, n);
            if samples as f64 * p < 100.0 {
                continue;
            }
            let se = (p * (1.0 - p) / samples as f64).sqrt();
            let diff = (h.frequency(n) - p).abs();
            assert!(diff <= 4.0 * se, "n={n}: diff {diff} > 4 se {se}");
        }
    }

    #[test]
    fn rescale_identity_exact_and_float() {
        // algebraic identity: float pipelines agree to roundoff
        assert!(rescale_check(&SeriesSpec::Exp, 0.5, 10).unwrap() <= 1e-12);
        // exact pipelines agree exactly
        assert_eq!(rescale_check(&SeriesSpec::affine_i64(1, 1), 1.0, 15).unwrap(), 0.0);
        assert!(rescale_check(&SeriesSpec::BinomialPower(2), 0.3, 10).unwrap() <= 1e-12);
    }

    #[test]
    fn mass_conservation_subcritical() {
        let lspec = LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Monomial(1), 0.6, 1.0);
        let coarse = lagrangian_pmf(&lspec, 40).unwrap();
        let fine = lagrangian_pmf(&lspec, 160).unwrap();
        let sum_plus_tail: f64 = coarse.masses.values().sum::<f64>() + coarse.tail_mass;
        assert!((sum_plus_tail - 1.0).abs() < 1e-12);
        assert!(fine.tail_mass < coarse.tail_mass);
        assert!(fine.tail_mass.abs() < 1e-9);
    }

    #[test]
    fn entire_initial_satisfies_derivative_stability() {
        // for f = e^z (infinite radius), f'(s e^{i phi/sqrt(n)})/f'(s) -> 1
        // for any bounded s: the hypothesis behind the constant-s limit
        use num_complex::Complex64;
        let s = 2.0f64;
        let phi = 1.0f64;
        let deviation = |n: f64| {
            let arg = Complex64::from_polar(s, phi / n.sqrt());
            let ratio = (arg.exp()) / Complex64::new(s.exp(), 0.0);
            (ratio - Complex64::new(1.0, 0.0)).norm()
        };
        assert!(deviation(1e4) < deviation(1e2));
        assert!(deviation(1e6) < 1e-2);
    }

    #[test]
    fn limit_case_trend() {
        // f = 1/(1-z), s_n = 1 - n^{-1/4}: ratio tends to 1/(sigma sqrt(2 pi))
        let ns = [64u64, 256, 1024];
        let ss: Vec<f64> = ns.iter().map(|&n| 1.0 - (n as f64).powf(-0.25)).collect();
        let ratios =
            limit_case_ratio(&SeriesSpec::Exp, &SeriesSpec::Geometric, &ss, &ns).unwrap();
        let target = limit_case_target(&SeriesSpec::Exp).unwrap();
        let errs: Vec<f64> = ratios.iter().map(|r| (r - target).abs()).collect();
        assert!(errs[2] < errs[0], "errors {errs:?}");

        // constant s < S reduces to the fixed-s limit: same target
        let ratios = limit_case_ratio(
            &SeriesSpec::Exp,
            &SeriesSpec::Geometric,
            &[0.4, 0.4, 0.4],
            &ns,
        )
        .unwrap();
        let errs: Vec<f64> = ratios.iter().map(|r| (r - target).abs()).collect();
        assert!(errs[2] < errs[0] && errs[2] < 0.05 * target, "errors {errs:?}");
    }
}
