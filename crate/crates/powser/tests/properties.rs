//! Cross-module property suites: independent oracles, scaling laws, and
//! consistency rules that tie the exact and asymptotic halves together.

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use powser::khinchin;
use powser::lagrangian::{self, InitialSpec, LagrangianSpec};
use powser::powers::{self, FactorLabel, LogEstimate};
use powser::rational;
use powser::series::ExactSeries;
use powser::spec::{coeff_of_power, SeriesSpec};

fn big(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn builtin_specs() -> Vec<SeriesSpec> {
    vec![
        SeriesSpec::Exp,
        SeriesSpec::affine_i64(1, 1),
        SeriesSpec::affine_i64(2, 3),
        SeriesSpec::Geometric,
        SeriesSpec::BinomialPower(2),
        SeriesSpec::BinomialPower(3),
        SeriesSpec::polynomial_i64(&[1, 1, 1]),
        SeriesSpec::polynomial_i64(&[1, 0, 3, 5]),
        SeriesSpec::ExpPolynomial(vec![big(0), big(1), big(1)]),
    ]
}

/// Independent oracle for powers: naive repeated multiplication, no binary
/// exponentiation, no truncation tricks beyond the cap.
fn naive_power_coeffs(spec: &SeriesSpec, cap: usize, n_max: u64) -> Vec<ExactSeries> {
    let base = spec.expand(cap).unwrap();
    let mut powers = Vec::new();
    let mut acc = ExactSeries::one(cap);
    for _ in 0..n_max {
        let mut next = ExactSeries::zero(cap);
        for i in 0..=cap {
            let a = acc.coeff(i);
            if a.is_zero() {
                continue;
            }
            for j in 0..=cap - i {
                let b = base.coeff(j);
                if !b.is_zero() {
                    let mut c = next.coeff(i + j);
                    c += &a * &b;
                    next = set_coeff(next, i + j, c);
                }
            }
        }
        acc = next;
        powers.push(acc.clone());
    }
    powers
}

fn set_coeff(s: ExactSeries, idx: usize, value: BigRational) -> ExactSeries {
    let mut coeffs = s.coeffs().to_vec();
    coeffs[idx] = value;
    ExactSeries::from_coeffs(coeffs)
}

#[test]
fn coeff_of_power_matches_naive_multiplication() {
    let cap = 30usize;
    for spec in builtin_specs() {
        let naive = naive_power_coeffs(&spec, cap, 30);
        for n in 1..=30u64 {
            let reference = &naive[(n - 1) as usize];
            for k in 0..=cap {
                assert_eq!(
                    coeff_of_power(&spec, k, n).unwrap(),
                    reference.coeff(k),
                    "{spec:?} k={k} n={n}"
                );
            }
        }
    }
}

#[test]
fn mean_is_strictly_increasing_on_grid() {
    for spec in builtin_specs() {
        let window = spec.eval_limit().min(20.0) * 0.95;
        let mut last = -1.0f64;
        for i in 1..=100 {
            let t = window * i as f64 / 101.0;
            let m = khinchin::evaluate(&spec, t).unwrap().mean;
            assert!(m > last, "{spec:?} at t={t}");
            last = m;
        }
    }
}

#[test]
fn variance_matches_finite_difference_of_mean() {
    for spec in builtin_specs() {
        for frac in [0.2, 0.5, 0.8] {
            let t = spec.eval_limit().min(8.0) * 0.95 * frac;
            let h = 1e-5 * t;
            let e = khinchin::evaluate(&spec, t).unwrap();
            let m_plus = khinchin::evaluate(&spec, t + h).unwrap().mean;
            let m_minus = khinchin::evaluate(&spec, t - h).unwrap().mean;
            let fd = t * (m_plus - m_minus) / (2.0 * h);
            assert!(
                (e.variance - fd).abs() <= 1e-6 * e.variance,
                "{spec:?} t={t}: sigma^2={} fd={fd}",
                e.variance
            );
        }
    }
}

#[test]
fn khinchin_scaling_under_index_dilation() {
    // psi(z) = phi(z^Q): m_psi(t) = Q m_phi(t^Q), sigma^2 scaled by Q^2
    let phi = SeriesSpec::Exp;
    let q = 2u32;
    let psi = phi.dilated(q as usize).unwrap();
    for t in [0.3, 0.8, 1.4] {
        let inner = khinchin::evaluate(&phi, f64::powi(t, q as i32)).unwrap();
        let outer = khinchin::evaluate(&psi, t).unwrap();
        assert!((outer.mean - q as f64 * inner.mean).abs() < 1e-10 * (1.0 + inner.mean));
        assert!(
            (outer.variance - (q * q) as f64 * inner.variance).abs()
                < 1e-10 * (1.0 + inner.variance)
        );
    }
}

#[test]
fn solve_mean_inverts_mean_function() {
    // 50 deterministic pseudo-random targets per builtin
    for spec in builtin_specs() {
        let limit = khinchin::mean_limit(&spec).unwrap().value().min(40.0);
        let reachable = khinchin::evaluate(&spec, spec.eval_limit().min(30.0) * 0.95)
            .unwrap()
            .mean
            .min(limit);
        let mut state = 0x8f1bbcdc2215d7a3u64;
        for _ in 0..50 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let x = reachable * (0.02 + 0.95 * u);
            let t = khinchin::solve_mean(&spec, x).unwrap();
            let m = khinchin::evaluate(&spec, t).unwrap().mean;
            assert!(
                (m - x).abs() <= 1e-10 * x.max(1.0),
                "{spec:?}: target {x}, recovered {m}"
            );
        }
    }
}

proptest! {
    /// exp(log f) reproduces f/f(0) exactly; scaling back by f(0) is the
    /// identity on series with positive constant term.
    #[test]
    fn series_exp_log_round_trip(
        numerators in proptest::collection::vec(0i64..7, 1..7),
        denominators in proptest::collection::vec(1i64..5, 1..7),
        c0 in 1i64..6,
    ) {
        let len = numerators.len().min(denominators.len());
        let mut coeffs = vec![BigRational::new(c0.into(), 1.into())];
        for i in 0..len {
            coeffs.push(BigRational::new(numerators[i].into(), denominators[i].into()));
        }
        let cap = coeffs.len() - 1;
        let f = ExactSeries::from_coeffs(coeffs);
        let log = f.log_trunc(cap).unwrap();
        prop_assert!(log.coeff(0).is_zero());
        let back = log.exp_trunc(cap).unwrap();
        let scaled: Vec<BigRational> =
            back.coeffs().iter().map(|c| c * f.coeff(0)).collect();
        prop_assert_eq!(ExactSeries::from_coeffs(scaled), f);
    }

    /// Truncated products agree with the unbounded product restricted to
    /// the cap, and multiplication is commutative.
    #[test]
    fn series_mul_consistency(
        a in proptest::collection::vec(-4i64..5, 1..6),
        b in proptest::collection::vec(-4i64..5, 1..6),
        cap in 0usize..8,
    ) {
        let a = ExactSeries::from_coeffs(a.into_iter().map(big).collect());
        let b = ExactSeries::from_coeffs(b.into_iter().map(big).collect());
        let ab = a.mul_trunc(&b, cap);
        let ba = b.mul_trunc(&a, cap);
        prop_assert_eq!(&ab, &ba);
        let full = a.mul_trunc(&b, a.degree_cap() + b.degree_cap());
        for k in 0..=cap {
            prop_assert_eq!(ab.coeff(k), full.coeff(k));
        }
    }
}

/// ln of the exact coefficient, for ratio checks.
fn log_exact(spec: &SeriesSpec, k: u64, n: u64) -> f64 {
    rational::ln_positive(&coeff_of_power(spec, k as usize, n).unwrap())
}

fn ratio_error(est: &LogEstimate, log_exact: f64) -> f64 {
    ((est.log_value.unwrap() - log_exact).exp() - 1.0).abs()
}

#[test]
fn oracle_convergence_comparable() {
    // closed-form oracles; the series route itself is pinned against naive
    // multiplication elsewhere
    type Oracle = Box<dyn Fn(u64) -> (u64, f64)>;
    let cases: Vec<(SeriesSpec, Oracle)> = vec![
        (
            SeriesSpec::affine_i64(1, 1),
            Box::new(|n| {
                let k = n / 2;
                (k, rational::ln_positive(&BigRational::from_integer(rational::binomial(n, k))))
            }),
        ),
        (
            SeriesSpec::Geometric,
            Box::new(|n| {
                let k = n / 2;
                (
                    k,
                    rational::ln_positive(&BigRational::from_integer(rational::binomial(
                        n + k - 1,
                        k,
                    ))),
                )
            }),
        ),
        (
            SeriesSpec::BinomialPower(2),
            Box::new(|n| {
                let k = n / 2;
                (k, rational::ln_positive(&BigRational::from_integer(rational::binomial(2 * n, k))))
            }),
        ),
        (
            SeriesSpec::Exp,
            Box::new(|n| {
                let k = n;
                let l = k as f64 * (n as f64).ln()
                    - rational::ln_positive(&BigRational::from_integer(rational::factorial(k)));
                (k, l)
            }),
        ),
    ];
    for (spec, oracle) in cases {
        let mut last = f64::INFINITY;
        for n in [200u64, 2000] {
            let (k, exact) = oracle(n);
            let est = powers::estimate_comparable(&spec, k, n).unwrap();
            let err = ratio_error(&est, exact);
            assert!(err < last, "{spec:?} n={n}: err {err} vs {last}");
            last = err;
        }
    }
}

#[test]
fn oracle_convergence_small_k() {
    for (spec, oracle) in [
        (
            SeriesSpec::Exp,
            (|k: u64, n: u64| {
                k as f64 * (n as f64).ln()
                    - rational::ln_positive(&BigRational::from_integer(rational::factorial(k)))
            }) as fn(u64, u64) -> f64,
        ),
        (SeriesSpec::Geometric, |k, n| {
            rational::ln_positive(&BigRational::from_integer(rational::binomial(n + k - 1, k)))
        }),
    ] {
        let mut last = f64::INFINITY;
        for n in [200u64, 2000] {
            let k = (n as f64).sqrt() as u64;
            let est = powers::estimate_small_k(&spec, k, n).unwrap();
            let err = ratio_error(&est, oracle(k, n));
            assert!(err < last, "{spec:?} n={n}");
            last = err;
        }
    }
}

#[test]
fn oracle_convergence_large_k() {
    let mut last = f64::INFINITY;
    for n in [200u64, 2000] {
        let k = 10 * n;
        let exact = k as f64 * (n as f64).ln()
            - rational::ln_positive(&BigRational::from_integer(rational::factorial(k)));
        let est = powers::estimate_large_k(&SeriesSpec::Exp, k, n).unwrap();
        let err = ratio_error(&est, exact);
        assert!(err < last, "n={n}");
        last = err;
    }
}

#[test]
fn oracle_convergence_boundary() {
    let spec = SeriesSpec::truncated_i64(&[1, 1], 1.0);
    let mut last = f64::INFINITY;
    for n in [200u64, 2000] {
        let k = n / 2;
        let exact =
            rational::ln_positive(&BigRational::from_integer(rational::binomial(n, k)));
        let est = powers::estimate_boundary(&spec, k, n).unwrap();
        let err = ratio_error(&est, exact);
        assert!(err < last, "n={n}");
        last = err;
    }
}

#[test]
fn oracle_convergence_fixed_k() {
    let spec = SeriesSpec::polynomial_i64(&[1, 1, 1]);
    let k = 5usize;
    let mut last = f64::INFINITY;
    for n in [200u64, 2000] {
        let est = powers::estimate_fixed_k(&spec, k, n).unwrap();
        let err = ratio_error(&est, log_exact(&spec, k as u64, n));
        assert!(err < last, "n={n}");
        last = err;
    }
}

#[test]
fn gauge_zero_rule_across_estimators() {
    let phi = SeriesSpec::affine_i64(1, 1);
    for q in [2u64, 3] {
        let psi = phi.dilated(q as usize).unwrap();
        let n = 600u64;
        let k = 150u64;

        // zero-flags on non-multiples
        for bad_k in (1..3 * q).filter(|m| m % q != 0) {
            assert!(powers::estimate_comparable(&psi, bad_k * 97, n).unwrap().is_zero_flagged());
            assert!(powers::estimate_limit_ratio(&psi, n, 0.25, 0.0, bad_k * 97)
                .unwrap()
                .is_zero_flagged());
            assert!(powers::estimate_fixed_k(&psi, bad_k as usize, n).unwrap().is_zero_flagged());
        }

        // value agreement with the companion series, up to ln Q
        let scaled = powers::estimate_comparable(&psi, k * q, n).unwrap();
        let base = powers::estimate_comparable(&phi, k, n).unwrap();
        let diff = scaled.log_value.unwrap() - base.log_value.unwrap();
        assert!(diff.abs() < 1e-9, "comparable Q={q}: diff {diff}");
        assert!(
            (scaled.factors[&FactorLabel::GaugeLogQ] - (q as f64).ln()).abs() < 1e-15
        );

        let scaled = powers::estimate_limit_ratio(&psi, n, q as f64 * 0.25, 0.0, k * q).unwrap();
        let base = powers::estimate_limit_ratio(&phi, n, 0.25, 0.0, k).unwrap();
        let diff = scaled.log_value.unwrap() - base.log_value.unwrap();
        assert!(diff.abs() < 1e-9, "limit ratio Q={q}: diff {diff}");

        // fixed-k exact identities agree under dilation (small k: the
        // multinomial enumeration walks all partitions of k)
        let k_small = 4u64;
        let fx_psi = powers::fixed_k_polynomial(&psi, (k_small * q) as usize).unwrap();
        let fx_phi = powers::fixed_k_polynomial(&phi, k_small as usize).unwrap();
        for n in 1..=20u64 {
            assert_eq!(fx_psi.exact_coeff(n), fx_phi.exact_coeff(n));
        }
    }
}

#[test]
fn factor_sums_match_log_values_everywhere() {
    let mut estimates = vec![
        powers::estimate_comparable(&SeriesSpec::Exp, 9, 12).unwrap(),
        powers::estimate_limit_ratio(&SeriesSpec::Geometric, 100, 0.4, 0.7, 40).unwrap(),
        powers::estimate_boundary(&SeriesSpec::truncated_i64(&[1, 1], 1.0), 45, 100).unwrap(),
        powers::estimate_small_k(&SeriesSpec::Exp, 5, 500).unwrap(),
        powers::estimate_small_k_unsimplified(&SeriesSpec::Exp, 5, 500).unwrap(),
        powers::estimate_small_k_closed(&SeriesSpec::Exp, 5, 500, 2).unwrap(),
        powers::estimate_fixed_k(&SeriesSpec::polynomial_i64(&[1, 2, 1]), 4, 300).unwrap(),
        powers::estimate_large_k(&SeriesSpec::Exp, 5000, 10).unwrap(),
        powers::estimate_with_prefactor(
            &SeriesSpec::Geometric,
            &SeriesSpec::affine_i64(1, 1),
            100,
            400,
            powers::PrefactorRegime::Comparable,
        )
        .unwrap(),
    ];
    let omm = powser::lagrange::omm_asymptotic(&SeriesSpec::Exp, 64).unwrap();
    estimates.push(omm.estimate().unwrap().clone());
    let lspec = LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Monomial(2), 0.5, 1.0);
    estimates.push(lagrangian::lagrangian_pmf_asymptotic(&lspec, 33).unwrap());

    for est in estimates {
        let sum = est.factor_sum();
        let lv = est.log_value.unwrap();
        assert!((sum - lv).abs() < 1e-12, "{est:?}");
    }
}

#[test]
fn borel_tanner_pipeline_equivalence() {
    // closed form against the series pipeline, including the critical tilt
    for &t in &[0.3f64, 0.9, 1.0] {
        for &j in &[1u64, 3] {
            let lspec =
                LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Monomial(j), t, 1.0);
            let pmf = lagrangian::lagrangian_pmf(&lspec, 60).unwrap();
            for n in 1..=60u64 {
                let closed = lagrangian::borel_tanner_pmf(t, j, n);
                let series = pmf.masses[&n];
                if closed == 0.0 {
                    assert_eq!(series, 0.0);
                    continue;
                }
                let rel = (series - closed).abs() / closed;
                assert!(rel <= 1e-10, "t={t} j={j} n={n}: rel {rel}");
            }
        }
    }
}

#[test]
fn json_round_trips() {
    let est = powers::estimate_comparable(&SeriesSpec::affine_i64(1, 1), 40, 100).unwrap();
    let s = serde_json::to_string(&est).unwrap();
    let back: LogEstimate = serde_json::from_str(&s).unwrap();
    assert_eq!(est, back);
    assert!(s.contains("logValue") && s.contains("gaugeLogQ"), "{s}");

    let zero = powers::estimate_comparable(&SeriesSpec::polynomial_i64(&[1, 0, 1]), 3, 10).unwrap();
    let s = serde_json::to_string(&zero).unwrap();
    let back: LogEstimate = serde_json::from_str(&s).unwrap();
    assert_eq!(zero, back);

    let lspec = LagrangianSpec::new(SeriesSpec::Exp, InitialSpec::Monomial(1), 0.5, 1.0);
    let pmf = lagrangian::lagrangian_pmf(&lspec, 12).unwrap();
    let s = serde_json::to_string(&pmf).unwrap();
    let back: lagrangian::Pmf = serde_json::from_str(&s).unwrap();
    assert_eq!(pmf, back);

    let report = powser::gaussianity::hayman_cut_check(&[big(0), big(1)], 2, 25.0).unwrap();
    let s = serde_json::to_string(&report).unwrap();
    let back: powser::gaussianity::ArcReport = serde_json::from_str(&s).unwrap();
    assert_eq!(report, back);
    assert!(s.contains("majorSup") && s.contains("quadraturePoints"));
}

#[test]
fn expansion_b_depends_only_on_prefix() {
    // B_j depends only on b_0..b_j: extending the series beyond degree j
    // leaves earlier coefficients unchanged
    let short = SeriesSpec::polynomial_i64(&[2, 1, 3, 1]);
    let long = SeriesSpec::polynomial_i64(&[2, 1, 3, 1, 9, 7]);
    let a = powers::expansion_b(&short, 3).unwrap();
    let b = powers::expansion_b(&long, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0], BigRational::one());
}
