//! Command-line front end: exact coefficients, regime estimates,
//! exact-vs-asymptotic comparison sweeps, Lagrangian distributions, the
//! Galton–Watson simulator, and Gaussianity diagnostics.
//!
//! Exit codes: 0 success, 1 domain errors (a named precondition failed),
//! 2 usage errors (bad flags or unparseable spec text).

mod spec_text;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use rayon::prelude::*;

use powser::lagrange::{self, OmmAsymptotic};
use powser::lagrangian::{self, LagrangianSpec};
use powser::powers::{self, LogEstimate, PrefactorRegime};
use powser::rational;
use powser::spec::{coeff_of_power, SeriesSpec};
use powser::{gaussianity, khinchin};

use spec_text::{parse_count, parse_initial, parse_rational, parse_spec, rational_string};

/// 15 significant digits, scientific notation.
fn sci(x: f64) -> String {
    format!("{:.14e}", x)
}

#[derive(Parser)]
#[command(
    name = "powser",
    about = "Exact and asymptotic coefficients of large powers of power series",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficient of z^k in psi(z)^n: exact rational or a regime estimate
    Coeff(CoeffArgs),
    /// CSV sweep comparing the exact coefficient with a regime estimate
    Compare(CompareArgs),
    /// Coefficients of the solution of Lagrange's equation g = w psi(g)
    Lagrange(LagrangeArgs),
    /// Radius of convergence of the Lagrange solution
    LagrangeRadius(SpecOnlyArgs),
    /// Mass function of a Lagrangian (total-progeny) distribution
    Pmf(PmfArgs),
    /// Monte Carlo simulation of total progeny, histogram CSV output
    Simulate(SimulateArgs),
    /// Central-limit integral diagnostic for exponential-type series
    Gauss(GaussArgs),
    /// Major/minor-arc report for e^g with explicit cuts
    HaymanCut(HaymanCutArgs),
    /// Suggest an estimation regime and list unmet preconditions
    SuggestRegime(SuggestArgs),
    /// Mean, variance, gauge and mean-limit of a spec at a radius
    Eval(EvalArgs),
    /// Invert the mean function: the t with m(t) = x
    SolveMean(SolveMeanArgs),
    /// Saddle-expansion coefficients B_j and C_j (exact rationals)
    Expansion(ExpansionArgs),
    /// Residual of the tilted-solution rescaling identity
    Rescale(RescaleArgs),
}

#[derive(Args)]
struct CoeffArgs {
    /// Series spec (exp | affine:a,b | geom | binpow:d | poly:c0,c1,... |
    /// exppoly:c1,... | trunc:file@R)
    #[arg(long)]
    spec: String,
    #[arg(long)]
    k: u64,
    #[arg(long)]
    n: u64,
    /// Exact rational coefficient via the series oracle
    #[arg(long, conflicts_with = "regime")]
    exact: bool,
    /// Estimation regime: comparable | limit-ratio | small-k |
    /// small-k-closed | large-k | fixed-k | boundary
    #[arg(long)]
    regime: Option<String>,
    /// Limit of k/n (limit-ratio regime)
    #[arg(long)]
    ratio: Option<f64>,
    /// Fluctuation scale omega (limit-ratio regime)
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    /// Expansion order J (small-k-closed regime)
    #[arg(long, default_value_t = 1)]
    expansion_order: usize,
    /// Use the un-simplified sigma(tau) sqrt(n) prefactor for small-k
    #[arg(long)]
    unsimplified: bool,
    /// Prefactor series h: estimate coefficients of h(z) psi(z)^n
    #[arg(long)]
    prefactor: Option<String>,
    /// Emit JSON instead of the human-readable form
    #[arg(long)]
    json: bool,
    /// Render exact rationals as decimals with this many fractional digits
    #[arg(long)]
    digits: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    spec: String,
    /// comparable | limit-ratio | small-k | large-k | fixed-k | boundary
    #[arg(long)]
    regime: String,
    /// half-n | sqrt-n | fixed:K | ratio:L[,omega]
    #[arg(long)]
    k_rule: String,
    /// Comma-separated list of powers n
    #[arg(long)]
    n_list: String,
}

#[derive(Args)]
struct LagrangeArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    n: u64,
    /// Coefficient of g^q instead of g
    #[arg(long, conflicts_with = "h")]
    q: Option<u64>,
    /// Coefficient of H(g) for this series H
    #[arg(long)]
    h: Option<String>,
    /// Asymptotic estimate instead of the exact rational
    #[arg(long)]
    asymptotic: bool,
    /// Sliding-power parameters q ~ alpha n + beta sqrt(n) (asymptotic --q)
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    digits: Option<usize>,
}

#[derive(Args)]
struct SpecOnlyArgs {
    #[arg(long)]
    spec: String,
}

#[derive(Args)]
struct PmfArgs {
    #[arg(long)]
    offspring: String,
    /// Offspring tilt in (0, tau]
    #[arg(long)]
    t: f64,
    /// Initial distribution: mono:j or a spec text
    #[arg(long)]
    initial: String,
    /// Initial tilt (ignored for mono:j)
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long)]
    n_max: u64,
    /// Asymptotic mass values instead of the series pipeline
    #[arg(long)]
    asymptotic: bool,
    /// Borel-Tanner closed form with this many ancestors (offspring and
    /// initial flags are ignored)
    #[arg(long)]
    borel_tanner: Option<u64>,
    /// Poisson-Poisson closed form with parameters s, t
    #[arg(long, conflicts_with = "borel_tanner")]
    poisson_poisson: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    offspring: String,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    initial: String,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    /// Number of simulated cascades (accepts 1e6 notation)
    #[arg(long, value_parser = parse_count)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Population cap; runs beyond it count as escaped
    #[arg(long, value_parser = parse_count, default_value = "10000000")]
    cap: u64,
}

#[derive(Args)]
struct GaussArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    n: u64,
}

#[derive(Args)]
struct HaymanCutArgs {
    /// Exponent polynomial coefficients c1,c2,... (g = c1 z + c2 z^2 + ...)
    #[arg(long)]
    g: String,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    t: f64,
}

#[derive(Args)]
struct SuggestArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    k: u64,
    #[arg(long)]
    n: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SolveMeanArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    x: f64,
}

#[derive(Args)]
struct ExpansionArgs {
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 5)]
    j_max: usize,
}

#[derive(Args)]
struct RescaleArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 15)]
    degree: usize,
}

enum CliError {
    /// Malformed input: exit 2
    Usage(String),
    /// A library precondition failed: exit 1
    Domain(powser::Error),
}

impl From<powser::Error> for CliError {
    fn from(e: powser::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<spec_text::ParseError> for CliError {
    fn from(e: spec_text::ParseError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    // die quietly when a downstream pipe closes (e.g. `powser ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    if let Ok(threads) = std::env::var("LP_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        } else {
            eprintln!("warning: ignoring unparseable LP_THREADS='{threads}'");
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Coeff(args) => cmd_coeff(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Lagrange(args) => cmd_lagrange(args),
        Command::LagrangeRadius(args) => cmd_lagrange_radius(args),
        Command::Pmf(args) => cmd_pmf(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Gauss(args) => cmd_gauss(args),
        Command::HaymanCut(args) => cmd_hayman_cut(args),
        Command::SuggestRegime(args) => cmd_suggest(args),
        Command::Eval(args) => cmd_eval(args),
        Command::SolveMean(args) => cmd_solve_mean(args),
        Command::Expansion(args) => cmd_expansion(args),
        Command::Rescale(args) => cmd_rescale(args),
    }
}

fn print_rational(value: &BigRational, digits: Option<usize>, json: bool) {
    match (digits, json) {
        (Some(d), false) => println!("{}", rational::to_decimal_string(value, d)),
        (None, false) => println!("{}", rational_string(value)),
        (_, true) => {
            println!("{}", serde_json::json!({ "exact": rational_string(value) }))
        }
    }
}

fn print_estimate(est: &LogEstimate, json: bool) {
    if json {
        println!("{}", serde_json::to_string(est).expect("serializable"));
        return;
    }
    if est.is_zero_flagged() {
        println!("coefficient is exactly zero (gauge divisibility fails)");
        return;
    }
    let log_value = est.log_value.unwrap();
    println!("regime      {:?}", est.regime);
    println!("tau         {}", sci(est.tau));
    println!("logValue    {}", sci(log_value));
    if log_value.abs() < 700.0 {
        println!("value       {}", sci(log_value.exp()));
    } else {
        println!("value       (beyond f64 range; use logValue)");
    }
    println!("factors:");
    for (label, value) in &est.factors {
        println!("  {:<22} {}", format!("{label:?}"), sci(*value));
    }
}

#[allow(clippy::too_many_arguments)]
fn estimate_for_regime(
    regime: &str,
    spec: &SeriesSpec,
    k: u64,
    n: u64,
    ratio: Option<f64>,
    omega: f64,
    expansion_order: usize,
    unsimplified: bool,
) -> Result<LogEstimate, CliError> {
    Ok(match regime {
        "comparable" => powers::estimate_comparable(spec, k, n)?,
        "limit-ratio" => {
            let ratio = ratio
                .ok_or_else(|| CliError::Usage("limit-ratio regime needs --ratio L".into()))?;
            powers::estimate_limit_ratio(spec, n, ratio, omega, k)?
        }
        "small-k" if unsimplified => powers::estimate_small_k_unsimplified(spec, k, n)?,
        "small-k" => powers::estimate_small_k(spec, k, n)?,
        "small-k-closed" => powers::estimate_small_k_closed(spec, k, n, expansion_order)?,
        "large-k" => powers::estimate_large_k(spec, k, n)?,
        "fixed-k" => powers::estimate_fixed_k(spec, k as usize, n)?,
        "boundary" => powers::estimate_boundary(spec, k, n)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown regime '{other}' (expected comparable, limit-ratio, small-k, \
                 small-k-closed, large-k, fixed-k, boundary)"
            )))
        }
    })
}

fn cmd_coeff(args: CoeffArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    if args.exact || args.regime.is_none() {
        let value = coeff_of_power(&spec, args.k as usize, args.n)?;
        print_rational(&value, args.digits, args.json);
        return Ok(());
    }
    let regime = args.regime.as_deref().unwrap();
    let est = if let Some(h_text) = &args.prefactor {
        let h = parse_spec(h_text)?;
        let pre_regime = match regime {
            "comparable" => PrefactorRegime::Comparable,
            "small-k" => PrefactorRegime::SmallK,
            "fixed-k" => PrefactorRegime::FixedK,
            other => {
                return Err(CliError::Usage(format!(
                    "--prefactor supports comparable, small-k and fixed-k (got '{other}')"
                )))
            }
        };
        powers::estimate_with_prefactor(&h, &spec, args.k, args.n, pre_regime)?
    } else {
        estimate_for_regime(
            regime,
            &spec,
            args.k,
            args.n,
            args.ratio,
            args.omega,
            args.expansion_order,
            args.unsimplified,
        )?
    };
    print_estimate(&est, args.json);
    Ok(())
}

enum KRule {
    HalfN,
    SqrtN,
    Fixed(u64),
    Ratio(f64, f64),
}

fn parse_k_rule(text: &str) -> Result<KRule, CliError> {
    Ok(match text {
        "half-n" => KRule::HalfN,
        "sqrt-n" => KRule::SqrtN,
        _ if text.starts_with("fixed:") => {
            let k = text[6..]
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid k in '{text}'")))?;
            KRule::Fixed(k)
        }
        _ if text.starts_with("ratio:") => {
            let body = &text[6..];
            let (l, omega) = match body.split_once(',') {
                Some((l, w)) => (
                    l,
                    w.parse()
                        .map_err(|_| CliError::Usage(format!("invalid omega in '{text}'")))?,
                ),
                None => (body, 0.0),
            };
            let l: f64 = l
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid ratio in '{text}'")))?;
            KRule::Ratio(l, omega)
        }
        _ => {
            return Err(CliError::Usage(format!(
                "unknown k-rule '{text}' (expected half-n, sqrt-n, fixed:K, ratio:L[,omega])"
            )))
        }
    })
}

impl KRule {
    fn k_for(&self, n: u64) -> u64 {
        match self {
            KRule::HalfN => n / 2,
            KRule::SqrtN => (n as f64).sqrt() as u64,
            KRule::Fixed(k) => *k,
            KRule::Ratio(l, omega) => {
                (l * n as f64 + omega * (n as f64).sqrt()).floor().max(0.0) as u64
            }
        }
    }
}

/// (n, k, Ok((logExact, logEstimate)) | Err(reason))
type CompareRow = (u64, u64, Result<(f64, f64), powser::Error>);

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let rule = parse_k_rule(&args.k_rule)?;
    let mut ns = Vec::new();
    for piece in args.n_list.split(',') {
        ns.push(parse_count(piece.trim()).map_err(CliError::Usage)?);
    }
    let (ratio_l, ratio_omega) = match rule {
        KRule::Ratio(l, w) => (Some(l), w),
        _ => (None, 0.0),
    };

    let mut rows: Vec<CompareRow> = ns
        .par_iter()
        .map(|&n| {
            let k = rule.k_for(n);
            let row = (|| {
                let est = match args.regime.as_str() {
                    "comparable" => powers::estimate_comparable(&spec, k, n)?,
                    "limit-ratio" => {
                        let l = ratio_l.ok_or_else(|| {
                            powser::Error::RegimeMismatch(
                                "limit-ratio regime needs the ratio:L[,omega] k-rule".into(),
                            )
                        })?;
                        powers::estimate_limit_ratio(&spec, n, l, ratio_omega, k)?
                    }
                    "small-k" => powers::estimate_small_k(&spec, k, n)?,
                    "large-k" => powers::estimate_large_k(&spec, k, n)?,
                    "fixed-k" => powers::estimate_fixed_k(&spec, k as usize, n)?,
                    "boundary" => powers::estimate_boundary(&spec, k, n)?,
                    other => {
                        return Err(powser::Error::RegimeMismatch(format!(
                            "unknown regime '{other}'"
                        )))
                    }
                };
                let exact = coeff_of_power(&spec, k as usize, n)?;
                match (est.log_value, rational::log_magnitude(&exact)) {
                    (Some(le), Some((_, lx))) => Ok((lx, le)),
                    (None, None) => Err(powser::Error::RegimeMismatch(
                        "coefficient is exactly zero under this k-rule".into(),
                    )),
                    _ => Err(powser::Error::RegimeMismatch(
                        "zero flag disagrees with the exact coefficient".into(),
                    )),
                }
            })();
            (n, k, row)
        })
        .collect();
    rows.sort_by_key(|r| r.0);

    println!("n,k,logExact,logEstimate,ratio");
    for (n, k, row) in rows {
        match row {
            Ok((lx, le)) => {
                println!("{n},{k},{},{},{}", sci(lx), sci(le), sci((le - lx).exp()));
            }
            Err(e) => eprintln!("# skipped n={n} k={k}: {e}"),
        }
    }
    Ok(())
}

fn cmd_lagrange(args: LagrangeArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    if args.asymptotic {
        if let Some(q) = args.q {
            let est = lagrange::omm_power_asymptotic(&spec, args.n, q, args.alpha, args.beta)?;
            print_estimate(&est, args.json);
        } else {
            match lagrange::omm_asymptotic(&spec, args.n)? {
                OmmAsymptotic::Estimate(est) => print_estimate(&est, args.json),
                OmmAsymptotic::Envelope(env) => {
                    if args.json {
                        println!("{}", serde_json::json!({ "upperEnvelope": env }));
                    } else {
                        println!(
                            "upper envelope ({}): logValue {}",
                            env.note,
                            sci(env.log_value)
                        );
                    }
                }
            }
        }
        return Ok(());
    }
    let value = if let Some(h_text) = &args.h {
        let h = parse_spec(h_text)?;
        lagrange::lagrange_h_coeff(&h, &spec, args.n)?
    } else if let Some(q) = args.q {
        lagrange::lagrange_power_coeff(&spec, args.n, q)?
    } else {
        lagrange::lagrange_coeff(&spec, args.n)?
    };
    print_rational(&value, args.digits, args.json);
    Ok(())
}

fn cmd_lagrange_radius(args: SpecOnlyArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let radius = lagrange::solution_radius(&spec)?;
    println!("{}  # {:?}", sci(radius.value), radius.kind);
    Ok(())
}

fn cmd_pmf(args: PmfArgs) -> Result<(), CliError> {
    if let Some(j) = args.borel_tanner {
        for n in 0..=args.n_max {
            let p = if n == 0 { 0.0 } else { lagrangian::borel_tanner_pmf(args.t, j, n) };
            println!("{n}, {}", sci(p));
        }
        return Ok(());
    }
    if args.poisson_poisson {
        for n in 0..=args.n_max {
            println!("{n}, {}", sci(lagrangian::poisson_poisson_pmf(args.s, args.t, n)));
        }
        return Ok(());
    }
    let offspring = parse_spec(&args.offspring)?;
    let initial = parse_initial(&args.initial)?;
    let lspec = LagrangianSpec::new(offspring, initial, args.t, args.s);
    if args.asymptotic {
        for n in 1..=args.n_max {
            let est = lagrangian::lagrangian_pmf_asymptotic(&lspec, n)?;
            println!("{n}, {}", sci(est.value()));
        }
        return Ok(());
    }
    let pmf = lagrangian::lagrangian_pmf(&lspec, args.n_max)?;
    if args.json {
        println!("{}", serde_json::to_string(&pmf).expect("serializable"));
    } else {
        for (n, p) in &pmf.masses {
            println!("{n}, {}", sci(*p));
        }
        println!("# tailMass {}", sci(pmf.tail_mass));
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let offspring = parse_spec(&args.offspring)?;
    let initial = parse_initial(&args.initial)?;
    let lspec = LagrangianSpec::new(offspring, initial, args.t, args.s);
    let hist = lagrangian::gw_simulate(&lspec, args.samples, args.seed, args.cap)?;
    println!(
        "# samples={} seed={} cap={} escaped={} escapedMass={}",
        hist.samples,
        args.seed,
        hist.cap,
        hist.escaped,
        sci(hist.escaped_mass())
    );
    println!("n,count,frequency");
    for (n, count) in &hist.counts {
        println!("{n},{count},{}", sci(*count as f64 / hist.samples as f64));
    }
    Ok(())
}

fn cmd_gauss(args: GaussArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let value = gaussianity::gaussian_integral_i(&spec, args.t, args.n)?;
    let sigma = khinchin::evaluate(&spec, args.t)?.variance.sqrt();
    println!(
        "{}",
        serde_json::json!({ "t": args.t, "n": args.n, "sigma": sigma, "integralI": value })
    );
    Ok(())
}

fn cmd_hayman_cut(args: HaymanCutArgs) -> Result<(), CliError> {
    let mut coeffs = vec![BigRational::from_integer(0.into())];
    let mut offset = 0usize;
    for piece in args.g.split(',') {
        coeffs.push(parse_rational(piece, &args.g, offset)?);
        offset += piece.len() + 1;
    }
    let report = gaussianity::hayman_cut_check(&coeffs, args.n, args.t)?;
    println!("{}", serde_json::to_string(&report).expect("serializable"));
    Ok(())
}

fn cmd_suggest(args: SuggestArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let suggestion = powers::suggest_regime(&spec, args.k, args.n)?;
    println!("{}", serde_json::to_string(&suggestion).expect("serializable"));
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let eval = khinchin::evaluate(&spec, args.t)?;
    let limit = khinchin::mean_limit(&spec)?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "t": eval.t,
                "f": eval.f_val,
                "logF": eval.log_f,
                "mean": eval.mean,
                "variance": eval.variance,
                "gauge": spec.gauge(),
                "gaugeObserved": spec.gauge_is_observed(),
                "meanLimit": if limit.is_finite() { Some(limit.value()) } else { None },
            })
        );
    } else {
        println!("t           {}", sci(eval.t));
        println!("f(t)        {}", sci(eval.f_val));
        println!("ln f(t)     {}", sci(eval.log_f));
        println!("mean        {}", sci(eval.mean));
        println!("variance    {}", sci(eval.variance));
        println!(
            "gauge       {}{}",
            spec.gauge(),
            if spec.gauge_is_observed() { " (observed)" } else { "" }
        );
        match limit {
            khinchin::MeanLimit::Finite(v) => println!("mean limit  {}", sci(v)),
            khinchin::MeanLimit::Infinite => println!("mean limit  infinite"),
        }
    }
    Ok(())
}

fn cmd_solve_mean(args: SolveMeanArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let t = khinchin::solve_mean(&spec, args.x)?;
    println!("{}", sci(t));
    Ok(())
}

fn cmd_expansion(args: ExpansionArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let bs = powers::expansion_b(&spec, args.j_max)?;
    let cs = powers::expansion_c(&spec, args.j_max)?;
    println!("j,B_j,C_j");
    for j in 1..=args.j_max {
        println!("{j},{},{}", rational_string(&bs[j - 1]), rational_string(&cs[j - 1]));
    }
    Ok(())
}

fn cmd_rescale(args: RescaleArgs) -> Result<(), CliError> {
    let spec = parse_spec(&args.spec)?;
    let residual = lagrangian::rescale_check(&spec, args.t, args.degree)?;
    println!("{}", sci(residual));
    Ok(())
}
