//! Textual grammar for series specs:
//! `exp`, `affine:a,b`, `geom`, `binpow:d`, `poly:c0,c1,...`,
//! `exppoly:c1,...`, `trunc:file.csv@R`, plus `mono:j` for initial
//! distributions. Numbers are rationals `p/q`, decimals, or integers.

use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use powser::lagrangian::InitialSpec;
use powser::spec::SeriesSpec;

/// A parse failure annotated with the byte position in the input.
#[derive(Debug, Clone)]
pub struct ParseError {
    pub input: String,
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "parse error at byte {}: {}", self.position, self.message)?;
        writeln!(f, "  {}", self.input)?;
        write!(f, "  {}^", " ".repeat(self.position.min(self.input.len())))
    }
}

impl std::error::Error for ParseError {}

fn err(input: &str, position: usize, message: impl Into<String>) -> ParseError {
    ParseError { input: input.into(), position, message: message.into() }
}

/// Parse `p/q`, a decimal like `0.25`, or an integer, into a rational.
pub fn parse_rational(text: &str, input: &str, offset: usize) -> Result<BigRational, ParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(err(input, offset, "empty number"));
    }
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| err(input, offset, format!("invalid numerator '{p}'")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| err(input, offset, format!("invalid denominator '{q}'")))?;
        if q.is_zero() {
            return Err(err(input, offset, "zero denominator"));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int_part, frac_part)) = text.split_once('.') {
        let int_part = if int_part.is_empty() { "0" } else { int_part };
        let negative = int_part.starts_with('-');
        let whole: BigInt = int_part
            .parse()
            .map_err(|_| err(input, offset, format!("invalid decimal '{text}'")))?;
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(input, offset, format!("invalid decimal '{text}'")));
        }
        let digits: BigInt = frac_part
            .parse()
            .map_err(|_| err(input, offset, format!("invalid decimal '{text}'")))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let frac = BigRational::new(digits, scale);
        let whole = BigRational::from_integer(whole);
        return Ok(if negative { whole - frac } else { whole + frac });
    }
    let n: BigInt = text
        .parse()
        .map_err(|_| err(input, offset, format!("invalid number '{text}'")))?;
    Ok(BigRational::from_integer(n))
}

fn parse_list(body: &str, input: &str, offset: usize) -> Result<Vec<BigRational>, ParseError> {
    let mut out = Vec::new();
    let mut pos = offset;
    for piece in body.split(',') {
        out.push(parse_rational(piece, input, pos)?);
        pos += piece.len() + 1;
    }
    Ok(out)
}

/// Parse a spec string. File-backed specs (`trunc:`) read UTF-8 files with
/// one coefficient per line and `#` comments.
pub fn parse_spec(input: &str) -> Result<SeriesSpec, ParseError> {
    let (head, body) = match input.split_once(':') {
        Some((h, b)) => (h, Some(b)),
        None => (input, None),
    };
    let body_offset = head.len() + 1;
    match (head, body) {
        ("exp", None) => Ok(SeriesSpec::Exp),
        ("geom", None) => Ok(SeriesSpec::Geometric),
        ("exp" | "geom", Some(_)) => {
            Err(err(input, body_offset, format!("'{head}' takes no parameters")))
        }
        ("affine", Some(b)) => {
            let list = parse_list(b, input, body_offset)?;
            if list.len() != 2 {
                return Err(err(input, body_offset, "affine needs exactly two values: a,b"));
            }
            Ok(SeriesSpec::Affine(list[0].clone(), list[1].clone()))
        }
        ("binpow", Some(b)) => {
            let d: u32 = b
                .trim()
                .parse()
                .map_err(|_| err(input, body_offset, format!("invalid power '{b}'")))?;
            Ok(SeriesSpec::BinomialPower(d))
        }
        ("poly", Some(b)) => Ok(SeriesSpec::Polynomial(parse_list(b, input, body_offset)?)),
        ("exppoly", Some(b)) => {
            let mut coeffs = vec![BigRational::zero()];
            coeffs.extend(parse_list(b, input, body_offset)?);
            Ok(SeriesSpec::ExpPolynomial(coeffs))
        }
        ("trunc", Some(b)) => {
            let (path, radius) = b
                .rsplit_once('@')
                .ok_or_else(|| err(input, body_offset, "expected trunc:file@radius"))?;
            let radius: f64 = radius.trim().parse().map_err(|_| {
                err(input, body_offset + path.len() + 1, format!("invalid radius '{radius}'"))
            })?;
            let coeffs = read_coefficient_file(Path::new(path))
                .map_err(|e| err(input, body_offset, e))?;
            Ok(SeriesSpec::Truncated { coeffs, radius_hint: radius, asserted_gauge: None })
        }
        _ => Err(err(
            input,
            0,
            format!(
                "unknown spec kind '{head}' (expected exp, affine:a,b, geom, binpow:d, \
                 poly:c0,c1,..., exppoly:c1,..., trunc:file@R)"
            ),
        )),
    }
}

fn read_coefficient_file(path: &Path) -> Result<Vec<BigRational>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read '{}': {e}", path.display()))?;
    let mut coeffs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let value = parse_rational(line, line, 0)
            .map_err(|e| format!("{}:{}: {}", path.display(), lineno + 1, e.message))?;
        coeffs.push(value);
    }
    if coeffs.is_empty() {
        return Err(format!("'{}' contains no coefficients", path.display()));
    }
    Ok(coeffs)
}

/// Initial-distribution grammar: `mono:j` or any spec text.
pub fn parse_initial(input: &str) -> Result<InitialSpec, ParseError> {
    if let Some(body) = input.strip_prefix("mono:") {
        let j: u64 = body
            .trim()
            .parse()
            .map_err(|_| err(input, 5, format!("invalid initial size '{body}'")))?;
        if j == 0 {
            return Err(err(input, 5, "initial size must be at least 1"));
        }
        return Ok(InitialSpec::Monomial(j));
    }
    Ok(InitialSpec::Spec(parse_spec(input)?))
}

/// `1e6`-style counts for sample sizes and caps.
pub fn parse_count(text: &str) -> Result<u64, String> {
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = text.parse().map_err(|_| format!("invalid count '{text}'"))?;
    if v < 0.0 || !v.is_finite() || v.fract() != 0.0 || v > 1.8e19 {
        return Err(format!("count '{text}' is not a nonnegative integer"));
    }
    Ok(v as u64)
}

/// Render a nonnegative rational as `p/q` (or just `p` for integers).
pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
