//! Text forms: format descriptors, single floats and expansion lines.
//!
//! - format: `beta=<int> p=<int> emin=<int>` or `beta=<int> p=<int> r=<int>`
//!   (also `binary64` / `binary32`)
//! - float: `(<n>,<e>)` in any radix, or a hexadecimal literal such as
//!   `-0x1.8p-3` in radix 2
//! - expansion: one line of whitespace-separated floats, most significant
//!   first, optionally led by `eps=<p>/<q>`

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, Zero};

use crate::error::{Error, Result};
use crate::fmodel::{BFloat, GenericFormat};

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse(msg.into()))
}

pub fn parse_format(s: &str) -> Result<GenericFormat> {
    let s = s.trim();
    match s {
        "binary64" => return Ok(GenericFormat::binary64()),
        "binary32" => return Ok(GenericFormat::binary32()),
        _ => {}
    }
    let (mut beta, mut p, mut emin, mut r) = (None, None, None, None);
    for tok in s.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{tok}`")))?;
        let slot = match k {
            "beta" => &mut beta,
            "p" => &mut p,
            "emin" => &mut emin,
            "r" => &mut r,
            _ => return parse_err(format!("unknown format key `{k}`")),
        };
        if slot.is_some() {
            return parse_err(format!("duplicate format key `{k}`"));
        }
        *slot = Some(v.parse::<i64>().map_err(|_| Error::Parse(format!("`{v}` is not an integer")))?);
    }
    let beta = beta.ok_or_else(|| Error::Parse("missing beta".into()))?;
    let p = p.ok_or_else(|| Error::Parse("missing p".into()))?;
    let to_u32 = |v: i64, name: &str| u32::try_from(v).map_err(|_| Error::Parse(format!("{name} out of range")));
    match (emin, r) {
        (Some(e), None) => GenericFormat::new(to_u32(beta, "beta")?, to_u32(p, "p")?, e),
        (None, Some(r)) => GenericFormat::with_exponent_width(to_u32(beta, "beta")?, to_u32(p, "p")?, to_u32(r, "r")?),
        _ => parse_err("give exactly one of emin or r"),
    }
}

pub fn format_format(f: &GenericFormat) -> String {
    format!("beta={} p={} emin={}", f.beta(), f.precision(), f.e_min())
}

/// Parses one float token. Hexadecimal literals are exact radix-2 values; the
/// result is checked for membership in `fmt`.
pub fn parse_float(fmt: &GenericFormat, s: &str) -> Result<BFloat> {
    let s = s.trim();
    let f = if s.starts_with('(') {
        parse_pair(s)?
    } else {
        if fmt.beta() != 2 {
            return parse_err(format!("hexadecimal literal `{s}` needs radix 2"));
        }
        parse_hex(s)?
    };
    use crate::float::FloatArith;
    fmt.from_bfloat(&f)
}

fn parse_pair(s: &str) -> Result<BFloat> {
    let inner = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("malformed pair `{s}`")))?;
    let (n, e) = inner.split_once(',').ok_or_else(|| Error::Parse(format!("malformed pair `{s}`")))?;
    let n: BigInt = n.trim().parse().map_err(|_| Error::Parse(format!("bad significand in `{s}`")))?;
    let e: i64 = e.trim().parse().map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
    Ok(BFloat::new(n, e))
}

/// Exact value of a hexadecimal floating literal as `(n, e)` in radix 2.
pub fn parse_hex(s: &str) -> Result<BFloat> {
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let body = body
        .strip_prefix("0x")
        .or_else(|| body.strip_prefix("0X"))
        .ok_or_else(|| Error::Parse(format!("`{s}` is not a hexadecimal float")))?;
    let (mant, exp) = match body.find(['p', 'P']) {
        Some(i) => (&body[..i], &body[i + 1..]),
        None => (body, "0"),
    };
    let exp: i64 = exp.parse().map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return parse_err(format!("`{s}` has no digits"));
    }
    let digits = format!("{int}{frac}");
    let n = BigInt::from_str_radix(&digits, 16).map_err(|_| Error::Parse(format!("bad hex digits in `{s}`")))?;
    let n = if neg { -n } else { n };
    Ok(BFloat::new(n, exp - 4 * frac.len() as i64))
}

/// Hexadecimal literal of a radix-2 float: `[-]0x1.<hex>p<exp>`, or `0x0p+0`.
pub fn format_hex(_fmt: &GenericFormat, f: &BFloat) -> String {
    if f.n.is_zero() {
        return "0x0p+0".into();
    }
    let m = f.n.abs();
    let bits = m.bits();
    let exp = f.e + bits as i64 - 1;
    let frac_bits = bits - 1;
    let pad = (4 - frac_bits % 4) % 4;
    let one = BigInt::from(1) << frac_bits;
    let frac: BigInt = (m - one) << pad;
    let width = ((frac_bits + pad) / 4) as usize;
    let mut hex = if width == 0 { String::new() } else { format!("{:0>width$}", frac.to_str_radix(16)) };
    while hex.ends_with('0') {
        hex.pop();
    }
    let mut out = String::new();
    if f.n.is_negative() {
        out.push('-');
    }
    out.push_str("0x1");
    if !hex.is_empty() {
        out.push('.');
        out.push_str(&hex);
    }
    let _ = write!(out, "p{}{}", if exp < 0 { "-" } else { "+" }, exp.abs());
    out
}

pub fn format_pair(f: &BFloat) -> String {
    format!("({},{})", f.n, f.e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FloatStyle {
    Pair,
    Hex,
}

/// A parsed expansion line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpansionLine {
    pub epsilon: Option<BigRational>,
    pub components: Vec<BFloat>,
}

/// Splits a line into float tokens, allowing blanks inside `( , )` pairs.
fn tokens(line: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0;
    for ch in line.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
                if depth < 0 {
                    return parse_err("unbalanced `)`");
                }
            }
            c if c.is_whitespace() => {
                if depth > 0 {
                    continue;
                }
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if depth != 0 {
        return parse_err("unbalanced `(`");
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn parse_expansion_line(fmt: &GenericFormat, line: &str) -> Result<ExpansionLine> {
    let mut toks = tokens(line)?;
    let mut epsilon = None;
    if let Some(first) = toks.first() {
        if let Some(v) = first.strip_prefix("eps=") {
            let (p, q) = v.split_once('/').unwrap_or((v, "1"));
            let p: BigInt = p.parse().map_err(|_| Error::Parse(format!("bad epsilon `{v}`")))?;
            let q: BigInt = q.parse().map_err(|_| Error::Parse(format!("bad epsilon `{v}`")))?;
            if q.is_zero() {
                return parse_err("epsilon denominator is zero");
            }
            epsilon = Some(BigRational::new(p, q));
            toks.remove(0);
        }
    }
    let components = toks.iter().map(|t| parse_float(fmt, t)).collect::<Result<Vec<_>>>()?;
    Ok(ExpansionLine { epsilon, components })
}

pub fn format_expansion_line(fmt: &GenericFormat, line: &ExpansionLine, style: FloatStyle) -> String {
    let mut parts = Vec::new();
    if let Some(eps) = &line.epsilon {
        parts.push(format!("eps={}/{}", eps.numer(), eps.denom()));
    }
    for c in &line.components {
        parts.push(match style {
            FloatStyle::Pair => format_pair(c),
            FloatStyle::Hex => format_hex(fmt, c),
        });
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors() {
        let f = parse_format("beta=2 p=53 r=11").unwrap();
        assert_eq!(f.e_min(), 1074);
        assert_eq!(format_format(&f), "beta=2 p=53 emin=1074");
        assert_eq!(parse_format("beta=10 p=2 emin=0").unwrap().e_min(), 0);
        assert!(parse_format("beta=2 p=4").is_err());
        assert!(parse_format("beta=2 p=4 emin=3 r=2").is_err());
        assert!(parse_format("beta=2 q=4 emin=3").is_err());
    }

    #[test]
    fn hex_literals() {
        let fmt = GenericFormat::binary64();
        let f = parse_hex("0x1.8p+1").unwrap();
        assert_eq!(fmt.value(&f), BigRational::from_integer(3.into()));
        let c = fmt.canonicalize(&parse_float(&fmt, "-0x1.8p-1").unwrap()).unwrap();
        assert_eq!(format_hex(&fmt, &c), "-0x1.8p-1");
        assert_eq!(format_hex(&fmt, &BFloat::new(1, -1074)), "0x1p-1074");
        assert_eq!(format_hex(&fmt, &BFloat::new(0, 3)), "0x0p+0");
        assert_eq!(format_hex(&fmt, &BFloat::new(0x1f, 0)), "0x1.fp+4");
    }

    #[test]
    fn pairs_and_lines() {
        let fmt = GenericFormat::new(10, 2, 3).unwrap();
        let line = parse_expansion_line(&fmt, "eps=1/4 (99, -1) (-5,-3)").unwrap();
        assert_eq!(line.epsilon, Some(BigRational::new(1.into(), 4.into())));
        assert_eq!(line.components, vec![BFloat::new(99, -1), BFloat::new(-5, -3)]);
        assert_eq!(format_expansion_line(&fmt, &line, FloatStyle::Pair), "eps=1/4 (99,-1) (-5,-3)");
        assert_eq!(parse_float(&fmt, "(100,0)").unwrap(), BFloat::new(10, 1));
        assert!(parse_float(&fmt, "(101,0)").is_err());
        assert!(parse_float(&fmt, "0x1p0").is_err());
    }
}

/// Scientific decimal approximation of `x` with `digits` significant digits,
/// rounded half away from zero: `-3.867e-2`, or `0` for zero.
pub fn format_decimal(x: &BigRational, digits: usize) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let digits = digits.max(1);
    let a = x.abs();
    let mut k: i64 = a.numer().to_string().len() as i64 - a.denom().to_string().len() as i64;
    let pow10 = |k: i64| {
        let p = BigRational::from_integer(BigInt::from(10).pow(k.unsigned_abs() as u32));
        if k >= 0 {
            p
        } else {
            p.recip()
        }
    };
    while a >= pow10(k + 1) {
        k += 1;
    }
    while a < pow10(k) {
        k -= 1;
    }
    let scaled = &a * pow10(digits as i64 - 1 - k);
    let half = BigRational::new(1.into(), 2.into());
    let mut m = (scaled + half).floor().to_integer();
    if m == BigInt::from(10).pow(digits as u32) {
        m /= 10;
        k += 1;
    }
    let s = m.to_string();
    let mut out = String::new();
    if x.is_negative() {
        out.push('-');
    }
    out.push_str(&s[..1]);
    if s.len() > 1 {
        out.push('.');
        out.push_str(&s[1..]);
    }
    let _ = write!(out, "e{k}");
    out
}
