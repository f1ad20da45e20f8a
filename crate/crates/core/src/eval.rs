//! Expressions evaluated to a requested accuracy, and determinant signs.
//!
//! Every subexpression is kept as `N / k` with `N` an exact stream and `k` a
//! positive integer constant, so decimal literals such as `1.6 = 8/5` stay
//! exact until one final division. Dividing by a literal or a bound name
//! folds into `k`; only a compound divisor introduces a division stream
//! inside the pipeline.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{add_streams, div_streams, mul_streams};
use crate::error::{Error, Result};
use crate::float::FloatArith;
use crate::fmodel::BFloat;
use crate::text::parse_hex;
use crate::toolset::{BoxStream, Negate, Pull, Stats, Tracer, VecSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(BigRational),
    Var(String),
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
}

pub type Bindings = BTreeMap<String, BigRational>;

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(BigRational),
    Ident(String),
    Op(char),
    Open,
    Close,
}

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse(msg.into()))
}

fn pow10(k: u64) -> BigInt {
    BigInt::from(10).pow(k as u32)
}

/// Exact value of an unsigned decimal literal `12.5e-3`.
fn parse_decimal(s: &str) -> Result<BigRational> {
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], &s[i + 1..]),
        None => (s, "0"),
    };
    let exp: i64 = exp.parse().map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return parse_err(format!("`{s}` has no digits"));
    }
    let n: BigInt = format!("0{int}{frac}").parse().map_err(|_| Error::Parse(format!("bad digits in `{s}`")))?;
    let shift = exp - frac.len() as i64;
    if shift.unsigned_abs() > 100_000 {
        return parse_err(format!("exponent of `{s}` is out of range"));
    }
    Ok(if shift >= 0 {
        BigRational::from_integer(n * pow10(shift as u64))
    } else {
        BigRational::new(n, pow10(shift.unsigned_abs()))
    })
}

fn lex(s: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '+' | '-' | '*' | '/' => {
                out.push(Token::Op(c));
                i += 1;
            }
            '−' => {
                out.push(Token::Op('-'));
                i += 1;
            }
            '×' => {
                out.push(Token::Op('*'));
                i += 1;
            }
            '÷' => {
                out.push(Token::Op('/'));
                i += 1;
            }
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                let hex = c == '0' && matches!(chars.get(i + 1), Some('x' | 'X'));
                if hex {
                    i += 2;
                    while i < chars.len() && (chars[i].is_ascii_hexdigit() || chars[i] == '.') {
                        i += 1;
                    }
                    if matches!(chars.get(i), Some('p' | 'P')) {
                        i += 1;
                        if matches!(chars.get(i), Some('+' | '-')) {
                            i += 1;
                        }
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                } else {
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                        i += 1;
                    }
                    if matches!(chars.get(i), Some('e' | 'E')) {
                        i += 1;
                        if matches!(chars.get(i), Some('+' | '-')) {
                            i += 1;
                        }
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = if hex { bfloat_value(&parse_hex(&text)?) } else { parse_decimal(&text)? };
                out.push(Token::Num(value));
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            _ => return parse_err(format!("unexpected character `{c}`")),
        }
    }
    Ok(out)
}

fn bfloat_value(f: &BFloat) -> BigRational {
    let p = BigInt::one() << f.e.unsigned_abs();
    if f.e >= 0 {
        BigRational::from_integer(&f.n * p)
    } else {
        BigRational::new(f.n.clone(), p)
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            let op = if c == '+' { Op::Add } else { Op::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { Op::Mul } else { Op::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(r)) => Ok(Expr::Num(r)),
            Some(Token::Ident(name)) => Ok(Expr::Var(name)),
            Some(Token::Open) => {
                let e = self.sum()?;
                match self.next() {
                    Some(Token::Close) => Ok(e),
                    _ => parse_err("missing `)`"),
                }
            }
            Some(t) => parse_err(format!("unexpected token {t:?}")),
            None => parse_err("unexpected end of expression"),
        }
    }
}

/// Parses `+ - * /`, unary signs, parentheses, decimal and hexadecimal
/// literals and identifiers.
pub fn parse_expr(s: &str) -> Result<Expr> {
    let mut p = Parser { tokens: lex(s)?, pos: 0 };
    let e = p.sum()?;
    if p.pos != p.tokens.len() {
        return parse_err(format!("trailing input in `{s}`"));
    }
    Ok(e)
}

/// A constant expression such as `1e-9`, `-0x1p-3` or `1/3`, evaluated exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    exact_value(&parse_expr(s)?, &Bindings::new())
}

/// Exact rational value of `expr`.
pub fn exact_value(expr: &Expr, bindings: &Bindings) -> Result<BigRational> {
    Ok(match expr {
        Expr::Num(r) => r.clone(),
        Expr::Var(name) => lookup(bindings, name)?.clone(),
        Expr::Neg(x) => -exact_value(x, bindings)?,
        Expr::Bin(op, a, b) => {
            let (a, b) = (exact_value(a, bindings)?, exact_value(b, bindings)?);
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div if b.is_zero() => return Err(Error::DivisionByZero),
                Op::Div => a / b,
            }
        }
    })
}

fn lookup<'a>(bindings: &'a Bindings, name: &str) -> Result<&'a BigRational> {
    bindings.get(name).ok_or_else(|| Error::Parse(format!("unbound identifier `{name}`")))
}

/// Components of the exact expansion of `x`, or `None` when `x` is not a sum
/// of floats of the format (a denominator that is not a power of the radix,
/// or digits below `beta^-e_min`). Each component keeps `p` digits starting at
/// the leading nonzero digit of what remains.
pub fn exact_components<A: FloatArith>(arith: &A, x: &BigRational) -> Result<Option<Vec<A::Float>>> {
    let beta = BigInt::from(arith.beta());
    let mut q = x.denom().clone();
    let mut k: i64 = 0;
    let mut scale = BigInt::one();
    while !q.is_one() {
        let g = q.gcd(&beta);
        if g.is_one() {
            return Ok(None);
        }
        q /= &g;
        scale *= &beta;
        k += 1;
    }
    let n = x.numer() * scale / x.denom();
    let (sign, mag) = n.into_parts();
    let digits = mag.to_radix_le(arith.beta());
    let p = arith.precision() as usize;
    let mut out = Vec::new();
    let mut i = digits.len();
    while i > 0 {
        while i > 0 && digits[i - 1] == 0 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let lo = i.saturating_sub(p);
        let mut lo_nz = lo;
        while digits[lo_nz] == 0 {
            lo_nz += 1;
        }
        let m = digits[lo_nz..i].iter().rev().fold(BigInt::zero(), |acc, d| acc * &beta + BigInt::from(*d));
        let e = lo_nz as i64 - k;
        if e < -arith.e_min() {
            return Ok(None);
        }
        let m = if sign == Sign::Minus { -m } else { m };
        out.push(arith.from_bfloat(&BFloat::new(m, e))?);
        i = lo;
    }
    Ok(Some(out))
}

fn integer_stream<A: FloatArith>(arith: &A, n: &BigInt) -> Result<BoxStream<A>> {
    let comps = exact_components(arith, &BigRational::from_integer(n.clone()))?.expect("integers are exact");
    Ok(Box::new(VecSource::new(arith, comps)))
}

/// `num / den` with `den > 0`.
struct Frac<A: FloatArith> {
    num: BoxStream<A>,
    den: BigInt,
}

struct Builder<'a, A: FloatArith> {
    arith: &'a A,
    bindings: &'a Bindings,
    tracer: Tracer,
}

impl<A: FloatArith> Builder<'_, A> {
    fn constant(&self, x: &BigRational) -> Result<Frac<A>> {
        let arith = self.arith;
        let beta = BigInt::from(arith.beta());
        let mut adic = BigInt::one();
        let mut rest = x.denom().clone();
        loop {
            let g = rest.gcd(&beta);
            if g.is_one() {
                break;
            }
            adic *= &g;
            rest /= &g;
        }
        let scaled = x * BigRational::from_integer(rest.clone());
        if let Some(comps) = exact_components(arith, &scaled)? {
            return Ok(Frac { num: Box::new(VecSource::new(arith, comps)), den: rest });
        }
        Ok(Frac { num: integer_stream(arith, x.numer())?, den: x.denom().clone() })
    }

    fn scale(&self, s: BoxStream<A>, m: &BigInt) -> Result<BoxStream<A>> {
        if m.is_one() {
            return Ok(s);
        }
        Ok(Box::new(mul_streams(self.arith, s, integer_stream(self.arith, m)?, self.tracer.clone())))
    }

    fn leaf_value(&self, e: &Expr) -> Result<Option<BigRational>> {
        Ok(match e {
            Expr::Num(r) => Some(r.clone()),
            Expr::Var(name) => Some(lookup(self.bindings, name)?.clone()),
            Expr::Neg(x) => self.leaf_value(x)?.map(|v| -v),
            Expr::Bin(..) => None,
        })
    }

    fn build(&self, e: &Expr) -> Result<Frac<A>> {
        let arith = self.arith;
        match e {
            Expr::Num(r) => self.constant(r),
            Expr::Var(name) => self.constant(lookup(self.bindings, name)?),
            Expr::Neg(x) => {
                let f = self.build(x)?;
                Ok(Frac { num: Box::new(Negate::new(arith, f.num)), den: f.den })
            }
            Expr::Bin(op, a, b) => {
                if *op == Op::Div {
                    if let Some(c) = self.leaf_value(b)? {
                        if c.is_zero() {
                            return Err(Error::DivisionByZero);
                        }
                        let fa = self.build(a)?;
                        let mut num = self.scale(fa.num, c.denom())?;
                        if c.is_negative() {
                            num = Box::new(Negate::new(arith, num));
                        }
                        return Ok(Frac { num, den: fa.den * c.numer().abs() });
                    }
                }
                let (fa, fb) = (self.build(a)?, self.build(b)?);
                let t = self.tracer.clone();
                match op {
                    Op::Add | Op::Sub => {
                        let den = fa.den.lcm(&fb.den);
                        let a = self.scale(fa.num, &(&den / &fa.den))?;
                        let mut b = self.scale(fb.num, &(&den / &fb.den))?;
                        if *op == Op::Sub {
                            b = Box::new(Negate::new(arith, b));
                        }
                        Ok(Frac { num: Box::new(add_streams(arith, a, b, t)), den })
                    }
                    Op::Mul => Ok(Frac { num: Box::new(mul_streams(arith, fa.num, fb.num, t)), den: fa.den * fb.den }),
                    Op::Div => {
                        let r = self.scale(fa.num, &fb.den)?;
                        let d = self.scale(fb.num, &fa.den)?;
                        Ok(Frac { num: Box::new(div_streams(arith, r, d, t)), den: BigInt::one() })
                    }
                }
            }
        }
    }
}

/// The lazily evaluated stream of `expr`, most significant component first.
pub fn expression_stream<A: FloatArith>(
    arith: &A,
    expr: &Expr,
    bindings: &Bindings,
    tracer: Tracer,
) -> Result<BoxStream<A>> {
    let b = Builder { arith, bindings, tracer: tracer.clone() };
    let f = b.build(expr)?;
    if f.den.is_one() {
        return Ok(f.num);
    }
    Ok(Box::new(div_streams(arith, f.num, integer_stream(arith, &f.den)?, tracer)))
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    /// Absolute accuracy; zero asks for the exact value.
    pub target: BigRational,
    /// Stop after this many components even if the target is not met.
    pub max_components: Option<usize>,
    /// Pulls allowed before giving up.
    pub budget: usize,
    pub trace: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            target: BigRational::new(1.into(), pow10(15)),
            max_components: None,
            budget: 100_000,
            trace: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvalResult<F> {
    pub components: Vec<F>,
    /// Exact sum of the components.
    pub value: BigRational,
    /// Certified bound on `|exact - value|`.
    pub bound: BigRational,
    /// The stream ended, so `value` is exact.
    pub complete: bool,
    /// Sign of the exact value when the bound decides it.
    pub sign: Option<Ordering>,
    pub stats: Stats,
    pub trace: Vec<String>,
}

impl<F> EvalResult<F> {
    /// Total firings of the top-level stages (`mq`, `pp`, `pq`, `sigma3`, `div`).
    pub fn firings(&self) -> u64 {
        total_firings(&self.stats)
    }
}

pub fn total_firings(stats: &Stats) -> u64 {
    stats.iter().filter(|(k, _)| !k.contains('.')).map(|(_, v)| v).sum()
}

fn decided_sign(value: &BigRational, bound: &BigRational) -> Option<Ordering> {
    if value.abs() > *bound {
        Some(value.cmp(&BigRational::zero()))
    } else if bound.is_zero() {
        Some(Ordering::Equal)
    } else {
        None
    }
}

/// Pulls components of `expr` until the certified residual is at most
/// `opts.target`, the stream ends, or `opts.max_components` is reached.
pub fn eval_adaptive<A: FloatArith>(
    arith: &A,
    expr: &Expr,
    bindings: &Bindings,
    opts: &EvalOptions,
) -> Result<EvalResult<A::Float>> {
    if opts.target.is_negative() {
        return Err(Error::Precondition(format!("target {} is negative", opts.target)));
    }
    let tracer = if opts.trace { Tracer::enabled() } else { Tracer::default() };
    let mut stream = expression_stream(arith, expr, bindings, tracer.clone())?;
    let mut components = Vec::new();
    let mut value = BigRational::zero();
    let mut pulls = 0;
    let mut complete = false;
    loop {
        if opts.max_components.is_some_and(|m| components.len() >= m) {
            break;
        }
        if pulls == opts.budget {
            return Err(Error::Budget(opts.budget));
        }
        pulls += 1;
        match stream.pull()? {
            Pull::Item(x) => {
                if !arith.is_zero(&x) {
                    value += arith.value(&x);
                    components.push(x);
                }
            }
            Pull::Done => {
                complete = true;
                break;
            }
            Pull::Frozen => return Err(Error::Frozen),
        }
        if opts.target.is_positive() && stream.residual().is_some_and(|r| r <= opts.target) {
            break;
        }
    }
    let bound = if complete {
        BigRational::zero()
    } else {
        stream.residual().ok_or_else(|| Error::Invariant("stream has no certified residual".into()))?
    };
    let mut stats = Stats::new();
    stream.collect_stats(&mut stats);
    Ok(EvalResult {
        sign: decided_sign(&value, &bound),
        components,
        value,
        bound,
        complete,
        stats,
        trace: tracer.lines(),
    })
}

#[derive(Clone, Debug)]
pub struct SignResult {
    pub sign: Ordering,
    /// Components pulled before the sign was decided.
    pub pulled: usize,
    pub stats: Stats,
}

/// Row scaled by a positive integer so that every entry is a sum of floats.
fn exact_row<A: FloatArith>(arith: &A, row: &[BigRational]) -> Result<Vec<Vec<A::Float>>> {
    let beta = BigInt::from(arith.beta());
    let mut l = BigInt::one();
    for x in row {
        let mut q = x.denom().clone();
        loop {
            let g = q.gcd(&beta);
            if g.is_one() {
                break;
            }
            q /= g;
        }
        l = l.lcm(&q);
    }
    let scaled: Option<Vec<_>> = row
        .iter()
        .map(|x| exact_components(arith, &(x * BigRational::from_integer(l.clone()))))
        .collect::<Result<_>>()?;
    if let Some(s) = scaled {
        return Ok(s);
    }
    let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    row.iter()
        .map(|x| {
            let v = x * BigRational::from_integer(l.clone());
            Ok(exact_components(arith, &v)?.expect("integers are exact"))
        })
        .collect()
}

/// Sign of the determinant of a 2×2 or 3×3 matrix. The product pipelines are
/// pulled until the certified bound excludes the other signs, or to the end
/// when the determinant is zero.
pub fn sign_det<A: FloatArith>(arith: &A, m: &[Vec<BigRational>]) -> Result<Ordering> {
    Ok(sign_det_with_stats(arith, m)?.sign)
}

pub fn sign_det_with_stats<A: FloatArith>(arith: &A, m: &[Vec<BigRational>]) -> Result<SignResult> {
    let dim = m.len();
    if !(dim == 2 || dim == 3) || m.iter().any(|r| r.len() != dim) {
        return Err(Error::Precondition(format!("expected a 2x2 or 3x3 matrix, got {dim} rows")));
    }
    let rows: Vec<Vec<Vec<A::Float>>> = m.iter().map(|r| exact_row(arith, r)).collect::<Result<_>>()?;
    let t = Tracer::default();
    let src = |i: usize, j: usize| -> BoxStream<A> { Box::new(VecSource::new(arith, rows[i][j].clone())) };
    let mul = |a: BoxStream<A>, b: BoxStream<A>| -> BoxStream<A> { Box::new(mul_streams(arith, a, b, t.clone())) };
    let add = |a: BoxStream<A>, b: BoxStream<A>| -> BoxStream<A> { Box::new(add_streams(arith, a, b, t.clone())) };
    let neg = |a: BoxStream<A>| -> BoxStream<A> { Box::new(Negate::new(arith, a)) };
    let minor = |r0: usize, r1: usize, c0: usize, c1: usize| {
        add(mul(src(r0, c0), src(r1, c1)), neg(mul(src(r0, c1), src(r1, c0))))
    };
    let mut stream = if dim == 2 {
        minor(0, 1, 0, 1)
    } else {
        let a = mul(src(0, 0), minor(1, 2, 1, 2));
        let b = neg(mul(src(0, 1), minor(1, 2, 0, 2)));
        let c = mul(src(0, 2), minor(1, 2, 0, 1));
        add(add(a, b), c)
    };
    let mut value = BigRational::zero();
    let mut pulled = 0;
    let sign = loop {
        match stream.pull()? {
            Pull::Item(x) => {
                pulled += 1;
                value += arith.value(&x);
            }
            Pull::Done => break value.cmp(&BigRational::zero()),
            Pull::Frozen => return Err(Error::Frozen),
        }
        if let Some(s) = stream.residual().and_then(|r| decided_sign(&value, &r)) {
            break s;
        }
    };
    let mut stats = Stats::new();
    stream.collect_stats(&mut stats);
    Ok(SignResult { sign, pulled, stats })
}
