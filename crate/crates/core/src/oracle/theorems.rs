//! Theorem sweeps. Tags 1 to 10 quantify over every float or representation
//! of a tiny format, 11 to 13 over every input of a six-digit binary format
//! in a relative window, and 14 over seeded binary64 division steps measured
//! with exact rationals.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_canonical_ref, representation_at, representation_range, representations, ReferenceFloats};
use crate::arith::{contraction, div};
use crate::eft::{fast_two_sum_at, fast_two_sum_unchecked, sterbenz_exact, two_product, two_sum};
use crate::error::{Error, Result};
use crate::expansion::PseudoExpansion;
use crate::float::{Binary64, FloatArith};
use crate::fmodel::{BFloat, GenericFormat, RoundingMode};
use crate::small::{SmallBinary, SmallFloat};
use crate::toolset::{collect, rerepresent, sigma3_step, StreamItem, ThreeSumState};

pub const THEOREM_TAGS: [&str; 15] = [
    "Thm1",
    "Thm2",
    "Thm3",
    "Thm4",
    "Thm5",
    "Thm6",
    "Thm7",
    "Thm8",
    "Thm9",
    "Thm10",
    "Thm11",
    "Thm12",
    "Thm13",
    "Thm14",
    "ExtDekker-raw3op",
];

const ALIASES: [(&str, &str); 2] = [("Sterbenz", "Thm5"), ("ExtDekker", "Thm9")];

pub const DEFAULT_SEED: u64 = 0x5eed_0014;

const ENUM_BUDGET: usize = 1_000_000;
/// Largest number of representations `(n, e)` in a default window.
const REP_BUDGET: i64 = 1000;
/// Relative amplitude window of the Σ3 sweep.
const SIGMA3_WINDOW: i64 = 8;

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub seed: u64,
    /// Replaces the default sweep format(s).
    pub format: Option<GenericFormat>,
    /// Radix of the raw three-operation counterexample, 10 or 4; both when unset.
    pub beta: Option<u32>,
    /// Division steps measured for Thm14.
    pub division_steps: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { seed: DEFAULT_SEED, format: None, beta: None, division_steps: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub tag: String,
    pub domain: String,
    pub trials: u64,
    pub passed: bool,
    pub counterexample: Option<String>,
    /// The statement is known to be false on this domain; reproducing a
    /// counterexample is the expected outcome.
    pub expected_failure: bool,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.passed != self.expected_failure
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tag={} domain={} trials={} result={}",
            self.tag,
            self.domain,
            self.trials,
            if self.passed { "pass" } else { "fail" }
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, " counterexample={c}")?;
        }
        if self.expected_failure {
            write!(f, " expected=fail")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Tally {
    trials: u64,
    failure: Option<String>,
    /// Extra counts appended to the domain.
    notes: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, cex: impl FnOnce() -> String) {
        self.trials += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(cex());
        }
    }

    fn report(self, tag: &str, domain: String) -> Report {
        let mut domain = domain;
        for n in &self.notes {
            domain.push(':');
            domain.push_str(n);
        }
        Report {
            tag: tag.to_string(),
            domain,
            trials: self.trials,
            passed: self.failure.is_none(),
            counterexample: self.failure,
            expected_failure: false,
        }
    }
}

fn f4() -> GenericFormat {
    GenericFormat::new(2, 4, 8).expect("valid format")
}

fn two() -> BigRational {
    BigRational::from_integer(2.into())
}

/// Amplitudes `[lo, hi]` swept for one format.
struct Window {
    fmt: GenericFormat,
    lo: i64,
    hi: i64,
}

impl Window {
    fn new(fmt: &GenericFormat) -> Result<Self> {
        let n_max: i64 = fmt
            .n_max()
            .try_into()
            .map_err(|_| Error::Precondition("format too large for an exhaustive sweep".into()))?;
        let span = (REP_BUDGET / (2 * n_max + 1) - 1).min(16);
        if span < 0 {
            return Err(Error::Precondition("format too large for an exhaustive sweep".into()));
        }
        let lo = -fmt.e_min();
        Ok(Window { fmt: fmt.clone(), lo, hi: lo + span })
    }

    fn describe(&self, what: &str) -> String {
        let f = &self.fmt;
        format!("F({},{},{})e[{},{}]:{what}", f.beta(), f.precision(), f.e_min(), self.lo, self.hi)
    }

    /// Every bounded `(n, e)` with `e` in the window.
    fn reps(&self) -> Vec<BFloat> {
        let n_max: i64 = self.fmt.n_max().try_into().expect("checked in new");
        let mut out = Vec::new();
        for e in self.lo..=self.hi {
            for n in -n_max..=n_max {
                out.push(BFloat::new(n, e));
            }
        }
        out
    }

    /// Canonical floats of the window in increasing order.
    fn canon(&self) -> Result<Vec<BFloat>> {
        self.fmt.enumerate_bounded(self.hi, ENUM_BUDGET)
    }

    /// The floats of the window, quarter and third points between them.
    fn points(&self) -> Result<Vec<BigRational>> {
        let vals: Vec<BigRational> = self.canon()?.iter().map(|f| self.fmt.value(f)).collect();
        let mut pts = Vec::new();
        for w in vals.windows(2) {
            let d = &w[1] - &w[0];
            pts.push(w[0].clone());
            for k in 1..4 {
                pts.push(&w[0] + &d * BigRational::new(k.into(), 4.into()));
            }
            pts.push(&w[0] + &d * BigRational::new(1.into(), 3.into()));
            pts.push(&w[0] + &d * BigRational::new(2.into(), 3.into()));
        }
        pts.extend(vals.last().cloned());
        pts.sort();
        Ok(pts)
    }
}

fn default_windows(opts: &CheckOptions, defaults: &[GenericFormat]) -> Result<Vec<Window>> {
    match &opts.format {
        Some(f) => Ok(vec![Window::new(f)?]),
        None => defaults.iter().map(Window::new).collect(),
    }
}

fn describe_all(ws: &[Window], what: &str) -> String {
    ws.iter().map(|w| w.describe(what)).collect::<Vec<_>>().join("+")
}

fn require_radix(w: &Window, allowed: &[u32]) -> Result<()> {
    let beta = w.fmt.beta();
    if allowed.contains(&beta) {
        Ok(())
    } else {
        Err(Error::UnsupportedRadix { beta, allow_three: allowed.contains(&3) })
    }
}

fn thm1(t: &mut Tally, w: &Window) -> Result<()> {
    let f = &w.fmt;
    for r in w.reps() {
        let c = f.canonicalize(&r)?;
        let v = f.value(&r);
        let mut ok = f.is_bounded(&c) && f.value(&c) == v && is_canonical_ref(f, &c) && f.canonicalize(&c)? == c;
        if !r.n.is_zero() {
            let canon: Vec<BFloat> =
                representations(f, &v, w.hi).into_iter().filter(|g| is_canonical_ref(f, g)).collect();
            ok &= canon == [c.clone()];
        }
        t.check(ok, || format!("f={r},canonical={c}"));
    }
    Ok(())
}

fn thm2(t: &mut Tally, w: &Window) -> Result<()> {
    let f = &w.fmt;
    let floats = f.enumerate_bounded(w.hi + 1, ENUM_BUDGET)?;
    let reference = ReferenceFloats::new(f, &floats);
    let pts = w.points()?;
    for mode in RoundingMode::ALL {
        let mut prev: Option<BigRational> = None;
        for x in &pts {
            let r = f.round(x, mode);
            let v = f.value(&r);
            let mut ok = f.is_bounded(&r) && reference.round(x, mode).contains(&r);
            if let Some(p) = &prev {
                ok &= *p <= v;
            }
            if representation_range(f, x).is_some() {
                ok &= v == *x;
            }
            t.check(ok, || format!("mode={mode:?},x={x},round={r}"));
            prev = Some(v);
        }
    }
    Ok(())
}

fn thm3(t: &mut Tally, w: &Window) -> Result<()> {
    let f = &w.fmt;
    let floats = f.enumerate_bounded(w.hi + 1, ENUM_BUDGET)?;
    let reference = ReferenceFloats::new(f, &floats);
    for x in &w.points()? {
        for member in reference.nearest(x) {
            let v = f.value(&member);
            let d = (x - &v).abs();
            for g in representations(f, &v, w.hi + 1) {
                let ok = d <= f.radix_pow_rational(g.e) / two();
                t.check(ok, || format!("x={x},float={g}"));
            }
        }
        let r = f.round(x, RoundingMode::NearestEven);
        let d = (x - f.value(&r)).abs();
        let tie = d == f.radix_pow_rational(r.e) / two();
        t.check(!tie || r.n.bit(0) == false, || format!("x={x},odd-tie={r}"));
    }
    Ok(())
}

fn thm4(t: &mut Tally, w: &Window) -> Result<()> {
    let f = &w.fmt;
    for mode in RoundingMode::ALL {
        for x in &w.points()? {
            let r = f.round(x, mode);
            let v = f.value(&r);
            if v == *x {
                continue;
            }
            let err = x - &v;
            let ok = match representation_range(f, &err) {
                None => true,
                Some((_, top)) => top.is_some_and(|h| h < f.canonical_exponent(&r)),
            };
            t.check(ok, || format!("mode={mode:?},x={x},round={r}"));
        }
    }
    Ok(())
}

fn canon_values(w: &Window) -> Result<(Vec<BFloat>, Vec<BigRational>)> {
    let fl = w.canon()?;
    let vals = fl.iter().map(|x| w.fmt.value(x)).collect();
    Ok((fl, vals))
}

fn thm5(t: &mut Tally, w: &Window) -> Result<()> {
    let f = &w.fmt;
    let (fl, vals) = canon_values(w)?;
    let doubled: Vec<BigRational> = vals.iter().map(|v| v * two()).collect();
    for (i, x) in fl.iter().enumerate() {
        for (j, y) in fl.iter().enumerate() {
            if !(vals[j] <= doubled[i] && vals[i] <= doubled[j]) {
                continue;
            }
            let d = &vals[i] - &vals[j];
            let ok = representation_range(f, &d).is_some() && sterbenz_exact(f, x, y).is_ok_and(|s| f.value(&s) == d);
            t.check(ok, || format!("x={x},y={y}"));
        }
    }
    Ok(())
}

fn thm6(t: &mut Tally, w: &Window) -> Result<()> {
    require_radix(w, &[2])?;
    let f = &w.fmt;
    let (fl, vals) = canon_values(w)?;
    for (i, x) in fl.iter().enumerate() {
        for (j, y) in fl.iter().enumerate() {
            let s = f.value(&f.add(x, y)?);
            let ok = s == &vals[i] + &vals[j] || s.abs() * two() >= vals[i].abs().max(vals[j].abs());
            t.check(ok, || format!("x={x},y={y}"));
        }
    }
    Ok(())
}

fn rep_values(w: &Window) -> (Vec<BFloat>, Vec<BigRational>) {
    let reps = w.reps();
    let vals = reps.iter().map(|x| w.fmt.value(x)).collect();
    (reps, vals)
}

fn thm7(t: &mut Tally, w: &Window) -> Result<()> {
    let f = &w.fmt;
    let (reps, vals) = rep_values(w);
    for (i, a) in reps.iter().enumerate() {
        for (j, b) in reps.iter().enumerate() {
            let s = f.add(a, b)?;
            let vs = f.value(&s);
            let err = &vals[i] + &vals[j] - &vs;
            let (lo_e, hi_e) = (a.e.min(b.e), a.e.max(b.e) + 1);
            let mut ok = representation_at(f, &err, lo_e).is_some();
            ok &= match representation_range(f, &vs) {
                Some((lo, top)) => lo.max(lo_e) <= top.map_or(hi_e, |h| h.min(hi_e)),
                None => false,
            };
            let pair = two_sum(f, a, b)?;
            ok &= f.value(&pair.hi) == vs && f.value(&pair.lo) == err;
            t.check(ok, || format!("a={a},b={b}"));
        }
    }
    Ok(())
}

fn thm8(t: &mut Tally, w: &Window) -> Result<()> {
    let f = &w.fmt;
    let (fl, vals) = canon_values(w)?;
    let half_ulp = f.ulp() / two();
    for (i, x) in fl.iter().enumerate() {
        for (j, y) in fl.iter().enumerate() {
            let s = f.add(x, y)?;
            if s.n.is_zero() {
                continue;
            }
            let vs = f.value(&s).abs();
            let err = (&vals[i] + &vals[j] - f.value(&s)).abs();
            let mut ok = err <= &vs * &half_ulp;
            if f.beta() == 2 {
                ok &= &vs * &half_ulp <= vals[i].abs().max(vals[j].abs()) * f.ulp();
            }
            t.check(ok, || format!("x={x},y={y}"));
        }
    }
    Ok(())
}

fn thm9(t: &mut Tally, w: &Window) -> Result<()> {
    require_radix(w, &[2, 3])?;
    let f = &w.fmt;
    let (reps, vals) = rep_values(w);
    for (i, a) in reps.iter().enumerate() {
        for (j, b) in reps.iter().enumerate() {
            if b.e > a.e {
                continue;
            }
            let s = f.value(&f.add(a, b)?);
            let ok = fast_two_sum_at(f, a, a.e, b, b.e)
                .is_ok_and(|p| f.value(&p.hi) == s && f.value(&p.lo) == &vals[i] + &vals[j] - &s);
            t.check(ok, || format!("a={a},b={b}"));
        }
    }
    Ok(())
}

/// The three-operation sum with no radix check, starting from a known
/// failing pair.
fn raw3op(t: &mut Tally, w: &Window, first: (&BFloat, &BFloat)) -> Result<()> {
    let f = &w.fmt;
    let mut one = |a: &BFloat, b: &BFloat| -> Result<()> {
        let exact = f.value(a) + f.value(b);
        let s = f.value(&f.add(a, b)?);
        let p = fast_two_sum_unchecked(f, a, b)?;
        let ok = f.value(&p.hi) == s && f.value(&p.hi) + f.value(&p.lo) == exact;
        t.check(ok, || format!("a={a},b={b},hi={},lo={}", p.hi, p.lo));
        Ok(())
    };
    one(first.0, first.1)?;
    let reps = w.reps();
    for a in &reps {
        for b in reps.iter().filter(|b| b.e <= a.e) {
            one(a, b)?;
        }
    }
    Ok(())
}

fn thm10(t: &mut Tally, w: &Window) -> Result<()> {
    let f = &w.fmt;
    let p = f.precision() as i64;
    let (reps, vals) = rep_values(w);
    let mut first: Option<String> = None;
    let mut failing = 0u64;
    for (i, a) in reps.iter().enumerate() {
        for (j, b) in reps.iter().enumerate() {
            if a.n.is_zero() || b.n.is_zero() || a.e + b.e < -f.e_min() + p {
                continue;
            }
            let prod = f.mul(a, b)?;
            let e = f.canonical_exponent(&prod);
            let err = &vals[i] * &vals[j] - f.value(&prod);
            let law = representation_at(f, &err, e - p).is_some();
            let tp = two_product(f, a, b)?;
            let want_e = if err.is_zero() { (e - p).max(-f.e_min()) } else { e - p };
            let contract = tp.lo_exponent == want_e && tp.hi == prod && f.value(&tp.lo) == err;
            t.trials += 1;
            if !(law && contract) {
                failing += 1;
                first.get_or_insert_with(|| format!("a={a},b={b},hi={prod},error={err},amplitude={}", e - p));
            }
        }
    }
    if let Some(c) = first {
        t.failure.get_or_insert(format!("{c},failing-pairs={failing}"));
    }
    Ok(())
}

fn small_format(opts: &CheckOptions) -> Result<SmallBinary> {
    match &opts.format {
        None => SmallBinary::new(6, 20),
        Some(f) if f.precision() > 6 => Err(Error::Precondition(format!(
            "precision {} is too large for the exhaustive summation sweeps",
            f.precision()
        ))),
        Some(f) => SmallBinary::from_model(f),
    }
}

fn small_desc(s: &SmallBinary, what: &str) -> String {
    format!("F(2,{},{}):{what}", s.precision(), s.e_min())
}

/// Significands exercising the binade edges of a `p`-digit format.
fn edge_significands(p: u32) -> Vec<i64> {
    let half = 1i64 << (p - 1);
    let mut out = vec![(1 << p) - 1, half + half / 2 - 1, half + 1, half, 2 * half / 3 | 1, 1];
    out.sort_unstable_by(|a, b| b.cmp(a));
    out.dedup();
    out
}

fn thm11(t: &mut Tally, s: &SmallBinary) -> Result<()> {
    let p = s.precision() as i64;
    let mut pool = vec![s.zero()];
    for e in [0, -1, -p, -p - 1] {
        for n in edge_significands(s.precision()) {
            pool.push(s.canonicalize(&SmallFloat { n, e }));
        }
    }
    for n in [(1 << (p - 1)) - 1, 3, 1] {
        pool.push(SmallFloat { n, e: -s.e_min() });
    }
    let mut signed: Vec<SmallFloat> = pool.iter().flat_map(|x| [*x, s.neg(x)]).collect();
    signed.sort_by(|a, b| s.cmp_abs(b, a));
    signed.dedup();
    let mut list = Vec::new();
    extend_sorted(t, s, &signed, &mut list, 4);
    Ok(())
}

/// All lists of length at most `left` more elements, non-increasing in
/// magnitude, each checked with the amplitude re-representation.
fn extend_sorted(t: &mut Tally, s: &SmallBinary, pool: &[SmallFloat], list: &mut Vec<SmallFloat>, left: usize) {
    if !list.is_empty() {
        let ok = match rerepresent(s, list) {
            Err(_) => false,
            Ok(items) => {
                items.windows(2).all(|w| w[0].amplitude >= w[1].amplitude)
                    && items
                        .iter()
                        .zip(list.iter())
                        .all(|(it, x)| it.val == *x && crate::float::valid_exponent(s, x, it.amplitude))
            }
        };
        t.check(ok, || list.iter().map(|x| s.display(x)).collect::<Vec<_>>().join(","));
    }
    if left == 0 {
        return;
    }
    for x in pool {
        if list.last().is_some_and(|last| s.cmp_abs(x, last).is_gt()) {
            continue;
        }
        list.push(*x);
        extend_sorted(t, s, pool, list, left - 1);
        list.pop();
    }
}

/// Exact integer view of small floats: `x * 2^e_min`.
struct Scaled {
    e_min: i64,
}

impl Scaled {
    fn of(&self, x: &SmallFloat) -> i128 {
        (x.n as i128) << (x.e + self.e_min)
    }

    fn pow(&self, e: i64) -> i128 {
        1i128 << (e + self.e_min)
    }
}

/// Largest amplitude of `x`, unbounded for zero.
fn top(s: &SmallBinary, x: &SmallFloat) -> i64 {
    s.max_exponent(x).unwrap_or(i64::MAX)
}

/// Checks one firing; the second result tells whether it emitted.
fn check_sigma3(s: &SmallBinary, sc: &Scaled, a: SmallFloat, b: SmallFloat, c: SmallFloat) -> (bool, bool) {
    let n_max = (1i128 << s.precision()) - 1;
    let p1 = s.precision() as i64 - 1;
    let state = ThreeSumState { a, b };
    let Ok(st) = sigma3_step(s, &state, &StreamItem { val: c, amplitude: c.e }) else {
        return (false, false);
    };
    let (a1, b1, c1) = (st.a1, st.b1, st.c1);
    let mut ok = sc.of(&a1) + sc.of(&b1) + sc.of(&c1) == sc.of(&a) + sc.of(&b) + sc.of(&c) && st.e_c == c.e;
    if c1.n != 0 {
        ok &= s.canonical_exponent(&c1) <= c.e && c.e <= top(s, &c1);
    }
    let lb = if b1.n == 0 { c.e } else { s.canonical_exponent(&b1).max(c.e) };
    ok &= lb <= top(s, &b1);
    let la = if a1.n == 0 { lb } else { s.canonical_exponent(&a1).max(lb) };
    ok &= la <= top(s, &a1);
    if c1.n != 0 {
        let big = 3 * sc.of(&a1).abs();
        ok &= (sc.of(&b1) + sc.of(&c1)).abs() << p1 <= big;
        ok &= (n_max * sc.pow(c.e)) << p1 <= big;
        ok &= st.emitted == Some(a1) && st.state == ThreeSumState { a: b1, b: c1 };
    } else {
        ok &= st.emitted.is_none() && st.state == ThreeSumState { a: a1, b: b1 };
    }
    let early = a.n == 0 || sc.of(&b).abs() + n_max * sc.pow(c.e) <= n_max * sc.pow(a.e);
    ok &= !early || st.early_exit;
    (ok, c1.n != 0)
}

fn thm12(t: &mut Tally, s: &SmallBinary) -> Result<()> {
    let sc = Scaled { e_min: s.e_min() };
    let n_max = (1i64 << s.precision()) - 1;
    let mut emitting = 0u64;
    for na in 0..=n_max {
        let a = SmallFloat { n: na, e: 0 };
        for eb in -SIGMA3_WINDOW..=0 {
            for nb in -n_max..=n_max {
                let b = SmallFloat { n: nb, e: eb };
                for ec in -SIGMA3_WINDOW..=eb {
                    for nc in -n_max..=n_max {
                        let c = SmallFloat { n: nc, e: ec };
                        let (ok, emitted) = check_sigma3(s, &sc, a, b, c);
                        emitting += emitted as u64;
                        t.check(ok, || format!("a={},b={},c={}", s.display(&a), s.display(&b), s.display(&c)));
                    }
                }
            }
        }
    }
    t.notes.push(format!("emitting-steps:{emitting}"));
    Ok(())
}

fn check_sum_list(s: &SmallBinary, sc: &Scaled, list: &[SmallFloat]) -> bool {
    let len = list.len() as i128;
    let n_max = (1i128 << s.precision()) - 1;
    let p1 = s.precision() as i64 - 1;
    let mut state = ThreeSumState::zero(s);
    let mut out = Vec::with_capacity(list.len() + 1);
    for x in list {
        match sigma3_step(s, &state, &StreamItem { val: *x, amplitude: x.e }) {
            Ok(st) => {
                out.extend(st.emitted);
                state = st.state;
            }
            Err(_) => return false,
        }
    }
    out.extend([state.a, state.b].into_iter().filter(|x| x.n != 0));
    let total: i128 = list.iter().map(|x| sc.of(x)).sum();
    let vals: Vec<i128> = out.iter().map(|x| sc.of(x)).collect();
    let mut ok = vals.iter().sum::<i128>() == total && out.len() <= list.len() + 1;
    for (i, c) in vals.iter().enumerate() {
        let tail: i128 = vals[i + 1..].iter().sum();
        ok &= tail.abs() << p1 <= 3 * (1 + 2 * len) * c.abs();
        if let Some(next) = vals.get(i + 1) {
            ok &= next.abs() * (n_max - 1 - 6 * len) <= (6 * len + 6) * c.abs();
        }
    }
    ok
}

fn thm13(t: &mut Tally, s: &SmallBinary) -> Result<()> {
    let sc = Scaled { e_min: s.e_min() };
    let p = s.precision() as i64;
    let mut pool = Vec::new();
    for e in [0, -1, -3, -p, -p - 1, -2 * p, -2 * p - 1] {
        for n in edge_significands(s.precision()) {
            pool.push(SmallFloat { n, e });
            pool.push(SmallFloat { n: -n, e });
        }
    }
    let mut list = Vec::new();
    sorted_amplitudes(t, s, &sc, &pool, &mut list, 4);
    Ok(())
}

fn sorted_amplitudes(
    t: &mut Tally,
    s: &SmallBinary,
    sc: &Scaled,
    pool: &[SmallFloat],
    list: &mut Vec<SmallFloat>,
    left: usize,
) {
    if !list.is_empty() {
        let ok = check_sum_list(s, sc, list);
        t.check(ok, || list.iter().map(|x| s.display(x)).collect::<Vec<_>>().join(","));
    }
    if left == 0 {
        return;
    }
    for x in pool {
        if list.last().is_some_and(|last| x.e > last.e) {
            continue;
        }
        list.push(*x);
        sorted_amplitudes(t, s, sc, pool, list, left - 1);
        list.pop();
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let n: i64 = rng.gen_range(1..1 << 40) * if rng.gen() { 1 } else { -1 };
    let d: i64 = rng.gen_range(1..1 << 40);
    BigRational::new(n.into(), d.into())
}

fn perturb(rng: &mut ChaCha8Rng, x: &BigRational, eps: &BigRational) -> BigRational {
    let delta = match rng.gen_range(0..4) {
        0 => eps.clone(),
        1 => -eps.clone(),
        _ => eps * BigRational::new(rng.gen_range(-1000i64..=1000).into(), 1000.into()),
    };
    x * (BigRational::one() + delta)
}

/// The inequality itself, on exact rationals with relative errors at and
/// inside the bound.
fn thm14_rational(t: &mut Tally, rng: &mut ChaCha8Rng, trials: usize) {
    for _ in 0..trials {
        let big_w = random_rational(rng);
        let big_d = random_rational(rng);
        let eps = BigRational::new(rng.gen_range(1i64..1000).into(), 1000.into());
        let w = perturb(rng, &big_w, &eps);
        let d = perturb(rng, &big_d, &eps);
        let q = perturb(rng, &(&w / &d), &eps);
        let ok = (&big_w - &q * &big_d).abs() <= contraction(&eps) * big_w.abs();
        t.check(ok, || format!("W={big_w},D={big_d},w={w},d={d},q={q}"));
    }
}

fn random_double(rng: &mut ChaCha8Rng, exp_lo: i32, exp_hi: i32) -> f64 {
    let m = 1.0 + rng.gen::<f64>();
    let x = m * 2f64.powi(rng.gen_range(exp_lo..=exp_hi));
    if rng.gen() {
        -x
    } else {
        x
    }
}

/// A pseudo-expansion whose components are at least 2^-40 apart relatively.
fn random_operand(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.gen_range(1..=4);
    let mut out = Vec::with_capacity(len);
    match rng.gen_range(0..5) {
        0 => {
            let bits = rng.gen::<u64>() & !(0x7ffu64 << 52) | ((rng.gen_range(900u64..1150)) << 52);
            out.push(f64::from_bits(bits));
        }
        1 => out.push(2.0 - f64::EPSILON),
        2 => out.push(1.0 + f64::EPSILON),
        _ => out.push(random_double(rng, -100, 100)),
    }
    while out.len() < len {
        let last = out[out.len() - 1].abs();
        let gap = rng.gen_range(40..=70);
        let mut x = random_double(rng, 0, 0) * last * 2f64.powi(-gap);
        if rng.gen_range(0..4) == 0 {
            x = last * 2f64.powi(-gap);
        }
        out.push(x);
    }
    out
}

fn exact_sum(xs: &[f64]) -> BigRational {
    xs.iter().map(|x| Binary64.value(x)).fold(BigRational::zero(), |a, b| a + b)
}

fn sign_of(xs: &[f64]) -> BigRational {
    match xs.iter().find(|x| **x != 0.0) {
        Some(x) if *x < 0.0 => -BigRational::one(),
        _ => BigRational::one(),
    }
}

/// Division steps on binary64 with `W`, `D` and `q` measured exactly.
fn thm14_division(t: &mut Tally, rng: &mut ChaCha8Rng, steps: usize) -> Result<()> {
    let b = Binary64;
    let quarter = BigRational::new(1.into(), 4.into());
    let mut done = 0;
    while done < steps {
        let r = random_operand(rng);
        let d = if rng.gen_range(0..8) == 0 { r.clone() } else { random_operand(rng) };
        let rx = PseudoExpansion::new(&b, r.clone(), quarter.clone())?;
        let dx = PseudoExpansion::new(&b, d.clone(), quarter.clone())?;
        let mut s = div(&b, &rx, &dx, 8)?;
        let q = collect(&mut s)?;
        let (sr, sd) = (sign_of(&r), sign_of(&d));
        let big_d = exact_sum(&d);
        let mut big_w = exact_sum(&r);
        for (k, st) in s.steps().iter().enumerate() {
            let w_sf = &sr * &big_w;
            let d_sf = &sd * &big_d;
            let q_sf = &sr * &sd * b.value(&q[k]);
            let (w, dv) = (b.value(&st.w), b.value(&st.d));
            let eps_w = (&w - &w_sf).abs() / w_sf.abs();
            let eps_d = (&dv - &d_sf).abs() / d_sf.abs();
            let guess = &w / &dv;
            let eps_q = ((&q_sf - &guess) / &guess).abs();
            let measured = eps_w.clone().max(eps_d.clone()).max(eps_q.clone());
            let next = &big_w - b.value(&q[k]) * &big_d;
            let ok = eps_w <= st.eps_w
                && eps_d <= st.eps_d
                && eps_q <= st.eps_q
                && st.epsilon < BigRational::one()
                && next.abs() <= contraction(&measured) * big_w.abs()
                && next.abs() <= &st.kappa * big_w.abs();
            t.check(ok, || format!("R={r:?},D={d:?},step={k}").replace(' ', ""));
            big_w = next;
            done += 1;
        }
    }
    Ok(())
}

fn thm14(t: &mut Tally, opts: &CheckOptions) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    thm14_rational(t, &mut rng, 2000);
    thm14_division(t, &mut rng, opts.division_steps)
}

fn resolve(tag: &str) -> Option<&'static str> {
    if let Some(t) = THEOREM_TAGS.iter().find(|t| **t == tag) {
        return Some(t);
    }
    ALIASES.iter().find(|(a, _)| *a == tag).map(|(_, t)| *t)
}

fn sweep_windows(
    tag: &str,
    ws: &[Window],
    what: &str,
    f: fn(&mut Tally, &Window) -> Result<()>,
) -> Result<Vec<Report>> {
    let mut t = Tally::default();
    for w in ws {
        f(&mut t, w)?;
    }
    Ok(vec![t.report(tag, describe_all(ws, what))])
}

fn raw3op_reports(tag: &str, opts: &CheckOptions) -> Result<Vec<Report>> {
    let decimal = (GenericFormat::new(10, 2, 1)?, BFloat::new(99, -1));
    let quaternary = (GenericFormat::new(4, 1, 0)?, BFloat::new(3, 0));
    let cases = match (&opts.format, opts.beta) {
        (Some(f), _) => vec![(f.clone(), None)],
        (None, Some(10)) => vec![(decimal.0, Some(decimal.1))],
        (None, Some(4)) => vec![(quaternary.0, Some(quaternary.1))],
        (None, Some(beta)) => {
            return Err(Error::Precondition(format!(
                "no raw three-operation counterexample for radix {beta}; use 10 or 4"
            )))
        }
        (None, None) => vec![(decimal.0, Some(decimal.1)), (quaternary.0, Some(quaternary.1))],
    };
    let mut out = Vec::new();
    for (fmt, first) in cases {
        let w = Window::new(&fmt)?;
        let mut t = Tally::default();
        match first {
            Some(x) => raw3op(&mut t, &w, (&x, &x))?,
            None => {
                let z = BFloat::new(0, w.lo);
                raw3op(&mut t, &w, (&z, &z))?
            }
        }
        let mut r = t.report(tag, w.describe("reps^2,e_b<=e_a"));
        r.expected_failure = true;
        out.push(r);
    }
    Ok(out)
}

/// Runs one tag (or alias) and returns its report lines.
pub fn check_theorem(tag: &str, opts: &CheckOptions) -> Result<Vec<Report>> {
    let id = resolve(tag).ok_or_else(|| Error::Parse(format!("unknown theorem tag `{tag}`")))?;
    let tiny = [f4()];
    let radices = [f4(), GenericFormat::new(3, 3, 3)?, GenericFormat::new(10, 2, 0)?];
    let fast = [f4(), GenericFormat::new(3, 3, 3)?];
    let small = |what: &str, f: fn(&mut Tally, &SmallBinary) -> Result<()>| -> Result<Vec<Report>> {
        let s = small_format(opts)?;
        let mut t = Tally::default();
        f(&mut t, &s)?;
        Ok(vec![t.report(tag, small_desc(&s, what))])
    };
    match id {
        "Thm1" => sweep_windows(tag, &default_windows(opts, &tiny)?, "reps", thm1),
        "Thm2" => sweep_windows(tag, &default_windows(opts, &tiny)?, "points,4-modes", thm2),
        "Thm3" => sweep_windows(tag, &default_windows(opts, &tiny)?, "points,nearest-class", thm3),
        "Thm4" => sweep_windows(tag, &default_windows(opts, &tiny)?, "points,4-modes", thm4),
        "Thm5" => sweep_windows(tag, &default_windows(opts, &radices)?, "floats^2", thm5),
        "Thm6" => sweep_windows(tag, &default_windows(opts, &tiny)?, "floats^2", thm6),
        "Thm7" => sweep_windows(tag, &default_windows(opts, &tiny)?, "reps^2", thm7),
        "Thm8" => sweep_windows(tag, &default_windows(opts, &tiny)?, "floats^2", thm8),
        "Thm9" => sweep_windows(tag, &default_windows(opts, &fast)?, "reps^2,e_b<=e_a", thm9),
        "Thm10" => sweep_windows(tag, &default_windows(opts, &tiny)?, "reps^2,nonzero,guard", thm10),
        "Thm11" => small("magnitude-sorted-lists<=4", thm11),
        "Thm12" => small(&format!("a=(n,0),n>=0,-{SIGMA3_WINDOW}<=e_c<=e_b<=0,all-significands"), thm12),
        "Thm13" => small("amplitude-sorted-lists<=4", thm13),
        "Thm14" => {
            let mut t = Tally::default();
            thm14(&mut t, opts)?;
            Ok(vec![t.report(
                tag,
                format!("binary64:seed{:#x}:{}-division-steps+2000-rational-triples", opts.seed, opts.division_steps),
            )])
        }
        "ExtDekker-raw3op" => raw3op_reports(tag, opts),
        _ => unreachable!("resolved tags are listed"),
    }
}

pub fn check_all(opts: &CheckOptions) -> Result<Vec<Report>> {
    let mut out = Vec::new();
    for tag in THEOREM_TAGS {
        out.extend(check_theorem(tag, opts)?);
    }
    Ok(out)
}
