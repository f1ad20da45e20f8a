mod common;

use std::cmp::Ordering;

use adapt_core::eval::{
    eval_adaptive, exact_value, parse_expr, parse_rational, sign_det, sign_det_with_stats, Bindings, EvalOptions, Expr,
    Op,
};
use adapt_core::{BigRational, Binary64, Error, FloatArith, GenericFormat};
use common::{det_exact, near_degenerate, rational_matrix, rng};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

const MILES: &str = "4.995*1.609344 - 8";

fn opts(target: &str) -> EvalOptions {
    EvalOptions { target: parse_rational(target).unwrap(), ..Default::default() }
}

fn q(s: &str) -> BigRational {
    parse_rational(s).unwrap()
}

fn sound<A: FloatArith>(
    arith: &A,
    src: &str,
    bindings: &Bindings,
    target: &str,
) -> adapt_core::eval::EvalResult<A::Float> {
    let e = parse_expr(src).unwrap();
    let res = eval_adaptive(arith, &e, bindings, &opts(target)).unwrap();
    let exact = exact_value(&e, bindings).unwrap();
    assert!((&exact - &res.value).abs() <= res.bound, "{src}: value {} bound {}", res.value, res.bound);
    assert!(res.complete || res.bound <= q(target) || res.bound.is_zero());
    res
}

#[test]
fn motivating_distance_is_a_little_over_38_meters() {
    let res = sound(&Binary64, MILES, &Bindings::new(), "1e-6");
    assert_eq!(res.sign, Some(Ordering::Greater));
    assert_eq!(exact_value(&parse_expr(MILES).unwrap(), &Bindings::new()).unwrap(), q("0.03867328"));
    assert!((res.value.clone() - q("0.0386733")).abs() < q("1e-6"));
}

#[test]
fn five_miles_and_exact_cancellation() {
    let res = sound(&Binary64, "5*1.609344 - 8", &Bindings::new(), "1e-12");
    assert!((res.value.clone() - q("0.04672")).abs() <= res.bound);
    let e = parse_expr("5*1.6 - 8").unwrap();
    let exact = EvalOptions { target: BigRational::from_integer(0.into()), ..Default::default() };
    let res = eval_adaptive(&Binary64, &e, &Bindings::new(), &exact).unwrap();
    assert!(res.complete);
    assert_eq!(res.bound, q("0"));
    assert_eq!(res.value, q("0"));
    assert_eq!(res.sign, Some(Ordering::Equal));
}

#[test]
fn loose_target_answers_after_one_pull() {
    let res = sound(&Binary64, "1/3", &Bindings::new(), "1");
    assert_eq!(res.components.len(), 1);
    assert_eq!(res.stats["div"], 1);
    let res = sound(&Binary64, "1/3", &Bindings::new(), "1e-40");
    assert!(res.components.len() >= 3);
}

#[test]
fn low_precision_firings_grow_with_the_demand() {
    let f32 = GenericFormat::binary32();
    let loose = sound(&f32, MILES, &Bindings::new(), "1e-1");
    let tight = sound(&f32, MILES, &Bindings::new(), "1e-9");
    assert!(loose.firings() < tight.firings(), "{} vs {}", loose.firings(), tight.firings());
    assert_eq!(loose.sign, Some(Ordering::Greater));
    assert_eq!(tight.sign, Some(Ordering::Greater));
}

#[test]
fn bindings_and_trace() {
    let mut b = Bindings::new();
    b.insert("x".into(), q("0x1p-60"));
    b.insert("y".into(), q("1/7"));
    let res = sound(&Binary64, "(1 + x) - 1 + y*7", &b, "1e-30");
    assert_eq!(res.value, q("1 + 0x1p-60"));
    let e = parse_expr("x*x - 3").unwrap();
    let o = EvalOptions { trace: true, ..opts("1e-3") };
    let res = eval_adaptive(&Binary64, &e, &b, &o).unwrap();
    assert!(!res.trace.is_empty());
    assert!(res.trace.iter().all(|l| l.starts_with("stage=")));
    assert!(matches!(eval_adaptive(&Binary64, &parse_expr("z").unwrap(), &b, &o), Err(Error::Parse(_))));
}

#[test]
fn evaluation_errors() {
    let none = Bindings::new();
    let e = parse_expr("1/(0.1 - 0.1)").unwrap();
    assert_eq!(eval_adaptive(&Binary64, &e, &none, &opts("1e-3")).unwrap_err(), Error::DivisionByZero);
    let e = parse_expr("1e300*1e300").unwrap();
    assert!(matches!(eval_adaptive(&Binary64, &e, &none, &opts("1")), Err(Error::Overflow(_))));
    let e = parse_expr("1/3").unwrap();
    let o = EvalOptions { budget: 2, ..opts("1e-300") };
    assert_eq!(eval_adaptive(&Binary64, &e, &none, &o).unwrap_err(), Error::Budget(2));
    let o = EvalOptions { max_components: Some(2), ..opts("1e-300") };
    let res = eval_adaptive(&Binary64, &e, &none, &o).unwrap();
    assert_eq!(res.components.len(), 2);
    assert!(res.bound > q("1e-300"));
    assert_eq!(
        parse_expr("2*x").unwrap(),
        Expr::Bin(Op::Mul, Box::new(Expr::Num(q("2"))), Box::new(Expr::Var("x".into())))
    );
}

#[test]
fn determinant_examples() {
    let id = rational_matrix(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    assert_eq!(sign_det(&Binary64, &id).unwrap(), Ordering::Greater);
    let rep = rational_matrix(&[vec![0.1, 0.7, 3.0], vec![2.5, -1e-20, 4.0], vec![0.1, 0.7, 3.0]]);
    assert_eq!(sign_det(&Binary64, &rep).unwrap(), Ordering::Equal);
    let swap = rational_matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
    assert_eq!(sign_det(&Binary64, &swap).unwrap(), Ordering::Less);
    let thirds = vec![vec![q("1/3"), q("2/3")], vec![q("1"), q("2")]];
    assert_eq!(sign_det(&Binary64, &thirds).unwrap(), Ordering::Equal);
    let thirds = vec![vec![q("1/3"), q("2/3")], vec![q("1"), q("2.000000000000000000001")]];
    assert_eq!(sign_det(&Binary64, &thirds).unwrap(), Ordering::Greater);
    assert!(sign_det(&Binary64, &[vec![q("1")]]).is_err());
}

#[test]
fn determinant_signs_match_the_oracle_on_near_degenerate_cases() {
    let mut r = rng(61);
    let mut zeros = 0;
    for _ in 0..2000 {
        let m = rational_matrix(&near_degenerate(&mut r));
        let want = det_exact(&m).cmp(&q("0"));
        let got = sign_det_with_stats(&Binary64, &m).unwrap();
        assert_eq!(got.sign, want, "{m:?}");
        zeros += (want == Ordering::Equal) as u32;
    }
    assert!(zeros > 50, "{zeros}");
}

fn leaf() -> impl Strategy<Value = Expr> {
    (-999i64..999, 0u32..4).prop_map(|(n, k)| Expr::Num(BigRational::new(n.into(), 10i64.pow(k).into())))
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), 0..3u8).prop_map(|(a, b, op)| {
                let op = [Op::Add, Op::Sub, Op::Mul][op as usize];
                Expr::Bin(op, Box::new(a), Box::new(b))
            }),
            (inner.clone(), leaf()).prop_map(|(a, b)| Expr::Bin(Op::Div, Box::new(a), Box::new(b))),
            inner.prop_map(|a| Expr::Neg(Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bounds_are_sound_and_firings_monotone(e in expr()) {
        let none = Bindings::new();
        let exact = match exact_value(&e, &none) {
            Ok(v) => v,
            Err(_) => return Ok(()),
        };
        let mut last = 0;
        for t in ["1e-2", "1e-8", "1e-16", "1e-30"] {
            let res = eval_adaptive(&Binary64, &e, &none, &opts(t)).unwrap();
            prop_assert!((&exact - &res.value).abs() <= res.bound);
            prop_assert!(res.bound <= q(t) || res.complete);
            if let Some(s) = res.sign {
                prop_assert_eq!(s, exact.cmp(&q("0")));
            }
            prop_assert!(res.firings() >= last);
            last = res.firings();
        }
    }
}

fn compound_divisions() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 10, 2, |inner| {
        (inner.clone(), inner, 0..4u8).prop_map(|(a, b, op)| {
            let op = [Op::Add, Op::Sub, Op::Mul, Op::Div][op as usize];
            Expr::Bin(op, Box::new(a), Box::new(b))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    // A division stream whose scaled sum cancels to an exact float cannot have
    // its leading component separated; the pull then stops at the underflow
    // guard. Every answer that is produced must be sound.
    #[test]
    fn compound_divisors_are_sound(e in compound_divisions()) {
        let none = Bindings::new();
        let exact = match exact_value(&e, &none) {
            Ok(v) => v,
            Err(_) => return Ok(()),
        };
        match eval_adaptive(&Binary64, &e, &none, &opts("1e-25")) {
            Ok(res) => {
                prop_assert!((&exact - &res.value).abs() <= res.bound);
                prop_assert!(res.bound <= q("1e-25") || res.complete);
            }
            Err(Error::Precondition(m)) => prop_assert!(m.contains("underflow"), "{}", m),
            Err(other) => prop_assert!(false, "{other}"),
        }
    }
}
