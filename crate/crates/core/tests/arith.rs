mod common;

use adapt_core::arith::{add, add_streams, contraction, div, mul, mul_streams, round_result, sum_epsilon};
use adapt_core::expansion::value_of;
use adapt_core::toolset::{collect, Tracer, VecSource};
use adapt_core::{BigRational, Binary64};
use common::*;
use num_traits::{One, Signed, Zero};

fn ratio_ok(out: &[f64], eps: &BigRational) -> bool {
    out.windows(2).all(|w| exact(w[1]).abs() <= eps * exact(w[0]).abs())
}

#[test]
fn add_examples() {
    let b = Binary64;
    let a = pseudo_exp(vec![1.0, 2f64.powi(-60)]);
    let empty = pseudo_exp(vec![]);
    let out = collect(&mut add(&b, &a, &empty).unwrap()).unwrap();
    assert_eq!(value_of(&b, &out), sum(&[1.0, 2f64.powi(-60)]));
    let out = collect(&mut add(&b, &pseudo_exp(vec![1.0]), &pseudo_exp(vec![-1.0])).unwrap()).unwrap();
    assert!(out.iter().all(|x| *x == 0.0));
    assert_eq!(sum_epsilon(&b, 4).unwrap(), BigRational::new(30.into(), adapt_core::BigInt::from(1u64 << 53) - 26));
}

#[test]
fn add_is_exact_with_bounded_ratio() {
    let b = Binary64;
    let mut rng = rng(1);
    for _ in 0..3000 {
        let la = rng_len(&mut rng);
        let lb = rng_len(&mut rng);
        let xa = pseudo(&mut rng, la, 3, 70);
        let xb = pseudo(&mut rng, lb, 3, 70);
        let out = collect(&mut add(&b, &pseudo_exp(xa.clone()), &pseudo_exp(xb.clone())).unwrap()).unwrap();
        assert_eq!(value_of(&b, &out), sum(&xa) + sum(&xb));
        let eps = sum_epsilon(&b, la + lb).unwrap();
        assert!(out.len() <= la + lb + 1);
        assert!(ratio_ok(&out, &eps), "{xa:?} + {xb:?} -> {out:?}");
    }
}

fn rng_len(rng: &mut impl rand::Rng) -> usize {
    rng.gen_range(0..=4)
}

#[test]
fn mul_examples() {
    let b = Binary64;
    let x = 1.0 + 2f64.powi(-30);
    let out = collect(&mut mul(&b, &pseudo_exp(vec![x]), &pseudo_exp(vec![x])).unwrap()).unwrap();
    assert_eq!(out, vec![1.0 + 2f64.powi(-29), 2f64.powi(-60)]);
    let a = vec![3.0, 2f64.powi(-55)];
    let out = collect(&mut mul(&b, &pseudo_exp(vec![1.0]), &pseudo_exp(a.clone())).unwrap()).unwrap();
    assert_eq!(value_of(&b, &out), sum(&a));
}

#[test]
fn mul_is_exact() {
    let b = Binary64;
    let mut rng = rng(2);
    for _ in 0..2000 {
        let la = rng_len(&mut rng);
        let xa = pseudo(&mut rng, la, 3, 40);
        let lb = rng_len(&mut rng);
        let xb = pseudo(&mut rng, lb, 3, 40);
        let n = 2 * xa.len() * xb.len();
        let out = collect(&mut mul(&b, &pseudo_exp(xa.clone()), &pseudo_exp(xb.clone())).unwrap()).unwrap();
        assert_eq!(value_of(&b, &out), sum(&xa) * sum(&xb));
        if n > 0 {
            assert!(ratio_ok(&out, &sum_epsilon(&b, n).unwrap()), "{xa:?} * {xb:?} -> {out:?}");
        }
    }
}

#[test]
fn pipelines_compose() {
    let b = Binary64;
    let mut rng = rng(3);
    for _ in 0..300 {
        let xa = pseudo(&mut rng, 3, 3, 40);
        let xb = pseudo(&mut rng, 2, 3, 40);
        let xc = pseudo(&mut rng, 3, 3, 40);
        let m = mul_streams(
            &b,
            Box::new(VecSource::new(&b, xa.clone())),
            Box::new(VecSource::new(&b, xb.clone())),
            Tracer::default(),
        );
        let mut s = add_streams(&b, Box::new(m), Box::new(VecSource::new(&b, xc.clone())), Tracer::default());
        let out = collect(&mut s).unwrap();
        assert_eq!(value_of(&b, &out), sum(&xa) * sum(&xb) + sum(&xc));
    }
}

fn remainder(r: &[f64], d: &[f64], q: &[f64]) -> BigRational {
    sum(r) - sum(q) * sum(d)
}

#[test]
fn division_examples() {
    let b = Binary64;
    let r = vec![1.5, 2f64.powi(-60)];
    let q = collect(&mut div(&b, &pseudo_exp(r.clone()), &pseudo_exp(vec![1.0]), 4).unwrap()).unwrap();
    assert_eq!(sum(&q), sum(&r));
    let mut s = div(&b, &pseudo_exp(vec![1.0]), &pseudo_exp(vec![3.0]), 4).unwrap();
    let q = collect(&mut s).unwrap();
    assert_eq!(q.len(), 4);
    let kappa = s.steps().iter().map(|st| st.kappa.clone()).max().unwrap();
    let rem = remainder(&[1.0], &[3.0], &q).abs();
    let mut bound = BigRational::one();
    for _ in 0..4 {
        bound *= &kappa;
    }
    assert!(rem <= bound);
    assert!(matches!(div(&b, &pseudo_exp(vec![1.0]), &pseudo_exp(vec![]), 2), Err(adapt_core::Error::DivisionByZero)));
}

#[test]
fn division_contracts_per_step() {
    let b = Binary64;
    let mut rng = rng(4);
    for _ in 0..400 {
        let lr = rng.gen_range(1..=4);
        let r = pseudo(&mut rng, lr, 3, 40);
        let ld = rng.gen_range(1..=4);
        let d = pseudo(&mut rng, ld, 3, 40);
        let mut s = div(&b, &pseudo_exp(r.clone()), &pseudo_exp(d.clone()), 6).unwrap();
        let q = collect(&mut s).unwrap();
        let r0 = sum(&r).abs();
        let mut prev = r0.clone();
        for (k, st) in s.steps().iter().enumerate() {
            let now = remainder(&r, &d, &q[..=k]).abs();
            assert!(now <= &st.kappa * &prev, "step {k}: {r:?} / {d:?}");
            prev = now;
        }
        let state = s.state().unwrap();
        assert_eq!(value_of(&b, &state.remainder), remainder(&r, &d, &q));
    }
}

#[test]
fn round_result_targets() {
    let b = Binary64;
    let mut s = div(&b, &pseudo_exp(vec![1.0]), &pseudo_exp(vec![3.0]), 10).unwrap();
    let got = round_result(&mut s, &BigRational::new(1.into(), 10.into())).unwrap();
    assert_eq!(got.components.len(), 1);
    let exact = BigRational::new(1.into(), 3.into());
    assert!((value_of(&b, &got.components) - &exact).abs() <= got.bound);
    let mut s = add(&b, &pseudo_exp(vec![1.0, 2f64.powi(-70)]), &pseudo_exp(vec![3.0])).unwrap();
    let got = round_result(&mut s, &BigRational::zero()).unwrap();
    assert!(got.bound.is_zero());
    assert_eq!(value_of(&b, &got.components), sum(&[4.0, 2f64.powi(-70)]));
    let _ = contraction(&BigRational::zero());
}

use rand::Rng;
