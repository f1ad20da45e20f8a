mod common;

use adapt_core::oracle::rational;
use adapt_core::toolset::{
    collect, mq_merge, pp_generate, rerepresent, sigma3_flush, sigma3_step, Feed, ItemSource, ItemVec, KeyPolicy,
    PriorityQueue, Pull, Sigma3, StreamItem, ThreeSumState, VecSource,
};
use adapt_core::{BFloat, BigRational, Binary64, FloatArith, GenericFormat};
use common::*;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

fn items(xs: &[f64]) -> Vec<StreamItem<f64>> {
    xs.iter().map(|&x| StreamItem { val: x, amplitude: Binary64.canonical_exponent(&x) }).collect()
}

fn drain(src: &mut dyn ItemSource<Binary64>) -> Vec<f64> {
    let mut out = Vec::new();
    while let Pull::Item(it) = src.pull_item().unwrap() {
        out.push(it.val);
    }
    out
}

fn merge(x: &[f64], y: &[f64]) -> Vec<f64> {
    let b = Binary64;
    let mut m =
        mq_merge(&b, Box::new(ItemVec::new(&b, items(x))), Box::new(ItemVec::new(&b, items(y))), KeyPolicy::Magnitude);
    drain(&mut m)
}

#[test]
fn merge_examples() {
    assert_eq!(merge(&[4.0, 1.0], &[3.0, 2.0]), vec![4.0, 3.0, 2.0, 1.0]);
    assert_eq!(merge(&[4.0, 1.0], &[]), vec![4.0, 1.0]);
    assert_eq!(merge(&[2.0], &[-2.0]), vec![2.0, -2.0]);
    assert_eq!(merge(&[-2.0], &[2.0]), vec![-2.0, 2.0]);
}

#[test]
fn merge_waits_for_both_inputs() {
    let b = Binary64;
    let (f1, h1) = Feed::new(&b);
    let (f2, h2) = Feed::new(&b);
    let k1 = adapt_core::toolset::Keyed::new(&b, Box::new(f1));
    let k2 = adapt_core::toolset::Keyed::new(&b, Box::new(f2));
    let mut m = mq_merge(&b, Box::new(k1), Box::new(k2), KeyPolicy::Magnitude);
    h1.push(1.0);
    assert_eq!(m.pull_item().unwrap(), Pull::Frozen);
    h2.push(0.5);
    assert_eq!(m.pull_item().unwrap().clone(), Pull::Item(StreamItem { val: 1.0, amplitude: -52 }));
    h1.close();
    assert!(matches!(m.pull_item().unwrap(), Pull::Item(StreamItem { val: 0.5, .. })));
    assert_eq!(m.pull_item().unwrap(), Pull::Frozen);
    h2.close();
    assert_eq!(m.pull_item().unwrap(), Pull::Done);
}

#[test]
fn sigma3_examples() {
    let b = Binary64;
    let zero = ThreeSumState::zero(&b);
    let st = sigma3_step(&b, &zero, &StreamItem { val: 0.0, amplitude: 0 }).unwrap();
    assert_eq!(st.emitted, None);
    assert_eq!(st.state, zero);
    let mut s = Sigma3::new(&b);
    assert_eq!(s.push(&items(&[3.5])[0]).unwrap(), None);
    assert_eq!(s.flush(), vec![3.5]);
    assert!(s.is_empty());
    assert_eq!(sigma3_flush(&b, &zero), Vec::<f64>::new());
    assert_eq!(sigma3_flush(&b, &ThreeSumState { a: 2.0, b: 0.0 }), vec![2.0]);
    let f = GenericFormat::new(10, 2, 3).unwrap();
    assert!(sigma3_step(&f, &ThreeSumState::zero(&f), &StreamItem { val: BFloat::new(1, 0), amplitude: 0 }).is_err());
}

#[test]
fn sigma3_conserves_and_bounds_on_binary64() {
    let b = Binary64;
    let mut rng = rng(11);
    let ulp = b.ulp().clone();
    let three = BigRational::from_integer(3.into());
    for _ in 0..2000 {
        let mut xs: Vec<f64> = (0..rng.gen_range(1..8)).map(|_| float_in(&mut rng, -60, 60)).collect();
        xs.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
        let list = rerepresent(&b, &xs).unwrap();
        let mut state = ThreeSumState::zero(&b);
        let mut emitted = Vec::new();
        for c in &list {
            let st = sigma3_step(&b, &state, c).unwrap();
            assert_eq!(exact(st.a1) + exact(st.b1) + exact(st.c1), exact(state.a) + exact(state.b) + exact(c.val));
            if let Some(x) = st.emitted {
                let a1 = exact(st.a1).abs();
                assert!((exact(st.b1) + exact(st.c1)).abs() <= &three * &ulp * &a1);
                emitted.push(x);
            }
            state = st.state;
            let held = exact(state.a) + exact(state.b) + sum(&emitted);
            let seen: BigRational =
                list.iter().take_while(|i| !std::ptr::eq(*i, c)).map(|i| exact(i.val)).sum::<BigRational>()
                    + exact(c.val);
            assert_eq!(held, seen);
        }
        emitted.extend(sigma3_flush(&b, &state));
        assert_eq!(sum(&emitted), sum(&xs));
    }
}

#[test]
fn rerepresent_sorts_amplitudes() {
    let f = GenericFormat::new(2, 4, 8).unwrap();
    let xs = vec![BFloat::new(8, 0), BFloat::new(15, -2), BFloat::new(-1, 1), BFloat::new(3, -8)];
    let sorted: Vec<BFloat> = {
        let mut v: Vec<BFloat> = xs.iter().map(|x| f.canonicalize(x).unwrap()).collect();
        v.sort_by(|x, y| f.cmp_abs(y, x));
        v
    };
    let out = rerepresent(&f, &sorted).unwrap();
    assert!(out.windows(2).all(|w| w[0].amplitude >= w[1].amplitude));
    for (it, x) in out.iter().zip(&sorted) {
        assert!(f.with_exponent(x, it.amplitude).is_some());
    }
    assert!(rerepresent(&f, &[BFloat::new(1, -8), BFloat::new(8, 0)]).is_err());
}

#[test]
fn priority_queue_examples() {
    let mut q = PriorityQueue::new();
    q.insert(1, "only");
    assert_eq!(q.pop_max().unwrap(), (1, "only"));
    assert!(q.pop_max().is_err());
}

fn products(a: &[f64], bs: &[f64]) -> (Vec<f64>, Vec<f64>, usize) {
    let b = Binary64;
    let mut pp = pp_generate(&b, Box::new(VecSource::new(&b, a.to_vec())), Box::new(VecSource::new(&b, bs.to_vec())));
    let mut his = Vec::new();
    let mut all = Vec::new();
    loop {
        match pp.next_product().unwrap() {
            Pull::Item(p) => {
                his.push(p.hi);
                all.push(p.hi);
                all.push(p.lo);
            }
            Pull::Done => break,
            Pull::Frozen => unreachable!(),
        }
    }
    (his, all, pp.waiting_high_water())
}

#[test]
fn partial_products_toy_case() {
    let (his, _, _) = products(&[4.0, 1.0], &[4.0, 1.0]);
    assert_eq!(his, vec![16.0, 4.0, 4.0, 1.0]);
    let (his, _, _) = products(&[3.0], &[4.0, 1.0, 0.25]);
    assert_eq!(his, vec![12.0, 3.0, 0.75]);
}

#[test]
fn partial_products_cover_the_cross_product() {
    let b = Binary64;
    let mut rng = rng(12);
    for _ in 0..1000 {
        let la = rng.gen_range(1..6);
        let lb = rng.gen_range(1..6);
        let xa = pseudo(&mut rng, la, 2, 30);
        let xb = pseudo(&mut rng, lb, 2, 30);
        let (his, all, _) = products(&xa, &xb);
        assert_eq!(his.len(), la * lb);
        assert!(his.windows(2).all(|w| w[0].abs() >= w[1].abs()));
        assert_eq!(sum(&all), sum(&xa) * sum(&xb));
        let mut want: Vec<BigRational> =
            xa.iter().flat_map(|x| xb.iter().map(move |y| exact(*x) * exact(*y))).collect();
        let mut got: Vec<BigRational> = Vec::new();
        let mut pp =
            pp_generate(&b, Box::new(VecSource::new(&b, xa.clone())), Box::new(VecSource::new(&b, xb.clone())));
        while let Pull::Item(p) = pp.next_product().unwrap() {
            got.push(exact(p.hi) + exact(p.lo));
        }
        want.sort();
        got.sort();
        assert_eq!(want, got);
        let mut merged =
            pp_generate(&b, Box::new(VecSource::new(&b, xa.clone())), Box::new(VecSource::new(&b, xb.clone())));
        let mut amps = Vec::new();
        while let Pull::Item(it) = merged.pull_item().unwrap() {
            amps.push(it.amplitude);
        }
        assert!(amps.windows(2).all(|w| w[0] >= w[1]));
    }
}

fn high_water(xa: &[f64], xb: &[f64]) -> usize {
    let b = Binary64;
    let mut pp = pp_generate(&b, Box::new(VecSource::new(&b, xa.to_vec())), Box::new(VecSource::new(&b, xb.to_vec())));
    while let Pull::Item(_) = pp.pull_item().unwrap() {}
    pp.waiting_high_water()
}

fn adder_output(rng: &mut impl Rng) -> Vec<f64> {
    let b = Binary64;
    let n = rng.gen_range(2..8);
    let mut xs: Vec<f64> = (0..n).map(|_| float_in(rng, -30, 30)).collect();
    xs.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    let (h1, h2) = xs.split_at(n / 2);
    let mut s = adapt_core::arith::add_streams(
        &b,
        Box::new(VecSource::new(&b, h1.to_vec())),
        Box::new(VecSource::new(&b, h2.to_vec())),
        adapt_core::toolset::Tracer::default(),
    );
    collect(&mut s).unwrap()
}

/// Operands whose components are at least a unit in the last place apart, as
/// produced by the adder.
#[test]
fn waiting_queue_stays_within_twice_n_b() {
    let mut rng = rng(13);
    for _ in 0..2000 {
        let la = rng.gen_range(1..8);
        let lb = rng.gen_range(1..8);
        let xa = pseudo(&mut rng, la, 54, 70);
        let xb = pseudo(&mut rng, lb, 54, 70);
        let hw = high_water(&xa, &xb);
        assert!(hw <= 2 * lb, "waiting queue held {hw} for n_B = {lb}: {xa:?} {xb:?}");
        let xa = adder_output(&mut rng);
        let xb = adder_output(&mut rng);
        let hw = high_water(&xa, &xb);
        assert!(hw <= 2 * xb.len().max(1), "waiting queue held {hw}: {xa:?} {xb:?}");
    }
}

/// With 53-bit gaps the low part of one product can tie with the next high
/// part and the queue briefly holds three items for a single `b`.
#[test]
fn waiting_queue_can_exceed_twice_n_b_for_wider_overlap() {
    let xa = [1.2486456939824215, -7.687456397605233e-17, -1.3369711522996225e-34, 1.714033152007636e-52];
    assert!(high_water(&xa, &[1.4877356694959345]) <= 2);
    let mut rng = rng(14);
    let worst = (0..3000)
        .map(|_| {
            let xa = pseudo(&mut rng, 5, 40, 53);
            high_water(&xa, &[float_in(&mut rng, 0, 0)])
        })
        .max()
        .unwrap();
    assert_eq!(worst, 3);
}

#[test]
fn partial_products_freeze_until_next_b_known() {
    let b = Binary64;
    let (fb, hb) = Feed::new(&b);
    let mut pp = pp_generate(&b, Box::new(VecSource::new(&b, vec![2.0, 0.25])), Box::new(fb));
    assert_eq!(pp.pull_item().unwrap(), Pull::Frozen);
    hb.push(3.0);
    assert_eq!(pp.pull_item().unwrap(), Pull::Frozen);
    hb.push(0.5);
    assert!(matches!(pp.pull_item().unwrap(), Pull::Item(StreamItem { val: 6.0, .. })));
    hb.close();
    let rest = drain(&mut pp);
    assert_eq!(rest, vec![1.0, 0.75, 0.125]);
    assert!(pp.residual().unwrap().is_zero());
}

#[test]
fn feed_and_vec_source_residuals() {
    let b = Binary64;
    let mut v = VecSource::new(&b, vec![1.0, -0.25]);
    use adapt_core::toolset::FloatStream;
    assert_eq!(v.residual().unwrap(), rational(3, 4));
    assert_eq!(collect(&mut v).unwrap(), vec![1.0, -0.25]);
    assert!(v.residual().unwrap().is_zero());
}

proptest! {
    #[test]
    fn priority_queue_pops_in_sorted_order(keys in proptest::collection::vec(any::<i32>(), 0..200)) {
        let mut q = PriorityQueue::new();
        for (i, k) in keys.iter().enumerate() {
            q.insert(*k, i);
        }
        let mut want = keys.clone();
        want.sort_by(|a, b| b.cmp(a));
        let got: Vec<i32> = std::iter::from_fn(|| q.pop_max().ok().map(|p| p.0)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn merge_is_sorted_permutation(
        mut x in proptest::collection::vec(-1e6f64..1e6, 0..20),
        mut y in proptest::collection::vec(-1e6f64..1e6, 0..20),
    ) {
        x.retain(|v| *v != 0.0);
        y.retain(|v| *v != 0.0);
        x.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        y.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        let out = merge(&x, &y);
        prop_assert!(out.windows(2).all(|w| w[0].abs() >= w[1].abs()));
        let mut all: Vec<f64> = x.iter().chain(&y).copied().collect();
        let mut got = out.clone();
        all.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        prop_assert_eq!(got, all);
    }
}
