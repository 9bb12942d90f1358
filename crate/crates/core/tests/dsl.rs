use product_expectation::dsl::*;
use proptest::prelude::*;

const M: usize = 2;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-5.0f64..5.0).prop_map(|c| Expr::Const((c * 8.0).round() / 8.0)),
        (0..2 * M).prop_map(Expr::Var),
    ]
}

fn func(f: Func, args: Vec<Expr>) -> Expr {
    Expr::Call(f, args)
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            inner
                .clone()
                .prop_filter("no negated literal", |e| !matches!(e, Expr::Const(_)))
                .prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), prop_oneof![Just(2.0), Just(-4.0), Just(0.5)])
                .prop_map(|(a, c)| Expr::Div(Box::new(a), c)),
            (inner.clone(), 0u32..4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| func(Func::Min, vec![a, b])),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(a, b, c)| func(Func::Max, vec![a, b, c])),
            (inner.clone(), -3.0f64..0.0, 0.0f64..3.0)
                .prop_map(|(a, lo, hi)| func(Func::Clamp, vec![a, Expr::Const(lo), Expr::Const(hi)])),
            inner.clone().prop_map(|a| func(Func::Abs, vec![a])),
            inner.clone().prop_map(|a| func(Func::Sin, vec![a])),
            inner.clone().prop_map(|a| func(Func::Cos, vec![a])),
            inner.prop_map(|a| func(Func::Exp, vec![a])),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.5f64..1.5, 2 * M)
}

fn unit_box() -> Vec<Interval> {
    vec![Interval::new(-1.5, 1.5); 2 * M]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 400, max_global_rejects: 20_000, ..ProptestConfig::default() })]

    #[test]
    fn printing_then_parsing_is_identity(e in expr(), p in point()) {
        let text = e.to_string();
        let back = parse_expr(&text, M).unwrap();
        prop_assert_eq!(&back, &e, "{}", text);
        let (a, b) = (e.eval(&p), back.eval(&p));
        prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
    }

    #[test]
    fn interval_constants_are_conservative(e in expr(), p in point(), q in point()) {
        let (l, k) = estimate_lipschitz_bound(&e, &unit_box()).unwrap();
        let (vp, vq) = (e.eval(&p), e.eval(&q));
        let scale = 1e-9 * (1.0 + k);
        prop_assert!(vp.abs() <= k + scale, "|e(p)| = {} > K = {} for {}", vp.abs(), k, e);
        let dist: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!((vp - vq).abs() <= l * dist + scale, "L = {} too small for {}", l, e);
    }

    #[test]
    fn estimates_are_deterministic(e in expr()) {
        let text = e.to_string();
        let a = estimate_lipschitz_bound(&parse_expr(&text, M).unwrap(), &unit_box()).unwrap();
        let b = estimate_lipschitz_bound(&parse_expr(&text, M).unwrap(), &unit_box()).unwrap();
        prop_assert_eq!(a.0.to_bits(), b.0.to_bits());
        prop_assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn accepted_expressions_grow_at_most_linearly(e in expr(), dir in point()) {
        // Far along a ray the value of an accepted expression is O(r).
        // exp only saturates at its cap, so its constants are too large to see here.
        prop_assume!(check_growth(&e).is_ok() && !e.to_string().contains("exp"));
        let norm: f64 = dir.iter().map(|d| d.abs()).sum();
        prop_assume!(norm > 0.1);
        let (lo, hi) = (1e3, 1e6);
        let at = |r: f64| e.eval(&dir.iter().map(|d| d * r / norm).collect::<Vec<_>>()).abs();
        let (a, b) = (at(lo), at(hi));
        prop_assert!(b <= (hi / lo) * (a + 1e3) * 2.0, "{e}: {a} -> {b}");
    }
}

#[test]
fn clamped_square_has_the_expected_constants() {
    let e = parse_expr("clamp(x1^2, 0, 100)", 1).unwrap();
    let (l, k) =
        estimate_lipschitz_bound(&e, &[Interval::new(-12.0, 12.0), Interval::new(-12.0, 12.0)]).unwrap();
    assert!((k - 100.0).abs() < 1e-9);
    assert!((l - 24.0).abs() < 1e-9, "{l}");
}

#[test]
fn rejection_names_the_offending_subtree() {
    let err = check_growth(&parse_expr("min(x1, 3) + max(x1*y1, 1)", 1).unwrap()).unwrap_err();
    assert!(err.to_string().contains("'(x1 * y1)'"), "{err}");
    let err = check_growth(&parse_expr("sin(x1) + x1^2", 1).unwrap()).unwrap_err();
    assert!(err.to_string().contains("'(x1^2)'"), "{err}");
}
