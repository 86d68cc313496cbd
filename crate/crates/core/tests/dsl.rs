use caputo_picard::dsl::{parse, BinOp, EvalErrorKind, Expr, ExprKind, Func, ParseErrorKind, Span, Var};
use proptest::prelude::*;

fn node(kind: ExprKind) -> Expr {
    Expr {
        kind,
        span: Span { start: 0, end: 0 },
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.0f64..100.0).prop_map(|v| node(ExprKind::Num(v))),
        Just(node(ExprKind::Pi)),
        Just(node(ExprKind::E)),
        prop_oneof![Just(Var::T), Just(Var::X), Just(Var::Y)].prop_map(|v| node(ExprKind::Var(v))),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
        let func = prop_oneof![Just(Func::Sqrt), Just(Func::Abs), Just(Func::Sin), Just(Func::Cos), Just(Func::Exp)];
        prop_oneof![
            inner.clone().prop_map(|a| node(ExprKind::Neg(Box::new(a)))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| node(ExprKind::Binary(o, Box::new(a), Box::new(b)))),
            (func, inner.clone()).prop_map(|(f, a)| node(ExprKind::Call(f, Box::new(a)))),
            (0.05f64..=1.0, inner).prop_map(|(a, e)| node(ExprKind::Ml(a, Box::new(e)))),
        ]
    })
}

proptest! {
    #[test]
    fn printing_round_trips(e in arb_expr()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn arithmetic_matches_closure(t in 0.0f64..2.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let e = parse("sqrt(pi)/4 - t^(1/2)/2 + (x + abs(y))/2").unwrap();
        let want = std::f64::consts::PI.sqrt() / 4.0 - t.sqrt() / 2.0 + (x + y.abs()) / 2.0;
        prop_assert!((e.eval(t, x, y).unwrap() - want).abs() <= 1e-15 * (1.0 + want.abs()));
        let e = parse("exp(-t) * cos(x) - sin(y)^2 * 3").unwrap();
        let want = (-t).exp() * x.cos() - y.sin().powi(2) * 3.0;
        prop_assert!((e.eval(t, x, y).unwrap() - want).abs() <= 1e-14);
    }

    #[test]
    fn garbage_never_panics(s in "[ -~]{0,24}") {
        let _ = parse(&s).map(|e| e.eval(0.5, 1.0, -1.0));
    }
}

#[test]
fn precedence_and_associativity() {
    let v = |s: &str| parse(s).unwrap().eval(0.0, 0.0, 0.0).unwrap();
    assert_eq!(v("-2^2"), -4.0);
    assert_eq!(v("2^3^2"), 512.0);
    assert_eq!(v("2^-1"), 0.5);
    assert_eq!(v("1 - 2 - 3"), -4.0);
    assert_eq!(v("8 / 4 / 2"), 1.0);
    assert_eq!(v("1 + 2 * 3"), 7.0);
    assert_eq!(v("ml(1, 1)"), std::f64::consts::E);
    assert_eq!(v("1.5e2"), 150.0);
}

#[test]
fn errors_point_at_the_problem() {
    let err = parse("1 + * 2").unwrap_err();
    assert_eq!(err.offset, 4);
    let err = parse("sqrt(x, y)").unwrap_err();
    assert!(matches!(err.kind, ParseErrorKind::WrongArity { .. }));
    let err = parse("foo(x)").unwrap_err();
    assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
    assert!(matches!(parse("ml(x, 1)").unwrap_err().kind, ParseErrorKind::MlOrderNotLiteral));
    assert!(matches!(parse("ml(1.5, 1)").unwrap_err().kind, ParseErrorKind::MlOrderOutOfRange(_)));
    assert!(matches!(parse("   ").unwrap_err().kind, ParseErrorKind::EmptyInput));
    assert!(matches!(parse("(1 + 2").unwrap_err().kind, ParseErrorKind::Expected { .. }));

    let e = parse("1 + sqrt(x)").unwrap();
    let err = e.eval(0.0, -1.0, 0.0).unwrap_err();
    assert!(matches!(err.kind, EvalErrorKind::SqrtOfNegative(_)));
    assert_eq!((err.span.start, err.span.end), (4, 11));
    assert!(matches!(parse("1/x").unwrap().eval(0.0, 0.0, 0.0).unwrap_err().kind, EvalErrorKind::DivisionByZero));
    assert!(matches!(parse("x^-1").unwrap().eval(0.0, 0.0, 0.0).unwrap_err().kind, EvalErrorKind::ZeroToNegativePower));
    assert!(matches!(parse("exp(x)").unwrap().eval(0.0, 1000.0, 0.0).unwrap_err().kind, EvalErrorKind::NonFinite(_)));
}
