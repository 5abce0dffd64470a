use flatcs::scenario::parser::FUNCTIONS;
use flatcs::scenario::{parse_expr, BinOp, Expr, ExprKind, Pos};
use proptest::prelude::*;

fn node(kind: ExprKind) -> Expr {
    Expr::new(kind, Pos::default())
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..1000).prop_map(|n| node(ExprKind::Num(n as f64))),
        (0.0f64..1e6).prop_map(|v| node(ExprKind::Num(v))),
        "[a-z][a-z0-9_]{0,4}".prop_map(|s| node(ExprKind::Ident(s))),
    ]
}

fn op() -> impl Strategy<Value = BinOp> {
    prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Div),
        Just(BinOp::Caret),
        Just(BinOp::Wedge),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| node(ExprKind::Neg(Box::new(e)))),
            (op(), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| node(ExprKind::Bin(op, Box::new(a), Box::new(b)))),
            (0..FUNCTIONS.len(), prop::collection::vec(inner.clone(), 4)).prop_map(|(f, mut args)| {
                let (name, arity) = FUNCTIONS[f];
                args.truncate(arity);
                node(ExprKind::Call(name.into(), args))
            }),
            prop::collection::vec(prop::collection::vec(inner, 1..4), 1..3)
                .prop_map(|parts| node(ExprKind::Algebra(parts))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn printing_then_parsing_is_the_identity(e in expr()) {
        let text = e.to_string();
        let back = parse_expr(&text).map_err(|d| TestCaseError::fail(format!("{text}: {d}")))?;
        prop_assert_eq!(back, e, "printed as {}", text);
    }

    #[test]
    fn printing_is_a_fixed_point(e in expr()) {
        let once = e.to_string();
        prop_assert_eq!(parse_expr(&once).unwrap().to_string(), once);
    }

    #[test]
    fn arbitrary_text_never_panics(text in "[-+*/^()\\[\\],.0-9a-z ∧#\n]{0,40}") {
        let _ = parse_expr(&text);
    }
}

#[test]
fn diagnostics_point_into_the_text() {
    let d = parse_expr("cos(x)\n  + * 2").unwrap_err();
    assert_eq!((d.line, d.column), (2, 5));
    assert!(d.to_string().contains("expected one of"));
}
