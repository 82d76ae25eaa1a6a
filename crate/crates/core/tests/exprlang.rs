use geolaplace::exprlang::{BinOp, Expr, Func, VarKind};
use geolaplace::geometry::expr_jet;
use geolaplace::{parse, Error};
use proptest::prelude::*;

fn x(i: usize) -> Expr {
    Expr::Var(VarKind::X, i)
}

#[test]
fn precedence_and_log_divergence_source() {
    assert_eq!(
        parse("x1 + y1*x1", 1).unwrap(),
        Expr::bin(BinOp::Add, x(1), Expr::bin(BinOp::Mul, Expr::Var(VarKind::Y, 1), x(1)))
    );
    let e = parse("-(1)*log(1 + dot(x,y))", 2).unwrap();
    assert_eq!(e.eval::<f64>(&[0.5, 1.0], &[2.0, -0.25]).unwrap(), -(1.75f64).ln());
}

#[test]
fn out_of_range_variable() {
    assert!(matches!(parse("x3", 2), Err(Error::Parse { .. })));
}

#[test]
fn cost_jets() {
    let j = expr_jet(&parse("0.5*(x1-y1)^2", 1).unwrap(), &[1.0], &[0.0], 2).unwrap();
    assert_eq!((j.val(), j.d(&[0]), j.d(&[0, 1])), (0.5, 1.0, -1.0));
    let j = expr_jet(&parse("exp(x1*y1)", 1).unwrap(), &[0.0], &[0.0], 2).unwrap();
    assert_eq!(j.d(&[0, 1]), 1.0);
    let j = expr_jet(&parse("3", 1).unwrap(), &[0.2], &[0.1], 3).unwrap();
    assert_eq!(j.val(), 3.0);
    assert!(j.coeffs()[1..].iter().all(|&c| c == 0.0));
}

#[test]
fn swap_exchanges_roles() {
    let e = parse("x1^2 + 3*y2", 2).unwrap().swap_args();
    assert_eq!(e.eval::<f64>(&[5.0, 1.0], &[2.0, 0.0]).unwrap(), 4.0 + 3.0);
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0.1f64..3.0).prop_map(Expr::Const),
        (1usize..=2).prop_map(|i| Expr::Var(VarKind::X, i)),
        (1usize..=2).prop_map(|i| Expr::Var(VarKind::Y, i)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)])
                .prop_map(|(l, r, op)| Expr::bin(op, l, r)),
            (inner.clone(), 0u32..4).prop_map(|(b, p)| Expr::bin(BinOp::Pow, b, Expr::Const(p as f64))),
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner, prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Sinh), Just(Func::Asinh)])
                .prop_map(|(e, f)| Expr::Call(f, Box::new(e))),
        ]
    })
}

proptest! {
    #[test]
    fn display_round_trips(e in arb_expr()) {
        let back = parse(&e.to_string(), 2).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn jet_value_matches_float(e in arb_expr(), a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let plain = e.eval::<f64>(&[a, b], &[b, a]).unwrap();
        let j = expr_jet(&e, &[a, b], &[b, a], 2).unwrap();
        prop_assert!((j.val() - plain).abs() <= 1e-12 * plain.abs().max(1.0));
    }

    #[test]
    fn double_swap_is_identity(e in arb_expr()) {
        prop_assert_eq!(e.swap_args().swap_args(), e);
    }
}
