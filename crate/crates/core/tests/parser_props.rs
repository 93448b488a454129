mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use stabilab_core::function::{parse_expr, parse_function, Expr, ExprKind, FunctionKind, NormArg, SigmaExpr, Var};
use stabilab_core::padic::PrimeContext;
use stabilab_core::Error;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-50i64..=50, 1i64..=9).prop_map(|(n, d)| Expr::synthetic(ExprKind::Const(rat(n, d)))),
        Just(Expr::synthetic(ExprKind::Var(Var::U))),
        Just(Expr::synthetic(ExprKind::Var(Var::V))),
        Just(Expr::synthetic(ExprKind::Norm(NormArg::U))),
        Just(Expr::synthetic(ExprKind::Norm(NormArg::V))),
        (1usize..=4).prop_map(|i| Expr::synthetic(ExprKind::Norm(NormArg::W(i)))),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 32, 4, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::synthetic(ExprKind::Add(b(x), b(y)))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::synthetic(ExprKind::Sub(b(x), b(y)))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::synthetic(ExprKind::Mul(b(x), b(y)))),
            (inner.clone(), -6i64..=6, 1i64..=4)
                .prop_map(move |(x, n, d)| Expr::synthetic(ExprKind::Pow(b(x), rat(n, d)))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(|xs| Expr::synthetic(ExprKind::Max(xs))),
            prop::collection::vec(inner, 2..4).prop_map(|xs| Expr::synthetic(ExprKind::Min(xs))),
        ]
    })
}

/// Nonnegative sigma expressions that are symmetric in `u` and `v` by
/// construction.
fn symmetric_sigma() -> impl Strategy<Value = String> {
    (0i64..=5, 1i64..=4, 0i64..=3, 0i64..=3, 0i64..=2).prop_map(|(rho_n, rho_d, x, y, form)| match form {
        0 => format!("{rho_n}/{rho_d}*(norm(u)^{x} + norm(v)^{x})"),
        1 => format!("max(norm(u), norm(v))^{y} + {rho_n}/{rho_d}"),
        _ => format!("{rho_n}/{rho_d}*norm(u)^{x}*norm(v)^{x} + min(norm(u)^{y}, norm(v)^{y})"),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_round_trips(e in expr()) {
        let text = e.to_string();
        let back = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e);
    }

    #[test]
    fn sigma_symmetry(text in symmetric_sigma(), p in prime(), u in nonzero_rational(), v in nonzero_rational()) {
        let s = SigmaExpr::parse(&text, &BTreeMap::new()).unwrap();
        let c = PrimeContext::with_unit_beta(p).unwrap();
        prop_assert_eq!(s.eval(&u, &v, &c), s.eval(&v, &u, &c));
    }
}

#[test]
fn syntax_errors_carry_positions() {
    match parse_expr("norm(u) +\n  * 2") {
        Err(Error::Syntax { pos, .. }) => assert_eq!((pos.line, pos.column), (2, 3)),
        other => panic!("expected syntax error, got {other:?}"),
    }
    assert!(matches!(parse_expr("max(u)"), Err(Error::Syntax { .. })));
    assert!(matches!(parse_expr("1/0"), Err(Error::Syntax { .. })));
}

#[test]
fn kind_specific_domains() {
    let none = BTreeMap::new();
    assert!(matches!(parse_function("u^2 + 1", FunctionKind::Map, &none), Err(Error::NonzeroConstant { .. })));
    assert!(matches!(parse_function("norm(u) - 1", FunctionKind::Sigma, &none), Err(Error::Domain { .. })));
    assert!(matches!(parse_function("norm(w1)", FunctionKind::Sigma, &none), Err(Error::Domain { .. })));
    assert!(matches!(parse_function("norm(u)", FunctionKind::Psi, &none), Err(Error::Domain { .. })));
    assert!(parse_function("max(norm(w1), norm(w2))^1/2", FunctionKind::Psi, &none).is_ok());
}
