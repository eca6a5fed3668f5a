use super::*;
use proptest::prelude::*;

const XS: [&str; 3] = ["x1", "x2", "x3"];

fn p(s: &str) -> Expr {
    Expr::parse(s, &XS).unwrap()
}

fn x(i: usize) -> Expr {
    Expr::sym(XS[i - 1])
}

#[test]
fn parse_examples() {
    assert_eq!(p("sin(x1)"), x(1).sin());
    assert_eq!(p("x1*x2/2"), x(1) * (x(2) / Expr::int(2)));
    let e = p("x3 + x1*x2/2");
    assert_eq!(e, x(3) + x(1) * (x(2) / Expr::int(2)));
    assert_eq!(e.evaluate(&XS, &[1.0, 2.0, 3.0]).unwrap(), 4.0);
}

#[test]
fn parse_errors() {
    match Expr::parse("x1 + y", &XS) {
        Err(ParseError::UnknownSymbol { name, offset }) => {
            assert_eq!(name, "y");
            assert_eq!(offset, 5);
        }
        other => panic!("{other:?}"),
    }
    match Expr::parse("x1 + * 2", &XS) {
        Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 5),
        other => panic!("{other:?}"),
    }
    assert!(Expr::parse("sin x1", &XS).is_err());
    assert!(Expr::parse("x1^1.5", &XS).is_err());
    assert!(Expr::parse("(x1", &XS).is_err());
}

#[test]
fn derivative_examples() {
    assert_eq!(x(1).sin().differentiate("x1"), x(1).cos());
    assert!(x(1).differentiate("x2").is_const_zero());
    assert_eq!(p("x1*x2/2").differentiate("x1"), p("x2/2").simplify());
    assert_eq!(p("x1*x2/2").differentiate("x1").to_string(), "x2/2");
}

#[test]
fn evaluate_examples() {
    assert_eq!(p("sin(x1)").evaluate(&XS, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
    assert_eq!(p("1/sqrt(1+x1^2)").evaluate(&XS, &[0.0, 0.0, 0.0]).unwrap(), 1.0);
}

#[test]
fn domain_errors_name_subexpression() {
    let e = p("x2 + log(x1)");
    match e.evaluate(&XS, &[-1.0, 0.0, 0.0]) {
        Err(EvalError::Domain { subexpr, .. }) => assert_eq!(subexpr, "log(x1)"),
        other => panic!("{other:?}"),
    }
    match p("1/(x1 - x2)").evaluate(&XS, &[2.0, 2.0, 0.0]) {
        Err(EvalError::Domain { subexpr, .. }) => assert_eq!(subexpr, "1/(x1 - x2)"),
        other => panic!("{other:?}"),
    }
    assert!(p("sqrt(x1)").evaluate(&XS, &[-1.0, 0.0, 0.0]).is_err());
}

#[test]
fn simplify_rules() {
    let s = |t: &str| p(t).simplify().to_string();
    assert_eq!(s("sin(x1)^2 + cos(x1)^2"), "1");
    assert_eq!(s("x2*sin(x1)^2 + x2*cos(x1)^2 - x2"), "0");
    assert_eq!(s("0*x1 + 1*x2"), "x2");
    assert_eq!(s("x1 + x1"), "2*x1");
    assert_eq!(s("(x1 + 1)^2 - x1^2 - 2*x1"), "1");
    assert_eq!(s("sqrt(1 + x1^2)^2"), "1 + x1^2");
    assert_eq!(s("1/sqrt(1+x1^2)"), "1/sqrt(1 + x1^2)");
    assert_eq!(s("(1 + x1)/(1 + x1)"), "1");
    assert_eq!(s("x1/(2 + 2*x1) * (1 + x1)"), "x1/2");
    assert_eq!(s("sin(x1 + 2*pi) - sin(x1)"), "0");
    assert_eq!(s("cos(x1 + 2*pi) - cos(x1)"), "0");
    assert_eq!(s("sin(x1 + pi)"), "-sin(x1)");
    assert_eq!(s("sin(-x1) + sin(x1)"), "0");
    assert_eq!(s("cos(-x1) - cos(x1)"), "0");
    assert_eq!(s("sin(pi/2)"), "1");
    assert_eq!(s("exp(0) + log(1)"), "1");
    assert_eq!(s("log(exp(x1))"), "x1");
    assert_eq!(s("abs(-x1)^2"), "x1^2");
    assert_eq!(s("2.5*x1 - 2.5*x1"), "0");
}

#[test]
fn print_round_trip_samples() {
    for t in [
        "x1*x2/2",
        "-x1^2",
        "(-3)^2",
        "x1/-x2",
        "x1^-2",
        "1/2/x1",
        "x1 - (x2 - x3)",
        "-(1/2)",
        "0.1 + 1e-7*x1",
        "sin(-x1)*pi",
    ] {
        let e = p(t);
        let back = Expr::parse(&e.to_string(), &XS).unwrap();
        assert_eq!(back, e, "{t} printed as {e}");
        let s = e.simplify();
        assert_eq!(Expr::parse(&s.to_string(), &XS).unwrap().simplify(), s, "{t}");
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3i64..4).prop_map(Expr::int),
        (1i64..4, 1i64..4).prop_map(|(a, b)| Expr::rational(a, b)),
        (0usize..3).prop_map(|i| Expr::sym(XS[i])),
        Just(Expr::Pi),
        (-2.0f64..2.0).prop_map(Expr::Float),
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (b.pow(2) + Expr::one())),
            (inner.clone(), -2i64..4).prop_map(|(a, k)| if k < 0 { (a.pow(2) + Expr::one()).pow(k) } else { a.pow(k) }),
            inner.clone().prop_map(|a| -a),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| (a / Expr::int(4)).sin().exp()),
            inner.clone().prop_map(|a| (a.pow(2) + Expr::one()).sqrt()),
            inner.clone().prop_map(|a| (a.pow(2) + Expr::one()).log()),
            inner.prop_map(|a| a.abs()),
        ]
    })
}

fn eval_opt(e: &Expr, pt: &[f64]) -> Option<f64> {
    e.evaluate(&XS, pt).ok().filter(|v| v.is_finite() && v.abs() < 1e6)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    #[test]
    fn simplify_preserves_value(e in arb_expr(), pt in prop::array::uniform3(-1.5f64..1.5)) {
        if let Some(v) = eval_opt(&e, &pt) {
            let s = e.simplify();
            let w = s.evaluate(&XS, &pt).unwrap();
            prop_assert!((v - w).abs() <= 1e-12 * (1.0 + v.abs()) * 1e3_f64.min(1.0 + e.size() as f64), "{} -> {}: {} vs {}", e, s, v, w);
        }
    }

    #[test]
    fn simplify_is_idempotent(e in arb_expr()) {
        let s = e.simplify();
        prop_assert_eq!(s.simplify(), s);
    }

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let back = Expr::parse(&e.to_string(), &XS).unwrap();
        prop_assert_eq!(back.simplify(), e.simplify());
        let s = e.simplify();
        prop_assert_eq!(Expr::parse(&s.to_string(), &XS).unwrap().simplify(), s);
    }

    #[test]
    fn derivative_matches_finite_difference(e in arb_expr(), pt in prop::array::uniform3(-1.5f64..1.5), var in 0usize..3) {
        let h = 1e-5;
        let mut lo = pt;
        let mut hi = pt;
        lo[var] -= h;
        hi[var] += h;
        let (Some(a), Some(b), Some(_)) = (eval_opt(&e, &lo), eval_opt(&e, &hi), eval_opt(&e, &pt)) else {
            return Ok(());
        };
        let fd = (b - a) / (2.0 * h);
        let d = e.differentiate(XS[var]);
        let exact = d.evaluate(&XS, &pt).unwrap();
        // abs() has a kink; skip points where the derivative jumps inside the stencil
        let d_lo = d.evaluate(&XS, &lo).unwrap_or(exact);
        let d_hi = d.evaluate(&XS, &hi).unwrap_or(exact);
        let smooth = (d_lo - d_hi).abs() < 1e-2 * (1.0 + exact.abs());
        if smooth && exact.abs() < 1e4 {
            prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()) * 10.0, "{} d/d{}: fd {} vs {}", e, XS[var], fd, exact);
        }
    }
}
