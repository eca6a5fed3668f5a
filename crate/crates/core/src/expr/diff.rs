use super::{Expr, Func};

/// Raw derivative; the caller simplifies.
pub(super) fn derivative(e: &Expr, v: &str) -> Expr {
    match e {
        Expr::Const(_) | Expr::Float(_) | Expr::Pi => Expr::zero(),
        Expr::Sym(s) => {
            if &**s == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        _ if !e.contains_symbol(v) => Expr::zero(),
        Expr::Neg(a) => -derivative(a, v),
        Expr::Add(a, b) => derivative(a, v) + derivative(b, v),
        Expr::Sub(a, b) => derivative(a, v) - derivative(b, v),
        Expr::Mul(a, b) => derivative(a, v) * &**b + &**a * derivative(b, v),
        Expr::Div(a, b) => {
            (derivative(a, v) * &**b - &**a * derivative(b, v)) / b.pow(2)
        }
        Expr::Pow(a, k) => Expr::int(*k) * a.pow(k - 1) * derivative(a, v),
        Expr::Func(f, a) => {
            let da = derivative(a, v);
            let outer = match f {
                Func::Sin => a.cos(),
                Func::Cos => -a.sin(),
                Func::Exp => a.exp(),
                Func::Log => Expr::one() / &**a,
                Func::Sqrt => Expr::one() / (Expr::int(2) * a.sqrt()),
                Func::Abs => &**a / a.abs(),
            };
            outer * da
        }
    }
}
