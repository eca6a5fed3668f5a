//! Symbolic scalar expressions over chart coordinates.
//!
//! An [`Expr`] is an immutable tree with shared children, so cloning is cheap
//! and values can be handed to worker threads freely.

mod canon;
mod diff;
mod eval;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

pub use eval::{CompiledExpr, EvalError};
pub use parse::ParseError;

/// Exact rational used for constants.
pub type Rational = num_rational::Ratio<i128>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn apply_f64(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Expr {
    Const(Rational),
    Float(f64),
    Pi,
    Sym(Arc<str>),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, i64),
    Func(Func, Arc<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        use Expr::*;
        match (self, other) {
            (Const(a), Const(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Pi, Pi) => true,
            (Sym(a), Sym(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Add(a, b), Add(c, d))
            | (Sub(a, b), Sub(c, d))
            | (Mul(a, b), Mul(c, d))
            | (Div(a, b), Div(c, d)) => a == c && b == d,
            (Pow(a, k), Pow(b, j)) => k == j && a == b,
            (Func(f, a), Func(g, b)) => f == g && a == b,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Const(Rational::from_integer(v as i128))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Const(Rational::new(num as i128, den as i128))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn float(v: f64) -> Expr {
        Expr::Float(v)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::Sym(Arc::from(name))
    }

    pub fn pow(&self, k: i64) -> Expr {
        Expr::Pow(Arc::new(self.clone()), k)
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Arc::new(arg))
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::func(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::func(Func::Exp, self.clone())
    }

    pub fn log(&self) -> Expr {
        Expr::func(Func::Log, self.clone())
    }

    pub fn sqrt(&self) -> Expr {
        Expr::func(Func::Sqrt, self.clone())
    }

    pub fn abs(&self) -> Expr {
        Expr::func(Func::Abs, self.clone())
    }

    /// Parses `text`, accepting only the listed symbols.
    pub fn parse(text: &str, symbols: &[&str]) -> Result<Expr, ParseError> {
        parse::parse(text, &|name| symbols.contains(&name))
    }

    /// Parses `text` with any identifier accepted as a symbol.
    pub fn parse_any(text: &str) -> Result<Expr, ParseError> {
        parse::parse(text, &|_| true)
    }

    /// Canonical simplified form. Idempotent.
    pub fn simplify(&self) -> Expr {
        canon::simplify(self)
    }

    /// True when the expression simplifies to the constant zero.
    pub fn is_zero(&self) -> bool {
        self.simplify().is_const_zero()
    }

    /// Zero test that also accepts float coefficients below `tol` in magnitude.
    pub fn is_zero_within(&self, tol: f64) -> bool {
        canon::is_zero_within(self, tol)
    }

    pub fn is_const_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_const_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    /// Exact symbolic partial derivative, simplified.
    pub fn differentiate(&self, var: &str) -> Expr {
        diff::derivative(self, var).simplify()
    }

    /// Evaluates with `vars[i]` bound to `point[i]`.
    pub fn evaluate(&self, vars: &[&str], point: &[f64]) -> Result<f64, EvalError> {
        self.compile(vars)?.eval(point)
    }

    pub fn compile(&self, vars: &[&str]) -> Result<CompiledExpr, EvalError> {
        CompiledExpr::new(self, vars)
    }

    /// Replaces every occurrence of the symbol `name` by `value`.
    pub fn substitute(&self, name: &str, value: &Expr) -> Expr {
        self.map_symbols(&|s| if s == name { Some(value.clone()) } else { None })
    }

    /// Simultaneous substitution of several symbols.
    pub fn substitute_all(&self, pairs: &[(&str, Expr)]) -> Expr {
        self.map_symbols(&|s| pairs.iter().find(|(n, _)| *n == s).map(|(_, v)| v.clone()))
    }

    fn map_symbols(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        use Expr::*;
        let a = |e: &Arc<Expr>| Arc::new(e.map_symbols(f));
        match self {
            Sym(s) => f(s).unwrap_or_else(|| self.clone()),
            Const(_) | Float(_) | Pi => self.clone(),
            Neg(e) => Neg(a(e)),
            Add(l, r) => Add(a(l), a(r)),
            Sub(l, r) => Sub(a(l), a(r)),
            Mul(l, r) => Mul(a(l), a(r)),
            Div(l, r) => Div(a(l), a(r)),
            Pow(e, k) => Pow(a(e), *k),
            Func(g, e) => Func(*g, a(e)),
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        use Expr::*;
        match self {
            Sym(s) => {
                out.insert(s.to_string());
            }
            Const(_) | Float(_) | Pi => {}
            Neg(e) | Pow(e, _) | Func(_, e) => e.collect_symbols(out),
            Add(l, r) | Sub(l, r) | Mul(l, r) | Div(l, r) => {
                l.collect_symbols(out);
                r.collect_symbols(out);
            }
        }
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        use Expr::*;
        match self {
            Sym(s) => &**s == name,
            Const(_) | Float(_) | Pi => false,
            Neg(e) | Pow(e, _) | Func(_, e) => e.contains_symbol(name),
            Add(l, r) | Sub(l, r) | Mul(l, r) | Div(l, r) => {
                l.contains_symbol(name) || r.contains_symbol(name)
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        use Expr::*;
        match self {
            Const(_) | Float(_) | Pi | Sym(_) => 1,
            Neg(e) | Pow(e, _) | Func(_, e) => 1 + e.size(),
            Add(l, r) | Sub(l, r) | Mul(l, r) | Div(l, r) => 1 + l.size() + r.size(),
        }
    }

    /// Binding strength used by the printer; higher binds tighter.
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Div(..) => 3,
            Expr::Neg(..) => 4,
            Expr::Pow(..) => 5,
            Expr::Const(c) => {
                if !c.is_integer() {
                    3
                } else if c.is_negative() {
                    4
                } else {
                    6
                }
            }
            Expr::Float(v) => {
                if v.is_sign_negative() {
                    4
                } else {
                    6
                }
            }
            _ => 6,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() >= min {
            write!(f, "{self}")
        } else {
            write!(f, "({self})")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Const(c) => {
                if c.is_integer() {
                    write!(f, "{}", c.numer())
                } else {
                    write!(f, "{}/{}", c.numer(), c.denom())
                }
            }
            Float(v) => write!(f, "{v:?}"),
            Pi => write!(f, "pi"),
            Sym(s) => write!(f, "{s}"),
            Neg(e) => {
                write!(f, "-")?;
                e.fmt_child(f, 4)
            }
            Add(l, r) => {
                l.fmt_child(f, 1)?;
                write!(f, " + ")?;
                r.fmt_child(f, 2)
            }
            Sub(l, r) => {
                l.fmt_child(f, 1)?;
                write!(f, " - ")?;
                r.fmt_child(f, 2)
            }
            Mul(l, r) => {
                l.fmt_child(f, 2)?;
                write!(f, "*")?;
                r.fmt_child(f, 3)
            }
            Div(l, r) => {
                l.fmt_child(f, 3)?;
                write!(f, "/")?;
                r.fmt_child(f, 4)
            }
            Pow(e, k) => {
                e.fmt_child(f, 6)?;
                write!(f, "^{k}")
            }
            Func(g, e) => write!(f, "{}({e})", g.name()),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $variant:ident) => {
        impl std::ops::$tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Arc::new(self), Arc::new(rhs))
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$variant(Arc::new(self.clone()), Arc::new(rhs.clone()))
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$variant(Arc::new(self), Arc::new(rhs.clone()))
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Arc::new(self.clone()), Arc::new(rhs))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Arc::new(self))
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Arc::new(self.clone()))
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Expr {
        Expr::int(v)
    }
}

impl From<Rational> for Expr {
    fn from(v: Rational) -> Expr {
        Expr::Const(v)
    }
}

#[cfg(test)]
mod tests;
