//! Canonical polynomial form used by `simplify`.
//!
//! An expression is flattened into a sum of monomials with numeric
//! coefficients. Monomial factors are symbols, `pi`, function applications
//! (with canonical arguments) and, for sums that cannot be distributed,
//! normalized sums raised to an integer power.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use num_integer::Roots;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, Zero};

use super::{Expr, Func, Rational};

/// Upper bound on the number of terms produced when expanding a power of a sum.
const EXPAND_CAP: f64 = 500.0;

#[derive(Clone, Copy, Debug)]
enum Num {
    Q(Rational),
    F(f64),
}

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Num {}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Num::Q(a), Num::Q(b)) => a.cmp(b),
            (Num::F(a), Num::F(b)) => a.total_cmp(b),
            (Num::Q(_), Num::F(_)) => Ordering::Less,
            (Num::F(_), Num::Q(_)) => Ordering::Greater,
        }
    }
}

impl Num {
    fn int(v: i128) -> Num {
        Num::Q(Rational::from_integer(v))
    }

    fn is_zero(&self) -> bool {
        match self {
            Num::Q(q) => q.is_zero(),
            Num::F(f) => *f == 0.0,
        }
    }

    fn is_one(&self) -> bool {
        matches!(self, Num::Q(q) if q.is_one())
    }

    fn is_negative(&self) -> bool {
        match self {
            Num::Q(q) => q.is_negative(),
            Num::F(f) => *f < 0.0,
        }
    }

    fn to_f64(self) -> f64 {
        match self {
            Num::Q(q) => *q.numer() as f64 / *q.denom() as f64,
            Num::F(f) => f,
        }
    }

    fn add(self, o: Num) -> Num {
        match (self, o) {
            (Num::Q(a), Num::Q(b)) => a.checked_add(&b).map(Num::Q).unwrap_or_else(|| Num::F(self.to_f64() + o.to_f64())),
            _ => Num::F(self.to_f64() + o.to_f64()),
        }
    }

    fn mul(self, o: Num) -> Num {
        if self.is_zero() || o.is_zero() {
            return Num::int(0);
        }
        match (self, o) {
            (Num::Q(a), Num::Q(b)) => a.checked_mul(&b).map(Num::Q).unwrap_or_else(|| Num::F(self.to_f64() * o.to_f64())),
            _ => Num::F(self.to_f64() * o.to_f64()),
        }
    }

    fn neg(self) -> Num {
        match self {
            Num::Q(q) => Num::Q(-q),
            Num::F(f) => Num::F(-f),
        }
    }

    fn abs(self) -> Num {
        if self.is_negative() {
            self.neg()
        } else {
            self
        }
    }

    fn recip(self) -> Option<Num> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Num::Q(q) => Num::Q(q.recip()),
            Num::F(f) => Num::F(1.0 / f),
        })
    }

    fn powi(self, k: i64) -> Option<Num> {
        let base = if k < 0 { self.recip()? } else { self };
        let mut acc = Num::int(1);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(base);
        }
        Some(acc)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Base {
    Sym(Arc<str>),
    Pi,
    Func(Func, Poly),
    Sum(Poly),
}

type Mono = BTreeMap<Base, i64>;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Poly {
    terms: BTreeMap<Mono, Num>,
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = a.clone();
    for (base, e) in b {
        let slot = out.entry(base.clone()).or_insert(0);
        *slot += e;
        if *slot == 0 {
            out.remove(base);
        }
    }
    out
}

fn needs_normalizing(base: &Base, e: i64) -> bool {
    match base {
        Base::Func(Func::Sqrt, _) => e.abs() >= 2,
        Base::Func(Func::Abs, _) => e % 2 == 0,
        Base::Sum(p) => e > 0 && expansion_fits(p, e),
        _ => false,
    }
}

fn expansion_fits(p: &Poly, k: i64) -> bool {
    let t = p.terms.len() as f64;
    let mut count = 1.0;
    for i in 0..k {
        count *= (t + i as f64) / (i as f64 + 1.0);
        if count > EXPAND_CAP {
            return false;
        }
    }
    true
}

/// Turns `c * m` into canonical form.
fn normalize_term(c: Num, m: Mono) -> Poly {
    if c.is_zero() {
        return Poly::default();
    }
    if !m.iter().any(|(b, e)| needs_normalizing(b, *e)) {
        let mut p = Poly::default();
        p.terms.insert(m, c);
        return p;
    }
    let mut result = Poly::constant(c);
    let mut rest = Mono::new();
    for (base, e) in m {
        match &base {
            Base::Func(Func::Sqrt, arg) if e.abs() >= 2 => {
                result = result.mul(&arg.pow(e / 2));
                if e % 2 != 0 {
                    rest.insert(base, e % 2);
                }
            }
            Base::Func(Func::Abs, arg) if e % 2 == 0 => {
                result = result.mul(&arg.pow(e));
            }
            Base::Sum(arg) if e > 0 && expansion_fits(arg, e) => {
                result = result.mul(&arg.pow(e));
            }
            _ => {
                rest.insert(base, e);
            }
        }
    }
    let mut tail = Poly::default();
    tail.terms.insert(rest, Num::int(1));
    result.mul(&tail)
}

impl Poly {
    fn constant(c: Num) -> Poly {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.terms.insert(Mono::new(), c);
        }
        p
    }

    fn atom(base: Base) -> Poly {
        let mut m = Mono::new();
        m.insert(base, 1);
        let mut p = Poly::default();
        p.terms.insert(m, Num::int(1));
        p
    }

    fn add_term(&mut self, m: Mono, c: Num) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                *slot = slot.add(c);
                if slot.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn add(mut self, other: &Poly) -> Poly {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), *c);
        }
        self
    }

    fn neg(mut self) -> Poly {
        for c in self.terms.values_mut() {
            *c = c.neg();
        }
        self
    }

    fn scale(&self, k: Num) -> Poly {
        let mut out = Poly::default();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.mul(k));
        }
        out
    }

    fn as_constant(&self) -> Option<Num> {
        match self.terms.len() {
            0 => Some(Num::int(0)),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_empty().then_some(*c)
            }
            _ => None,
        }
    }

    fn single_term(&self) -> Option<(&Mono, Num)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(m, c)| (m, *c))
        } else {
            None
        }
    }

    /// Splits into (leading coefficient, poly with leading coefficient one).
    /// Float leads are left in place so repeated normalization cannot drift.
    fn primitive(&self) -> (Num, Poly) {
        let lead = *self.terms.values().next_back().expect("non-empty poly");
        if let Num::F(_) = lead {
            return (Num::int(1), self.clone());
        }
        let inv = lead.recip().expect("nonzero lead");
        (lead, self.scale(inv))
    }

    fn mul(&self, other: &Poly) -> Poly {
        if let Some(p) = cancel(self, other).or_else(|| cancel(other, self)) {
            return p;
        }
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let t = normalize_term(c1.mul(*c2), mono_mul(m1, m2));
                for (m, c) in t.terms {
                    out.add_term(m, c);
                }
            }
        }
        out
    }

    fn pow(&self, k: i64) -> Poly {
        if k == 0 {
            return Poly::constant(Num::int(1));
        }
        if k == 1 {
            return self.clone();
        }
        if let Some(n) = self.as_constant() {
            return match n.powi(k) {
                Some(v) => Poly::constant(v),
                None => {
                    let mut m = Mono::new();
                    m.insert(Base::Sum(Poly::default()), k);
                    let mut p = Poly::default();
                    p.terms.insert(m, Num::int(1));
                    p
                }
            };
        }
        if let Some((m, c)) = self.single_term() {
            let mm: Mono = m.iter().map(|(b, e)| (b.clone(), e * k)).collect();
            return normalize_term(c.powi(k).expect("nonzero coefficient"), mm);
        }
        if k > 0 && expansion_fits(self, k) {
            let mut acc = self.clone();
            for _ in 1..k {
                acc = acc.mul(self);
            }
            return acc;
        }
        let (lead, hat) = self.primitive();
        let mut m = Mono::new();
        m.insert(Base::Sum(hat), k);
        let mut p = Poly::default();
        p.terms.insert(m, lead.powi(k).expect("nonzero lead"));
        p
    }
}

/// If `b` is proportional to a sum `q` and every term of `a` carries `q` with
/// a negative exponent, returns the cancelled product.
fn cancel(a: &Poly, b: &Poly) -> Option<Poly> {
    if b.terms.len() < 2 || a.terms.is_empty() {
        return None;
    }
    let (lead, hat) = b.primitive();
    let key = Base::Sum(hat);
    if !a.terms.keys().all(|m| m.get(&key).is_some_and(|e| *e < 0)) {
        return None;
    }
    let mut out = Poly::default();
    for (m, c) in &a.terms {
        let mut mm = m.clone();
        let e = mm.get_mut(&key).expect("checked");
        *e += 1;
        if *e == 0 {
            mm.remove(&key);
        }
        for (m2, c2) in normalize_term(c.mul(lead), mm).terms {
            out.add_term(m2, c2);
        }
    }
    Some(out)
}

fn perfect_square(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (n * n == *q.numer() && d * d == *q.denom()).then(|| Rational::new(n, d))
}

/// Sign of the argument used for odd/even rules: sign of the last term that is
/// neither constant nor a pure multiple of pi.
fn leading_negative(arg: &Poly) -> bool {
    let pi_mono: Mono = [(Base::Pi, 1)].into_iter().collect();
    arg.terms
        .iter()
        .rev()
        .find(|(m, _)| !m.is_empty() && **m != pi_mono)
        .is_some_and(|(_, c)| c.is_negative())
}

fn func_poly(f: Func, arg: Poly) -> Poly {
    let one = || Poly::constant(Num::int(1));
    if let Some(n) = arg.as_constant() {
        match n {
            Num::Q(q) => {
                let folded = match f {
                    Func::Sin if q.is_zero() => Some(Poly::default()),
                    Func::Cos | Func::Exp if q.is_zero() => Some(one()),
                    Func::Log if q.is_one() => Some(Poly::default()),
                    Func::Sqrt => perfect_square(&q).map(|r| Poly::constant(Num::Q(r))),
                    Func::Abs => Some(Poly::constant(Num::Q(q.abs()))),
                    _ => None,
                };
                if let Some(p) = folded {
                    return p;
                }
            }
            Num::F(v) => {
                let r = f.apply_f64(v);
                if r.is_finite() {
                    return Poly::constant(Num::F(r));
                }
            }
        }
        return Poly::atom(Base::Func(f, arg));
    }
    match f {
        Func::Sin | Func::Cos => trig_poly(f, arg),
        Func::Abs => {
            if leading_negative(&arg) {
                return func_poly(Func::Abs, arg.neg());
            }
            if let Some((m, c)) = arg.single_term() {
                if c.is_one() && m.len() == 1 {
                    let (b, e) = m.iter().next().expect("one factor");
                    let nonneg = matches!(b, Base::Func(Func::Exp | Func::Abs, _))
                        || (matches!(b, Base::Func(Func::Sqrt, _)) && *e == 1);
                    if nonneg {
                        return arg;
                    }
                }
                if !c.is_one() && !c.is_negative() {
                    let rest = Poly::constant(Num::int(1)).mul(&normalize_term(Num::int(1), m.clone()));
                    return func_poly(Func::Abs, rest).scale(c);
                }
            }
            Poly::atom(Base::Func(f, arg))
        }
        Func::Exp | Func::Log => {
            let inverse = if f == Func::Exp { Func::Log } else { Func::Exp };
            if let Some((m, c)) = arg.single_term() {
                if c.is_one() && m.len() == 1 {
                    let (b, e) = m.iter().next().expect("one factor");
                    if let (Base::Func(g, inner), 1) = (b, e) {
                        if *g == inverse {
                            return inner.clone();
                        }
                    }
                }
            }
            Poly::atom(Base::Func(f, arg))
        }
        Func::Sqrt => Poly::atom(Base::Func(f, arg)),
    }
}

fn trig_poly(f: Func, arg: Poly) -> Poly {
    if leading_negative(&arg) {
        let flipped = trig_poly(f, arg.neg());
        return if f == Func::Sin { flipped.neg() } else { flipped };
    }
    let pi_mono: Mono = [(Base::Pi, 1)].into_iter().collect();
    let Some(Num::Q(q)) = arg.terms.get(&pi_mono).copied() else {
        return Poly::atom(Base::Func(f, arg));
    };
    let two = Rational::from_integer(2);
    let mut r = q % two;
    if r.is_negative() {
        r += two;
    }
    let mut rest = arg.clone();
    rest.terms.remove(&pi_mono);
    let quarter = [0i128, 1, 2, 3].into_iter().find(|k| r == Rational::new(*k, 2));
    match quarter {
        Some(k) => {
            let (g, negate) = match (f, k) {
                (Func::Sin, 0) => (Func::Sin, false),
                (Func::Sin, 1) => (Func::Cos, false),
                (Func::Sin, 2) => (Func::Sin, true),
                (Func::Sin, _) => (Func::Cos, true),
                (_, 0) => (Func::Cos, false),
                (_, 1) => (Func::Sin, true),
                (_, 2) => (Func::Cos, true),
                (_, _) => (Func::Sin, false),
            };
            let v = func_poly(g, rest);
            if negate {
                v.neg()
            } else {
                v
            }
        }
        None if r != q => {
            rest.add_term(pi_mono, Num::Q(r));
            trig_poly(f, rest)
        }
        None => Poly::atom(Base::Func(f, arg)),
    }
}

/// Rewrites `c1*r*sin(a)^2 + c2*r*cos(a)^2` as `c2*r + (c1 - c2)*r*sin(a)^2`.
fn pair_trig(mut p: Poly) -> Poly {
    loop {
        let mut found = None;
        'outer: for (m, _) in &p.terms {
            for (b, e) in m {
                if let (Base::Func(Func::Sin, a), true) = (b, *e >= 2) {
                    let mut r = m.clone();
                    *r.get_mut(b).expect("present") -= 2;
                    if r[b] == 0 {
                        r.remove(b);
                    }
                    let cos_base = Base::Func(Func::Cos, a.clone());
                    let partner = mono_mul(&r, &[(cos_base, 2)].into_iter().collect());
                    if p.terms.contains_key(&partner) {
                        found = Some((m.clone(), partner, r));
                        break 'outer;
                    }
                }
            }
        }
        let Some((sin_mono, cos_mono, r)) = found else {
            return p;
        };
        let c1 = p.terms.remove(&sin_mono).expect("present");
        let c2 = p.terms.remove(&cos_mono).expect("present");
        for (m, c) in normalize_term(c2, r).terms {
            p.add_term(m, c);
        }
        p.add_term(sin_mono, c1.add(c2.neg()));
    }
}

fn canon(e: &Expr) -> Poly {
    let p = match e {
        Expr::Const(q) => Poly::constant(Num::Q(*q)),
        Expr::Float(v) => Poly::constant(Num::F(*v)),
        Expr::Pi => Poly::atom(Base::Pi),
        Expr::Sym(s) => Poly::atom(Base::Sym(s.clone())),
        Expr::Neg(a) => canon(a).neg(),
        Expr::Add(a, b) => canon(a).add(&canon(b)),
        Expr::Sub(a, b) => canon(a).add(&canon(b).neg()),
        Expr::Mul(a, b) => canon(a).mul(&canon(b)),
        Expr::Div(a, b) => canon(a).mul(&canon_pow(b, -1)),
        Expr::Pow(a, k) => canon_pow(a, *k),
        Expr::Func(f, a) => func_poly(*f, canon(a)),
    };
    pair_trig(p)
}

fn canon_pow(e: &Expr, k: i64) -> Poly {
    let p = match e {
        Expr::Pow(b, j) => match i64::checked_mul(*j, k) {
            Some(jk) => canon_pow(b, jk),
            None => canon(e).pow(k),
        },
        Expr::Mul(a, b) => canon_pow(a, k).mul(&canon_pow(b, k)),
        Expr::Div(a, b) => canon_pow(a, k).mul(&canon_pow(b, -k)),
        Expr::Neg(a) => {
            let v = canon_pow(a, k);
            if k % 2 == 0 {
                v
            } else {
                v.neg()
            }
        }
        _ => canon(e).pow(k),
    };
    pair_trig(p)
}

fn num_expr(n: Num) -> Expr {
    match n {
        Num::Q(q) => Expr::Const(q),
        Num::F(f) => Expr::Float(f),
    }
}

fn base_expr(b: &Base) -> Expr {
    match b {
        Base::Sym(s) => Expr::Sym(s.clone()),
        Base::Pi => Expr::Pi,
        Base::Func(f, a) => Expr::Func(*f, Arc::new(to_expr(a))),
        Base::Sum(p) => to_expr(p),
    }
}

fn product(factors: Vec<Expr>) -> Option<Expr> {
    factors.into_iter().reduce(|acc, f| Expr::Mul(Arc::new(acc), Arc::new(f)))
}

fn factor(b: &Base, e: i64) -> Expr {
    let be = base_expr(b);
    if e == 1 {
        be
    } else {
        Expr::Pow(Arc::new(be), e)
    }
}

/// Magnitude of a term; the sign is returned separately.
fn term_expr(m: &Mono, c: Num) -> (bool, Expr) {
    let negative = c.is_negative();
    let mag = c.abs();
    let mut num = Vec::new();
    let mut den = Vec::new();
    match mag {
        Num::Q(q) => {
            let has_num = m.values().any(|e| *e > 0);
            if !q.numer().is_one() || !has_num {
                num.push(Expr::Const(Rational::from_integer(*q.numer())));
            }
            if !q.denom().is_one() {
                den.push(Expr::Const(Rational::from_integer(*q.denom())));
            }
        }
        Num::F(f) => num.push(Expr::Float(f)),
    }
    for (b, e) in m {
        if *e > 0 {
            num.push(factor(b, *e));
        } else {
            den.push(factor(b, -*e));
        }
    }
    let n = product(num).unwrap_or_else(Expr::one);
    let t = match product(den) {
        Some(d) => Expr::Div(Arc::new(n), Arc::new(d)),
        None => n,
    };
    (negative, t)
}

fn to_expr(p: &Poly) -> Expr {
    if let Some(n) = p.as_constant() {
        return num_expr(n);
    }
    let mut acc: Option<Expr> = None;
    for (m, c) in &p.terms {
        let (neg, t) = term_expr(m, *c);
        acc = Some(match acc {
            None if neg => Expr::Neg(Arc::new(t)),
            None => t,
            Some(a) if neg => Expr::Sub(Arc::new(a), Arc::new(t)),
            Some(a) => Expr::Add(Arc::new(a), Arc::new(t)),
        });
    }
    acc.unwrap_or_else(Expr::zero)
}

pub(super) fn simplify(e: &Expr) -> Expr {
    to_expr(&canon(e))
}

pub(super) fn is_zero_within(e: &Expr, tol: f64) -> bool {
    canon(e).terms.values().all(|c| matches!(c, Num::F(f) if f.abs() < tol))
}
