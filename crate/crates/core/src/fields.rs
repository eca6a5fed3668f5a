//! Vector fields and differential operators on a single chart.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::{CompiledExpr, EvalError, Expr, Rational};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("chart mismatch: `{0}` vs `{1}`")]
    ChartMismatch(String, String),
    #[error("expected {expected} coefficients, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("`{symbol}` is not a coordinate of chart `{chart}`")]
    ForeignSymbol { symbol: String, chart: String },
    #[error("operator uses generator index {0} outside the generator list")]
    BadGenerator(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Named coordinate system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    pub name: String,
    pub coords: Vec<String>,
}

impl Chart {
    pub fn new(name: &str, coords: &[&str]) -> Arc<Chart> {
        Arc::new(Chart { name: name.to_string(), coords: coords.iter().map(|s| s.to_string()).collect() })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.coords.iter().map(String::as_str).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    /// Product chart `self × fiber`.
    pub fn product(&self, fiber: &[String], name: &str) -> Arc<Chart> {
        let mut coords = self.coords.clone();
        coords.extend(fiber.iter().cloned());
        Arc::new(Chart { name: name.to_string(), coords })
    }

    pub fn check_expr(&self, e: &Expr) -> Result<(), FieldError> {
        for s in e.free_symbols() {
            if self.index_of(&s).is_none() {
                return Err(FieldError::ForeignSymbol { symbol: s, chart: self.name.clone() });
            }
        }
        Ok(())
    }

    fn same(&self, other: &Chart) -> Result<(), FieldError> {
        if self.coords == other.coords {
            Ok(())
        } else {
            Err(FieldError::ChartMismatch(self.name.clone(), other.name.clone()))
        }
    }
}

/// `Σ a_i ∂_{x_i}` with simplified coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: Arc<Chart>,
    coeffs: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: Arc<Chart>, coeffs: Vec<Expr>) -> Result<Self, FieldError> {
        if coeffs.len() != chart.dim() {
            return Err(FieldError::Arity { expected: chart.dim(), got: coeffs.len() });
        }
        for c in &coeffs {
            chart.check_expr(c)?;
        }
        Ok(Self::from_simplified(chart, coeffs.iter().map(Expr::simplify).collect()))
    }

    fn from_simplified(chart: Arc<Chart>, coeffs: Vec<Expr>) -> Self {
        VectorField { chart, coeffs }
    }

    /// Parses one coefficient string per coordinate.
    pub fn parse(chart: Arc<Chart>, coeffs: &[&str]) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let names = chart.names();
        let exprs = coeffs.iter().map(|c| Expr::parse(c, &names)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(chart, exprs)?)
    }

    pub fn coordinate(chart: Arc<Chart>, i: usize) -> Self {
        let coeffs = (0..chart.dim()).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect();
        VectorField { chart, coeffs }
    }

    pub fn zero(chart: Arc<Chart>) -> Self {
        let coeffs = vec![Expr::zero(); chart.dim()];
        VectorField { chart, coeffs }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_const_zero)
    }

    /// Directional derivative `Σ a_i ∂f/∂x_i`, simplified.
    pub fn apply(&self, f: &Expr) -> Result<Expr, FieldError> {
        self.chart.check_expr(f)?;
        Ok(self.apply_unchecked(f))
    }

    fn apply_unchecked(&self, f: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (c, name) in self.coeffs.iter().zip(&self.chart.coords) {
            if c.is_const_zero() || !f.contains_symbol(name) {
                continue;
            }
            acc = acc + c * f.differentiate(name);
        }
        acc.simplify()
    }

    pub fn bracket(&self, other: &VectorField) -> Result<VectorField, FieldError> {
        self.chart.same(&other.chart)?;
        let coeffs = (0..self.chart.dim())
            .map(|i| (self.apply_unchecked(&other.coeffs[i]) - other.apply_unchecked(&self.coeffs[i])).simplify())
            .collect();
        Ok(Self::from_simplified(self.chart.clone(), coeffs))
    }

    /// `(1/μ) Σ ∂(μ a_i)/∂x_i`, expanded by the product rule.
    pub fn divergence(&self, density: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (c, name) in self.coeffs.iter().zip(&self.chart.coords) {
            acc = acc + c.differentiate(name);
        }
        let d = self.apply_unchecked(density);
        if !d.is_const_zero() {
            acc = acc + d / density;
        }
        acc.simplify()
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        let coeffs = self.coeffs.iter().map(|c| (f * c).simplify()).collect();
        Self::from_simplified(self.chart.clone(), coeffs)
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, FieldError> {
        self.chart.same(&other.chart)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a + b).simplify()).collect();
        Ok(Self::from_simplified(self.chart.clone(), coeffs))
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, FieldError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// Linear combination `Σ c_k V_k` with rational weights.
    pub fn combination(chart: Arc<Chart>, terms: &[(Rational, &VectorField)]) -> Result<VectorField, FieldError> {
        let mut acc = VectorField::zero(chart);
        for (c, v) in terms {
            if !c.is_zero() {
                acc = acc.add(&v.scale(&Expr::Const(*c)))?;
            }
        }
        Ok(acc)
    }

    /// Same field written on a larger chart whose leading coordinates are ours.
    pub fn extend_to(&self, chart: Arc<Chart>) -> Result<VectorField, FieldError> {
        if chart.coords.len() < self.chart.dim() || chart.coords[..self.chart.dim()] != self.chart.coords[..] {
            return Err(FieldError::ChartMismatch(self.chart.name.clone(), chart.name.clone()));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(chart.dim(), Expr::zero());
        Ok(Self::from_simplified(chart, coeffs))
    }

    /// Coefficients restricted to the first `m` coordinates.
    pub fn restrict(&self, chart: Arc<Chart>) -> VectorField {
        Self::from_simplified(chart.clone(), self.coeffs[..chart.dim()].to_vec())
    }

    pub fn substitute_all(&self, pairs: &[(&str, Expr)]) -> VectorField {
        let coeffs = self.coeffs.iter().map(|c| c.substitute_all(pairs).simplify()).collect();
        Self::from_simplified(self.chart.clone(), coeffs)
    }

    pub fn compile(&self) -> Result<CompiledField, FieldError> {
        let names = self.chart.names();
        let coeffs = self.coeffs.iter().map(|c| c.compile(&names)).collect::<Result<_, _>>()?;
        Ok(CompiledField { coeffs })
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, FieldError> {
        Ok(self.compile()?.eval(point)?)
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for (c, name) in self.coeffs.iter().zip(&self.chart.coords) {
            if c.is_const_zero() {
                continue;
            }
            let s = if c.is_const_one() {
                format!("d{name}")
            } else if matches!(c, Expr::Add(..) | Expr::Sub(..)) {
                format!("({c})*d{name}")
            } else {
                format!("{c}*d{name}")
            };
            parts.push(s);
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        write!(f, "{}", join_signed(&parts))
    }
}

fn join_signed(parts: &[String]) -> String {
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        match (i, p.strip_prefix('-')) {
            (0, _) => out.push_str(p),
            (_, Some(rest)) => {
                out.push_str(" - ");
                out.push_str(rest);
            }
            (_, None) => {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
    }
    out
}

/// Vector field with compiled coefficients.
#[derive(Debug, Clone)]
pub struct CompiledField {
    coeffs: Vec<CompiledExpr>,
}

impl CompiledField {
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.coeffs.iter().map(|c| c.eval(point)).collect()
    }

    pub fn eval_into(&self, point: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, c) in out.iter_mut().zip(&self.coeffs) {
            *o = c.eval(point)?;
        }
        Ok(())
    }
}

/// Bracket relations `[G_i, G_j] = Σ_k c_ijk G_k` among a generator list.
#[derive(Debug, Clone, PartialEq)]
pub struct Relations {
    n: usize,
    table: Vec<Vec<(usize, Rational)>>,
}

impl Relations {
    pub fn zero(n: usize) -> Self {
        Relations { n, table: vec![Vec::new(); n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Sets `[G_i, G_j]` and, by antisymmetry, `[G_j, G_i]`.
    pub fn set(&mut self, i: usize, j: usize, combo: Vec<(usize, Rational)>) {
        let combo: Vec<_> = combo.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        self.table[j * self.n + i] = combo.iter().map(|(k, c)| (*k, -*c)).collect();
        self.table[i * self.n + j] = combo;
    }

    pub fn bracket(&self, i: usize, j: usize) -> &[(usize, Rational)] {
        &self.table[i * self.n + j]
    }

    /// Block-diagonal union: `other`'s generators are appended and commute with ours.
    pub fn direct_sum(&self, other: &Relations) -> Relations {
        let n = self.n + other.n;
        let mut r = Relations::zero(n);
        for i in 0..self.n {
            for j in 0..self.n {
                r.table[i * n + j] = self.bracket(i, j).to_vec();
            }
        }
        for i in 0..other.n {
            for j in 0..other.n {
                r.table[(i + self.n) * n + j + self.n] =
                    other.bracket(i, j).iter().map(|(k, c)| (k + self.n, *c)).collect();
            }
        }
        r
    }
}

/// Ordered generator list shared by the operators built over it.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    pub chart: Arc<Chart>,
    pub fields: Vec<VectorField>,
    pub names: Vec<String>,
    /// When present, operators are kept in sorted (PBW) word order.
    pub relations: Option<Relations>,
}

impl GeneratorSet {
    pub fn new(chart: Arc<Chart>, fields: Vec<VectorField>, names: Vec<String>, relations: Option<Relations>) -> Arc<Self> {
        Arc::new(GeneratorSet { chart, fields, names, relations })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

pub type Word = Vec<usize>;

/// `Σ r_w X^w` where `X^w = X_{w0} ∘ X_{w1} ∘ …`.
#[derive(Debug, Clone)]
pub struct DiffOperator {
    gens: Arc<GeneratorSet>,
    terms: BTreeMap<Word, Expr>,
}

impl DiffOperator {
    pub fn zero(gens: Arc<GeneratorSet>) -> Self {
        DiffOperator { gens, terms: BTreeMap::new() }
    }

    pub fn from_terms(gens: Arc<GeneratorSet>, terms: Vec<(Expr, Word)>) -> Result<Self, FieldError> {
        let mut op = DiffOperator::zero(gens);
        for (c, w) in terms {
            op.gens.chart.check_expr(&c)?;
            if let Some(bad) = w.iter().find(|i| **i >= op.gens.len()) {
                return Err(FieldError::BadGenerator(*bad));
            }
            op.add_raw(w, c);
        }
        Ok(op.normalized())
    }

    pub fn multiplication(gens: Arc<GeneratorSet>, r: Expr) -> Self {
        let mut op = DiffOperator::zero(gens);
        op.add_raw(Vec::new(), r);
        op.finish()
    }

    pub fn generator(gens: Arc<GeneratorSet>, i: usize) -> Self {
        let mut op = DiffOperator::zero(gens);
        op.add_raw(vec![i], Expr::one());
        op
    }

    pub fn generators(&self) -> &Arc<GeneratorSet> {
        &self.gens
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Expr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &[usize]) -> Expr {
        self.terms.get(w).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn order(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_raw(&mut self, w: Word, c: Expr) {
        match self.terms.get_mut(&w) {
            Some(slot) => *slot = &*slot + c,
            None => {
                self.terms.insert(w, c);
            }
        }
    }

    fn finish(mut self) -> Self {
        for c in self.terms.values_mut() {
            *c = c.simplify();
        }
        self.terms.retain(|_, c| !c.is_const_zero());
        self
    }

    fn normalized(self) -> Self {
        let Some(rel) = &self.gens.relations else {
            return self.finish();
        };
        let rel = rel.clone();
        let mut memo = HashMap::new();
        let mut out = DiffOperator::zero(self.gens.clone());
        for (w, c) in self.terms {
            for (k, v) in pbw(&w, &rel, &mut memo) {
                out.add_raw(v, Expr::Const(k) * &c);
            }
        }
        out.finish()
    }

    pub fn add(&self, other: &DiffOperator) -> DiffOperator {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_raw(w.clone(), c.clone());
        }
        out.finish()
    }

    pub fn scale(&self, f: &Expr) -> DiffOperator {
        let mut out = DiffOperator::zero(self.gens.clone());
        for (w, c) in &self.terms {
            out.add_raw(w.clone(), f * c);
        }
        out.finish()
    }

    pub fn sub(&self, other: &DiffOperator) -> DiffOperator {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// `self ∘ other`, expanded by the Leibniz rule.
    pub fn compose(&self, other: &DiffOperator) -> DiffOperator {
        let mut out = DiffOperator::zero(self.gens.clone());
        for (w, a) in &self.terms {
            for (v, b) in &other.terms {
                for (c, u) in self.leibniz(w, b) {
                    let mut word = u;
                    word.extend_from_slice(v);
                    out.add_raw(word, a * c);
                }
            }
        }
        out.normalized()
    }

    /// `X^w ∘ (b ·)` as a list of `(coefficient, word)`.
    fn leibniz(&self, w: &[usize], b: &Expr) -> Vec<(Expr, Word)> {
        let Some((&i, rest)) = w.split_first() else {
            return vec![(b.clone(), Vec::new())];
        };
        let field = &self.gens.fields[i];
        let mut out = Vec::new();
        for (c, u) in self.leibniz(rest, b) {
            let dc = field.apply_unchecked(&c);
            if !dc.is_const_zero() {
                out.push((dc, u.clone()));
            }
            let mut word = vec![i];
            word.extend(u);
            out.push((c, word));
        }
        out
    }

    pub fn apply(&self, f: &Expr) -> Result<Expr, FieldError> {
        self.gens.chart.check_expr(f)?;
        let mut acc = Expr::zero();
        for (w, c) in &self.terms {
            let mut g = f.clone();
            for &i in w.iter().rev() {
                g = self.gens.fields[i].apply_unchecked(&g);
            }
            acc = acc + c * g;
        }
        Ok(acc.simplify())
    }

    /// Formal adjoint with respect to `∫ f g · density`.
    pub fn adjoint(&self, density: &Expr) -> DiffOperator {
        let stars: Vec<DiffOperator> = (0..self.gens.len())
            .map(|i| {
                let div = self.gens.fields[i].divergence(density);
                let mut op = DiffOperator::zero(self.gens.clone());
                op.add_raw(vec![i], Expr::int(-1));
                op.add_raw(Vec::new(), -div);
                op.finish()
            })
            .collect();
        let mut out = DiffOperator::zero(self.gens.clone());
        for (w, c) in &self.terms {
            let mut acc = DiffOperator::multiplication(self.gens.clone(), c.clone());
            for &i in w {
                acc = stars[i].compose(&acc);
            }
            out = out.add(&acc);
        }
        out
    }

    pub fn coordinate_form(&self) -> CoordOperator {
        let chart = self.gens.chart.clone();
        let mut out = CoordOperator::zero(chart.clone());
        for (w, c) in &self.terms {
            let mut cur = CoordOperator::multiplication(chart.clone(), c.clone());
            for &i in w.iter().rev() {
                cur = CoordOperator::field(&self.gens.fields[i]).compose_first_order(&cur);
            }
            out = out.add(&cur);
        }
        out
    }

    /// Renders `r_w X^w` sums with generator names.
    pub fn display(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(w, c)| {
                let word = render_word(w, &self.gens.names);
                if w.is_empty() {
                    c.to_string()
                } else {
                    with_coefficient(c, &word)
                }
            })
            .collect();
        join_signed(&parts)
    }
}

fn with_coefficient(c: &Expr, body: &str) -> String {
    if c.is_const_one() {
        body.to_string()
    } else if (-c).simplify().is_const_one() {
        format!("-{body}")
    } else if matches!(c, Expr::Add(..) | Expr::Sub(..)) {
        format!("({c})*{body}")
    } else {
        format!("{c}*{body}")
    }
}

fn render_word(w: &[usize], names: &[String]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < w.len() {
        let mut j = i;
        while j < w.len() && w[j] == w[i] {
            j += 1;
        }
        let name = &names[w[i]];
        parts.push(if j - i == 1 { name.clone() } else { format!("{name}^{}", j - i) });
        i = j;
    }
    parts.join("*")
}

/// Sorted-word expansion using `X_a X_b = X_b X_a + [X_a, X_b]`.
fn pbw(w: &[usize], rel: &Relations, memo: &mut HashMap<Word, Vec<(Rational, Word)>>) -> Vec<(Rational, Word)> {
    if let Some(v) = memo.get(w) {
        return v.clone();
    }
    let Some(i) = (0..w.len().saturating_sub(1)).find(|&i| w[i] > w[i + 1]) else {
        return vec![(Rational::one(), w.to_vec())];
    };
    let mut acc: BTreeMap<Word, Rational> = BTreeMap::new();
    let mut swapped = w.to_vec();
    swapped.swap(i, i + 1);
    let mut pieces = vec![(Rational::one(), swapped)];
    for &(k, c) in rel.bracket(w[i], w[i + 1]) {
        let mut shorter = w[..i].to_vec();
        shorter.push(k);
        shorter.extend_from_slice(&w[i + 2..]);
        pieces.push((c, shorter));
    }
    for (c, piece) in pieces {
        for (d, v) in pbw(&piece, rel, memo) {
            *acc.entry(v).or_insert_with(Rational::zero) += c * d;
        }
    }
    let out: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(v, c)| (c, v)).collect();
    memo.insert(w.to_vec(), out.clone());
    out
}

/// Operator in coordinate form `Σ b_β ∂^β` with multi-indices over the chart.
#[derive(Debug, Clone)]
pub struct CoordOperator {
    chart: Arc<Chart>,
    terms: BTreeMap<Vec<u32>, Expr>,
}

impl CoordOperator {
    pub fn zero(chart: Arc<Chart>) -> Self {
        CoordOperator { chart, terms: BTreeMap::new() }
    }

    pub fn multiplication(chart: Arc<Chart>, r: Expr) -> Self {
        let mut op = Self::zero(chart.clone());
        op.terms.insert(vec![0; chart.dim()], r);
        op.finish()
    }

    /// The single term `c ∂^beta`.
    pub fn term(chart: Arc<Chart>, beta: Vec<u32>, c: Expr) -> Self {
        let mut op = Self::zero(chart);
        op.terms.insert(beta, c);
        op.finish()
    }

    pub fn field(v: &VectorField) -> Self {
        let chart = v.chart().clone();
        let mut op = Self::zero(chart.clone());
        for (j, c) in v.coeffs().iter().enumerate() {
            let mut beta = vec![0; chart.dim()];
            beta[j] = 1;
            op.terms.insert(beta, c.clone());
        }
        op.finish()
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Expr)> {
        self.terms.iter()
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(|b| b.iter().sum()).max().unwrap_or(0)
    }

    fn finish(mut self) -> Self {
        for c in self.terms.values_mut() {
            *c = c.simplify();
        }
        self.terms.retain(|_, c| !c.is_const_zero());
        self
    }

    pub fn add(&self, other: &CoordOperator) -> CoordOperator {
        let mut out = self.clone();
        for (b, c) in &other.terms {
            let slot = out.terms.entry(b.clone()).or_insert_with(Expr::zero);
            *slot = &*slot + c;
        }
        out.finish()
    }

    pub fn sub(&self, other: &CoordOperator) -> CoordOperator {
        let neg = CoordOperator {
            chart: other.chart.clone(),
            terms: other.terms.iter().map(|(b, c)| (b.clone(), -c)).collect(),
        };
        self.add(&neg)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `self ∘ other` where `self` has order at most one.
    fn compose_first_order(&self, other: &CoordOperator) -> CoordOperator {
        let mut out = CoordOperator::zero(self.chart.clone());
        let m = self.chart.dim();
        for (alpha, a) in &self.terms {
            let Some(j) = alpha.iter().position(|k| *k == 1) else {
                for (beta, b) in &other.terms {
                    let slot = out.terms.entry(beta.clone()).or_insert_with(Expr::zero);
                    *slot = &*slot + a * b;
                }
                continue;
            };
            debug_assert_eq!(alpha.iter().sum::<u32>(), 1);
            for (beta, b) in &other.terms {
                let db = b.differentiate(&self.chart.coords[j]);
                if !db.is_const_zero() {
                    let slot = out.terms.entry(beta.clone()).or_insert_with(Expr::zero);
                    *slot = &*slot + a * db;
                }
                let mut up = beta.clone();
                up[j] += 1;
                let slot = out.terms.entry(up).or_insert_with(Expr::zero);
                *slot = &*slot + a * b;
            }
            let _ = m;
        }
        out.finish()
    }

    pub fn apply(&self, f: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (beta, c) in &self.terms {
            let mut g = f.clone();
            for (j, k) in beta.iter().enumerate() {
                for _ in 0..*k {
                    g = g.differentiate(&self.chart.coords[j]);
                }
            }
            acc = acc + c * g;
        }
        acc.simplify()
    }

    /// Compiled coefficients for numeric application.
    pub fn compile(&self) -> Result<Vec<(Vec<u32>, CompiledExpr)>, EvalError> {
        let names = self.chart.names();
        self.terms.iter().map(|(b, c)| Ok((b.clone(), c.compile(&names)?))).collect()
    }

    pub fn display(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(beta, c)| {
                let ds: Vec<String> = beta
                    .iter()
                    .enumerate()
                    .filter(|(_, k)| **k > 0)
                    .map(|(j, k)| {
                        let name = &self.chart.coords[j];
                        if *k == 1 {
                            format!("d{name}")
                        } else {
                            format!("d{name}^{k}")
                        }
                    })
                    .collect();
                let d = ds.join("*");
                if d.is_empty() {
                    c.to_string()
                } else {
                    with_coefficient(c, &d)
                }
            })
            .collect();
        join_signed(&parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grushin() -> (Arc<Chart>, VectorField, VectorField) {
        let chart = Chart::new("M", &["x1", "x2"]);
        let x1 = VectorField::parse(chart.clone(), &["1", "0"]).unwrap();
        let x2 = VectorField::parse(chart.clone(), &["0", "x1"]).unwrap();
        (chart, x1, x2)
    }

    fn e(s: &str) -> Expr {
        Expr::parse_any(s).unwrap()
    }

    #[test]
    fn apply_field_examples() {
        let (chart, d1, _) = grushin();
        assert_eq!(d1.apply(&e("sin(x1)")).unwrap(), e("cos(x1)"));
        let v = VectorField::parse(chart.clone(), &["0", "x1"]).unwrap();
        assert_eq!(v.apply(&e("x2")).unwrap(), e("x1"));
        let w = VectorField::parse(chart, &["0", "sin(x1)"]).unwrap();
        assert!(w.apply(&e("x1")).unwrap().is_const_zero());
        assert!(matches!(w.apply(&e("s1")), Err(FieldError::ForeignSymbol { .. })));
    }

    #[test]
    fn bracket_examples() {
        let (chart, d1, x2) = grushin();
        let b = d1.bracket(&x2).unwrap();
        assert_eq!(b, VectorField::coordinate(chart.clone(), 1));
        let s = VectorField::parse(chart.clone(), &["0", "sin(x1)"]).unwrap();
        assert_eq!(d1.bracket(&s).unwrap(), VectorField::parse(chart.clone(), &["0", "cos(x1)"]).unwrap());
        assert!(s.bracket(&s).unwrap().is_zero());
        let other = Chart::new("N", &["y1", "y2"]);
        assert!(matches!(d1.bracket(&VectorField::coordinate(other, 0)), Err(FieldError::ChartMismatch(..))));
    }

    #[test]
    fn divergence_examples() {
        let (chart, d1, x2) = grushin();
        assert!(d1.divergence(&Expr::one()).is_const_zero());
        assert!(x2.divergence(&Expr::one()).is_const_zero());
        let scaling = VectorField::parse(chart, &["x1", "0"]).unwrap();
        assert!(scaling.divergence(&Expr::one()).is_const_one());
    }

    #[test]
    fn display_uses_d_prefix() {
        let chart = Chart::new("L", &["x1", "x2", "s1"]);
        let v = VectorField::parse(chart.clone(), &["0", "x1", "1"]).unwrap();
        assert_eq!(v.to_string(), "x1*dx2 + ds1");
        let w = VectorField::parse(chart, &["0", "-sin(x1)", "1 + x1"]).unwrap();
        assert_eq!(w.to_string(), "-sin(x1)*dx2 + (1 + x1)*ds1");
    }

    #[test]
    fn jacobi_identity_on_sin_fields() {
        let chart = Chart::new("M", &["x1", "x2"]);
        let u = VectorField::parse(chart.clone(), &["1", "0"]).unwrap();
        let v = VectorField::parse(chart.clone(), &["0", "sin(x1)"]).unwrap();
        let w = VectorField::parse(chart, &["x2", "cos(x1)*x2"]).unwrap();
        let j = u
            .bracket(&v.bracket(&w).unwrap())
            .unwrap()
            .add(&v.bracket(&w.bracket(&u).unwrap()).unwrap())
            .unwrap()
            .add(&w.bracket(&u.bracket(&v).unwrap()).unwrap())
            .unwrap();
        assert!(j.is_zero(), "{j}");
    }

    fn grushin_gens() -> Arc<GeneratorSet> {
        let (chart, d1, x2) = grushin();
        GeneratorSet::new(chart, vec![d1, x2], vec!["X1".into(), "X2".into()], None)
    }

    #[test]
    fn adjoint_examples() {
        let gens = grushin_gens();
        let d1 = DiffOperator::generator(gens.clone(), 0);
        let adj = d1.adjoint(&Expr::one());
        assert_eq!(adj.terms().count(), 1);
        assert_eq!(adj.coefficient(&[0]), Expr::int(-1));

        let lap = DiffOperator::from_terms(gens.clone(), vec![(Expr::one(), vec![0, 0]), (Expr::one(), vec![1, 1])]).unwrap();
        let adj = lap.adjoint(&Expr::one());
        assert!(adj.sub(&lap).is_zero(), "{}", adj.display());

        let rho = e("1 + x1^2");
        let x2 = DiffOperator::generator(gens.clone(), 1);
        let adj = x2.adjoint(&rho);
        assert_eq!(adj.coefficient(&[1]), Expr::int(-1));
        let oracle = -(gens.fields[1].apply(&rho).unwrap() / &rho);
        assert!((adj.coefficient(&[]) - oracle).is_zero());
        let ad1 = d1.adjoint(&rho);
        let oracle = -(gens.fields[0].apply(&rho).unwrap() / &rho);
        assert!((ad1.coefficient(&[]) - oracle).is_zero(), "{}", ad1.display());
    }

    #[test]
    fn double_adjoint_is_identity() {
        let gens = grushin_gens();
        let op = DiffOperator::from_terms(
            gens,
            vec![(e("x1^2 + 1"), vec![0, 1]), (e("sin(x2)"), vec![1]), (e("x2"), vec![])],
        )
        .unwrap();
        let back = op.adjoint(&Expr::one()).adjoint(&Expr::one());
        assert!(back.coordinate_form().sub(&op.coordinate_form()).is_zero());
    }

    #[test]
    fn pbw_ordering_gives_heisenberg_relation() {
        let (chart, d1, x2) = grushin();
        let x3 = d1.bracket(&x2).unwrap();
        let mut rel = Relations::zero(3);
        rel.set(0, 1, vec![(2, Rational::one())]);
        let gens = GeneratorSet::new(chart, vec![d1, x2, x3], vec!["X1".into(), "X2".into(), "X3".into()], Some(rel));
        let op = DiffOperator::from_terms(gens.clone(), vec![(Expr::one(), vec![1, 0])]).unwrap();
        assert_eq!(op.coefficient(&[0, 1]), Expr::one());
        assert_eq!(op.coefficient(&[2]), Expr::int(-1));
        let raw = DiffOperator::from_terms(
            GeneratorSet::new(gens.chart.clone(), gens.fields.clone(), gens.names.clone(), None),
            vec![(Expr::one(), vec![1, 0])],
        )
        .unwrap();
        assert!(op.coordinate_form().sub(&raw.coordinate_form()).is_zero());
    }

    #[test]
    fn coordinate_form_of_grushin() {
        let gens = grushin_gens();
        let lap = DiffOperator::from_terms(gens, vec![(Expr::one(), vec![0, 0]), (Expr::one(), vec![1, 1])]).unwrap();
        assert_eq!(lap.coordinate_form().display(), "x1^2*dx2^2 + dx1^2");
        assert_eq!(lap.display(), "X1^2 + X2^2");
    }
}
