//! Lie closure of a generator list, structure constants and rank checks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{CompiledExpr, EvalError, Rational};
use crate::fields::{Chart, FieldError, Relations, VectorField};

const MEMBERSHIP_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ClosureError {
    #[error("dimension did not stabilize at depth {depth} (dimension reached {dim})")]
    NotStabilized { depth: usize, dim: usize },
    #[error("degenerate sample set")]
    DegenerateSamples,
    #[error("generator {0} is a combination of the previous generators")]
    DependentGenerators(usize),
    #[error("no generators given")]
    Empty,
    #[error("bracket [X{i}, X{j}] could not be certified as a combination of the basis")]
    NotCertified { i: usize, j: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `c[i][j][k]` with `[X_i, X_j] = Σ_k c_ij^k X_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureConstants {
    n: usize,
    #[serde(serialize_with = "ser_rationals")]
    data: Vec<Rational>,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|q| q.to_string()))
}

impl StructureConstants {
    pub fn zero(n: usize) -> Self {
        StructureConstants { n, data: vec![Rational::zero(); n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Rational {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Rational) {
        self.data[(i * self.n + j) * self.n + k] = v;
        self.data[(j * self.n + i) * self.n + k] = -v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Nonzero entries `(i, j, k, c)` with `i < j`.
    pub fn nonzero(&self) -> Vec<(usize, usize, usize, Rational)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                for k in 0..self.n {
                    let c = self.get(i, j, k);
                    if !c.is_zero() {
                        out.push((i, j, k, c));
                    }
                }
            }
        }
        out
    }

    pub fn is_antisymmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| (0..self.n).all(|k| self.get(i, j, k) == -self.get(j, i, k))))
    }

    /// True when the Jacobi identity holds exactly for the tensor.
    pub fn satisfies_jacobi(&self) -> bool {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = Rational::zero();
                        for m in 0..n {
                            s += self.get(i, j, m) * self.get(m, k, l)
                                + self.get(j, k, m) * self.get(m, i, l)
                                + self.get(k, i, m) * self.get(m, j, l);
                        }
                        if !s.is_zero() {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    pub fn relations(&self) -> Relations {
        let mut r = Relations::zero(self.n);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let combo = (0..self.n).map(|k| (k, self.get(i, j, k))).collect();
                r.set(i, j, combo);
            }
        }
        r
    }

    /// Matrix of `ad_ξ` acting on coefficient vectors.
    pub fn ad(&self, xi: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            if xi[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    let c = self.get(i, j, k);
                    if !c.is_zero() {
                        a[(k, j)] += xi[i] * c.to_f64().unwrap_or(f64::NAN);
                    }
                }
            }
        }
        a
    }
}

/// Basis of the generated algebra with its structure constants.
#[derive(Debug, Clone)]
pub struct LieAlgebraPresentation {
    pub chart: Arc<Chart>,
    pub basis: Vec<VectorField>,
    /// Right-nested bracket word that produced each basis element.
    pub words: Vec<Vec<usize>>,
    pub q: usize,
    pub constants: StructureConstants,
    /// Largest bracket length that contributed a basis element.
    pub depth: usize,
}

impl LieAlgebraPresentation {
    pub fn n(&self) -> usize {
        self.basis.len()
    }

    pub fn m(&self) -> usize {
        self.chart.dim()
    }

    pub fn names(&self) -> Vec<String> {
        (1..=self.n()).map(|i| format!("X{i}")).collect()
    }

    pub fn compiled(&self) -> Result<Vec<crate::fields::CompiledField>, FieldError> {
        self.basis.iter().map(VectorField::compile).collect()
    }

    /// Symbolic check that every recorded bracket relation holds exactly.
    pub fn certify(&self) -> Result<bool, FieldError> {
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let b = self.basis[i].bracket(&self.basis[j])?;
                let terms: Vec<_> = (0..self.n()).map(|k| (self.constants.get(i, j, k), &self.basis[k])).collect();
                let combo = VectorField::combination(self.chart.clone(), &terms)?;
                if !b.sub(&combo)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone)]
pub struct ClosureOptions {
    pub max_depth: usize,
    /// Explicit sample points; drawn from `sample_box` when absent.
    pub sample_points: Option<Vec<Vec<f64>>>,
    pub sample_box: Vec<(f64, f64)>,
    pub seed: u64,
}

impl ClosureOptions {
    pub fn for_box(sample_box: Vec<(f64, f64)>) -> Self {
        ClosureOptions { max_depth: 6, sample_points: None, sample_box, seed: 7 }
    }
}

struct Sampler {
    points: Vec<Vec<f64>>,
    explicit: bool,
    rng: ChaCha8Rng,
    bounds: Vec<(f64, f64)>,
}

impl Sampler {
    fn draw(&mut self, count: usize) {
        for _ in 0..count {
            let p = self.bounds.iter().map(|(a, b)| self.rng.gen_range(*a..=*b)).collect();
            self.points.push(p);
        }
    }
}

/// Column of a field evaluated at all sample points.
fn column(v: &CompiledFieldRef, points: &[Vec<f64>]) -> Result<Vec<f64>, EvalError> {
    let mut out = Vec::with_capacity(points.len() * v.len());
    for p in points {
        for c in v {
            out.push(c.eval(p)?);
        }
    }
    Ok(out)
}

type CompiledFieldRef = Vec<CompiledExpr>;

fn compile_field(v: &VectorField) -> Result<CompiledFieldRef, EvalError> {
    let names = v.chart().names();
    v.coeffs().iter().map(|c| c.compile(&names)).collect()
}

/// Best rational approximation with bounded denominator.
pub fn rationalize(v: f64, max_den: i128, tol: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - v).abs() <= tol * v.abs().max(1.0) {
            return Some(Rational::new(h1, k1));
        }
        let frac = x - a;
        if frac.abs() < 1e-300 {
            break;
        }
        x = 1.0 / frac;
    }
    (k1 != 0 && (h1 as f64 / k1 as f64 - v).abs() <= tol * v.abs().max(1.0)).then(|| Rational::new(h1, k1))
}

struct Builder<'a> {
    chart: Arc<Chart>,
    basis: Vec<VectorField>,
    cols: Vec<Vec<f64>>,
    compiled: Vec<CompiledFieldRef>,
    sampler: &'a mut Sampler,
}

enum Membership {
    In(Vec<Rational>),
    Out,
}

impl Builder<'_> {
    fn matrix(&self) -> DMatrix<f64> {
        let rows = self.cols.first().map_or(0, Vec::len);
        DMatrix::from_fn(rows, self.cols.len(), |r, c| self.cols[c][r])
    }

    /// Rebuilds all columns after the sample set changed.
    fn refresh(&mut self) -> Result<(), EvalError> {
        self.cols = self.compiled.iter().map(|c| column(c, &self.sampler.points)).collect::<Result<_, _>>()?;
        Ok(())
    }

    fn ensure_samples(&mut self) -> Result<(), ClosureError> {
        let need = 4 * (self.basis.len() + 1);
        if self.sampler.points.len() < need {
            if self.sampler.explicit {
                if self.sampler.points.len() < 2 * (self.basis.len() + 1) {
                    return Err(ClosureError::DegenerateSamples);
                }
            } else {
                let extra = need - self.sampler.points.len();
                self.sampler.draw(extra);
                self.refresh()?;
            }
        }
        Ok(())
    }

    fn check_conditioning(&mut self) -> Result<(), ClosureError> {
        for _attempt in 0..4 {
            if self.cols.is_empty() {
                return Ok(());
            }
            let sv = self.matrix().singular_values();
            let max = sv.max();
            let min = sv.min();
            if max > 0.0 && min > RANK_TOL * max {
                return Ok(());
            }
            if self.sampler.explicit {
                return Err(ClosureError::DegenerateSamples);
            }
            let extra = self.sampler.points.len();
            self.sampler.draw(extra);
            self.refresh()?;
        }
        Err(ClosureError::DegenerateSamples)
    }

    fn membership(&mut self, v: &VectorField) -> Result<Membership, ClosureError> {
        if self.basis.is_empty() {
            return Ok(if v.is_zero() { Membership::In(Vec::new()) } else { Membership::Out });
        }
        self.ensure_samples()?;
        let compiled = compile_field(v)?;
        let y = DVector::from_vec(column(&compiled, &self.sampler.points)?);
        let a = self.matrix();
        let svd = a.clone().svd(true, true);
        let c = svd.solve(&y, RANK_TOL * svd.singular_values.max()).expect("svd with vectors");
        let resid = (&a * &c - &y).norm() / y.norm().max(1.0);
        if resid >= MEMBERSHIP_TOL {
            return Ok(Membership::Out);
        }
        let mut q = Vec::with_capacity(c.len());
        for v in c.iter() {
            match rationalize(*v, 1_000_000, 1e-9) {
                Some(r) => q.push(r),
                None => return Ok(Membership::Out),
            }
        }
        let terms: Vec<_> = q.iter().zip(&self.basis).map(|(c, b)| (*c, b)).collect();
        let combo = VectorField::combination(self.chart.clone(), &terms)?;
        if v.sub(&combo)?.is_zero() {
            Ok(Membership::In(q))
        } else {
            Ok(Membership::Out)
        }
    }

    fn push(&mut self, v: VectorField) -> Result<(), ClosureError> {
        let compiled = compile_field(&v)?;
        self.cols.push(column(&compiled, &self.sampler.points)?);
        self.compiled.push(compiled);
        self.basis.push(v);
        self.check_conditioning()
    }
}

/// Closes `generators` under brackets up to `max_depth`.
pub fn lie_closure(generators: &[VectorField], opts: &ClosureOptions) -> Result<LieAlgebraPresentation, ClosureError> {
    let Some(first) = generators.first() else {
        return Err(ClosureError::Empty);
    };
    let chart = first.chart().clone();
    for g in generators {
        if g.chart().coords != chart.coords {
            return Err(FieldError::ChartMismatch(chart.name.clone(), g.chart().name.clone()).into());
        }
    }
    let bounds = if opts.sample_box.len() == chart.dim() {
        opts.sample_box.clone()
    } else {
        vec![(-2.0, 2.0); chart.dim()]
    };
    let mut sampler = Sampler {
        points: opts.sample_points.clone().unwrap_or_default(),
        explicit: opts.sample_points.is_some(),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        bounds,
    };
    if !sampler.explicit {
        sampler.draw(4 * (generators.len() + 2));
    }
    let mut b = Builder { chart: chart.clone(), basis: Vec::new(), cols: Vec::new(), compiled: Vec::new(), sampler: &mut sampler };
    let mut words: Vec<Vec<usize>> = Vec::new();
    for (i, g) in generators.iter().enumerate() {
        if g.is_zero() {
            return Err(ClosureError::DependentGenerators(i));
        }
        if let Membership::In(_) = b.membership(g)? {
            return Err(ClosureError::DependentGenerators(i));
        }
        b.push(g.clone())?;
        words.push(vec![i]);
    }
    let q = generators.len();
    let mut frontier: Vec<usize> = (0..q).collect();
    let mut depth = 1;
    for level in 2..=opts.max_depth + 1 {
        let mut candidates: Vec<(Vec<usize>, usize, usize)> = Vec::new();
        for &f in &frontier {
            for g in 0..q {
                let mut w = vec![g];
                w.extend_from_slice(&words[f]);
                candidates.push((w, g, f));
            }
        }
        candidates.sort();
        let mut next = Vec::new();
        for (w, g, f) in candidates {
            let v = b.basis[g].bracket(&b.basis[f])?;
            if v.is_zero() {
                continue;
            }
            if let Membership::Out = b.membership(&v)? {
                if level > opts.max_depth {
                    return Err(ClosureError::NotStabilized { depth: opts.max_depth, dim: b.basis.len() + 1 });
                }
                b.push(v)?;
                words.push(w);
                next.push(b.basis.len() - 1);
                depth = level;
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let n = b.basis.len();
    let mut constants = StructureConstants::zero(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = b.basis[i].bracket(&b.basis[j])?;
            match b.membership(&v)? {
                Membership::In(c) => {
                    for (k, ck) in c.into_iter().enumerate() {
                        if !ck.is_zero() {
                            constants.set(i, j, k, ck);
                        }
                    }
                }
                Membership::Out => return Err(ClosureError::NotCertified { i: i + 1, j: j + 1 }),
            }
        }
    }
    Ok(LieAlgebraPresentation { chart, basis: b.basis, words, q, constants, depth })
}

/// Rank of `𝒳(x) = (X_1(x)|…|X_n(x))` at one point.
#[derive(Debug, Clone, Serialize)]
pub struct RankEntry {
    pub point: Vec<f64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankReport {
    pub entries: Vec<RankEntry>,
    pub min_rank: usize,
    pub hormander_ok: bool,
}

pub fn frame_matrix(fields: &[VectorField], x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
    let m = x.len();
    let mut a = DMatrix::zeros(m, fields.len());
    for (j, f) in fields.iter().enumerate() {
        let v = f.eval(x)?;
        for i in 0..m {
            a[(i, j)] = v[i];
        }
    }
    Ok(a)
}

pub fn numeric_rank(a: &DMatrix<f64>) -> (usize, Vec<f64>) {
    if a.is_empty() {
        return (0, Vec::new());
    }
    let sv = a.singular_values();
    let max = sv.max();
    let rank = sv.iter().filter(|s| **s > RANK_TOL * max && **s > 0.0).count();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    (rank, v)
}

pub fn hormander_rank(p: &LieAlgebraPresentation, x: &[f64]) -> Result<RankEntry, FieldError> {
    rank_of_fields(&p.basis, x)
}

pub fn rank_of_fields(fields: &[VectorField], x: &[f64]) -> Result<RankEntry, FieldError> {
    let (rank, singular_values) = numeric_rank(&frame_matrix(fields, x)?);
    Ok(RankEntry { point: x.to_vec(), rank, singular_values })
}

pub fn rank_report(fields: &[VectorField], points: &[Vec<f64>]) -> Result<RankReport, FieldError> {
    let m = fields.first().map_or(0, |f| f.chart().dim());
    let entries = points.iter().map(|x| rank_of_fields(fields, x)).collect::<Result<Vec<_>, _>>()?;
    let min_rank = entries.iter().map(|e| e.rank).min().unwrap_or(0);
    Ok(RankReport { hormander_ok: min_rank == m && !entries.is_empty(), entries, min_rank })
}

#[derive(Debug, Clone, Serialize)]
pub struct NilpotencyReport {
    pub nilpotent: bool,
    pub step: Option<usize>,
    pub lower_central_dims: Vec<usize>,
    pub solvable: bool,
    pub derived_dims: Vec<usize>,
}

/// Span of `[a, b]` over the given bases, as an orthonormal column set.
fn bracket_span(c: &StructureConstants, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.dim();
    let mut cols = Vec::new();
    for i in 0..a.ncols() {
        let ai: Vec<f64> = a.column(i).iter().copied().collect();
        let ad = c.ad(&ai);
        for j in 0..b.ncols() {
            cols.push(&ad * b.column(j));
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    let m = DMatrix::from_columns(&cols);
    let svd = m.svd(true, false);
    let max = svd.singular_values.max();
    let u = svd.u.expect("u requested");
    let keep: Vec<_> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > RANK_TOL * max.max(1.0))
        .map(|k| u.column(k).into_owned())
        .collect();
    if keep.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&keep)
    }
}

pub fn is_nilpotent(c: &StructureConstants) -> NilpotencyReport {
    let n = c.dim();
    let full = DMatrix::<f64>::identity(n, n);
    let mut lower = vec![n];
    let mut cur = full.clone();
    while cur.ncols() > 0 {
        let next = bracket_span(c, &full, &cur);
        if next.ncols() == cur.ncols() {
            break;
        }
        lower.push(next.ncols());
        cur = next;
    }
    let nilpotent = *lower.last().expect("non-empty") == 0;
    let mut derived = vec![n];
    let mut cur = full;
    while cur.ncols() > 0 {
        let next = bracket_span(c, &cur, &cur);
        if next.ncols() == cur.ncols() {
            break;
        }
        derived.push(next.ncols());
        cur = next;
    }
    let solvable = *derived.last().expect("non-empty") == 0;
    NilpotencyReport {
        step: nilpotent.then(|| (lower.len() - 1).max(if n == 0 { 0 } else { 1 })),
        nilpotent,
        lower_central_dims: lower,
        solvable,
        derived_dims: derived,
    }
}

/// Maximum of `|residual|` when each field of `a` is expressed in span `b` by least squares.
pub fn span_residual(a: &[VectorField], b: &[VectorField], points: &[Vec<f64>]) -> Result<f64, ClosureError> {
    let cb: Vec<_> = b.iter().map(compile_field).collect::<Result<_, _>>()?;
    let cols: Vec<Vec<f64>> = cb.iter().map(|c| column(c, points)).collect::<Result<_, _>>()?;
    let rows = cols.first().map_or(0, Vec::len);
    let mat = DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]);
    let svd = mat.clone().svd(true, true);
    let mut worst: f64 = 0.0;
    for v in a {
        let y = DVector::from_vec(column(&compile_field(v)?, points)?);
        let c = svd.solve(&y, RANK_TOL * svd.singular_values.max()).expect("svd");
        worst = worst.max((&mat * &c - &y).norm() / y.norm().max(1.0));
    }
    Ok(worst)
}

/// Coefficients of `target` in `basis`, certified symbolically.
pub fn express_in_basis(target: &VectorField, basis: &[VectorField], points: &[Vec<f64>]) -> Result<Option<Vec<Rational>>, ClosureError> {
    let mut sampler = Sampler { points: points.to_vec(), explicit: true, rng: ChaCha8Rng::seed_from_u64(0), bounds: Vec::new() };
    let mut b = Builder { chart: target.chart().clone(), basis: Vec::new(), cols: Vec::new(), compiled: Vec::new(), sampler: &mut sampler };
    for v in basis {
        let compiled = compile_field(v)?;
        b.cols.push(column(&compiled, &b.sampler.points)?);
        b.compiled.push(compiled);
        b.basis.push(v.clone());
    }
    Ok(match b.membership(target)? {
        Membership::In(c) => Some(c),
        Membership::Out => None,
    })
}

pub fn rational_sign(q: &Rational) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn fields(coords: &[&str], specs: &[&[&str]]) -> Vec<VectorField> {
        let chart = Chart::new("M", coords);
        specs.iter().map(|s| VectorField::parse(chart.clone(), s).unwrap()).collect()
    }

    fn opts(m: usize) -> ClosureOptions {
        ClosureOptions::for_box(vec![(-2.0, 2.0); m])
    }

    #[test]
    fn grushin_closure() {
        let g = fields(&["x1", "x2"], &[&["1", "0"], &["0", "x1"]]);
        let p = lie_closure(&g, &opts(2)).unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(p.depth, 2);
        assert_eq!(p.basis[2], VectorField::parse(p.chart.clone(), &["0", "1"]).unwrap());
        assert_eq!(p.constants.nonzero(), vec![(0, 1, 2, Rational::one())]);
        assert!(p.constants.is_antisymmetric());
        assert!(p.constants.satisfies_jacobi());
        assert!(p.certify().unwrap());
        let nil = is_nilpotent(&p.constants);
        assert!(nil.nilpotent);
        assert_eq!(nil.step, Some(2));
        assert_eq!(hormander_rank(&p, &[0.0, 0.0]).unwrap().rank, 2);
    }

    #[test]
    fn sin_closure() {
        let g = fields(&["x1", "x2"], &[&["1", "0"], &["0", "sin(x1)"]]);
        let p = lie_closure(&g, &opts(2)).unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(p.depth, 2);
        let nz = p.constants.nonzero();
        assert_eq!(nz, vec![(0, 1, 2, Rational::one()), (0, 2, 1, -Rational::one())]);
        assert!(!is_nilpotent(&p.constants).nilpotent);
        assert!(is_nilpotent(&p.constants).solvable);
        assert_eq!(hormander_rank(&p, &[std::f64::consts::PI, 5.0]).unwrap().rank, 2);
    }

    #[test]
    fn abelian_closures() {
        let g = fields(&["x1"], &[&["1"]]);
        let p = lie_closure(&g, &opts(1)).unwrap();
        assert_eq!(p.n(), 1);
        assert!(p.constants.is_zero());
        let g = fields(&["x1", "x2"], &[&["1", "0"], &["0", "1"]]);
        let p = lie_closure(&g, &opts(2)).unwrap();
        assert_eq!(p.n(), 2);
        assert!(p.constants.is_zero());
        let nil = is_nilpotent(&p.constants);
        assert_eq!(nil.step, Some(1));
    }

    #[test]
    fn single_field_fails_hormander() {
        let g = fields(&["x1", "x2"], &[&["1", "0"]]);
        let p = lie_closure(&g, &opts(2)).unwrap();
        let r = rank_report(&p.basis, &[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(r.min_rank, 1);
        assert!(!r.hormander_ok);
    }

    #[test]
    fn infinite_dimensional_is_reported() {
        // brackets of d/dx1 with exp(x1^2) d/dx2 keep producing new polynomial prefactors
        let g = fields(&["x1", "x2"], &[&["1", "0"], &["0", "exp(x1^2)"]]);
        let o = ClosureOptions { max_depth: 4, ..opts(2) };
        match lie_closure(&g, &o) {
            Err(ClosureError::NotStabilized { depth, .. }) => assert_eq!(depth, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_explicit_samples() {
        let g = fields(&["x1", "x2"], &[&["1", "0"], &["0", "x1"]]);
        let o = ClosureOptions { sample_points: Some(vec![vec![0.0, 0.0]; 16]), ..opts(2) };
        assert!(matches!(lie_closure(&g, &o), Err(ClosureError::DegenerateSamples)));
    }

    #[test]
    fn dependent_generators() {
        let g = fields(&["x1", "x2"], &[&["1", "0"], &["2", "0"]]);
        assert!(matches!(lie_closure(&g, &opts(2)), Err(ClosureError::DependentGenerators(1))));
    }

    #[test]
    fn permuted_samples_span_same_space() {
        let g = fields(&["x1", "x2"], &[&["1", "0"], &["0", "sin(x1)"]]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..24).map(|_| vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]).collect();
        let mut rev = pts.clone();
        rev.reverse();
        let a = lie_closure(&g, &ClosureOptions { sample_points: Some(pts.clone()), ..opts(2) }).unwrap();
        let b = lie_closure(&g, &ClosureOptions { sample_points: Some(rev), ..opts(2) }).unwrap();
        assert!(span_residual(&a.basis, &b.basis, &pts).unwrap() < 1e-9);
        assert!(span_residual(&b.basis, &a.basis, &pts).unwrap() < 1e-9);
    }

    #[test]
    fn rationalize_basics() {
        assert_eq!(rationalize(0.5, 1000, 1e-12), Some(Rational::new(1, 2)));
        assert_eq!(rationalize(-2.0, 1000, 1e-12), Some(Rational::from_integer(-2)));
        assert_eq!(rationalize(1.0 / 3.0 + 1e-13, 1000, 1e-9), Some(Rational::new(1, 3)));
        assert_eq!(rationalize(std::f64::consts::PI, 100, 1e-12), None);
    }
}
