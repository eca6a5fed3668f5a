//! Property harness for a computed fundamental solution: the distributional
//! identity, harmonicity off the pole and local integrability.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{CompiledExpr, EvalError, Expr};
use crate::fields::CoordOperator;
use crate::kernels::log_log_slope;
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("bump functions support operators of order at most 2, got {0}")]
    Order(u32),
    #[error("Γ evaluation failed at y = {y:?}: {message}")]
    Gamma { y: Vec<f64>, message: String },
    #[error("quadrature budget of {budget} evaluations exceeded ({used})")]
    Budget { budget: usize, used: usize },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

/// Coordinate operator with compiled coefficients.
#[derive(Debug, Clone)]
pub struct CompiledOperator {
    dim: usize,
    terms: Vec<(Vec<u32>, CompiledExpr)>,
}

impl CompiledOperator {
    pub fn new(op: &CoordOperator) -> Result<Self, EvalError> {
        Ok(CompiledOperator { dim: op.chart().dim(), terms: op.compile()? })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.terms.iter().map(|(b, _)| b.iter().sum()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> &[(Vec<u32>, CompiledExpr)] {
        &self.terms
    }
}

/// `φ(y) = a·(1 − |A(y − c)|²)^k` on its support, `0` outside.
#[derive(Debug, Clone, Serialize)]
pub struct BumpFunction {
    pub center: Vec<f64>,
    /// `A^T A`.
    #[serde(skip)]
    q: DMatrix<f64>,
    pub radius: f64,
    pub k: u32,
    pub amplitude: f64,
}

impl BumpFunction {
    /// Round bump of the given radius.
    pub fn new(center: Vec<f64>, radius: f64, k: u32) -> Self {
        let d = center.len();
        let q = DMatrix::identity(d, d) / (radius * radius);
        BumpFunction { center, q, radius, k, amplitude: 1.0 }
    }

    pub fn with_matrix(center: Vec<f64>, a: &DMatrix<f64>, k: u32) -> Self {
        let q = a.transpose() * a;
        let radius = 1.0 / q.symmetric_eigenvalues().min().sqrt();
        BumpFunction { center, q, radius, k, amplitude: 1.0 }
    }

    pub fn scaled(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    fn offset(&self, y: &[f64]) -> DVector<f64> {
        DVector::from_iterator(y.len(), y.iter().zip(&self.center).map(|(a, b)| a - b))
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let d = self.offset(y);
        let u = 1.0 - d.dot(&(&self.q * &d));
        if u <= 0.0 {
            0.0
        } else {
            self.amplitude * u.powi(self.k as i32)
        }
    }

    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let inv = self.q.clone().try_inverse().expect("positive definite");
        self.center.iter().enumerate().map(|(i, c)| (c - inv[(i, i)].sqrt(), c + inv[(i, i)].sqrt())).collect()
    }

    /// `(φ, ∇φ, ∇²φ)` at `y`.
    pub fn jet(&self, y: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = y.len();
        let d = self.offset(y);
        let qd = &self.q * &d;
        let u = 1.0 - d.dot(&qd);
        if u <= 0.0 {
            return (0.0, DVector::zeros(n), DMatrix::zeros(n, n));
        }
        let k = self.k as i32;
        let kf = k as f64;
        let du = qd * -2.0;
        let ddu = &self.q * -2.0;
        let a = self.amplitude;
        let g = &du * (a * kf * u.powi(k - 1));
        let h = (&du * du.transpose()) * (a * kf * (kf - 1.0) * u.powi(k - 2)) + ddu * (a * kf * u.powi(k - 1));
        (a * u.powi(k), g, h)
    }

    /// `(Lφ)(y)` for an operator of order at most two.
    pub fn apply(&self, op: &CompiledOperator, y: &[f64]) -> Result<f64, VerifyError> {
        if op.order() > 2 {
            return Err(VerifyError::Order(op.order()));
        }
        let (f, g, h) = self.jet(y);
        if f == 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for (beta, c) in &op.terms {
            let idx: Vec<usize> = beta.iter().enumerate().flat_map(|(i, k)| std::iter::repeat_n(i, *k as usize)).collect();
            let d = match idx.as_slice() {
                [] => f,
                [i] => g[*i],
                [i, j] => h[(*i, *j)],
                _ => unreachable!(),
            };
            acc += c.eval(y)? * d;
        }
        Ok(acc)
    }

    /// The bump as an expression, valid on its support.
    pub fn to_expr(&self, names: &[&str]) -> Expr {
        let n = names.len();
        let d: Vec<Expr> = (0..n).map(|i| Expr::sym(names[i]) - Expr::float(self.center[i])).collect();
        let mut q = Expr::zero();
        for i in 0..n {
            for j in 0..n {
                if self.q[(i, j)] != 0.0 {
                    q = q + Expr::float(self.q[(i, j)]) * &d[i] * &d[j];
                }
            }
        }
        Expr::float(self.amplitude) * (Expr::one() - q).pow(self.k as i64)
    }

    /// Parameter range `r ≥ 0` with `x + rω` inside the support.
    pub fn ray_interval(&self, x: &[f64], omega: &[f64]) -> Option<(f64, f64)> {
        let d = self.offset(x);
        let w = DVector::from_column_slice(omega);
        let qw = &self.q * &w;
        let a = w.dot(&qw);
        let b = d.dot(&qw);
        let c = d.dot(&(&self.q * &d)) - 1.0;
        let disc = b * b - a * c;
        if disc <= 0.0 {
            return None;
        }
        let s = disc.sqrt();
        let (r0, r1) = ((-b - s) / a, (-b + s) / a);
        if r1 <= 0.0 {
            return None;
        }
        Some((r0.max(0.0), r1))
    }
}

/// `Lf(y)` by fourth-order central differences; mixed terms use products of first-derivative stencils.
pub fn fd_apply<E: From<EvalError>>(
    op: &CompiledOperator,
    f: &mut dyn FnMut(&[f64]) -> Result<f64, E>,
    y: &[f64],
    h: f64,
) -> Result<f64, E> {
    const D1: [(i32, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
    const D2: [(i32, f64); 5] = [(-2, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];
    let mut cache: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
    let n = y.len();
    let mut value = |off: Vec<i32>, cache: &mut BTreeMap<Vec<i32>, f64>| -> Result<f64, E> {
        if let Some(v) = cache.get(&off) {
            return Ok(*v);
        }
        let p: Vec<f64> = y.iter().zip(&off).map(|(a, o)| a + *o as f64 * h).collect();
        let v = f(&p)?;
        cache.insert(off, v);
        Ok(v)
    };
    let mut acc = 0.0;
    for (beta, c) in &op.terms {
        let coeff = c.eval(y)?;
        if coeff == 0.0 {
            continue;
        }
        let idx: Vec<usize> = beta.iter().enumerate().flat_map(|(i, k)| std::iter::repeat_n(i, *k as usize)).collect();
        let d = match idx.as_slice() {
            [] => value(vec![0; n], &mut cache)?,
            [i] => {
                let mut s = 0.0;
                for (o, w) in D1 {
                    let mut off = vec![0; n];
                    off[*i] = o;
                    s += w * value(off, &mut cache)?;
                }
                s / (12.0 * h)
            }
            [i, j] if i == j => {
                let mut s = 0.0;
                for (o, w) in D2 {
                    let mut off = vec![0; n];
                    off[*i] = o;
                    s += w * value(off, &mut cache)?;
                }
                s / (12.0 * h * h)
            }
            [i, j] => {
                let mut s = 0.0;
                for (oi, wi) in D1 {
                    for (oj, wj) in D1 {
                        let mut off = vec![0; n];
                        off[*i] = oi;
                        off[*j] = oj;
                        s += wi * wj * value(off, &mut cache)?;
                    }
                }
                s / (144.0 * h * h)
            }
            _ => return Err(E::from(EvalError::Domain { message: "finite differences of order > 2", subexpr: format!("{beta:?}") })),
        };
        acc += coeff * d;
    }
    Ok(acc)
}

/// A downstairs kernel `Γ(x; y)`.
pub trait GammaEval: Sync {
    fn gamma(&self, x: &[f64], y: &[f64]) -> Result<f64, VerifyError>;
}

impl<F> GammaEval for F
where
    F: Fn(&[f64], &[f64]) -> Result<f64, VerifyError> + Sync,
{
    fn gamma(&self, x: &[f64], y: &[f64]) -> Result<f64, VerifyError> {
        self(x, y)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadSpec {
    pub abs_tol: f64,
    /// Maximum number of integrand evaluations.
    pub budget: usize,
    /// Angular panels integrated in parallel.
    pub panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { abs_tol: 2e-4, budget: 200_000, panels: 8 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

/// `∫ f` over the support of `bump`, in polar coordinates around `pole` when the
/// base is two-dimensional, by nested panels cut at the pole otherwise.
pub fn support_integral<F>(f: &F, pole: &[f64], bump: &BumpFunction, spec: &QuadSpec) -> Result<Integral, VerifyError>
where
    F: Fn(&[f64]) -> Result<f64, VerifyError> + Sync,
{
    let count = AtomicUsize::new(0);
    let cap = 4 * spec.budget;
    let guarded = |y: &[f64]| -> Result<f64, VerifyError> {
        if count.fetch_add(1, Ordering::Relaxed) > cap {
            return Ok(f64::NAN);
        }
        f(y)
    };
    let result = if pole.len() == 2 {
        polar_integral(&guarded, pole, bump, spec)?
    } else {
        box_integral(&guarded, pole, bump, spec)?
    };
    let used = count.load(Ordering::Relaxed);
    if used > spec.budget {
        return Err(VerifyError::Budget { budget: spec.budget, used });
    }
    if !result.0.is_finite() {
        return Err(VerifyError::Quadrature("non-finite integral".into()));
    }
    Ok(Integral { value: result.0, error: result.1, evals: used })
}

fn polar_integral<F>(f: &F, x: &[f64], bump: &BumpFunction, spec: &QuadSpec) -> Result<(f64, f64), VerifyError>
where
    F: Fn(&[f64]) -> Result<f64, VerifyError> + Sync,
{
    let panels = spec.panels.max(1);
    let width = 2.0 * PI / panels as f64;
    let outer_tol = spec.abs_tol / panels as f64;
    let inner_tol = spec.abs_tol / (20.0 * PI);
    let parts: Vec<Result<(f64, f64), VerifyError>> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let err: RefCell<Option<VerifyError>> = RefCell::new(None);
            let r = integrate(
                |th| {
                    let omega = [th.cos(), th.sin()];
                    let Some((r0, r1)) = bump.ray_interval(x, &omega) else { return 0.0 };
                    let inner = integrate(
                        |r| {
                            let y = [x[0] + r * omega[0], x[1] + r * omega[1]];
                            match f(&y) {
                                Ok(v) => v * r,
                                Err(e) => {
                                    err.borrow_mut().get_or_insert(e);
                                    0.0
                                }
                            }
                        },
                        r0,
                        r1,
                        &QuadOptions { abs_tol: inner_tol, rel_tol: 1e-10, max_panels: 200 },
                    );
                    inner.value
                },
                p as f64 * width,
                (p + 1) as f64 * width,
                &QuadOptions { abs_tol: outer_tol, rel_tol: 1e-10, max_panels: 200 },
            );
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            Ok((r.value, r.error))
        })
        .collect();
    let mut value = 0.0;
    let mut error = 0.0;
    for part in parts {
        let (v, e) = part?;
        value += v;
        error += e;
    }
    Ok((value, error))
}

fn box_integral<F>(f: &F, pole: &[f64], bump: &BumpFunction, spec: &QuadSpec) -> Result<(f64, f64), VerifyError>
where
    F: Fn(&[f64]) -> Result<f64, VerifyError> + Sync,
{
    let bounds = bump.bounding_box();
    let err: RefCell<Option<VerifyError>> = RefCell::new(None);
    fn level<G: FnMut(&[f64]) -> f64>(g: &mut G, bounds: &[(f64, f64)], pole: &[f64], prefix: &mut Vec<f64>, tol: f64) -> (f64, f64) {
        let d = prefix.len();
        if d == bounds.len() {
            return (g(prefix), 0.0);
        }
        let r = integrate_with_breaks(
            |t| {
                prefix.push(t);
                let (v, _) = level(g, bounds, pole, prefix, tol);
                prefix.pop();
                v
            },
            bounds[d].0,
            bounds[d].1,
            &[pole[d]],
            &QuadOptions { abs_tol: tol, rel_tol: 1e-10, max_panels: 100 },
        );
        (r.value, r.error)
    }
    let mut g = |y: &[f64]| match f(y) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let out = level(&mut g, &bounds, pole, &mut Vec::new(), spec.abs_tol);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResult {
    pub x: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub integral: f64,
    pub phi_x: f64,
    pub residual: f64,
    pub error: f64,
    pub evals: usize,
}

/// `|∫ Γ(x;y) 𝓛*φ(y) dy + φ(x)| / max(1, |φ(x)|)`; `adjoint` is `𝓛*` on the base chart.
pub fn fundamental_identity_residual(
    gamma: &dyn GammaEval,
    adjoint: &CompiledOperator,
    bump: &BumpFunction,
    x: &[f64],
    spec: &QuadSpec,
) -> Result<IdentityResult, VerifyError> {
    let phi_x = bump.eval(x);
    let mk = |integral: f64, error: f64, evals: usize| IdentityResult {
        x: x.to_vec(),
        center: bump.center.clone(),
        radius: bump.radius,
        integral,
        phi_x,
        residual: (integral + phi_x).abs() / phi_x.abs().max(1.0),
        error,
        evals,
    };
    if bump.amplitude == 0.0 {
        return Ok(mk(0.0, 0.0, 0));
    }
    let f = |y: &[f64]| -> Result<f64, VerifyError> {
        let lphi = bump.apply(adjoint, y)?;
        if lphi == 0.0 {
            return Ok(0.0);
        }
        Ok(gamma.gamma(x, y)? * lphi)
    };
    let r = support_integral(&f, x, bump, spec)?;
    Ok(mk(r.value, r.error, r.evals))
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicityProbe {
    pub y: Vec<f64>,
    pub gamma: f64,
    pub coarse: f64,
    pub fine: f64,
    pub richardson: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicityReport {
    pub step: f64,
    pub probes: Vec<HarmonicityProbe>,
    pub max_relative: f64,
    /// Probes where halving the step reduced `|LΓ|`.
    pub halving_reduced: usize,
}

/// `L` applied to `Γ(x;·)` at the probes, with Richardson extrapolation of the
/// `h` and `h/2` stencils.
pub fn harmonicity_residual(gamma: &dyn GammaEval, op: &CompiledOperator, x: &[f64], probes: &[Vec<f64>], h: f64) -> Result<HarmonicityReport, VerifyError> {
    let rows: Vec<Result<HarmonicityProbe, VerifyError>> = probes
        .par_iter()
        .map(|y| {
            let g = gamma.gamma(x, y)?;
            let mut f = |p: &[f64]| gamma.gamma(x, p);
            let coarse = fd_apply(op, &mut f, y, h)?;
            let fine = fd_apply(op, &mut f, y, h / 2.0)?;
            let richardson = (16.0 * fine - coarse) / 15.0;
            Ok(HarmonicityProbe { y: y.clone(), gamma: g, coarse, fine, richardson, relative: richardson.abs() / g.abs() })
        })
        .collect();
    let probes = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max_relative = probes.iter().map(|p| p.relative).fold(0.0, f64::max);
    let halving_reduced = probes.iter().filter(|p| p.fine.abs() <= p.coarse.abs()).count();
    Ok(HarmonicityReport { step: h, probes, max_relative, halving_reduced })
}

/// `count` points on the circle of radius `r` around `x`.
pub fn ring(x: &[f64], r: f64, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
            vec![x[0] + r * t.cos(), x[1] + r * t.sin()]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub sigma: f64,
    pub r_squared: f64,
    pub power_law: bool,
    /// `σ > −m`.
    pub integrable: bool,
    /// `∫ Γ` over the annuli between consecutive radii (two-dimensional bases).
    pub annuli: Vec<f64>,
    pub max_ratio: f64,
    pub series_converges: bool,
}

/// Fits `Γ(x; x + rω) ~ r^σ` over decreasing radii.
pub fn local_integrability_probe(gamma: &dyn GammaEval, x: &[f64], direction: &[f64], radii: &[f64]) -> Result<IntegrabilityReport, VerifyError> {
    let m = x.len();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    let values = radii
        .iter()
        .map(|r| {
            let y: Vec<f64> = x.iter().zip(direction).map(|(a, d)| a + r * d / norm).collect();
            gamma.gamma(x, &y)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (sigma, r_squared) = log_log_slope(radii, &values);
    let mut annuli = Vec::new();
    if m == 2 {
        for w in radii.windows(2) {
            let (hi, lo) = (w[0].max(w[1]), w[0].min(w[1]));
            let err: RefCell<Option<VerifyError>> = RefCell::new(None);
            let v = integrate(
                |th| {
                    integrate(
                        |r| match gamma.gamma(x, &[x[0] + r * th.cos(), x[1] + r * th.sin()]) {
                            Ok(g) => g * r,
                            Err(e) => {
                                err.borrow_mut().get_or_insert(e);
                                0.0
                            }
                        },
                        lo,
                        hi,
                        &QuadOptions::new(1e-12, 1e-6),
                    )
                    .value
                },
                0.0,
                2.0 * PI,
                &QuadOptions { abs_tol: 1e-12, rel_tol: 1e-5, max_panels: 200 },
            );
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            annuli.push(v.value);
        }
    }
    let ratios: Vec<f64> = annuli.windows(2).map(|w| w[1] / w[0]).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(IntegrabilityReport {
        radii: radii.to_vec(),
        values,
        sigma,
        r_squared,
        power_law: r_squared > 0.99,
        integrable: sigma > -(m as f64),
        series_converges: !ratios.is_empty() && max_ratio < 1.0,
        annuli,
        max_ratio,
    })
}

/// `|λ^{-σ}Γ(x; δ_λ y) − Γ(x; y)| / Γ(x; y)` for anisotropic dilations with the given weights.
pub fn dilation_deviation(gamma: &dyn GammaEval, x: &[f64], y: &[f64], weights: &[f64], sigma: f64, lambdas: &[f64]) -> Result<Vec<(f64, f64)>, VerifyError> {
    let g0 = gamma.gamma(x, y)?;
    lambdas
        .iter()
        .map(|l| {
            let yl: Vec<f64> = y.iter().zip(weights).map(|(v, w)| v * l.powf(*w)).collect();
            let g = gamma.gamma(x, &yl)?;
            Ok((*l, (g * l.powf(-sigma) - g0).abs() / g0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Chart;

    fn laplacian() -> CompiledOperator {
        let chart = Chart::new("R2", &["y1", "y2"]);
        let op = CoordOperator::term(chart.clone(), vec![2, 0], Expr::one()).add(&CoordOperator::term(chart, vec![0, 2], Expr::one()));
        CompiledOperator::new(&op).unwrap()
    }

    #[test]
    fn bump_jet_matches_symbolic() {
        let chart = Chart::new("R2", &["y1", "y2"]);
        let y1 = Expr::sym("y1");
        let op = CoordOperator::term(chart.clone(), vec![2, 0], Expr::one())
            .add(&CoordOperator::term(chart.clone(), vec![0, 2], &y1 * &y1))
            .add(&CoordOperator::term(chart.clone(), vec![1, 1], Expr::int(3)))
            .add(&CoordOperator::term(chart.clone(), vec![0, 1], y1.clone()));
        let b = BumpFunction::new(vec![0.2, -0.1], 0.9, 6).scaled(1.5);
        let sym = op.apply(&b.to_expr(&["y1", "y2"]));
        let c = CompiledOperator::new(&op).unwrap();
        for p in [[0.1, 0.3], [0.5, -0.4], [0.2, -0.1]] {
            let want = sym.evaluate(&["y1", "y2"], &p).unwrap();
            let got = b.apply(&c, &p).unwrap();
            assert!((want - got).abs() < 1e-10 * want.abs().max(1.0), "{want} vs {got}");
        }
        assert_eq!(b.apply(&c, &[2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(b.eval(&[0.2, -0.1]), 1.5);
    }

    #[test]
    fn finite_differences() {
        let op = laplacian();
        let mut f = |p: &[f64]| -> Result<f64, EvalError> { Ok(p[0].powi(4) + p[0] * p[1] * p[1]) };
        let v = fd_apply(&op, &mut f, &[0.7, 0.3], 1e-2).unwrap();
        assert!((v - (12.0 * 0.49 + 2.0 * 0.7)).abs() < 1e-9);
        let mut one = |_: &[f64]| -> Result<f64, EvalError> { Ok(3.0) };
        assert_eq!(fd_apply(&op, &mut one, &[0.1, 0.2], 1e-2).unwrap(), 0.0);
    }

    #[test]
    fn laplace_identity_in_the_plane() {
        // Γ = −log|x − y| / 2π
        let g = |x: &[f64], y: &[f64]| -> Result<f64, VerifyError> {
            let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
            Ok(-r.ln() / (2.0 * PI))
        };
        let op = laplacian();
        let b = BumpFunction::new(vec![0.1, 0.0], 1.0, 6);
        let spec = QuadSpec { abs_tol: 1e-7, ..Default::default() };
        for x in [[0.1, 0.0], [0.4, 0.3], [1.5, 0.2]] {
            let r = fundamental_identity_residual(&g, &op, &b, &x, &spec).unwrap();
            assert!(r.residual < 1e-6, "{r:?}");
        }
        let zero = BumpFunction::new(vec![0.0, 0.0], 1.0, 6).scaled(0.0);
        assert_eq!(fundamental_identity_residual(&g, &op, &zero, &[0.0, 0.0], &spec).unwrap().residual, 0.0);
        let h = harmonicity_residual(&g, &op, &[0.0, 0.0], &ring(&[0.0, 0.0], 1.0, 6), 1e-2).unwrap();
        assert!(h.max_relative < 1e-8 || h.probes.iter().all(|p| p.richardson.abs() < 1e-8));
    }

    #[test]
    fn box_integral_in_three_dimensions() {
        let b = BumpFunction::new(vec![0.0; 3], 1.0, 4);
        let f = |y: &[f64]| -> Result<f64, VerifyError> { Ok(b.eval(y)) };
        let r = support_integral(&f, &[0.0; 3], &b, &QuadSpec { abs_tol: 1e-8, budget: 10_000_000, panels: 1 }).unwrap();
        // ∫_{|y|<1} (1 − |y|²)^4 = 4π · 128/3465
        assert!((r.value - 4.0 * PI * 128.0 / 3465.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn integrability_fits() {
        let inv = |x: &[f64], y: &[f64]| -> Result<f64, VerifyError> { Ok(1.0 / ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()) };
        let radii: Vec<f64> = (1..8).map(|k| 0.5f64.powi(k)).collect();
        let r = local_integrability_probe(&inv, &[0.0, 0.0], &[1.0, 0.0], &radii).unwrap();
        assert!((r.sigma + 1.0).abs() < 1e-9 && r.integrable && r.series_converges);
        assert!((r.max_ratio - 0.5).abs() < 1e-4);
        let bounded = |_: &[f64], y: &[f64]| -> Result<f64, VerifyError> { Ok(2.0 + y[0]) };
        let r = local_integrability_probe(&bounded, &[0.0, 0.0], &[1.0, 0.0], &radii).unwrap();
        assert!(r.sigma.abs() < 0.2);
    }
}
