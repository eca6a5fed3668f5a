//! `Γ(x;y) = ρ̄(y) ∫ Γ̃((x,s); (y,t)) dt`, its truncations and diagnostics.

use std::cell::RefCell;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::groupgeom::{GeomError, GroupModel};
use crate::kernels::{Kernel, KernelError};
use crate::quadrature::{integrate_with_breaks, QuadOptions, QuadResult};
use crate::verification::{support_integral, BumpFunction, CompiledOperator, GammaEval, QuadSpec, VerifyError};

#[derive(Debug, Error)]
pub enum SaturationError {
    #[error("y is within {distance:e} of the pole x")]
    Pole { distance: f64 },
    #[error("fiber integral does not decay: truncation at radius {radius} still changes the value by {increment:e}")]
    NonDecaying { radius: f64, increment: f64 },
    #[error("fiber quadrature did not converge at radius {radius}")]
    Quadrature { radius: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("{0}")]
    Unsupported(String),
}

impl From<SaturationError> for VerifyError {
    fn from(e: SaturationError) -> Self {
        VerifyError::Gamma { y: Vec::new(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SaturationOptions {
    /// Relative tolerance of the fiber integral.
    pub tol: f64,
    pub start_radius: f64,
    pub max_radius: f64,
    /// Minimum distance between the pole and quadrature nodes.
    pub pole_floor: f64,
}

impl Default for SaturationOptions {
    fn default() -> Self {
        SaturationOptions { tol: 1e-6, start_radius: 8.0, max_radius: 16384.0, pole_floor: 1e-6 }
    }
}

impl SaturationOptions {
    pub fn with_tol(tol: f64) -> Self {
        SaturationOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturationResult {
    pub value: f64,
    /// Absolute error estimate: quadrature plus truncation.
    pub error: f64,
    pub radius: f64,
    pub s: Vec<f64>,
    pub evals: usize,
}

fn point(x: &[f64], s: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.extend_from_slice(s);
    v
}

/// Integrates `t ↦ Γ̃((x,s); (y,t))` over the fiber, with nested truncations of
/// radius `R, 2R, 4R, …` around `s` and an extrapolated tail.
pub fn saturate(kernel: &dyn Kernel, model: &GroupModel, x: &[f64], y: &[f64], s: &[f64], opts: &SaturationOptions) -> Result<SaturationResult, SaturationError> {
    let p = model.p();
    if p != 1 || s.len() != 1 {
        return Err(SaturationError::Unsupported(format!("fiber dimension {p}: only one-dimensional fibers are integrated")));
    }
    let dist = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if dist < opts.pole_floor {
        return Err(SaturationError::Pole { distance: dist });
    }
    let rho_bar = model.rho_bar(y)?;
    let fiber = fiber_integral(kernel, x, y, s[0], opts)?;
    Ok(SaturationResult { value: rho_bar * fiber.value, error: rho_bar.abs() * fiber.error, radius: fiber.radius, s: s.to_vec(), evals: fiber.evals })
}

#[derive(Debug, Clone, Copy)]
struct Fiber {
    value: f64,
    error: f64,
    radius: f64,
    evals: usize,
}

fn fiber_integral(kernel: &dyn Kernel, x: &[f64], y: &[f64], s: f64, opts: &SaturationOptions) -> Result<Fiber, SaturationError> {
    let xi = point(x, &[s]);
    let err: RefCell<Option<KernelError>> = RefCell::new(None);
    let mut eta = point(y, &[0.0]);
    let m = y.len();
    let mut f = |t: f64| {
        eta[m] = t;
        match kernel.eval(&xi, &eta) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let mut breaks = kernel.fiber_breaks(&xi, y);
    breaks.push(s);
    let mut evals = 0;
    let mut quad_err = 0.0;
    let r0 = opts.start_radius;
    let core = integrate_with_breaks(&mut f, s - r0, s + r0, &breaks, &QuadOptions { abs_tol: 0.0, rel_tol: opts.tol / 8.0, max_panels: 2000 });
    check(&core, r0)?;
    evals += core.evals;
    quad_err += core.error;
    let mut sums = vec![core.value];
    let mut estimates = vec![core.value];
    let mut r = r0;
    let mut stalled = 0;
    loop {
        if let Some(e) = err.borrow_mut().take() {
            return Err(e.into());
        }
        let r_next = 2.0 * r;
        if r_next > opts.max_radius {
            let inc = (estimates[estimates.len() - 1] - estimates[estimates.len().saturating_sub(2)]).abs();
            return Err(SaturationError::NonDecaying { radius: r, increment: inc });
        }
        let scale = sums[sums.len() - 1].abs();
        let shell_opts = QuadOptions { abs_tol: opts.tol / 32.0 * scale, rel_tol: opts.tol / 8.0, max_panels: 2000 };
        let right = integrate_with_breaks(&mut f, s + r, s + r_next, &breaks, &shell_opts);
        let left = integrate_with_breaks(&mut f, s - r_next, s - r, &breaks, &shell_opts);
        check(&right, r_next)?;
        check(&left, r_next)?;
        evals += right.evals + left.evals;
        quad_err += right.error + left.error;
        let total = sums[sums.len() - 1] + right.value + left.value;
        sums.push(total);
        r = r_next;
        let k = sums.len();
        let d1 = if k >= 3 { sums[k - 2] - sums[k - 3] } else { 0.0 };
        let d2 = sums[k - 1] - sums[k - 2];
        let ratio = if k >= 3 && d1 != 0.0 { d2 / d1 } else { f64::NAN };
        let est = wynn_epsilon(&sums);
        estimates.push(est);
        if ratio.is_finite() && ratio >= 0.95 {
            stalled += 1;
            if stalled >= 3 {
                return Err(SaturationError::NonDecaying { radius: r, increment: d2.abs() });
            }
        } else {
            stalled = 0;
        }
        let n = estimates.len();
        let inc = (estimates[n - 1] - estimates[n - 2]).abs();
        let target = opts.tol / 4.0 * est.abs();
        if k >= 3 && inc < target {
            // the extrapolated tail is itself uncertain by about the last change
            let prev = if n >= 3 { (estimates[n - 2] - estimates[n - 3]).abs() } else { inc };
            let error = quad_err + inc.max(prev.min(target));
            return Ok(Fiber { value: est, error, radius: r, evals });
        }
    }
}

/// Wynn's ε-algorithm on partial sums: the deepest even-column entry on the last
/// diagonal. Removes several geometric error terms at once, as produced by
/// algebraic tails under radius doubling.
fn wynn_epsilon(sums: &[f64]) -> f64 {
    let n = sums.len();
    let last = sums[n - 1];
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = sums.to_vec();
    let mut best = last;
    for k in 1..n {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 || !d.is_finite() {
                return best;
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        if k % 2 == 0 {
            let v = cur[cur.len() - 1];
            if !v.is_finite() {
                return best;
            }
            best = v;
        }
    }
    best
}

fn check(r: &QuadResult, radius: f64) -> Result<(), SaturationError> {
    if r.converged && r.value.is_finite() {
        Ok(())
    } else {
        Err(SaturationError::Quadrature { radius })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct XiReport {
    pub s_list: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Max pairwise relative deviation.
    pub max_deviation: f64,
}

pub fn xi_independence_check(kernel: &dyn Kernel, model: &GroupModel, x: &[f64], y: &[f64], s_list: &[f64], opts: &SaturationOptions) -> Result<XiReport, SaturationError> {
    let mut values = Vec::new();
    let mut errors = Vec::new();
    for s in s_list {
        let r = saturate(kernel, model, x, y, &[*s], opts)?;
        values.push(r.value);
        errors.push(r.error);
    }
    let mut dev: f64 = 0.0;
    for a in &values {
        for b in &values {
            dev = dev.max((a - b).abs() / a.abs().max(b.abs()));
        }
    }
    Ok(XiReport { s_list: s_list.to_vec(), values, errors, max_deviation: dev })
}

/// Saturated `Γ` as a [`GammaEval`], tracking evaluation counts and positivity.
pub struct SaturatedGamma<'a> {
    pub kernel: &'a dyn Kernel,
    pub model: &'a GroupModel,
    pub s: f64,
    pub opts: SaturationOptions,
    evals: AtomicUsize,
    non_positive: AtomicUsize,
    min_bits: AtomicU64,
}

impl<'a> SaturatedGamma<'a> {
    pub fn new(kernel: &'a dyn Kernel, model: &'a GroupModel, opts: SaturationOptions) -> Self {
        SaturatedGamma {
            kernel,
            model,
            s: 0.0,
            opts,
            evals: AtomicUsize::new(0),
            non_positive: AtomicUsize::new(0),
            min_bits: AtomicU64::new(f64::INFINITY.to_bits()),
        }
    }

    pub fn evaluations(&self) -> usize {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn non_positive(&self) -> usize {
        self.non_positive.load(Ordering::Relaxed)
    }

    pub fn min_value(&self) -> f64 {
        f64::from_bits(self.min_bits.load(Ordering::Relaxed))
    }

    fn record(&self, v: f64) {
        self.evals.fetch_add(1, Ordering::Relaxed);
        if !(v > 0.0) {
            self.non_positive.fetch_add(1, Ordering::Relaxed);
        }
        let mut cur = self.min_bits.load(Ordering::Relaxed);
        while v < f64::from_bits(cur) {
            match self.min_bits.compare_exchange_weak(cur, v.to_bits(), Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => break,
                Err(c) => cur = c,
            }
        }
    }
}

impl GammaEval for SaturatedGamma<'_> {
    fn gamma(&self, x: &[f64], y: &[f64]) -> Result<f64, VerifyError> {
        let r = saturate(self.kernel, self.model, x, y, &[self.s], &self.opts).map_err(|e| VerifyError::Gamma { y: y.to_vec(), message: e.to_string() })?;
        self.record(r.value);
        Ok(r.value)
    }
}

/// Grid of target points `y` around a pole `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub pole: Vec<f64>,
    pub s: f64,
    /// `(lo, hi, count)` per coordinate.
    pub axes: Vec<(f64, f64, usize)>,
}

impl GridSpec {
    /// `pole=0,0;s=0;y1=-1:1:21;y2=-1:1:21`; missing axes default to `-1:1:21`
    /// around the pole.
    pub fn parse(text: &str, m: usize) -> Result<GridSpec, String> {
        let mut pole = vec![0.0; m];
        let mut s = 0.0;
        let mut axes: Vec<Option<(f64, f64, usize)>> = vec![None; m];
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number `{v}`"));
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value in `{part}`"))?;
            match k.trim() {
                "pole" => {
                    let vals = v.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
                    if vals.len() != m {
                        return Err(format!("pole needs {m} coordinates"));
                    }
                    pole = vals;
                }
                "s" => s = num(v)?,
                key => {
                    let i = key.strip_prefix('y').and_then(|d| d.parse::<usize>().ok()).filter(|i| *i >= 1 && *i <= m).ok_or_else(|| format!("unknown grid key `{key}`"))?;
                    let f: Vec<&str> = v.split(':').collect();
                    if f.len() != 3 {
                        return Err(format!("axis `{key}` needs lo:hi:count"));
                    }
                    let count = f[2].trim().parse::<usize>().map_err(|_| format!("bad count `{}`", f[2]))?;
                    if count == 0 {
                        return Err(format!("axis `{key}` has no points"));
                    }
                    axes[i - 1] = Some((num(f[0])?, num(f[1])?, count));
                }
            }
        }
        let axes = axes.iter().enumerate().map(|(i, a)| a.unwrap_or((pole[i] - 1.0, pole[i] + 1.0, 21))).collect();
        Ok(GridSpec { pole, s, axes })
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for (lo, hi, n) in &self.axes {
            let vals: Vec<f64> = (0..*n).map(|k| if *n == 1 { *lo } else { lo + (hi - lo) * k as f64 / (*n - 1) as f64 }).collect();
            out = out.into_iter().flat_map(|p| vals.iter().map(move |v| {
                let mut q = p.clone();
                q.push(*v);
                q
            })).collect();
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub y: Vec<f64>,
    pub value: Option<f64>,
    pub error: Option<f64>,
    pub radius: Option<f64>,
    pub status: String,
}

/// Saturates at every grid point in parallel; failures are kept as flagged rows.
pub fn batch_saturate(kernel: &dyn Kernel, model: &GroupModel, grid: &GridSpec, opts: &SaturationOptions) -> Vec<GridRow> {
    grid.points()
        .into_par_iter()
        .map(|y| match saturate(kernel, model, &grid.pole, &y, &[grid.s], opts) {
            Ok(r) => GridRow { y, value: Some(r.value), error: Some(r.error), radius: Some(r.radius), status: "ok".into() },
            Err(e) => {
                let status = match e {
                    SaturationError::Pole { .. } => "pole".to_string(),
                    SaturationError::NonDecaying { .. } => "truncation".to_string(),
                    other => format!("error: {other}"),
                };
                GridRow { y, value: None, error: None, radius: None, status }
            }
        })
        .collect()
}

pub fn grid_csv(grid: &GridSpec, rows: &[GridRow], names: &[&str]) -> String {
    let mut s = String::new();
    let xs: Vec<String> = names.iter().map(|n| format!("x_{n}")).collect();
    let ys: Vec<String> = names.iter().map(|n| format!("y_{n}")).collect();
    let _ = writeln!(s, "{},{},gamma,error,radius,status", xs.join(","), ys.join(","));
    let pole: Vec<String> = grid.pole.iter().map(|v| format!("{v}")).collect();
    for r in rows {
        let y: Vec<String> = r.y.iter().map(|v| format!("{v}")).collect();
        let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{},{}", pole.join(","), y.join(","), opt(r.value), opt(r.error), opt(r.radius), r.status);
    }
    s
}

/// `θ(t) = (1_{[−R−½, R+½]} ∗ τ)(t)` with `τ(u) = (35/16)(1 − 4u²)³` on `|u| ≤ ½`:
/// equal to 1 on `|t| ≤ R` and 0 on `|t| ≥ R + 1`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Cutoff {
    pub radius: f64,
}

fn mollifier(u: f64) -> f64 {
    if u.abs() >= 0.5 {
        0.0
    } else {
        let w = 1.0 - 4.0 * u * u;
        35.0 / 16.0 * w * w * w
    }
}

fn mollifier_d(u: f64) -> f64 {
    if u.abs() >= 0.5 {
        0.0
    } else {
        let w = 1.0 - 4.0 * u * u;
        35.0 / 16.0 * 3.0 * w * w * (-8.0 * u)
    }
}

/// `∫_{-½}^{u} τ`.
fn mollifier_cdf(u: f64) -> f64 {
    if u <= -0.5 {
        return 0.0;
    }
    if u >= 0.5 {
        return 1.0;
    }
    let v = 2.0 * u;
    let prim = v - v.powi(3) + 0.6 * v.powi(5) - v.powi(7) / 7.0;
    35.0 / 32.0 * (prim + 16.0 / 35.0)
}

impl Cutoff {
    pub fn new(radius: f64) -> Self {
        Cutoff { radius }
    }

    pub fn value(&self, t: f64) -> f64 {
        let a = self.radius + 0.5;
        mollifier_cdf(t + a) - mollifier_cdf(t - a)
    }

    pub fn d1(&self, t: f64) -> f64 {
        let a = self.radius + 0.5;
        mollifier(t + a) - mollifier(t - a)
    }

    pub fn d2(&self, t: f64) -> f64 {
        let a = self.radius + 0.5;
        mollifier_d(t + a) - mollifier_d(t - a)
    }

    pub fn derivative(&self, k: u32, t: f64) -> f64 {
        match k {
            0 => self.value(t),
            1 => self.d1(t),
            2 => self.d2(t),
            _ => f64::NAN,
        }
    }

    /// `(max |θ′|, max |θ″|)` on a fine grid of the transition layers.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        let mut b1: f64 = 0.0;
        let mut b2: f64 = 0.0;
        for k in 0..=2000 {
            let t = self.radius + k as f64 / 2000.0;
            b1 = b1.max(self.d1(t).abs()).max(self.d1(-t).abs());
            b2 = b2.max(self.d2(t).abs()).max(self.d2(-t).abs());
        }
        (b1, b2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationRow {
    pub radius: f64,
    pub i: f64,
    pub ii: f64,
    /// `I + II + φ(x)`, zero by the group identity.
    pub identity: f64,
    pub theta_at_zero: f64,
    pub theta_d1_max: f64,
    pub theta_d2_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationTable {
    pub x: Vec<f64>,
    pub phi_x: f64,
    pub rows: Vec<TruncationRow>,
    /// `|II_j|` decreases from the second radius on.
    pub ii_decreasing: bool,
    /// `|I_j − I_{j−1}|` decreases and the last change is below `1e-3`.
    pub i_stabilized: bool,
    /// Max over `j` of the cutoff derivative bounds.
    pub derivative_bound: (f64, f64),
}

/// The two integrals of the truncated identity `∫ Γ̃ 𝓛̃*(φθ_j) = −φ(x)`: `I_j` pairs
/// `Γ̃` with `θ_j 𝓛*φ` and `II_j` with the terms that differentiate `θ_j`.
/// `lifted_adjoint` is `𝓛̃*` on the split chart; its coefficients must not
/// depend on the fiber.
pub fn truncation_diagnostics(
    kernel: &dyn Kernel,
    model: &GroupModel,
    lifted_adjoint: &CompiledOperator,
    x: &[f64],
    bump: &BumpFunction,
    radii: &[f64],
    spec: &QuadSpec,
) -> Result<TruncationTable, VerifyError> {
    let m = model.m();
    if model.p() != 1 {
        return Err(VerifyError::Quadrature("truncation diagnostics need a one-dimensional fiber".into()));
    }
    let s = 0.0;
    let xi = point(x, &[s]);
    let phi_x = bump.eval(x);
    // split terms by the order of the fiber derivative
    let mut by_order: Vec<Vec<(Vec<u32>, &crate::expr::CompiledExpr)>> = vec![Vec::new(); 3];
    for (beta, c) in lifted_adjoint.terms().iter() {
        let k = beta[m] as usize;
        if k > 2 {
            return Err(VerifyError::Order(beta.iter().sum()));
        }
        by_order[k].push((beta[..m].to_vec(), c));
    }
    let jets = |y: &[f64]| -> Result<[f64; 3], VerifyError> {
        let (f, g, h) = bump.jet(y);
        let mut out = [0.0; 3];
        if f == 0.0 {
            return Ok(out);
        }
        let full = point(y, &[s]);
        for (k, terms) in by_order.iter().enumerate() {
            for (beta, c) in terms {
                let idx: Vec<usize> = beta.iter().enumerate().flat_map(|(i, k)| std::iter::repeat_n(i, *k as usize)).collect();
                let d = match idx.as_slice() {
                    [] => f,
                    [i] => g[*i],
                    [i, j] => h[(*i, *j)],
                    _ => return Err(VerifyError::Order(beta.iter().sum())),
                };
                out[k] += c.eval(&full)? * d;
            }
        }
        Ok(out)
    };
    let fiber_weighted = |y: &[f64], w: &dyn Fn(f64) -> f64, lo: f64, hi: f64, breaks: &[f64]| -> Result<f64, VerifyError> {
        let err: RefCell<Option<KernelError>> = RefCell::new(None);
        let mut eta = point(y, &[0.0]);
        let r = integrate_with_breaks(
            |t| {
                eta[m] = t;
                match kernel.eval(&xi, &eta) {
                    Ok(v) => v * w(t),
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            },
            lo,
            hi,
            breaks,
            &QuadOptions { abs_tol: 1e-13, rel_tol: 1e-9, max_panels: 2000 },
        );
        if let Some(e) = err.into_inner() {
            return Err(VerifyError::Gamma { y: y.to_vec(), message: e.to_string() });
        }
        Ok(r.value)
    };
    let mut rows = Vec::new();
    let mut bounds = (0.0f64, 0.0f64);
    for &radius in radii {
        let cut = Cutoff::new(radius);
        let (b1, b2) = cut.derivative_bounds();
        bounds = (bounds.0.max(b1), bounds.1.max(b2));
        let edge = radius + 1.0;
        let i_integrand = |y: &[f64]| -> Result<f64, VerifyError> {
            let j = jets(y)?;
            if j[0] == 0.0 {
                return Ok(0.0);
            }
            let mut breaks = kernel.fiber_breaks(&xi, y);
            breaks.extend([s, -radius, radius]);
            let rb = model.rho_bar(y).map_err(|e| VerifyError::Gamma { y: y.to_vec(), message: e.to_string() })?;
            Ok(rb * j[0] * fiber_weighted(y, &|t| cut.value(t), -edge, edge, &breaks)?)
        };
        let ii_integrand = |y: &[f64]| -> Result<f64, VerifyError> {
            let j = jets(y)?;
            let mut acc = 0.0;
            for k in 1..=2u32 {
                if j[k as usize] == 0.0 {
                    continue;
                }
                let w = |t: f64| cut.derivative(k, t);
                let shells = fiber_weighted(y, &w, radius, edge, &[])? + fiber_weighted(y, &w, -edge, -radius, &[])?;
                acc += j[k as usize] * shells;
            }
            let rb = model.rho_bar(y).map_err(|e| VerifyError::Gamma { y: y.to_vec(), message: e.to_string() })?;
            Ok(rb * acc)
        };
        let i = support_integral(&i_integrand, x, bump, spec)?.value;
        let fine = QuadSpec { abs_tol: spec.abs_tol * 1e-3, ..*spec };
        let ii = support_integral(&ii_integrand, x, bump, &fine)?.value;
        rows.push(TruncationRow {
            radius,
            i,
            ii,
            identity: i + ii + phi_x,
            theta_at_zero: cut.value(0.0),
            theta_d1_max: b1,
            theta_d2_max: b2,
        });
    }
    let ii_decreasing = rows.windows(2).skip(1).all(|w| w[1].ii.abs() < w[0].ii.abs());
    let changes: Vec<f64> = rows.windows(2).map(|w| (w[1].i - w[0].i).abs()).collect();
    let i_stabilized = changes.windows(2).skip(1).all(|w| w[1] <= w[0] * 1.05 + 1e-9) && changes.last().is_some_and(|c| *c < 1e-3);
    Ok(TruncationTable { x: x.to_vec(), phi_x, rows, ii_decreasing, i_stabilized, derivative_bound: bounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ExprKernel, HeisenbergKernel, PerturbedKernel};
    use crate::model_file::BuiltModel;
    use std::sync::Arc;

    fn setup() -> (BuiltModel, HeisenbergKernel) {
        let b = BuiltModel::builtin("grushin").unwrap();
        let k = HeisenbergKernel::for_model(&b.model).unwrap().with_constant(0.5 / std::f64::consts::PI, 0.0);
        (b, k)
    }

    #[test]
    fn grushin_saturation_values() {
        let (b, k) = setup();
        let o = SaturationOptions::default();
        let r = saturate(&k, &b.model, &[0.0, 0.0], &[1.0, 0.0], &[0.0], &o).unwrap();
        assert!(r.value > 0.0 && r.error < o.tol * r.value, "{r:?}");
        // Γ((0,0);(1,0)) = c ∫ dτ / sqrt((1 + τ²)² + 4τ²) = c ∫ dτ / (1 + τ²)·… by direct quadrature
        let direct = crate::quadrature::integrate(
            |u: f64| {
                let t = u / (1.0 - u * u);
                let dt = (1.0 + u * u) / (1.0 - u * u).powi(2);
                dt / ((1.0 + t * t).powi(2) + 4.0 * t * t).sqrt()
            },
            -1.0,
            1.0,
            &QuadOptions::new(1e-14, 1e-13),
        );
        assert!((r.value - k.constant * direct.value).abs() < 1e-6 * r.value, "{} vs {}", r.value, k.constant * direct.value);
        let a = saturate(&k, &b.model, &[0.0, 0.0], &[0.6, 0.4], &[0.0], &o).unwrap();
        let c = saturate(&k, &b.model, &[0.0, 0.0], &[-0.6, 0.4], &[0.0], &o).unwrap();
        assert!((a.value - c.value).abs() < 2.0 * o.tol * a.value);
        let tight = saturate(&k, &b.model, &[0.0, 0.0], &[0.6, 0.4], &[0.0], &SaturationOptions::with_tol(1e-7)).unwrap();
        assert!((tight.value - a.value).abs() < a.error.max(1e-15));
        assert!(matches!(saturate(&k, &b.model, &[0.2, 0.0], &[0.2, 0.0], &[0.0], &o), Err(SaturationError::Pole { .. })));
    }

    #[test]
    fn xi_independence_and_negative_control() {
        let (b, k) = setup();
        let o = SaturationOptions::default();
        let rep = xi_independence_check(&k, &b.model, &[0.3, 0.1], &[0.9, -0.4], &[0.0, 1.0, -2.0], &o).unwrap();
        assert!(rep.max_deviation < 5.0 * o.tol, "{rep:?}");
        let one = xi_independence_check(&k, &b.model, &[0.3, 0.1], &[0.9, -0.4], &[1.0], &o).unwrap();
        assert_eq!(one.max_deviation, 0.0);
        let bad = PerturbedKernel { base: Arc::new(k.clone()), amplitude: 0.2, m: 2 };
        let rep = xi_independence_check(&bad, &b.model, &[0.3, 0.1], &[0.9, -0.4], &[0.0, 1.0, -2.0], &o).unwrap();
        assert!(rep.max_deviation > 0.1, "{rep:?}");
    }

    #[test]
    fn non_decaying_kernel_is_rejected() {
        let (b, _) = setup();
        let k = ExprKernel::parse("symbols = x1, x2, s1 ; y1, y2, t1\nkernel = 1 + 0*t1\n", "flat").unwrap();
        let r = saturate(&k, &b.model, &[0.0, 0.0], &[1.0, 0.0], &[0.0], &SaturationOptions::default());
        assert!(matches!(r, Err(SaturationError::NonDecaying { .. })), "{r:?}");
    }

    #[test]
    fn cutoffs() {
        let mut prev = None;
        for r in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let c = Cutoff::new(r);
            assert!((c.value(0.0) - 1.0).abs() < 1e-15);
            assert!((c.value(r) - 1.0).abs() < 1e-14 && c.value(r + 1.0).abs() < 1e-14);
            assert!((c.value(r + 0.5) - 0.5).abs() < 1e-14);
            let (b1, b2) = c.derivative_bounds();
            assert!((b1 - 35.0 / 16.0).abs() < 1e-9);
            if let Some((p1, p2)) = prev {
                assert!(((b1 - p1) as f64).abs() < 1e-12 && ((b2 - p2) as f64).abs() < 1e-12);
            }
            prev = Some((b1, b2));
            let h = 1e-5;
            let t = r + 0.3;
            assert!(((c.value(t + h) - c.value(t - h)) / (2.0 * h) - c.d1(t)).abs() < 1e-6);
            assert!(((c.d1(t + h) - c.d1(t - h)) / (2.0 * h) - c.d2(t)).abs() < 1e-5);
        }
    }

    #[test]
    fn grid_parsing_and_batch() {
        let g = GridSpec::parse("pole=0,0; y1=-1:1:3; y2=0:1:2", 2).unwrap();
        assert_eq!(g.points().len(), 6);
        assert_eq!(GridSpec::parse("", 2).unwrap().points().len(), 441);
        assert!(GridSpec::parse("y3=0:1:2", 2).is_err());
        let (b, k) = setup();
        let rows = batch_saturate(&k, &b.model, &GridSpec::parse("y1=-1:1:3;y2=-1:1:3", 2).unwrap(), &SaturationOptions::default());
        assert_eq!(rows.iter().filter(|r| r.status == "pole").count(), 1);
        let single = saturate(&k, &b.model, &[0.0, 0.0], &rows[0].y, &[0.0], &SaturationOptions::default()).unwrap();
        assert_eq!(single.value.to_bits(), rows[0].value.unwrap().to_bits());
        let csv = grid_csv(&GridSpec::parse("y1=-1:1:3;y2=-1:1:3", 2).unwrap(), &rows, &["x1", "x2"]);
        assert!(csv.starts_with("x_x1,x_x2,y_x1,y_x2,gamma,error,radius,status\n"));
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn truncation_table_converges() {
        let (b, k) = setup();
        let l = b.lifted().unwrap();
        let lop = l.lift_operator(&b.operator).unwrap();
        let adj = CompiledOperator::new(&l.lifted_adjoint(&lop, &crate::Expr::one()).unwrap().full).unwrap();
        let bump = BumpFunction::new(vec![0.2, 0.1], 1.0, 6);
        let t = truncation_diagnostics(&k, &b.model, &adj, &[0.3, 0.1], &bump, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], &QuadSpec::default()).unwrap();
        assert!(t.ii_decreasing && t.i_stabilized, "{t:?}");
        assert!(t.rows.iter().all(|r| r.theta_at_zero == 1.0 && r.identity.abs() < 1e-3));
    }

    #[test]
    fn epsilon_extrapolation() {
        let sums: Vec<f64> = (0..7).map(|k| 3.0 - 0.5f64.powi(k) + 0.25f64.powi(k) - 0.125f64.powi(k)).collect();
        assert!((wynn_epsilon(&sums) - 3.0).abs() < 1e-12);
        assert_eq!(wynn_epsilon(&[1.0, 1.0, 1.0]), 1.0);
        let (b, k) = setup();
        let tight = saturate(&k, &b.model, &[0.0, 0.0], &[0.9238795325112867, 0.3826834323650898], &[0.0], &SaturationOptions::with_tol(1e-10)).unwrap();
        let loose = saturate(&k, &b.model, &[0.0, 0.0], &[0.9238795325112867, 0.3826834323650898], &[0.0], &SaturationOptions::default()).unwrap();
        assert!((tight.value - loose.value).abs() < loose.error, "{tight:?} {loose:?}");
    }
}
