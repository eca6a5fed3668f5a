//! Candidate fundamental solutions `Γ̃(ξ; η)` on the group, in split coordinates.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{CompiledExpr, EvalError, Expr};
use crate::groupgeom::{GeomError, GroupModel};
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};
use crate::verification::{fd_apply, BumpFunction, CompiledOperator};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel evaluated on its pole")]
    Pole,
    #[error("model is not a Heisenberg lift: {0}")]
    NotHeisenberg(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("kernel file line {line}: {message}")]
    File { line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelMeta {
    pub left_invariant: bool,
    pub homogeneity: Option<f64>,
    /// Description of where the kernel is singular.
    pub pole: String,
    pub constant: f64,
    pub constant_error: f64,
    /// Whether the kernel is claimed to be a fundamental solution of the lifted operator.
    pub fundamental: bool,
}

pub trait Kernel: Send + Sync {
    fn name(&self) -> String;
    fn meta(&self) -> KernelMeta;
    fn eval(&self, xi: &[f64], eta: &[f64]) -> Result<f64, KernelError>;
    /// Fiber values `t` near which `t ↦ Γ̃(xi; (y, t))` is sharply peaked.
    fn fiber_breaks(&self, _xi: &[f64], _y: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

/// Product of polarized coordinates `(a, b, c)`: `c'' = c + c' + a b'`.
fn polar_mul(u: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(u[0] + v[0], u[1] + v[1], u[2] + v[2] + u[0] * v[1])
}

fn polar_inv(u: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-u[0], -u[1], -u[2] + u[0] * u[1])
}

/// Fourth power of the gauge at a polarized point.
fn gauge4(u: &Vector3<f64>) -> f64 {
    let (a, b) = (u[0], u[1]);
    let t = u[2] - 0.5 * a * b;
    let r2 = a * a + b * b;
    r2 * r2 + 16.0 * t * t
}

/// `c · N(ξ^{-1}η)^{-2}` with the gauge of the first Heisenberg group.
#[derive(Debug, Clone)]
pub struct HeisenbergKernel {
    /// Split coordinates to polarized coordinates.
    pub to_polar: Matrix3<f64>,
    pub from_polar: Matrix3<f64>,
    pub constant: f64,
    pub constant_error: f64,
    m: usize,
}

impl HeisenbergKernel {
    /// Matches the model's lifted generators and their bracket to the standard
    /// polarized frame `∂a`, `∂b + a∂c`, `∂c` at the identity.
    pub fn for_model(model: &GroupModel) -> Result<Self, KernelError> {
        let bad = |s: &str| Err(KernelError::NotHeisenberg(s.to_string()));
        if model.n() != 3 || model.m() != 2 || model.presentation.q != 2 {
            return bad("needs two generators on a surface with a three-dimensional algebra");
        }
        let c = &model.presentation.constants;
        let z: Vec<f64> = (0..3).map(|k| c.get(0, 1, k).to_f64().unwrap_or(f64::NAN)).collect();
        let ad_z = c.ad(&z);
        if ad_z.norm() > 1e-12 {
            return bad("the bracket of the generators is not central");
        }
        let h = 1e-6;
        let mut cols = Matrix3::zeros();
        for (j, v) in [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], z.clone()].iter().enumerate() {
            let plus: Vec<f64> = v.iter().map(|a| a * h).collect();
            let minus: Vec<f64> = v.iter().map(|a| -a * h).collect();
            let (p, q) = (model.to_split(&plus)?, model.to_split(&minus)?);
            for r in 0..3 {
                let d = (p[r] - q[r]) / (2.0 * h);
                cols[(r, j)] = (d * 1e6).round() / 1e6;
            }
        }
        let det = cols.determinant();
        if (det.abs() - 1.0).abs() > 1e-9 {
            return Err(KernelError::NotHeisenberg(format!("polarization has determinant {det}")));
        }
        let to_polar = cols.try_inverse().expect("unit determinant");
        let k = HeisenbergKernel { to_polar, from_polar: cols, constant: 1.0, constant_error: 0.0, m: 2 };
        // the linear change must be a group isomorphism
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let g: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let hh: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let lhs = k.polar(&model.split_mul(&g, &hh)?);
            let rhs = polar_mul(&k.polar(&g), &k.polar(&hh));
            if (lhs - rhs).norm() > 1e-8 {
                return bad("split coordinates are not linearly polarized");
            }
        }
        Ok(k)
    }

    pub fn with_constant(mut self, constant: f64, error: f64) -> Self {
        self.constant = constant;
        self.constant_error = error;
        self
    }

    pub fn polar(&self, g: &[f64]) -> Vector3<f64> {
        self.to_polar * Vector3::new(g[0], g[1], g[2])
    }

    pub fn split(&self, u: &Vector3<f64>) -> Vec<f64> {
        let g = self.from_polar * u;
        vec![g[0], g[1], g[2]]
    }

    /// Polarized coordinates of `ξ^{-1}η`.
    pub fn relative(&self, xi: &[f64], eta: &[f64]) -> Vector3<f64> {
        polar_mul(&polar_inv(&self.polar(xi)), &self.polar(eta))
    }

    pub fn gauge(&self, g: &[f64]) -> f64 {
        gauge4(&self.polar(g)).powf(0.25)
    }

    /// Group dilation `δ_λ`, in split coordinates.
    pub fn dilate(&self, lambda: f64, g: &[f64]) -> Vec<f64> {
        let u = self.polar(g);
        self.split(&Vector3::new(lambda * u[0], lambda * u[1], lambda * lambda * u[2]))
    }

    pub fn split_mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.split(&polar_mul(&self.polar(a), &self.polar(b)))
    }

    pub fn split_inv(&self, a: &[f64]) -> Vec<f64> {
        self.split(&polar_inv(&self.polar(a)))
    }

    /// `∫ N^{-2}(ξ^{-1}η) F(η) dη` in gauge-polar coordinates, where the volume
    /// element is `R³/4 dR dψ dθ` and the weight cancels to `R/4`.
    pub fn gauge_polar_integral<F>(&self, xi: &[f64], f: F, r_max: f64, tol: f64) -> Result<(f64, f64), KernelError>
    where
        F: Fn(&[f64]) -> f64,
    {
        let base = self.polar(xi);
        let o = QuadOptions::new(tol * 1e-3, tol);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut err_total = 0.0;
        let mut failed = false;
        let outer = integrate(
            |r| {
                let mid = integrate(
                    |v| {
                        let psi = half_pi * v.sin();
                        let dpsi = half_pi * v.cos();
                        let (sp, cp) = psi.sin_cos();
                        let rho = r * cp.max(0.0).sqrt();
                        let t = r * r * sp / 4.0;
                        let inner = integrate(
                            |th| {
                                let (s, c) = th.sin_cos();
                                let (a, b) = (rho * c, rho * s);
                                let u = Vector3::new(a, b, t + 0.5 * a * b);
                                f(&self.split(&polar_mul(&base, &u)))
                            },
                            0.0,
                            2.0 * std::f64::consts::PI,
                            &o,
                        );
                        failed |= !inner.converged;
                        inner.value * dpsi
                    },
                    -half_pi,
                    half_pi,
                    &o,
                );
                failed |= !mid.converged;
                mid.value * r / 4.0
            },
            0.0,
            r_max,
            &o,
        );
        err_total += outer.error;
        if failed || !outer.converged {
            return Err(KernelError::Quadrature(format!("gauge-polar integral (estimate {:e})", outer.value)));
        }
        Ok((outer.value, err_total))
    }
}

impl Kernel for HeisenbergKernel {
    fn name(&self) -> String {
        "heisenberg".into()
    }

    fn meta(&self) -> KernelMeta {
        KernelMeta {
            left_invariant: true,
            homogeneity: Some(-2.0),
            pole: "diagonal ξ = η".into(),
            constant: self.constant,
            constant_error: self.constant_error,
            fundamental: true,
        }
    }

    fn eval(&self, xi: &[f64], eta: &[f64]) -> Result<f64, KernelError> {
        let n4 = gauge4(&self.relative(xi, eta));
        if n4 == 0.0 {
            return Err(KernelError::Pole);
        }
        Ok(self.constant / n4.sqrt())
    }

    fn fiber_breaks(&self, xi: &[f64], y: &[f64]) -> Vec<f64> {
        let s = xi[self.m];
        let tpol = |t: f64| {
            let mut eta = y[..self.m].to_vec();
            eta.push(t);
            let u = self.relative(xi, &eta);
            u[2] - 0.5 * u[0] * u[1]
        };
        let (t0, t1, t2) = (tpol(s), tpol(s + 1.0), tpol(s + 2.0));
        let mut out = vec![s];
        let slope = t1 - t0;
        if ((t2 - t1) - slope).abs() <= 1e-12 * (1.0 + slope.abs()) && slope.abs() > 1e-14 {
            out.push(s - t0 / slope);
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub constant: f64,
    pub error: f64,
    /// Relative change of the constant when the quadrature tolerance is tightened.
    pub resolution_change: f64,
    /// Residual of the defining identity for an independent test function.
    pub check_residual: f64,
}

/// Upper bound of the gauge of `ξ^{-1}η` over the bump's bounding box.
fn gauge_radius(kernel: &HeisenbergKernel, xi: &[f64], bump: &BumpFunction) -> f64 {
    let b = bump.bounding_box();
    let mut r: f64 = 0.0;
    let k = 8;
    for i in 0..=k {
        for j in 0..=k {
            for l in 0..=k {
                let t = [i, j, l];
                let eta: Vec<f64> = (0..3).map(|d| b[d].0 + (b[d].1 - b[d].0) * t[d] as f64 / k as f64).collect();
                r = r.max(gauge4(&kernel.relative(xi, &eta)).powf(0.25));
            }
        }
    }
    1.5 * r
}

/// `∫ Γ̃(ξ; η) 𝓛̃*φ̃(η) dη` for the kernel's current constant.
pub fn group_identity_integral(
    kernel: &HeisenbergKernel,
    op: &CompiledOperator,
    bump: &BumpFunction,
    xi: &[f64],
    tol: f64,
) -> Result<(f64, f64), KernelError> {
    let r_max = gauge_radius(kernel, xi, bump);
    let (v, e) = kernel.gauge_polar_integral(xi, |eta| bump.apply(op, eta).unwrap_or(f64::NAN), r_max, tol)?;
    Ok((kernel.constant * v, kernel.constant * e))
}

/// Chooses `c` so that `∫ Γ̃ 𝓛̃*φ̃ = −φ̃(ξ)`; `op` is `𝓛̃*` on the split chart.
pub fn calibrate_kernel_constant(
    kernel: &HeisenbergKernel,
    op: &CompiledOperator,
    bump: &BumpFunction,
    check: &BumpFunction,
    xi: &[f64],
) -> Result<Calibration, KernelError> {
    let unit = kernel.clone().with_constant(1.0, 0.0);
    let (coarse, _) = group_identity_integral(&unit, op, bump, xi, 1e-5)?;
    let (fine, err) = group_identity_integral(&unit, op, bump, xi, 1e-7)?;
    let phi = bump.eval(xi);
    if fine == 0.0 || phi == 0.0 {
        return Err(KernelError::Quadrature("test function vanishes at the pole".into()));
    }
    let constant = -phi / fine;
    let c_coarse = -phi / coarse;
    let calibrated = kernel.clone().with_constant(constant, (constant * err / fine).abs());
    let (v, _) = group_identity_integral(&calibrated, op, check, xi, 1e-6)?;
    let pc = check.eval(xi);
    Ok(Calibration {
        constant,
        error: (constant * err / fine).abs(),
        resolution_change: ((constant - c_coarse) / constant).abs(),
        check_residual: (v + pc).abs() / pc.abs().max(1.0),
    })
}

/// Calibrated Heisenberg kernel for a model, with the standard bump pair.
pub fn calibrated_heisenberg(model: &GroupModel, op: &CompiledOperator) -> Result<(HeisenbergKernel, Calibration), KernelError> {
    let k = HeisenbergKernel::for_model(model)?;
    let e = vec![0.0; 3];
    let bump = BumpFunction::new(e.clone(), 1.0, 6);
    let check = BumpFunction::new(vec![0.2, -0.1, 0.3], 1.3, 6);
    let cal = calibrate_kernel_constant(&k, op, &bump, &check, &e)?;
    let err = cal.error;
    Ok((k.with_constant(cal.constant, err), cal))
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub samples: usize,
    pub positivity_rate: f64,
    /// Max of `|𝓛̃Γ̃(ξ;·)| / Γ̃` over off-pole probes.
    pub harmonicity: f64,
    pub harmonicity_step: f64,
    /// Log–log slope of the fiber integrand tail.
    pub fiber_tail_exponent: f64,
    /// Truncated fiber integrals over a compact set form a convergent sequence.
    pub fiber_l1: bool,
    pub pass: bool,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Least-squares slope of `log y` against `log x`, with the fit's `R²`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.abs().ln()).collect();
    fit_slope(&lx, &ly)
}

/// Sampled evidence for positivity, harmonicity and fiber integrability; `op` is
/// `𝓛̃` on the split chart, `m` the base dimension.
pub fn check_kernel_hypotheses(kernel: &dyn Kernel, op: &CompiledOperator, m: usize, samples: usize, seed: u64) -> HypothesisReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = op.dim();
    let mut positive = 0;
    for _ in 0..samples {
        let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let eta: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if matches!(kernel.eval(&xi, &eta), Ok(v) if v > 0.0 && v.is_finite()) {
            positive += 1;
        }
    }
    let h = 1e-3;
    let mut harm: f64 = 0.0;
    let mut probes = 0;
    while probes < 20 {
        let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eta: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let dist = xi.iter().zip(&eta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist < 0.5 {
            continue;
        }
        probes += 1;
        let g = match kernel.eval(&xi, &eta) {
            Ok(v) => v,
            Err(_) => {
                harm = f64::INFINITY;
                continue;
            }
        };
        let lg = fd_apply(op, &mut |p: &[f64]| kernel.eval(&xi, p), &eta, h);
        harm = harm.max(match lg {
            Ok(v) => v.abs() / g.abs(),
            Err(_) => f64::INFINITY,
        });
    }
    let xi = vec![0.0; d];
    let mut y = vec![0.3; d];
    let taus: Vec<f64> = (6..13).map(|k| 2f64.powi(k)).collect();
    let vals: Vec<f64> = taus
        .iter()
        .map(|t| {
            y[m] = *t;
            kernel.eval(&xi, &y).unwrap_or(f64::NAN)
        })
        .collect();
    let (tail, _) = log_log_slope(&taus, &vals);
    // truncated fiber integrals at a few base points of a compact set
    let mut l1 = true;
    for base in [[0.5, 0.0], [0.0, 0.5], [-0.4, 0.3]] {
        let mut prev = 0.0;
        let mut incs = Vec::new();
        let mut r = 8.0;
        while r <= 1024.0 {
            let f = |t: f64| {
                let mut eta = base[..m.min(2)].to_vec();
                eta.resize(m, 0.0);
                eta.push(t);
                eta.resize(d, 0.0);
                kernel.eval(&xi, &eta).unwrap_or(f64::NAN)
            };
            let v = integrate_with_breaks(f, -r, r, &[0.0], &QuadOptions::new(1e-12, 1e-9)).value;
            incs.push((v - prev).abs());
            prev = v;
            r *= 2.0;
        }
        let ratios: Vec<f64> = incs.windows(2).skip(1).map(|w| w[1] / w[0]).collect();
        l1 &= ratios.iter().all(|q| q.is_finite() && *q < 0.9);
    }
    let positivity_rate = positive as f64 / samples.max(1) as f64;
    let pass = positivity_rate == 1.0 && harm < 1e-4 && tail < -1.0 && l1;
    HypothesisReport { samples, positivity_rate, harmonicity: harm, harmonicity_step: h, fiber_tail_exponent: tail, fiber_l1: l1, pass }
}

/// A kernel given by an expression in `(x, s; y, t)`.
#[derive(Debug, Clone)]
pub struct ExprKernel {
    pub symbols: Vec<String>,
    pub expr: Expr,
    compiled: CompiledExpr,
    pub meta: KernelMeta,
    name: String,
}

impl ExprKernel {
    pub fn new(name: &str, symbols: Vec<String>, expr: Expr, meta: KernelMeta) -> Result<Self, KernelError> {
        let names: Vec<&str> = symbols.iter().map(String::as_str).collect();
        let compiled = expr.compile(&names)?;
        Ok(ExprKernel { symbols, expr, compiled, meta, name: name.to_string() })
    }

    /// File format:
    ///
    /// ```text
    /// symbols = x1, x2, s1 ; y1, y2, t1
    /// kernel = 1/((x1 - y1)^2 + (x2 - y2)^2 + (s1 - t1)^2 + 1)
    /// left_invariant = false
    /// fundamental = false
    /// constant = 1
    /// ```
    pub fn parse(text: &str, name: &str) -> Result<Self, KernelError> {
        let mut symbols: Option<Vec<String>> = None;
        let mut body: Option<(usize, String)> = None;
        let mut meta = KernelMeta {
            left_invariant: false,
            homogeneity: None,
            pole: "diagonal ξ = η".into(),
            constant: 1.0,
            constant_error: 0.0,
            fundamental: false,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            let err = |m: &str| KernelError::File { line, message: m.to_string() };
            let (k, v) = t.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            let flag = |v: &str| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(err("expected true or false")),
            };
            let num = |v: &str| v.parse::<f64>().map_err(|_| err("expected a number"));
            match k {
                "symbols" => {
                    let (a, b) = v.split_once(';').ok_or_else(|| err("symbols need `xi ; eta` halves"))?;
                    let left: Vec<String> = a.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                    let right: Vec<String> = b.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                    if left.len() != right.len() || left.is_empty() {
                        return Err(err("both halves need the same number of symbols"));
                    }
                    symbols = Some(left.into_iter().chain(right).collect());
                }
                "kernel" => body = Some((line, v.to_string())),
                "left_invariant" => meta.left_invariant = flag(v)?,
                "fundamental" => meta.fundamental = flag(v)?,
                "homogeneity" => meta.homogeneity = Some(num(v)?),
                "constant" => meta.constant = num(v)?,
                _ => return Err(err(&format!("unknown key `{k}`"))),
            }
        }
        let symbols = symbols.ok_or(KernelError::File { line: 0, message: "missing `symbols`".into() })?;
        let (line, body) = body.ok_or(KernelError::File { line: 0, message: "missing `kernel`".into() })?;
        let names: Vec<&str> = symbols.iter().map(String::as_str).collect();
        let expr = Expr::parse(&body, &names).map_err(|e| KernelError::File { line, message: e.to_string() })?;
        Self::new(name, symbols, expr, meta)
    }

    pub fn load(path: &Path) -> Result<Self, KernelError> {
        let text = std::fs::read_to_string(path)?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("user");
        Self::parse(&text, name)
    }
}

impl Kernel for ExprKernel {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn meta(&self) -> KernelMeta {
        self.meta.clone()
    }

    fn eval(&self, xi: &[f64], eta: &[f64]) -> Result<f64, KernelError> {
        let mut p = xi.to_vec();
        p.extend_from_slice(eta);
        let v = self.compiled.eval(&p)?;
        if !v.is_finite() {
            return Err(KernelError::Pole);
        }
        Ok(self.meta.constant * v)
    }
}

/// `F(θ, p) = (2 + cos θ) exp(−|p|²)` at `ξ^{-1}η` on the SE(2) cover: left-invariant
/// and unchanged by `2π` shifts of either angle. Not a fundamental solution.
#[derive(Debug, Clone)]
pub struct SyntheticKernel {
    model: GroupModel,
}

impl SyntheticKernel {
    pub fn new(model: GroupModel) -> Self {
        SyntheticKernel { model }
    }
}

impl Kernel for SyntheticKernel {
    fn name(&self) -> String {
        "synthetic".into()
    }

    fn meta(&self) -> KernelMeta {
        KernelMeta {
            left_invariant: true,
            homogeneity: None,
            pole: "none".into(),
            constant: 1.0,
            constant_error: 0.0,
            fundamental: false,
        }
    }

    fn eval(&self, xi: &[f64], eta: &[f64]) -> Result<f64, KernelError> {
        let g = self.model.split_mul(&self.model.split_inv(xi)?, eta)?;
        let p2: f64 = g[1..].iter().map(|v| v * v).sum();
        Ok((2.0 + g[0].cos()) * (-p2).exp())
    }
}

/// `base + amplitude · exp(−s²) / (1 + t²)`: breaks left-invariance on purpose.
pub struct PerturbedKernel {
    pub base: Arc<dyn Kernel>,
    pub amplitude: f64,
    pub m: usize,
}

impl Kernel for PerturbedKernel {
    fn name(&self) -> String {
        format!("{}+perturbation", self.base.name())
    }

    fn meta(&self) -> KernelMeta {
        KernelMeta { left_invariant: false, fundamental: false, ..self.base.meta() }
    }

    fn eval(&self, xi: &[f64], eta: &[f64]) -> Result<f64, KernelError> {
        let s = xi[self.m];
        let t = eta[self.m];
        Ok(self.base.eval(xi, eta)? + self.amplitude * (-s * s).exp() / (1.0 + t * t))
    }

    fn fiber_breaks(&self, xi: &[f64], y: &[f64]) -> Vec<f64> {
        self.base.fiber_breaks(xi, y)
    }
}
