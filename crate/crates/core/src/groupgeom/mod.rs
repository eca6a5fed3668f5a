//! The group side of the lifting: the projection `E`, the section `ℓ`,
//! kernel frames and the density factors `ρ`, `c`, `ρ̄`.

pub mod builtin;
pub mod lie;
pub mod ode;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::closure::{lie_closure, numeric_rank, ClosureError, ClosureOptions, LieAlgebraPresentation};
use crate::expr::{EvalError, Expr};
use crate::fields::{Chart, CompiledField, FieldError, VectorField};
pub use builtin::ClosedForm;
use lie::ExpChart;
use ode::{integrate, OdeError, OdeOptions};

#[derive(Debug, Error)]
pub enum GeomError {
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("flow failed: {0}")]
    Ode(#[from] OdeError),
    #[error("rank condition fails at {point:?}: rank {rank} < {m}")]
    Hormander { point: Vec<f64>, rank: usize, m: usize },
    #[error("base point has {got} coordinates, chart has {want}")]
    BasePoint { got: usize, want: usize },
    #[error("section solve did not converge at {point:?} (residual {residual:e})")]
    Newton { point: Vec<f64>, residual: f64 },
    #[error("closed form `{name}` does not match the model: {reason}")]
    ClosedFormMismatch { name: String, reason: String },
    #[error("ill-conditioned frame transport at {0:?}")]
    IllConditioned(Vec<f64>),
}

/// How a group element is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Repr {
    /// Exponential coordinates of the first kind.
    Exp1,
    /// `(x, s)` with `x ∈ M` and `s` in the fiber.
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupPoint {
    pub repr: Repr,
    pub coords: Vec<f64>,
}

impl GroupPoint {
    pub fn exp1(coords: Vec<f64>) -> Self {
        GroupPoint { repr: Repr::Exp1, coords }
    }

    pub fn split(x: &[f64], s: &[f64]) -> Self {
        let mut coords = x.to_vec();
        coords.extend_from_slice(s);
        GroupPoint { repr: Repr::Split, coords }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub sample_box: Vec<(f64, f64)>,
    pub seed: u64,
    pub max_depth: usize,
    pub flip_orientation: bool,
    pub fiber_names: Vec<String>,
    pub closed_form: Option<Arc<dyn ClosedForm>>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            sample_box: Vec::new(),
            seed: 7,
            max_depth: 6,
            flip_orientation: false,
            fiber_names: Vec::new(),
            closed_form: None,
        }
    }
}

/// A model `M` with its generating fields, closed Lie algebra and group data.
#[derive(Debug, Clone)]
pub struct GroupModel {
    pub name: String,
    pub chart: Arc<Chart>,
    pub fiber_names: Vec<String>,
    pub presentation: LieAlgebraPresentation,
    pub exp: ExpChart,
    compiled: Vec<CompiledField>,
    pub base_point: Vec<f64>,
    /// Indices of the basis fields spanning `𝔤′`.
    pub gprime: Vec<usize>,
    /// Orthonormal basis `Y_1..Y_p` of `Lie(G^z)` in the basis coefficients.
    pub y_frame: DMatrix<f64>,
    /// `sign det[𝒳(z)^T | Y]`, kept along every fiber frame.
    pub orientation: f64,
    pub closed_form: Option<Arc<dyn ClosedForm>>,
    pub ode: OdeOptions,
    pub sample_box: Vec<(f64, f64)>,
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

impl GroupModel {
    pub fn build(name: &str, generators: &[VectorField], base_point: Vec<f64>, opts: BuildOptions) -> Result<Self, GeomError> {
        let mut copts = ClosureOptions::for_box(opts.sample_box.clone());
        copts.seed = opts.seed;
        copts.max_depth = opts.max_depth;
        let presentation = lie_closure(generators, &copts)?;
        let chart = presentation.chart.clone();
        let m = chart.dim();
        if base_point.len() != m {
            return Err(GeomError::BasePoint { got: base_point.len(), want: m });
        }
        let n = presentation.n();
        let compiled = presentation.compiled()?;
        let exp = ExpChart::new(presentation.constants.clone());

        let mut model = GroupModel {
            name: name.to_string(),
            chart: chart.clone(),
            fiber_names: Vec::new(),
            presentation,
            exp,
            compiled,
            base_point: base_point.clone(),
            gprime: Vec::new(),
            y_frame: DMatrix::zeros(n, 0),
            orientation: 1.0,
            closed_form: None,
            ode: OdeOptions::default(),
            sample_box: if opts.sample_box.len() == m { opts.sample_box.clone() } else { vec![(-2.0, 2.0); m] },
        };
        let xz = model.frame(&base_point)?;
        let (rank, _) = numeric_rank(&xz);
        if rank < m {
            return Err(GeomError::Hormander { point: base_point, rank, m });
        }
        // first m basis fields independent at z
        let mut chosen: Vec<usize> = Vec::new();
        for j in 0..n {
            let mut trial = chosen.clone();
            trial.push(j);
            let sub = DMatrix::from_fn(m, trial.len(), |r, c| xz[(r, trial[c])]);
            if numeric_rank(&sub).0 == trial.len() {
                chosen = trial;
            }
            if chosen.len() == m {
                break;
            }
        }
        model.gprime = chosen;
        let p = n - m;
        let mut kz = kernel_basis(&xz, p);
        // orient so that the rows outside 𝔤′ form a positive block
        let rest: Vec<usize> = (0..n).filter(|i| !model.gprime.contains(i)).collect();
        if p > 0 {
            let block = DMatrix::from_fn(p, p, |r, c| kz[(rest[r], c)]);
            if block.determinant() < 0.0 {
                negate_first(&mut kz);
            }
            if opts.flip_orientation {
                negate_first(&mut kz);
            }
        }
        model.orientation = if p > 0 { orientation_sign(&xz, &kz) } else { 1.0 };
        model.y_frame = kz;
        model.fiber_names = if opts.fiber_names.len() == p {
            opts.fiber_names.clone()
        } else if p == 1 {
            vec!["s1".to_string()]
        } else {
            (1..=p).map(|j| format!("s{j}")).collect()
        };
        if let Some(cf) = opts.closed_form {
            model.check_closed_form(cf.as_ref())?;
            model.closed_form = Some(if opts.flip_orientation { Arc::new(builtin::Flipped(cf)) } else { cf });
        }
        Ok(model)
    }

    fn check_closed_form(&self, cf: &dyn ClosedForm) -> Result<(), GeomError> {
        let fail = |reason: String| GeomError::ClosedFormMismatch { name: cf.name().to_string(), reason };
        if cf.chart_dim() != self.m() || cf.basis_dim() != self.n() {
            return Err(fail(format!("dimensions ({}, {}) vs ({}, {})", cf.chart_dim(), cf.basis_dim(), self.m(), self.n())));
        }
        if self.base_point.iter().any(|v| *v != 0.0) {
            return Err(fail("closed forms are stated for the base point 0".into()));
        }
        let gens = cf.generators();
        let names = self.chart.names();
        for (i, g) in gens.iter().enumerate() {
            let want = VectorField::parse(self.chart.clone(), g).map_err(|e| fail(e.to_string()))?;
            let have = self.presentation.basis.get(i).ok_or_else(|| fail("too few generators".into()))?;
            if !have.sub(&want)?.is_zero() {
                return Err(fail(format!("generator {} is {have}, expected {want}", i + 1)));
            }
        }
        if gens.len() != self.presentation.q {
            return Err(fail(format!("{} generators declared, closed form has {}", self.presentation.q, gens.len())));
        }
        let _ = names;
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.chart.dim()
    }

    pub fn n(&self) -> usize {
        self.presentation.n()
    }

    pub fn p(&self) -> usize {
        self.n() - self.m()
    }

    pub fn basis(&self) -> &[VectorField] {
        &self.presentation.basis
    }

    /// Chart of `M × G^z` with the fiber coordinates appended.
    pub fn lifted_chart(&self) -> Arc<Chart> {
        self.chart.product(&self.fiber_names, &format!("{}~", self.chart.name))
    }

    /// `𝒳(x) = (X_1(x)|…|X_n(x))`.
    pub fn frame(&self, x: &[f64]) -> Result<DMatrix<f64>, GeomError> {
        let m = self.m();
        let mut a = DMatrix::zeros(m, self.n());
        let mut col = vec![0.0; m];
        for (j, f) in self.compiled.iter().enumerate() {
            f.eval_into(x, &mut col)?;
            for i in 0..m {
                a[(i, j)] = col[i];
            }
        }
        Ok(a)
    }

    /// `Σ ξ_i X_i(x)`.
    pub fn field_at(&self, xi: &[f64], x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut col = vec![0.0; out.len()];
        for (f, c) in self.compiled.iter().zip(xi) {
            if *c == 0.0 {
                continue;
            }
            f.eval_into(x, &mut col)?;
            for (o, v) in out.iter_mut().zip(&col) {
                *o += c * v;
            }
        }
        Ok(())
    }

    /// Time-`t` flow of `Σ ξ_i X_i` from `x`.
    pub fn flow(&self, xi: &[f64], x: &[f64], t: f64) -> Result<Vec<f64>, GeomError> {
        Ok(integrate(|y, out| self.field_at(xi, y, out), x, t, &self.ode)?)
    }

    /// `E(ξ)`: closed form when available.
    pub fn e_map(&self, xi: &[f64]) -> Result<Vec<f64>, GeomError> {
        match &self.closed_form {
            Some(cf) => Ok(cf.e_map(xi)),
            None => self.e_map_flow(xi),
        }
    }

    /// `E(ξ) = Ψ_1(z)` by integrating the flow of `Σ ξ_i X_i`.
    pub fn e_map_flow(&self, xi: &[f64]) -> Result<Vec<f64>, GeomError> {
        if xi.iter().all(|v| *v == 0.0) {
            return Ok(self.base_point.clone());
        }
        self.flow(xi, &self.base_point, 1.0)
    }

    pub fn e_map_flow_with(&self, xi: &[f64], opts: &OdeOptions) -> Result<Vec<f64>, GeomError> {
        if xi.iter().all(|v| *v == 0.0) {
            return Ok(self.base_point.clone());
        }
        Ok(integrate(|y, out| self.field_at(xi, y, out), &self.base_point, 1.0, opts)?)
    }

    /// Image of a group point in `M`.
    pub fn project(&self, g: &GroupPoint) -> Result<Vec<f64>, GeomError> {
        match g.repr {
            Repr::Exp1 => self.e_map(&g.coords),
            Repr::Split => Ok(g.coords[..self.m()].to_vec()),
        }
    }

    /// Right action of `exp(ξ)` on a point of `M`: the time-1 flow from `x`.
    pub fn act(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>, GeomError> {
        self.flow(xi, x, 1.0)
    }

    /// `1/√det(𝒳𝒳^T)`.
    pub fn rho(&self, x: &[f64]) -> Result<f64, GeomError> {
        let a = self.frame(x)?;
        let g = &a * a.transpose();
        let d = g.determinant();
        if !(d > 1e-24) {
            let (rank, _) = numeric_rank(&a);
            return Err(GeomError::Hormander { point: x.to_vec(), rank, m: self.m() });
        }
        Ok(1.0 / d.sqrt())
    }

    /// `ρ` as an expression, from the symbolic Gram determinant.
    pub fn rho_symbolic(&self) -> Expr {
        let m = self.m();
        let gram: Vec<Vec<Expr>> = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| {
                        let mut acc = Expr::zero();
                        for f in self.basis() {
                            acc = acc + &f.coeffs()[a] * &f.coeffs()[b];
                        }
                        acc.simplify()
                    })
                    .collect()
            })
            .collect();
        let det = det_expr(&gram).simplify();
        (Expr::one() / det.sqrt()).simplify()
    }

    /// Orthonormal basis of `Ker 𝒳(x)` oriented consistently with the base point.
    pub fn ker_frame(&self, x: &[f64]) -> Result<DMatrix<f64>, GeomError> {
        let a = self.frame(x)?;
        let (rank, _) = numeric_rank(&a);
        if rank < self.m() {
            return Err(GeomError::Hormander { point: x.to_vec(), rank, m: self.m() });
        }
        let p = self.p();
        let mut k = kernel_basis(&a, p);
        if p > 0 && orientation_sign(&a, &k) != self.orientation {
            negate_first(&mut k);
        }
        Ok(k)
    }

    /// `ℓ(x)` in exponential coordinates.
    pub fn section(&self, x: &[f64]) -> Result<Vec<f64>, GeomError> {
        match &self.closed_form {
            Some(cf) => Ok(cf.section(x)),
            None => self.section_newton(x),
        }
    }

    fn embed(&self, a: &[f64]) -> Vec<f64> {
        let mut xi = vec![0.0; self.n()];
        for (k, &i) in self.gprime.iter().enumerate() {
            xi[i] = a[k];
        }
        xi
    }

    /// `ℓ(x) = exp(Pa)` with `E(Pa) = x`, solved by damped Newton with continuation from `z`.
    pub fn section_newton(&self, x: &[f64]) -> Result<Vec<f64>, GeomError> {
        let m = self.m();
        let z = &self.base_point;
        if x.len() != m {
            return Err(GeomError::BasePoint { got: x.len(), want: m });
        }
        let dist: f64 = x.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let mut a = vec![0.0; m];
        let stages = (dist / 0.5).ceil().max(1.0) as usize;
        for k in 1..=stages {
            let t = k as f64 / stages as f64;
            let target: Vec<f64> = z.iter().zip(x).map(|(zi, xi)| zi + t * (xi - zi)).collect();
            a = self.newton(&target, a)?;
        }
        Ok(self.embed(&a))
    }

    fn newton(&self, target: &[f64], mut a: Vec<f64>) -> Result<Vec<f64>, GeomError> {
        let opts = OdeOptions::tight();
        let m = self.m();
        let resid = |a: &[f64]| -> Result<DVector<f64>, GeomError> {
            let e = self.e_map_flow_with(&self.embed(a), &opts)?;
            Ok(DVector::from_iterator(m, e.iter().zip(target).map(|(u, v)| u - v)))
        };
        let mut r = resid(&a)?;
        for _ in 0..60 {
            if r.norm() < 1e-12 * (1.0 + target.iter().map(|v| v.abs()).sum::<f64>()) {
                return Ok(a);
            }
            let xi = self.embed(&a);
            let x = self.e_map_flow_with(&xi, &opts)?;
            let jac = self.frame(&x)? * self.exp.left_trivialize(&xi);
            let jp = DMatrix::from_fn(m, m, |r, c| jac[(r, self.gprime[c])]);
            let Some(step) = jp.lu().solve(&r) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let trial: Vec<f64> = a.iter().zip(step.iter()).map(|(u, d)| u - lambda * d).collect();
                if let Ok(rt) = resid(&trial) {
                    if rt.norm() < r.norm() {
                        a = trial;
                        r = rt;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if r.norm() < 1e-9 {
            return Ok(a);
        }
        Err(GeomError::Newton { point: target.to_vec(), residual: r.norm() })
    }

    /// `Dℓ(x)`: n×m derivative of the section in exponential coordinates.
    pub fn section_derivative(&self, x: &[f64]) -> Result<DMatrix<f64>, GeomError> {
        let m = self.m();
        let n = self.n();
        if self.closed_form.is_none() {
            let xi = self.section(x)?;
            let jac = self.frame(x)? * self.exp.left_trivialize(&xi);
            let jp = DMatrix::from_fn(m, m, |r, c| jac[(r, self.gprime[c])]);
            let inv = jp.try_inverse().ok_or_else(|| GeomError::IllConditioned(x.to_vec()))?;
            let mut d = DMatrix::zeros(n, m);
            for (k, &i) in self.gprime.iter().enumerate() {
                for c in 0..m {
                    d[(i, c)] = inv[(k, c)];
                }
            }
            return Ok(d);
        }
        let h = 1e-5;
        let mut d = DMatrix::zeros(n, m);
        for c in 0..m {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[c] += h;
            xm[c] -= h;
            let (sp, sm) = (self.section(&xp)?, self.section(&xm)?);
            for r in 0..n {
                d[(r, c)] = (sp[r] - sm[r]) / (2.0 * h);
            }
        }
        Ok(d)
    }

    /// Product in exponential coordinates.
    pub fn mul(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>, GeomError> {
        match &self.closed_form {
            Some(cf) => Ok(cf.split_to_exp(&cf.split_mul(&cf.exp_to_split(a), &cf.exp_to_split(b)))),
            None => Ok(self.exp.mul(a, b, &OdeOptions::tight())?),
        }
    }

    pub fn inv(&self, a: &[f64]) -> Vec<f64> {
        self.exp.inverse(a)
    }

    /// Product of split-coordinate points.
    pub fn split_mul(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>, GeomError> {
        match &self.closed_form {
            Some(cf) => Ok(cf.split_mul(a, b)),
            None => {
                let ea = self.from_split(a)?;
                let eb = self.from_split(b)?;
                self.to_split(&self.mul(&ea, &eb)?)
            }
        }
    }

    pub fn split_inv(&self, a: &[f64]) -> Result<Vec<f64>, GeomError> {
        match &self.closed_form {
            Some(cf) => Ok(cf.split_inv(a)),
            None => self.to_split(&self.inv(&self.from_split(a)?)),
        }
    }

    /// Exponential coordinates to `(x, s)`: `x = E(ξ)` and `s = Y^T log(ξ·ℓ(x)^{-1})`.
    pub fn to_split(&self, xi: &[f64]) -> Result<Vec<f64>, GeomError> {
        if let Some(cf) = &self.closed_form {
            return Ok(cf.exp_to_split(xi));
        }
        let x = self.e_map(xi)?;
        let l = self.section(&x)?;
        let h = self.mul(xi, &self.inv(&l))?;
        let s = self.y_frame.transpose() * DVector::from_column_slice(&h);
        let mut out = x;
        out.extend(s.iter());
        Ok(out)
    }

    /// `(x, s) ↦ exp(Σ s_j Y_j)·ℓ(x)`.
    pub fn from_split(&self, xs: &[f64]) -> Result<Vec<f64>, GeomError> {
        if let Some(cf) = &self.closed_form {
            return Ok(cf.split_to_exp(xs));
        }
        let m = self.m();
        let h = &self.y_frame * DVector::from_column_slice(&xs[m..]);
        let l = self.section(&xs[..m])?;
        self.mul(&to_vec(&h), &l)
    }

    pub fn to_repr(&self, g: &GroupPoint, repr: Repr) -> Result<GroupPoint, GeomError> {
        let coords = match (g.repr, repr) {
            (a, b) if a == b => g.coords.clone(),
            (Repr::Exp1, Repr::Split) => self.to_split(&g.coords)?,
            (Repr::Split, Repr::Exp1) => self.from_split(&g.coords)?,
            _ => unreachable!(),
        };
        Ok(GroupPoint { repr, coords })
    }

    /// Left Haar density with respect to `dξ`.
    pub fn haar(&self, xi: &[f64]) -> f64 {
        self.exp.haar_density(xi)
    }

    /// `c(x) = det(K(x)^T Ad_{ℓ(x)^{-1}} Y)`.
    pub fn fiber_scaling_c(&self, x: &[f64]) -> Result<f64, GeomError> {
        if self.p() == 0 {
            return Ok(1.0);
        }
        let l = self.section(x)?;
        let k = self.ker_frame(x)?;
        let ad = self.exp.adjoint(&self.inv(&l));
        Ok((k.transpose() * ad * &self.y_frame).determinant())
    }

    /// `c` measured at the fiber point `exp(sY)·ℓ(x)` by finite differences of right translation.
    pub fn fiber_scaling_c_at(&self, x: &[f64], s: &[f64]) -> Result<f64, GeomError> {
        let p = self.p();
        if p == 0 {
            return Ok(1.0);
        }
        let l = self.section(x)?;
        let g = to_vec(&(&self.y_frame * DVector::from_column_slice(s)));
        let xi = self.mul(&g, &l)?;
        let h = 1e-5;
        let mut pushed = DMatrix::zeros(self.n(), p);
        for j in 0..p {
            let mut sp = s.to_vec();
            let mut sm = s.to_vec();
            sp[j] += h;
            sm[j] -= h;
            let gp = to_vec(&(&self.y_frame * DVector::from_column_slice(&sp)));
            let gm = to_vec(&(&self.y_frame * DVector::from_column_slice(&sm)));
            let (a, b) = (self.mul(&gp, &l)?, self.mul(&gm, &l)?);
            for r in 0..self.n() {
                pushed[(r, j)] = (a[r] - b[r]) / (2.0 * h);
            }
        }
        let k = self.ker_frame(x)?;
        let num = (k.transpose() * self.exp.left_trivialize(&xi) * pushed).determinant();
        let v = self.exp.left_trivialize(&g) * &self.y_frame;
        let den = (self.y_frame.transpose() * v).determinant();
        if den.abs() < 1e-12 {
            return Err(GeomError::IllConditioned(x.to_vec()));
        }
        Ok(num / den)
    }

    /// `ρ̄ = ρ·c`.
    pub fn rho_bar(&self, x: &[f64]) -> Result<f64, GeomError> {
        Ok(self.rho(x)? * self.fiber_scaling_c(x)?)
    }

    /// `𝓜(x)` from the section-induced splitting: row `i` is the left-trivialized
    /// fiber velocity of `X̃_i`, in the `Y` basis.
    pub fn vertical_numeric(&self, x: &[f64]) -> Result<DMatrix<f64>, GeomError> {
        let n = self.n();
        let l = self.section(x)?;
        let ad = self.exp.adjoint(&l);
        let rt = self.exp.right_trivialize(&l);
        let dl = self.section_derivative(x)?;
        let frame = self.frame(x)?;
        let w = ad - rt * dl * frame;
        let _ = n;
        Ok((self.y_frame.transpose() * w).transpose().map(|v| if v.abs() < 1e-15 { 0.0 } else { v }))
    }

    /// Metric-orthogonal variant: the `Ker` projection of each `X̃_i` transported to `Lie(G^z)`.
    pub fn vertical_orthogonal(&self, x: &[f64]) -> Result<DMatrix<f64>, GeomError> {
        let l = self.section(x)?;
        let k = self.ker_frame(x)?;
        let ad = self.exp.adjoint(&l);
        Ok((self.y_frame.transpose() * ad * &k * k.transpose()).transpose())
    }

    /// Closed-form `𝓜` rows as expressions, when the model has them.
    pub fn vertical_closed(&self) -> Option<Vec<Vec<Expr>>> {
        let names = self.chart.names();
        self.closed_form.as_ref().map(|cf| cf.vertical_exprs(&names))
    }

    /// Uniform random points of the sample box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample_box.iter().map(|(a, b)| rng.gen_range(*a..=*b)).collect()).collect()
    }

    /// Flows each basis field for `t = ±1` from sampled starts; a blow-up is evidence of incompleteness.
    pub fn completeness_heuristic(&self, starts: &[Vec<f64>]) -> CompletenessReport {
        let mut failures = Vec::new();
        for (i, _) in self.basis().iter().enumerate() {
            let mut e = vec![0.0; self.n()];
            e[i] = 1.0;
            for x in starts {
                for t in [1.0, -1.0] {
                    if let Err(err) = self.flow(&e, x, t) {
                        failures.push(format!("X{} from {:?}, t = {}: {}", i + 1, x, t, err));
                    }
                }
            }
        }
        CompletenessReport { starts: starts.len(), complete: failures.is_empty(), failures }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletenessReport {
    pub starts: usize,
    pub complete: bool,
    pub failures: Vec<String>,
}

/// Orthonormal basis of the `p`-dimensional null space of `a`.
fn kernel_basis(a: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let n = a.ncols();
    if p == 0 {
        return DMatrix::zeros(n, 0);
    }
    let g = a.transpose() * a;
    let eig = g.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut k = DMatrix::from_fn(n, p, |r, c| eig.eigenvectors[(r, idx[c])]);
    // fix the sign of each vector by its largest entry
    for c in 0..p {
        let col = k.column(c);
        let big = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() + 1e-12 { v } else { acc });
        if big < 0.0 {
            k.column_mut(c).neg_mut();
        }
    }
    k
}

fn negate_first(k: &mut DMatrix<f64>) {
    if k.ncols() > 0 {
        k.column_mut(0).neg_mut();
    }
}

/// `sign det[𝒳^T | K]`.
fn orientation_sign(a: &DMatrix<f64>, k: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    let m = a.nrows();
    let full = DMatrix::from_fn(n, n, |r, c| if c < m { a[(c, r)] } else { k[(r, c - m)] });
    if full.determinant() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Cofactor determinant of a small symbolic matrix.
pub fn det_expr(a: &[Vec<Expr>]) -> Expr {
    match a.len() {
        0 => Expr::one(),
        1 => a[0][0].clone(),
        2 => &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0],
        n => {
            let mut acc = Expr::zero();
            for c in 0..n {
                let minor: Vec<Vec<Expr>> =
                    a[1..].iter().map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, e)| e.clone()).collect()).collect();
                let term = &a[0][c] * det_expr(&minor);
                acc = if c % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests;
