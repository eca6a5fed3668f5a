//! Closed-form group data for the built-in models.
//!
//! Both built-ins use split coordinates `(x1, x2, s)` that coincide with the
//! group's own model coordinates, and the base point `z = 0`.

use std::fmt::Debug;
use std::sync::Arc;

use crate::expr::Expr;

pub trait ClosedForm: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    /// Projection to M of an exp1 point.
    fn e_map(&self, xi: &[f64]) -> Vec<f64>;
    fn exp_to_split(&self, xi: &[f64]) -> Vec<f64>;
    fn split_to_exp(&self, xs: &[f64]) -> Vec<f64>;
    fn split_mul(&self, a: &[f64], b: &[f64]) -> Vec<f64>;
    fn split_inv(&self, a: &[f64]) -> Vec<f64>;
    /// Rows of 𝓜 (one per basis field), as expressions in the chart coordinates.
    fn vertical_rows(&self) -> Vec<Vec<&'static str>>;
    /// Number of chart coordinates the closed form expects.
    fn chart_dim(&self) -> usize;
    fn basis_dim(&self) -> usize;
    /// Generator coefficients the closed form was derived for.
    fn generators(&self) -> Vec<Vec<&'static str>>;

    fn section(&self, x: &[f64]) -> Vec<f64> {
        let mut xs = x.to_vec();
        xs.resize(self.basis_dim(), 0.0);
        self.split_to_exp(&xs)
    }

    fn vertical_exprs(&self, coords: &[&str]) -> Vec<Vec<Expr>> {
        self.vertical_rows()
            .iter()
            .map(|row| row.iter().map(|s| Expr::parse(s, coords).expect("built-in row parses")).collect())
            .collect()
    }
}

pub fn lookup(name: &str) -> Option<Arc<dyn ClosedForm>> {
    match name {
        "grushin" | "heisenberg" => Some(Arc::new(Grushin)),
        "sine-se2" | "se2-cover" => Some(Arc::new(SineSe2)),
        _ => None,
    }
}

/// `X1 = ∂x1`, `X2 = x1 ∂x2` lifting to the Heisenberg group.
#[derive(Debug, Clone, Copy)]
pub struct Grushin;

impl ClosedForm for Grushin {
    fn name(&self) -> &'static str {
        "grushin"
    }

    fn e_map(&self, xi: &[f64]) -> Vec<f64> {
        vec![xi[0], xi[2] + xi[0] * xi[1] / 2.0]
    }

    fn exp_to_split(&self, xi: &[f64]) -> Vec<f64> {
        vec![xi[0], xi[2] + xi[0] * xi[1] / 2.0, xi[1]]
    }

    fn split_to_exp(&self, xs: &[f64]) -> Vec<f64> {
        vec![xs[0], xs[2], xs[1] - xs[0] * xs[2] / 2.0]
    }

    fn split_mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        vec![a[0] + b[0], a[1] + b[1] + a[0] * b[2], a[2] + b[2]]
    }

    fn split_inv(&self, a: &[f64]) -> Vec<f64> {
        vec![-a[0], -a[1] + a[0] * a[2], -a[2]]
    }

    fn vertical_rows(&self) -> Vec<Vec<&'static str>> {
        vec![vec!["0"], vec!["1"], vec!["0"]]
    }

    fn chart_dim(&self) -> usize {
        2
    }

    fn basis_dim(&self) -> usize {
        3
    }

    fn generators(&self) -> Vec<Vec<&'static str>> {
        vec![vec!["1", "0"], vec!["0", "x1"]]
    }
}

/// `X1 = ∂x1`, `X2 = sin(x1) ∂x2` lifting to the universal cover of SE(2).
#[derive(Debug, Clone, Copy)]
pub struct SineSe2;

/// `sin(a)/a` and `(1 - cos a)/a` with their limits at zero.
pub fn sinc_pair(a: f64) -> (f64, f64) {
    if a.abs() < 1e-4 {
        let a2 = a * a;
        (1.0 - a2 / 6.0 + a2 * a2 / 120.0, a / 2.0 - a * a2 / 24.0 + a * a2 * a2 / 720.0)
    } else {
        (a.sin() / a, (1.0 - a.cos()) / a)
    }
}

impl SineSe2 {
    fn rot(theta: f64, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = theta.sin_cos();
        [c * p[0] + s * p[1], -s * p[0] + c * p[1]]
    }
}

impl ClosedForm for SineSe2 {
    fn name(&self) -> &'static str {
        "sine-se2"
    }

    fn e_map(&self, xi: &[f64]) -> Vec<f64> {
        let v = self.exp_to_split(xi);
        vec![v[0], v[1]]
    }

    fn exp_to_split(&self, xi: &[f64]) -> Vec<f64> {
        let (f1, f2) = sinc_pair(xi[0]);
        vec![xi[0], f2 * xi[1] + f1 * xi[2], f1 * xi[1] - f2 * xi[2]]
    }

    fn split_to_exp(&self, xs: &[f64]) -> Vec<f64> {
        let (f1, f2) = sinc_pair(xs[0]);
        let d = f1 * f1 + f2 * f2;
        vec![xs[0], (f2 * xs[1] + f1 * xs[2]) / d, (f1 * xs[1] - f2 * xs[2]) / d]
    }

    fn split_mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let r = Self::rot(a[0], [b[1], b[2]]);
        vec![a[0] + b[0], a[1] + r[0], a[2] + r[1]]
    }

    fn split_inv(&self, a: &[f64]) -> Vec<f64> {
        let r = Self::rot(-a[0], [a[1], a[2]]);
        vec![-a[0], -r[0], -r[1]]
    }

    fn vertical_rows(&self) -> Vec<Vec<&'static str>> {
        vec![vec!["0"], vec!["cos(x1)"], vec!["-sin(x1)"]]
    }

    fn chart_dim(&self) -> usize {
        2
    }

    fn basis_dim(&self) -> usize {
        3
    }

    fn generators(&self) -> Vec<Vec<&'static str>> {
        vec![vec!["1", "0"], vec!["0", "sin(x1)"]]
    }
}

/// The same closed form with the fiber coordinate reversed, `s ↦ -s`.
#[derive(Debug, Clone)]
pub struct Flipped(pub Arc<dyn ClosedForm>);

fn flip_tail(v: &[f64], m: usize) -> Vec<f64> {
    v.iter().enumerate().map(|(i, x)| if i >= m { -x } else { *x }).collect()
}

impl ClosedForm for Flipped {
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn e_map(&self, xi: &[f64]) -> Vec<f64> {
        self.0.e_map(xi)
    }

    fn exp_to_split(&self, xi: &[f64]) -> Vec<f64> {
        flip_tail(&self.0.exp_to_split(xi), self.chart_dim())
    }

    fn split_to_exp(&self, xs: &[f64]) -> Vec<f64> {
        self.0.split_to_exp(&flip_tail(xs, self.chart_dim()))
    }

    fn split_mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let m = self.chart_dim();
        flip_tail(&self.0.split_mul(&flip_tail(a, m), &flip_tail(b, m)), m)
    }

    fn split_inv(&self, a: &[f64]) -> Vec<f64> {
        let m = self.chart_dim();
        flip_tail(&self.0.split_inv(&flip_tail(a, m)), m)
    }

    fn vertical_rows(&self) -> Vec<Vec<&'static str>> {
        self.0.vertical_rows()
    }

    fn vertical_exprs(&self, coords: &[&str]) -> Vec<Vec<Expr>> {
        self.0
            .vertical_exprs(coords)
            .into_iter()
            .map(|row| row.into_iter().map(|e| (-e).simplify()).collect())
            .collect()
    }

    fn chart_dim(&self) -> usize {
        self.0.chart_dim()
    }

    fn basis_dim(&self) -> usize {
        self.0.basis_dim()
    }

    fn generators(&self) -> Vec<Vec<&'static str>> {
        self.0.generators()
    }
}
