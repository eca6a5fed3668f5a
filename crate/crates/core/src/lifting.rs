//! Lifted fields on `M × G^z`, the vertical matrix `𝓜`, and the lifted
//! operator `𝓛̃ = 𝓛 + R` with its adjoint.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::closure::{numeric_rank, StructureConstants};
use crate::expr::Expr;
use crate::fields::{Chart, CoordOperator, DiffOperator, FieldError, GeneratorSet, VectorField};
use crate::groupgeom::{GeomError, GroupModel};

#[derive(Debug, Error)]
pub enum LiftError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("no symbolic vertical matrix: the model has no closed form or declared [lift] rows")]
    NoSymbolicRows,
    #[error("declared vertical matrix has shape {got:?}, expected {want:?}")]
    RowShape { got: (usize, usize), want: (usize, usize) },
    #[error("vertical coefficient `{0}` depends on a fiber coordinate")]
    FiberDependent(String),
}

/// `X_i + Σ_j 𝓜_ij(x) ∂_{s_j}` on `M × G^z`.
#[derive(Debug, Clone)]
pub struct LiftedField {
    pub horizontal: VectorField,
    pub vertical: Vec<Expr>,
    pub field: VectorField,
}

impl LiftedField {
    pub fn drop_vertical(&self) -> VectorField {
        self.horizontal.clone()
    }
}

/// Coordinate form of `𝓛̃`, split into its base part and the remainder carrying fiber derivatives.
#[derive(Debug, Clone)]
pub struct LiftedOperator {
    pub operator: DiffOperator,
    pub full: CoordOperator,
    pub base: CoordOperator,
    pub remainder: CoordOperator,
}

impl LiftedOperator {
    fn from_operator(operator: DiffOperator, m: usize) -> Self {
        let full = operator.coordinate_form();
        let chart = full.chart().clone();
        let mut base = CoordOperator::zero(chart.clone());
        let mut remainder = CoordOperator::zero(chart.clone());
        for (beta, c) in full.terms() {
            let term = CoordOperator::term(chart.clone(), beta.clone(), c.clone());
            if beta[m..].iter().any(|k| *k > 0) {
                remainder = remainder.add(&term);
            } else {
                base = base.add(&term);
            }
        }
        LiftedOperator { operator, full, base, remainder }
    }

    /// True when no coefficient involves a fiber coordinate.
    pub fn coefficients_free_of(&self, names: &[String]) -> bool {
        self.full.terms().all(|(_, c)| names.iter().all(|s| !c.contains_symbol(s)))
    }
}

/// The model together with its symbolic lifting.
#[derive(Debug, Clone)]
pub struct LiftedModel {
    pub model: GroupModel,
    pub chart: Arc<Chart>,
    /// `𝓜` as expressions: one row per basis field, `p` entries.
    pub rows: Vec<Vec<Expr>>,
    pub lifted: Vec<LiftedField>,
    pub base_gens: Arc<GeneratorSet>,
    pub lifted_gens: Arc<GeneratorSet>,
}

fn relations_of(c: &StructureConstants) -> crate::fields::Relations {
    c.relations()
}

impl LiftedModel {
    /// Uses the closed-form rows of a built-in, or rows declared by the model file.
    pub fn new(model: GroupModel, declared: Option<Vec<Vec<Expr>>>) -> Result<Self, LiftError> {
        let rows = match (model.vertical_closed(), declared) {
            (Some(r), _) => r,
            (None, Some(r)) => r,
            (None, None) => return Err(LiftError::NoSymbolicRows),
        };
        let (n, p) = (model.n(), model.p());
        if rows.len() != n || rows.iter().any(|r| r.len() != p) {
            return Err(LiftError::RowShape { got: (rows.len(), rows.first().map_or(0, Vec::len)), want: (n, p) });
        }
        for r in rows.iter().flatten() {
            if model.fiber_names.iter().any(|s| r.contains_symbol(s)) {
                return Err(LiftError::FiberDependent(r.to_string()));
            }
            model.chart.check_expr(r)?;
        }
        let chart = model.lifted_chart();
        let m = model.m();
        let mut lifted = Vec::with_capacity(n);
        for (i, x) in model.basis().iter().enumerate() {
            let mut coeffs: Vec<Expr> = x.coeffs().to_vec();
            coeffs.extend(rows[i].iter().cloned());
            let field = VectorField::new(chart.clone(), coeffs)?;
            lifted.push(LiftedField { horizontal: x.clone(), vertical: field.coeffs()[m..].to_vec(), field });
        }
        let names = model.presentation.names();
        let rel = relations_of(&model.presentation.constants);
        let base_gens = GeneratorSet::new(model.chart.clone(), model.basis().to_vec(), names.clone(), Some(rel.clone()));
        let lifted_gens = GeneratorSet::new(chart.clone(), lifted.iter().map(|l| l.field.clone()).collect(), names, Some(rel));
        Ok(LiftedModel { model, chart, rows, lifted, base_gens, lifted_gens })
    }

    pub fn lift_field(&self, i: usize) -> &LiftedField {
        &self.lifted[i]
    }

    /// Numeric value of the symbolic `𝓜` at `x`.
    pub fn rows_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, LiftError> {
        let names = self.model.chart.names();
        let mut out = Vec::new();
        for r in &self.rows {
            out.push(r.iter().map(|e| e.evaluate(&names, x)).collect::<Result<Vec<_>, _>>().map_err(FieldError::from)?);
        }
        Ok(out)
    }

    /// `𝓛 = Σ r_w X^w` over the basis of the model.
    pub fn operator(&self, terms: &[(Expr, Vec<usize>)]) -> Result<DiffOperator, LiftError> {
        Ok(DiffOperator::from_terms(self.base_gens.clone(), terms.iter().map(|(c, w)| (c.clone(), w.clone())).collect())?)
    }

    /// Same words over the lifted fields.
    pub fn lift_operator(&self, l: &DiffOperator) -> Result<LiftedOperator, LiftError> {
        let terms: Vec<_> = l.terms().map(|(w, c)| (c.clone(), w.clone())).collect();
        let op = DiffOperator::from_terms(self.lifted_gens.clone(), terms)?;
        Ok(LiftedOperator::from_operator(op, self.model.m()))
    }

    /// Adjoint with respect to `density(x)·(vol ∧ ds)`.
    pub fn lifted_adjoint(&self, l: &LiftedOperator, density: &Expr) -> Result<LiftedOperator, LiftError> {
        if self.model.fiber_names.iter().any(|s| density.contains_symbol(s)) {
            return Err(LiftError::FiberDependent(density.to_string()));
        }
        self.chart.check_expr(density)?;
        Ok(LiftedOperator::from_operator(l.operator.adjoint(density), self.model.m()))
    }

    /// `[lift X_i, lift X_j] − Σ_k c_ij^k lift X_k` vanishes for every pair.
    pub fn morphism_holds(&self) -> Result<bool, LiftError> {
        let c = &self.model.presentation.constants;
        let n = self.model.n();
        for i in 0..n {
            for j in i + 1..n {
                let b = self.lifted[i].field.bracket(&self.lifted[j].field)?;
                let terms: Vec<_> = (0..n).map(|k| (c.get(i, j, k), &self.lifted[k].field)).collect();
                let combo = VectorField::combination(self.chart.clone(), &terms)?;
                if !b.sub(&combo)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `lift(𝓛) f = 𝓛 f` for an `x`-only function `f`.
    pub fn e_related_on(&self, l: &DiffOperator, f: &Expr) -> Result<bool, LiftError> {
        let lifted = self.lift_operator(l)?;
        let up = lifted.full.apply(f);
        let down = l.apply(f)?;
        Ok((up - down).simplify().is_zero())
    }

    /// Rank of the lifted basis fields at points of `M × G^z`.
    pub fn lifted_rank(&self, points: &[Vec<f64>]) -> Result<usize, LiftError> {
        let fields: Vec<_> = self.lifted.iter().map(|l| l.field.clone()).collect();
        let mut min = usize::MAX;
        for p in points {
            let a = crate::closure::frame_matrix(&fields, p)?;
            min = min.min(numeric_rank(&a).0);
        }
        Ok(if points.is_empty() { 0 } else { min })
    }

    /// Largest deviation between the symbolic `𝓜` and the numeric section-induced one.
    pub fn cross_check(&self, points: &[Vec<f64>]) -> Result<VerticalCheck, LiftError> {
        let mut worst = 0.0f64;
        let mut worst_orth = 0.0f64;
        for x in points {
            let sym = self.rows_at(x)?;
            let num = self.model.vertical_numeric(x)?;
            let orth = self.model.vertical_orthogonal(x)?;
            for (i, row) in sym.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    worst = worst.max((num[(i, j)] - v).abs());
                    worst_orth = worst_orth.max((orth[(i, j)] - v).abs());
                }
            }
        }
        Ok(VerticalCheck { points: points.len(), max_deviation: worst, orthogonal_deviation: worst_orth, flagged: worst > 1e-6 })
    }

    pub fn report(&self, l: Option<&DiffOperator>, points: &[Vec<f64>]) -> Result<LiftReport, LiftError> {
        let fields = self.lifted.iter().map(|f| f.field.to_string()).collect();
        let rows = self.rows.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect();
        let mut densities = Vec::new();
        for x in points {
            densities.push(DensityRow {
                x: x.clone(),
                rho: self.model.rho(x)?,
                c: self.model.fiber_scaling_c(x)?,
                rho_bar: self.model.rho_bar(x)?,
            });
        }
        let (operator, lifted, remainder, adjoint) = match l {
            Some(l) => {
                let lo = self.lift_operator(l)?;
                let adj = self.lifted_adjoint(&lo, &Expr::one())?;
                (Some(l.display()), Some(lo.full.display()), Some(lo.remainder.display()), Some(adj.full.display()))
            }
            None => (None, None, None, None),
        };
        Ok(LiftReport {
            fields,
            vertical_matrix: rows,
            rho: self.model.rho_symbolic().to_string(),
            densities,
            operator,
            lifted_operator: lifted,
            remainder,
            adjoint,
            cross_check: self.cross_check(points)?,
            morphism: self.morphism_holds()?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerticalCheck {
    pub points: usize,
    pub max_deviation: f64,
    /// Deviation of the metric-orthogonal projection, reported for comparison.
    pub orthogonal_deviation: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub x: Vec<f64>,
    pub rho: f64,
    pub c: f64,
    pub rho_bar: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub fields: Vec<String>,
    pub vertical_matrix: Vec<Vec<String>>,
    pub rho: String,
    pub densities: Vec<DensityRow>,
    pub operator: Option<String>,
    pub lifted_operator: Option<String>,
    pub remainder: Option<String>,
    pub adjoint: Option<String>,
    pub cross_check: VerticalCheck,
    pub morphism: bool,
}

impl LiftReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, f) in self.fields.iter().enumerate() {
            s += &format!("lift X{} = {}\n", i + 1, f);
        }
        s += &format!("M = {:?}\n", self.vertical_matrix);
        s += &format!("rho = {}\n", self.rho);
        for d in &self.densities {
            s += &format!("  x = {:?}: rho = {:.12}, c = {:.12}, rho_bar = {:.12}\n", d.x, d.rho, d.c, d.rho_bar);
        }
        if let (Some(o), Some(l), Some(r), Some(a)) = (&self.operator, &self.lifted_operator, &self.remainder, &self.adjoint) {
            s += &format!("L = {o}\nlifted L = {l}\nR = {r}\nadjoint = {a}\n");
        }
        s += &format!(
            "numeric M deviation = {:.3e} over {} points{}\n",
            self.cross_check.max_deviation,
            self.cross_check.points,
            if self.cross_check.flagged { " (FLAGGED)" } else { "" }
        );
        s += &format!("morphism = {}\n", self.morphism);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_file::BuiltModel;

    fn lifted(name: &str) -> (LiftedModel, DiffOperator) {
        let b = BuiltModel::builtin(name).unwrap();
        (b.lifted.unwrap(), b.operator)
    }

    #[test]
    fn lifted_fields_match_closed_forms() {
        let (g, _) = lifted("grushin");
        assert_eq!(g.lift_field(0).field.to_string(), "dx1");
        assert_eq!(g.lift_field(1).field.to_string(), "x1*dx2 + ds1");
        assert_eq!(g.lift_field(1).drop_vertical(), g.model.basis()[1]);
        let (s, _) = lifted("sine-se2");
        assert_eq!(s.lift_field(1).field.to_string(), "sin(x1)*dx2 + cos(x1)*ds1");
        assert_eq!(s.rows[2][0].to_string(), "-sin(x1)");
    }

    #[test]
    fn grushin_operator_splits() {
        let (g, l) = lifted("grushin");
        let lo = g.lift_operator(&l).unwrap();
        let c = g.chart.clone();
        let x1 = Expr::sym("x1");
        let want = CoordOperator::term(c.clone(), vec![0, 1, 1], Expr::int(2) * &x1).add(&CoordOperator::term(c.clone(), vec![0, 0, 2], Expr::one()));
        assert!(lo.remainder.sub(&want).is_zero(), "{}", lo.remainder.display());
        let base = CoordOperator::term(c.clone(), vec![2, 0, 0], Expr::one()).add(&CoordOperator::term(c, vec![0, 2, 0], x1.pow(2)));
        assert!(lo.base.sub(&base).is_zero());
        let down = l.coordinate_form();
        assert_eq!(down.terms().count(), lo.base.terms().count());
        let adj = g.lifted_adjoint(&lo, &Expr::one()).unwrap();
        assert!(adj.full.sub(&lo.full).is_zero());
        assert!(adj.coefficients_free_of(&g.model.fiber_names));
    }

    #[test]
    fn multiplication_has_no_remainder() {
        let (g, _) = lifted("grushin");
        let op = g.operator(&[(Expr::parse("1 + x1^2", &["x1", "x2"]).unwrap(), vec![])]).unwrap();
        assert!(g.lift_operator(&op).unwrap().remainder.is_zero());
    }

    #[test]
    fn fiber_field_adjoint() {
        let (g, _) = lifted("grushin");
        let y = VectorField::coordinate(g.chart.clone(), 2);
        let gens = GeneratorSet::new(g.chart.clone(), vec![y], vec!["Y1".into()], None);
        let adj = DiffOperator::generator(gens, 0).adjoint(&Expr::one());
        assert_eq!(adj.display(), "-Y1");
    }

    #[test]
    fn morphism_and_relatedness() {
        for name in ["grushin", "sine-se2"] {
            let (g, l) = lifted(name);
            assert!(g.morphism_holds().unwrap());
            for f in ["sin(x1)*x2^2", "exp(x2) + x1^3", "x1*x2"] {
                let f = Expr::parse(f, &["x1", "x2"]).unwrap();
                assert!(g.e_related_on(&l, &f).unwrap(), "{name}");
            }
            let pts = vec![vec![0.0, 0.0, 0.0], vec![1.0, -0.5, 2.0], vec![-2.0, 1.0, 0.3]];
            assert_eq!(g.lifted_rank(&pts).unwrap(), 3);
            let check = g.cross_check(&g.model.sample_points(20, 3)).unwrap();
            assert!(!check.flagged, "{name}: {check:?}");
        }
    }

    #[test]
    fn weighted_adjoint_is_x_only() {
        let (g, l) = lifted("sine-se2");
        let lo = g.lift_operator(&l).unwrap();
        let adj = g.lifted_adjoint(&lo, &Expr::parse("2 + cos(x1)", &["x1", "x2"]).unwrap()).unwrap();
        assert!(adj.coefficients_free_of(&g.model.fiber_names));
        assert!(g.lifted_adjoint(&lo, &Expr::parse("1 + s1^2", &["x1", "x2", "s1"]).unwrap()).is_err());
    }
}
