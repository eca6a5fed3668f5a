//! Discrete central subgroups `H` acting on `M` by chart translations, and the
//! induced solution on `N = M/H`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::Expr;
use crate::groupgeom::{GeomError, GroupModel};
use crate::model_file::QuotientSection;
use crate::verification::{GammaEval, VerifyError};

#[derive(Debug, Error)]
pub enum QuotientError {
    #[error("generator {index} of H does not act as a chart translation (residual {residual:e})")]
    NotTranslation { index: usize, residual: f64 },
    #[error("{0}")]
    Spec(String),
    #[error("x and y lie in the same H-orbit")]
    SameOrbit,
    #[error("Γ_M depends on the representative: deviation {deviation:e} > {tol:e}")]
    RepresentativeDependence { deviation: f64, tol: f64 },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Gamma(#[from] VerifyError),
}

/// `H` generated by group elements whose `M`-action translates one coordinate each.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteSubgroup {
    /// Generators in exponential coordinates.
    pub generators: Vec<Vec<f64>>,
    pub translations: Vec<Vec<f64>>,
    #[serde(skip)]
    pub translation_exprs: Vec<Vec<Expr>>,
    /// Period of each chart coordinate, `None` when not identified.
    pub periods: Vec<Option<f64>>,
    /// The fundamental domain is `[origin_i, origin_i + period_i)` in periodic coordinates.
    pub origin: Vec<f64>,
}

impl DiscreteSubgroup {
    pub fn trivial(m: usize) -> Self {
        DiscreteSubgroup { generators: Vec::new(), translations: Vec::new(), translation_exprs: Vec::new(), periods: vec![None; m], origin: vec![0.0; m] }
    }

    pub fn from_section(q: &QuotientSection, m: usize) -> Result<Self, QuotientError> {
        if q.generators.len() != q.translations.len() {
            return Err(QuotientError::Spec(format!("{} generators but {} translations", q.generators.len(), q.translations.len())));
        }
        let mut periods = vec![None; m];
        for (k, t) in q.translations.iter().enumerate() {
            if t.len() != m {
                return Err(QuotientError::Spec(format!("translation {k} has {} entries, chart has {m}", t.len())));
            }
            let nz: Vec<usize> = (0..m).filter(|i| t[*i] != 0.0).collect();
            match nz.as_slice() {
                [] => return Err(QuotientError::Spec(format!("translation {k} is zero: H would not be discrete"))),
                [i] if periods[*i].is_none() => periods[*i] = Some(t[*i].abs()),
                [i] => return Err(QuotientError::Spec(format!("coordinate {i} is translated by two generators"))),
                _ => return Err(QuotientError::Spec(format!("translation {k} moves several coordinates"))),
            }
        }
        let origin = match &q.domain_origin {
            Some(o) if o.len() == m => o.clone(),
            Some(o) => return Err(QuotientError::Spec(format!("domain_origin has {} entries, chart has {m}", o.len()))),
            None => periods.iter().map(|p| p.map_or(0.0, |p| -0.5 * p)).collect(),
        };
        Ok(DiscreteSubgroup { generators: q.generators.clone(), translations: q.translations.clone(), translation_exprs: q.translation_exprs(), periods, origin })
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    /// Representative in the fundamental domain and the lattice shift `k` with `x = canonical + Σ k_i T_i`.
    pub fn canonical(&self, x: &[f64]) -> (Vec<f64>, Vec<i64>) {
        let mut c = x.to_vec();
        let mut k = vec![0i64; x.len()];
        for (i, p) in self.periods.iter().enumerate() {
            if let Some(p) = p {
                let n = ((x[i] - self.origin[i]) / p).floor();
                c[i] = x[i] - n * p;
                if c[i] >= self.origin[i] + p {
                    c[i] -= p;
                }
                k[i] = n as i64;
            }
        }
        (c, k)
    }

    /// `x` shifted by `k_i` periods in coordinate `i`.
    pub fn shift(&self, x: &[f64], k: &[i64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| v + self.periods[i].map_or(0.0, |p| k[i] as f64 * p)).collect()
    }

    pub fn same_orbit(&self, x: &[f64], y: &[f64], tol: f64) -> bool {
        let (a, _) = self.canonical(x);
        let (b, _) = self.canonical(y);
        a.iter().zip(&b).enumerate().all(|(i, (u, v))| {
            let d = (u - v).abs();
            match self.periods[i] {
                Some(p) => d.min(p - d) <= tol,
                None => d <= tol,
            }
        })
    }

    /// Max deviation between `x·h` and `x + T` over sampled `x`, per generator.
    pub fn translation_residuals(&self, model: &GroupModel, samples: usize, seed: u64) -> Result<Vec<f64>, QuotientError> {
        let pts = model.sample_points(samples, seed);
        self.generators
            .iter()
            .zip(&self.translations)
            .map(|(h, t)| {
                let mut worst: f64 = 0.0;
                for x in &pts {
                    let y = model.act(x, h)?;
                    for i in 0..x.len() {
                        worst = worst.max((y[i] - x[i] - t[i]).abs());
                    }
                }
                Ok(worst)
            })
            .collect()
    }

    pub fn validate(&self, model: &GroupModel, tol: f64) -> Result<(), QuotientError> {
        for (index, r) in self.translation_residuals(model, 20, 11)?.into_iter().enumerate() {
            if !(r <= tol) {
                return Err(QuotientError::NotTranslation { index, residual: r });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub shift: Vec<String>,
    /// Per basis field of the algebra.
    pub fields: Vec<bool>,
    pub invariant: bool,
}

/// The pullback of every basis field under `x ↦ x + shift` equals the field,
/// decided by exact simplification of `X(x + a) − X(x)`.
pub fn check_field_invariance(model: &GroupModel, shift: &[Expr]) -> InvarianceReport {
    let names = model.chart.names();
    let pairs: Vec<(&str, Expr)> = names.iter().zip(shift).map(|(n, a)| (*n, (Expr::sym(n) + a.clone()).simplify())).collect();
    let fields: Vec<bool> = model
        .basis()
        .iter()
        .map(|x| x.coeffs().iter().all(|c| (c.substitute_all(&pairs) - c.clone()).is_zero()))
        .collect();
    InvarianceReport { shift: shift.iter().map(|e| e.to_string()).collect(), invariant: fields.iter().all(|b| *b), fields }
}

/// `ρ(x + a) − ρ(x)` simplifies to zero.
pub fn check_rho_invariance(model: &GroupModel, shift: &[Expr]) -> bool {
    let names = model.chart.names();
    let pairs: Vec<(&str, Expr)> = names.iter().zip(shift).map(|(n, a)| (*n, Expr::sym(n) + a.clone())).collect();
    let rho = model.rho_symbolic();
    (rho.substitute_all(&pairs) - rho).is_zero()
}

#[derive(Debug, Clone, Serialize)]
pub struct CentralityReport {
    pub samples: usize,
    /// Max `|μ(x, hg) − μ(x, gh)|`, both sides as composed flows.
    pub max_residual: f64,
    /// Smallest `|x·h − x|` over the scan grid.
    pub min_displacement: f64,
    pub fixed_points: usize,
}

/// Commutation of `h` with random `g` acting on random `x`, and a fixed-point scan
/// for `h` on a grid of the sample box.
pub fn centrality_check(model: &GroupModel, h: &[f64], samples: usize, seed: u64) -> Result<CentralityReport, QuotientError> {
    let n = model.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = model.sample_points(samples, seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    for x in &pts {
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hg = model.act(&model.act(x, h)?, &g)?;
        let gh = model.act(&model.act(x, &g)?, h)?;
        worst = worst.max(hg.iter().zip(&gh).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let trivial = h.iter().all(|v| *v == 0.0);
    let mut min_disp = f64::INFINITY;
    let mut fixed = 0;
    if !trivial {
        for x in model.sample_points(100, seed ^ 0xf1ed) {
            let y = model.act(&x, h)?;
            let d = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            min_disp = min_disp.min(d);
            if d < 1e-9 {
                fixed += 1;
            }
        }
    } else {
        min_disp = 0.0;
    }
    Ok(CentralityReport { samples: pts.len(), max_residual: worst, min_displacement: min_disp, fixed_points: fixed })
}

#[derive(Debug, Clone, Serialize)]
pub struct FiberInjectivity {
    pub y: Vec<f64>,
    pub samples: usize,
    /// Smallest distance between `P·h^k` (`k ≠ 0`) and `G^y`, over fiber samples `P`.
    pub min_orbit_gap: f64,
    /// Smallest distance between images of distinct samples in the quotient domain.
    pub min_separation: f64,
    pub injective: bool,
}

/// Distinct points of `G^y` stay distinct in `G/H`: no shift `P·h^k` returns to the fiber.
pub fn fiber_injectivity(model: &GroupModel, group: &DiscreteSubgroup, y: &[f64], fiber: &[f64]) -> Result<FiberInjectivity, QuotientError> {
    let m = model.m();
    let hs: Vec<Vec<f64>> = group.generators.iter().map(|g| model.to_split(g)).collect::<Result<_, _>>()?;
    let mut gap = f64::INFINITY;
    let mut images = Vec::new();
    for t in fiber {
        let mut p = y.to_vec();
        p.push(*t);
        for h in &hs {
            let hinv = model.split_inv(h)?;
            for k in [1, 2, -1, -2] {
                let step = if k > 0 { h } else { &hinv };
                let mut q = p.clone();
                for _ in 0..(k as i32).abs() {
                    q = model.split_mul(&q, step)?;
                }
                let d = q[..m].iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                gap = gap.min(d);
            }
        }
        let (c, _) = group.canonical(&p[..m]);
        let mut img = c;
        img.push(*t);
        images.push(img);
    }
    let mut sep = f64::INFINITY;
    for i in 0..images.len() {
        for j in 0..i {
            let d = images[i].iter().zip(&images[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            sep = sep.min(d);
        }
    }
    let injective = (hs.is_empty() || gap > 1e-6) && (images.len() < 2 || sep > 0.0);
    Ok(FiberInjectivity { y: y.to_vec(), samples: fiber.len(), min_orbit_gap: gap, min_separation: sep, injective })
}

#[derive(Debug, Clone, Serialize)]
pub struct QuotientValue {
    pub value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `(k_x, k_y, Γ_M(x + k_x T; y + k_y T))`.
    pub representatives: Vec<(Vec<i64>, Vec<i64>, f64)>,
    pub max_deviation: f64,
}

/// `Γ_N([x];[y])` from `Γ_M` at canonical representatives, after re-evaluating at
/// every combination of shifts in `shifts` for both points.
pub fn quotient_solution(gamma: &dyn GammaEval, group: &DiscreteSubgroup, x: &[f64], y: &[f64], shifts: &[i64], tol: f64) -> Result<QuotientValue, QuotientError> {
    if group.same_orbit(x, y, 1e-9) {
        return Err(QuotientError::SameOrbit);
    }
    let (cx, _) = group.canonical(x);
    let (cy, _) = group.canonical(y);
    let v0 = gamma.gamma(&cx, &cy)?;
    let m = x.len();
    let lattice = |k: i64| -> Vec<i64> { group.periods.iter().map(|p| if p.is_some() { k } else { 0 }).collect() };
    let mut reps = vec![(vec![0; m], vec![0; m], v0)];
    let mut dev: f64 = 0.0;
    if !group.is_trivial() {
        for &kx in shifts {
            for &ky in shifts {
                if kx == 0 && ky == 0 {
                    continue;
                }
                let (a, b) = (lattice(kx), lattice(ky));
                let v = gamma.gamma(&group.shift(&cx, &a), &group.shift(&cy, &b))?;
                dev = dev.max((v - v0).abs() / v0.abs().max(f64::MIN_POSITIVE));
                reps.push((a, b, v));
            }
        }
    }
    if dev > tol {
        return Err(QuotientError::RepresentativeDependence { deviation: dev, tol });
    }
    Ok(QuotientValue { value: v0, x: cx, y: cy, representatives: reps, max_deviation: dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{HeisenbergKernel, SyntheticKernel};
    use crate::model_file::BuiltModel;
    use crate::saturation::{SaturatedGamma, SaturationOptions};

    fn sine() -> (BuiltModel, DiscreteSubgroup) {
        let b = BuiltModel::builtin("sine-se2").unwrap();
        let h = DiscreteSubgroup::from_section(b.file.quotient.as_ref().unwrap(), 2).unwrap();
        (b, h)
    }

    #[test]
    fn symbolic_invariance() {
        let (b, h) = sine();
        let two_pi = &h.translation_exprs[0];
        assert_eq!(two_pi[0].to_string(), "2*pi");
        assert!(check_field_invariance(&b.model, two_pi).invariant);
        let half = [Expr::Pi, Expr::int(0)];
        let r = check_field_invariance(&b.model, &half);
        assert!(!r.invariant && r.fields[0]);
        assert!(check_field_invariance(&b.model, &[Expr::int(0), Expr::int(0)]).invariant);
        assert!(check_rho_invariance(&b.model, two_pi));
        h.validate(&b.model, 1e-9).unwrap();
    }

    #[test]
    fn centrality_and_fixed_points() {
        let (b, h) = sine();
        let r = centrality_check(&b.model, &h.generators[0], 50, 3).unwrap();
        assert!(r.max_residual < 1e-7 && r.fixed_points == 0 && r.min_displacement > 6.0, "{r:?}");
        let e = centrality_check(&b.model, &[0.0, 0.0, 0.0], 10, 3).unwrap();
        assert_eq!(e.max_residual, 0.0);
        let f = fiber_injectivity(&b.model, &h, &[0.4, -0.3], &[-2.0, -0.5, 0.0, 1.0, 3.0]).unwrap();
        assert!(f.injective, "{f:?}");
    }

    #[test]
    fn canonicalization() {
        let (_, h) = sine();
        let tau = 2.0 * std::f64::consts::PI;
        let (c, k) = h.canonical(&[7.0, 1.5]);
        assert!((c[0] - (7.0 - tau)).abs() < 1e-15 && k == vec![1, 0] && c[1] == 1.5);
        assert!(h.same_orbit(&[0.1, 0.2], &[0.1 - 2.0 * tau, 0.2], 1e-9));
        assert!(!h.same_orbit(&[0.1, 0.2], &[0.1, 0.3], 1e-9));
    }

    #[test]
    fn quotient_solution_is_representative_independent() {
        let (b, h) = sine();
        let k = SyntheticKernel::new(b.model.clone());
        let opts = SaturationOptions::default();
        let g = SaturatedGamma::new(&k, &b.model, opts);
        let q = quotient_solution(&g, &h, &[0.3, 0.2], &[1.0, -0.4], &[-1, 0, 1], 5.0 * opts.tol).unwrap();
        assert_eq!(q.representatives.len(), 9);
        assert!(q.max_deviation < 5.0 * opts.tol && q.value > 0.0, "{q:?}");
        assert!(matches!(quotient_solution(&g, &h, &[0.3, 0.2], &[0.3 + 2.0 * std::f64::consts::PI, 0.2], &[0], 1e-6), Err(QuotientError::SameOrbit)));

        let gr = BuiltModel::builtin("grushin").unwrap();
        let hk = HeisenbergKernel::for_model(&gr.model).unwrap();
        let gg = SaturatedGamma::new(&hk, &gr.model, opts);
        let t = DiscreteSubgroup::trivial(2);
        let q = quotient_solution(&gg, &t, &[0.0, 0.0], &[1.0, 0.0], &[-1, 0, 1], 1e-12).unwrap();
        assert_eq!(q.value, gg.gamma(&[0.0, 0.0], &[1.0, 0.0]).unwrap());
    }
}
