//! Line-oriented model files.
//!
//! ```text
//! [model]
//! name = grushin
//! coordinates = x1, x2
//! ...
//! [generators]
//! X1 = 1, 0
//! [operator]
//! 1 : X1 X1
//! ```

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::expr::{Expr, ParseError};
use crate::fields::{DiffOperator, FieldError, GeneratorSet, VectorField};
use crate::groupgeom::{builtin, BuildOptions, GeomError, GroupModel};
use crate::lifting::{LiftError, LiftedModel};

pub const GRUSHIN: &str = include_str!("../models/grushin.model");
pub const SINE_SE2: &str = include_str!("../models/sine-se2.model");

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Expr { line: usize, source: ParseError },
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Inconsistent(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("unknown built-in model `{0}`")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSection {
    /// Group elements in exponential coordinates.
    pub generators: Vec<Vec<f64>>,
    /// Their translations of the chart.
    pub translations: Vec<Vec<f64>>,
    pub domain_origin: Option<Vec<f64>>,
    /// Source text of each value, kept for printing.
    raw: Vec<(String, String)>,
}

impl QuotientSection {
    /// Translations as exact expressions, so `2*pi` stays symbolic.
    pub fn translation_exprs(&self) -> Vec<Vec<Expr>> {
        self.raw
            .iter()
            .filter(|(k, _)| k == "translation")
            .map(|(_, v)| v.split(',').map(|t| Expr::parse_any(t.trim()).expect("validated at parse time")).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub name: String,
    pub coordinates: Vec<String>,
    pub fiber: Vec<String>,
    pub base_point: Vec<f64>,
    pub sample_box: Vec<(f64, f64)>,
    pub closed_form: Option<String>,
    pub kernel: Option<String>,
    pub generators: Vec<(String, Vec<Expr>)>,
    pub operator: Vec<(Expr, Vec<String>)>,
    pub lift: Option<Vec<(String, Vec<Expr>)>>,
    pub quotient: Option<QuotientSection>,
    comments: Vec<String>,
}

/// A model file turned into group data, with its operator.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub file: ModelFile,
    pub model: GroupModel,
    pub operator: DiffOperator,
    pub lifted: Option<LiftedModel>,
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn num(text: &str, line: usize) -> Result<f64, ModelError> {
    let e = Expr::parse(text, &[]).map_err(|source| ModelError::Expr { line, source })?;
    e.evaluate(&[], &[]).map_err(|err| ModelError::Syntax { line, message: err.to_string() })
}

fn nums(v: &str, line: usize) -> Result<Vec<f64>, ModelError> {
    split_list(v).iter().map(|s| num(s, line)).collect()
}

fn fmt_f(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl ModelFile {
    pub fn builtin(name: &str) -> Result<ModelFile, ModelError> {
        match name {
            "grushin" => ModelFile::parse(GRUSHIN),
            "sine-se2" => ModelFile::parse(SINE_SE2),
            other => Err(ModelError::UnknownBuiltin(other.to_string())),
        }
    }

    /// A built-in name or a path.
    pub fn load(spec: &str) -> Result<ModelFile, ModelError> {
        if !Path::new(spec).exists() {
            if let Ok(m) = ModelFile::builtin(spec) {
                return Ok(m);
            }
        }
        let text = std::fs::read_to_string(spec).map_err(|source| ModelError::Io { path: spec.to_string(), source })?;
        ModelFile::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ModelFile, ModelError> {
        let mut section = String::new();
        let mut kv: Vec<(usize, String, String)> = Vec::new();
        let mut gens_raw: Vec<(usize, String, String)> = Vec::new();
        let mut op_raw: Vec<(usize, String, String)> = Vec::new();
        let mut lift_raw: Vec<(usize, String, String)> = Vec::new();
        let mut quot_raw: Vec<(usize, String, String)> = Vec::new();
        let mut comments = Vec::new();
        let mut saw_lift = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let t = raw.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(c) = t.strip_prefix('#') {
                if section.is_empty() {
                    comments.push(c.trim().to_string());
                }
                continue;
            }
            if t.starts_with('[') {
                let name = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')).ok_or_else(|| ModelError::Syntax {
                    line,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                if !matches!(section.as_str(), "model" | "generators" | "operator" | "lift" | "quotient") {
                    return Err(ModelError::Syntax { line, message: format!("unknown section [{section}]") });
                }
                saw_lift |= section == "lift";
                continue;
            }
            let sep = if section == "operator" { ':' } else { '=' };
            let Some((k, v)) = t.split_once(sep) else {
                return Err(ModelError::Syntax { line, message: format!("expected `key {sep} value`") });
            };
            let entry = (line, k.trim().to_string(), v.trim().to_string());
            match section.as_str() {
                "model" => kv.push(entry),
                "generators" => gens_raw.push(entry),
                "operator" => op_raw.push(entry),
                "lift" => lift_raw.push(entry),
                "quotient" => quot_raw.push(entry),
                _ => return Err(ModelError::Syntax { line, message: "content before the first section".into() }),
            }
        }
        let get = |key: &'static str| kv.iter().find(|(_, k, _)| k == key);
        for (line, k, _) in &kv {
            if !matches!(k.as_str(), "name" | "coordinates" | "fiber" | "base_point" | "sample_box" | "closed_form" | "kernel") {
                return Err(ModelError::Syntax { line: *line, message: format!("unknown key `{k}`") });
            }
        }
        let name = get("name").ok_or(ModelError::Missing("name"))?.2.clone();
        let coordinates = split_list(&get("coordinates").ok_or(ModelError::Missing("coordinates"))?.2);
        let fiber = get("fiber").map(|e| split_list(&e.2)).unwrap_or_default();
        let base_point = match get("base_point") {
            Some((line, _, v)) => nums(v, *line)?,
            None => vec![0.0; coordinates.len()],
        };
        let sample_box = match get("sample_box") {
            Some((line, _, v)) => split_list(v)
                .iter()
                .map(|r| {
                    let (a, b) = r.split_once(':').ok_or_else(|| ModelError::Syntax { line: *line, message: "ranges are `lo:hi`".into() })?;
                    Ok((num(a.trim(), *line)?, num(b.trim(), *line)?))
                })
                .collect::<Result<Vec<_>, ModelError>>()?,
            None => vec![(-2.0, 2.0); coordinates.len()],
        };
        let closed_form = get("closed_form").map(|e| e.2.clone()).filter(|s| s != "none");
        let kernel = get("kernel").map(|e| e.2.clone()).filter(|s| s != "none");
        let names: Vec<&str> = coordinates.iter().map(String::as_str).collect();
        let mut generators = Vec::new();
        for (line, k, v) in &gens_raw {
            let coeffs = split_list(v)
                .iter()
                .map(|s| Expr::parse(s, &names).map_err(|source| ModelError::Expr { line: *line, source }))
                .collect::<Result<Vec<_>, _>>()?;
            generators.push((k.clone(), coeffs));
        }
        let mut operator = Vec::new();
        for (line, c, w) in &op_raw {
            let coeff = Expr::parse(c, &names).map_err(|source| ModelError::Expr { line: *line, source })?;
            operator.push((coeff, w.split_whitespace().map(str::to_string).collect()));
        }
        let lift = if saw_lift {
            let mut rows = Vec::new();
            for (line, k, v) in &lift_raw {
                let r = split_list(v)
                    .iter()
                    .map(|s| Expr::parse(s, &names).map_err(|source| ModelError::Expr { line: *line, source }))
                    .collect::<Result<Vec<_>, _>>()?;
                rows.push((k.clone(), r));
            }
            Some(rows)
        } else {
            None
        };
        let quotient = if quot_raw.is_empty() {
            None
        } else {
            let mut q = QuotientSection { generators: Vec::new(), translations: Vec::new(), domain_origin: None, raw: Vec::new() };
            for (line, k, v) in &quot_raw {
                match k.as_str() {
                    "generator" => q.generators.push(nums(v, *line)?),
                    "translation" => q.translations.push(nums(v, *line)?),
                    "domain_origin" => q.domain_origin = Some(nums(v, *line)?),
                    _ => return Err(ModelError::Syntax { line: *line, message: format!("unknown key `{k}`") }),
                }
                q.raw.push((k.clone(), v.clone()));
            }
            Some(q)
        };
        let file = ModelFile {
            name,
            coordinates,
            fiber,
            base_point,
            sample_box,
            closed_form,
            kernel,
            generators,
            operator,
            lift,
            quotient,
            comments,
        };
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let m = self.coordinates.len();
        let bad = |s: String| Err(ModelError::Inconsistent(s));
        if m == 0 {
            return bad("no coordinates".into());
        }
        if self.base_point.len() != m {
            return bad(format!("base_point has {} entries for {m} coordinates", self.base_point.len()));
        }
        if self.sample_box.len() != m {
            return bad(format!("sample_box has {} ranges for {m} coordinates", self.sample_box.len()));
        }
        if self.generators.is_empty() {
            return bad("no generators".into());
        }
        for (k, (name, c)) in self.generators.iter().enumerate() {
            if c.len() != m {
                return bad(format!("generator {name} has {} coefficients for {m} coordinates", c.len()));
            }
            if *name != format!("X{}", k + 1) {
                return bad(format!("generators must be named X1, X2, ... in order (found {name})"));
            }
        }
        if let Some(q) = &self.quotient {
            if q.generators.len() != q.translations.len() {
                return bad("each quotient generator needs a translation".into());
            }
            if q.translations.iter().any(|t| t.len() != m) {
                return bad("translation length differs from the chart dimension".into());
            }
        }
        if let Some(cf) = &self.closed_form {
            if builtin::lookup(cf).is_none() {
                return bad(format!("unknown closed form `{cf}`"));
            }
        }
        Ok(())
    }

    /// Basis index of a name `Xk`.
    fn word_index(name: &str) -> Option<usize> {
        name.strip_prefix('X')?.parse::<usize>().ok().filter(|k| *k >= 1).map(|k| k - 1)
    }

    pub fn operator_terms(&self) -> Result<Vec<(Expr, Vec<usize>)>, ModelError> {
        self.operator
            .iter()
            .map(|(c, w)| {
                let word = w
                    .iter()
                    .map(|g| Self::word_index(g).ok_or_else(|| ModelError::Inconsistent(format!("`{g}` is not a basis field name"))))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((c.clone(), word))
            })
            .collect()
    }

    pub fn build(&self, flip_orientation: bool, seed: u64) -> Result<BuiltModel, ModelError> {
        let names: Vec<&str> = self.coordinates.iter().map(String::as_str).collect();
        let chart = crate::fields::Chart::new(&self.name, &names);
        let fields = self
            .generators
            .iter()
            .map(|(_, c)| VectorField::new(chart.clone(), c.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let opts = BuildOptions {
            sample_box: self.sample_box.clone(),
            seed,
            max_depth: 6,
            flip_orientation,
            fiber_names: self.fiber.clone(),
            closed_form: self.closed_form.as_deref().and_then(builtin::lookup),
        };
        let model = GroupModel::build(&self.name, &fields, self.base_point.clone(), opts)?;
        let n = model.n();
        let terms = self.operator_terms()?;
        if let Some((_, w)) = terms.iter().find(|(_, w)| w.iter().any(|i| *i >= n)) {
            return Err(ModelError::Inconsistent(format!("operator word {w:?} refers past the basis of size {n}")));
        }
        let declared = match &self.lift {
            Some(rows) => {
                let mut out = vec![Vec::new(); n];
                for (k, r) in rows {
                    let i = Self::word_index(k).filter(|i| *i < n).ok_or_else(|| ModelError::Inconsistent(format!("[lift] row `{k}`")))?;
                    out[i] = r.clone();
                }
                Some(out)
            }
            None => None,
        };
        let lifted = if model.closed_form.is_some() || declared.is_some() { Some(LiftedModel::new(model.clone(), declared)?) } else { None };
        let gens = match &lifted {
            Some(l) => l.base_gens.clone(),
            None => GeneratorSet::new(
                model.chart.clone(),
                model.basis().to_vec(),
                model.presentation.names(),
                Some(model.presentation.constants.relations()),
            ),
        };
        let operator = DiffOperator::from_terms(gens, terms)?;
        Ok(BuiltModel { file: self.clone(), model, operator, lifted })
    }

    /// Canonical text form; `parse(to_text(f)) == f`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "coordinates = {}", self.coordinates.join(", "));
        if !self.fiber.is_empty() {
            let _ = writeln!(s, "fiber = {}", self.fiber.join(", "));
        }
        let _ = writeln!(s, "base_point = {}", self.base_point.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(", "));
        let _ = writeln!(
            s,
            "sample_box = {}",
            self.sample_box.iter().map(|(a, b)| format!("{}:{}", fmt_f(*a), fmt_f(*b))).collect::<Vec<_>>().join(", ")
        );
        let _ = writeln!(s, "closed_form = {}", self.closed_form.as_deref().unwrap_or("none"));
        let _ = writeln!(s, "kernel = {}", self.kernel.as_deref().unwrap_or("none"));
        let _ = writeln!(s, "\n[generators]");
        for (k, c) in &self.generators {
            let _ = writeln!(s, "{k} = {}", c.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "));
        }
        let _ = writeln!(s, "\n[operator]");
        for (c, w) in &self.operator {
            let _ = writeln!(s, "{c} : {}", w.join(" "));
        }
        if let Some(rows) = &self.lift {
            let _ = writeln!(s, "\n[lift]");
            for (k, r) in rows {
                let _ = writeln!(s, "{k} = {}", r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "));
            }
        }
        if let Some(q) = &self.quotient {
            let _ = writeln!(s, "\n[quotient]");
            for (k, v) in &q.raw {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }
}

impl BuiltModel {
    pub fn builtin(name: &str) -> Result<BuiltModel, ModelError> {
        ModelFile::builtin(name)?.build(false, 7)
    }

    pub fn lifted(&self) -> Result<&LiftedModel, ModelError> {
        self.lifted.as_ref().ok_or(ModelError::Lift(LiftError::NoSymbolicRows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_round_trip() {
        for text in [GRUSHIN, SINE_SE2] {
            let f = ModelFile::parse(text).unwrap();
            let again = ModelFile::parse(&f.to_text()).unwrap();
            assert_eq!(f, again);
        }
        assert_eq!(ModelFile::parse(GRUSHIN).unwrap().to_text(), GRUSHIN);
        assert_eq!(ModelFile::parse(SINE_SE2).unwrap().to_text(), SINE_SE2);
    }

    #[test]
    fn builtin_models_build() {
        let g = BuiltModel::builtin("grushin").unwrap();
        assert_eq!(g.model.n(), 3);
        assert_eq!(g.operator.display(), "X1^2 + X2^2");
        let s = BuiltModel::builtin("sine-se2").unwrap();
        let q = s.file.quotient.as_ref().unwrap();
        assert!((q.generators[0][0] - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_lines() {
        let bad = "[model]\nname = a\ncoordinates = x1\n[generators]\nX1 = y\n";
        match ModelFile::parse(bad) {
            Err(ModelError::Expr { line: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        let bad = "[model]\nname = a\ncoordinates = x1\ncolour = red\n";
        assert!(matches!(ModelFile::parse(bad), Err(ModelError::Syntax { line: 4, .. })));
        let bad = "[model]\nname = a\ncoordinates = x1, x2\n[generators]\nX1 = 1\n";
        assert!(matches!(ModelFile::parse(bad), Err(ModelError::Inconsistent(_))));
        assert!(matches!(ModelFile::load("no-such-model"), Err(ModelError::Io { .. })));
    }

    #[test]
    fn declared_lift_rows_for_generic_model() {
        let text = "[model]\nname = heis\ncoordinates = x1, x2\nfiber = s1\n\n[generators]\nX1 = 1, 0\nX2 = 0, x1\n\n[operator]\n1 : X1 X1\n1 : X2 X2\n\n[lift]\nX1 = 0\nX2 = 1\nX3 = 0\n";
        let b = ModelFile::parse(text).unwrap().build(false, 7).unwrap();
        let l = b.lifted().unwrap();
        assert_eq!(l.lift_field(1).field.to_string(), "x1*dx2 + ds1");
        assert!(l.morphism_holds().unwrap());
    }
}
