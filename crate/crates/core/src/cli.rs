//! Command-line front end. Exit codes: 0 pass, 2 hypothesis failure,
//! 3 configuration error, 4 numeric failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::closure::{is_nilpotent, lie_closure, rank_report, ClosureError, ClosureOptions};
use crate::fields::{Chart, VectorField};
use crate::groupgeom::GeomError;
use crate::model_file::{BuiltModel, ModelError, ModelFile};
use crate::saturation::{batch_saturate, grid_csv, GridSpec, SaturationOptions};
use crate::suite::{prepare_kernel, run_suite, KernelSpec, SuiteConfig, SuiteError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "hypolift", version, about = "Lifting of Hörmander fields and saturated fundamental solutions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Built-in model name (`grushin`, `sine-se2`) or path to a model file.
    #[arg(long, global = true, default_value = "grushin")]
    pub model: String,
    /// `heisenberg`, `synthetic` or a kernel expression file; defaults to the model's kernel.
    #[arg(long, global = true)]
    pub kernel: Option<String>,
    /// Saturation tolerance for `saturate`, identity tolerance for `verify`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Grid for `saturate`, e.g. `pole=0,0;y1=-1:1:21;y2=-1:1:21`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub json_out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub csv_out: Option<PathBuf>,
    /// Reverse the orientation of the fiber coordinate.
    #[arg(long, global = true)]
    pub flip_orientation: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lie closure, structure constants, nilpotency and rank.
    Closure,
    /// Lifted fields, vertical matrix, densities and lifted operator.
    Lift,
    /// Saturated Γ on a grid, as CSV.
    Saturate,
    /// Full verification suite, as a JSON report.
    Verify,
}

struct Failure {
    code: i32,
    message: String,
}

fn config(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_CONFIG, message: e.to_string() }
}

fn geom_code(e: &GeomError) -> i32 {
    match e {
        GeomError::Closure(ClosureError::NotStabilized { .. }) | GeomError::Hormander { .. } => EXIT_HYPOTHESIS,
        GeomError::ClosedFormMismatch { .. } | GeomError::BasePoint { .. } | GeomError::Closure(_) | GeomError::Field(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn model_failure(e: ModelError) -> Failure {
    let code = match &e {
        ModelError::Geom(g) => geom_code(g),
        ModelError::Lift(crate::lifting::LiftError::Geom(g)) => geom_code(g),
        _ => EXIT_CONFIG,
    };
    Failure { code, message: e.to_string() }
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<(), Failure> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(value).map_err(config)?;
        std::fs::write(p, text + "\n").map_err(|e| config(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

/// Parses `args` and runs; everything is written through `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Closure => cmd_closure(&cli, out),
        Command::Lift => cmd_lift(&cli, out),
        Command::Saturate => cmd_saturate(&cli, out),
        Command::Verify => cmd_verify(&cli, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(out, "error: {}", f.message);
            f.code
        }
    }
}

fn load(cli: &Cli) -> Result<ModelFile, Failure> {
    ModelFile::load(&cli.model).map_err(config)
}

fn build(cli: &Cli) -> Result<BuiltModel, Failure> {
    load(cli)?.build(cli.flip_orientation, cli.seed).map_err(model_failure)
}

fn kernel_spec(cli: &Cli, file: &ModelFile) -> Result<KernelSpec, Failure> {
    match cli.kernel.as_deref().or(file.kernel.as_deref()) {
        Some(k) if k != "none" => {
            let spec = KernelSpec::parse(k);
            if let KernelSpec::File(p) = &spec {
                if !p.exists() {
                    return Err(config(format!("kernel `{k}` is neither built in nor a file")));
                }
            }
            Ok(spec)
        }
        _ => Err(config(format!("model `{}` names no kernel; pass --kernel", file.name))),
    }
}

fn cmd_closure(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let file = load(cli)?;
    let names: Vec<&str> = file.coordinates.iter().map(String::as_str).collect();
    let chart = Chart::new(&file.name, &names);
    let gens = file.generators.iter().map(|(_, c)| VectorField::new(chart.clone(), c.clone())).collect::<Result<Vec<_>, _>>().map_err(config)?;
    let mut opts = ClosureOptions::for_box(file.sample_box.clone());
    opts.seed = cli.seed;
    let p = match lie_closure(&gens, &opts) {
        Ok(p) => p,
        Err(e @ ClosureError::NotStabilized { .. }) => {
            let _ = writeln!(out, "closure: {e}");
            write_json(&cli.json_out, &json!({ "model": file.name, "error": e.to_string() }))?;
            return Ok(EXIT_HYPOTHESIS);
        }
        Err(e) => return Err(config(e)),
    };
    let certified = p.certify().map_err(config)?;
    let nil = is_nilpotent(&p.constants);
    let pts: Vec<Vec<f64>> = {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
        (0..20).map(|_| file.sample_box.iter().map(|(a, b)| rng.gen_range(*a..=*b)).collect()).collect()
    };
    let ranks = rank_report(&p.basis, &pts).map_err(config)?;
    let _ = writeln!(out, "model {}: n = {}, q = {}, m = {}", file.name, p.n(), p.q, p.m());
    for (i, (f, w)) in p.basis.iter().zip(&p.words).enumerate() {
        let coeffs: Vec<String> = f.coeffs().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "X{} = ({}) from word {:?}", i + 1, coeffs.join(", "), w.iter().map(|k| k + 1).collect::<Vec<_>>());
    }
    for (i, j, k, c) in p.constants.nonzero() {
        let _ = writeln!(out, "c_{}{}^{} = {}", i + 1, j + 1, k + 1, c);
    }
    let _ = writeln!(out, "nilpotent = {} (step {:?}), solvable = {}", nil.nilpotent, nil.step, nil.solvable);
    let _ = writeln!(out, "rank: min {} of {} at {} points, certified = {certified}", ranks.min_rank, p.m(), ranks.entries.len());
    let report = json!({
        "model": file.name,
        "n": p.n(),
        "q": p.q,
        "m": p.m(),
        "basis": p.basis.iter().map(|f| f.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "words": p.words,
        "structure_constants": p.constants.nonzero().iter().map(|(i, j, k, c)| json!({ "i": i + 1, "j": j + 1, "k": k + 1, "value": c.to_string() })).collect::<Vec<_>>(),
        "nilpotency": nil,
        "rank": ranks,
        "certified": certified,
    });
    write_json(&cli.json_out, &report)?;
    Ok(if ranks.hormander_ok && certified { EXIT_PASS } else { EXIT_HYPOTHESIS })
}

fn cmd_lift(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let built = build(cli)?;
    let lifted = built.lifted().map_err(config)?;
    let pts = built.model.sample_points(20, cli.seed);
    let report = lifted.report(Some(&built.operator), &pts).map_err(|e| match e {
        crate::lifting::LiftError::Geom(g) => Failure { code: geom_code(&g), message: g.to_string() },
        other => config(other),
    })?;
    let _ = write!(out, "{}", report.to_text());
    write_json(&cli.json_out, &report)?;
    Ok(if report.morphism && !report.cross_check.flagged { EXIT_PASS } else { EXIT_HYPOTHESIS })
}

fn cmd_saturate(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let built = build(cli)?;
    let spec = kernel_spec(cli, &built.file)?;
    let m = built.model.m();
    let grid = GridSpec::parse(cli.grid.as_deref().unwrap_or(""), m).map_err(config)?;
    let tol = cli.tol.unwrap_or(1e-6);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(config(format!("--tol {tol} is not in (0, 1)")));
    }
    let prepared = prepare_kernel(&spec, &built).map_err(suite_failure)?;
    let opts = SaturationOptions::with_tol(tol);
    let rows = batch_saturate(prepared.kernel.as_ref(), &built.model, &grid, &opts);
    let names = built.model.chart.names();
    let csv = grid_csv(&grid, &rows, &names);
    match &cli.csv_out {
        Some(p) => std::fs::write(p, &csv).map_err(|e| config(format!("{}: {e}", p.display())))?,
        None => {
            let _ = write!(out, "{csv}");
        }
    }
    let count = |s: &str| rows.iter().filter(|r| r.status == s).count();
    let errors = rows.len() - count("ok") - count("pole") - count("truncation");
    let summary = json!({
        "model": built.model.name,
        "kernel": prepared.kernel.name(),
        "tol": tol,
        "grid": grid,
        "calibration": prepared.calibration,
        "points": rows.len(),
        "ok": count("ok"),
        "pole": count("pole"),
        "truncation": count("truncation"),
        "errors": errors,
        "rows": rows,
    });
    write_json(&cli.json_out, &summary)?;
    if cli.csv_out.is_some() {
        let _ = writeln!(out, "{} points: {} ok, {} pole, {} truncation, {} errors", rows.len(), count("ok"), count("pole"), count("truncation"), errors);
    }
    Ok(if errors > 0 {
        EXIT_NUMERIC
    } else if count("truncation") > 0 {
        EXIT_HYPOTHESIS
    } else {
        EXIT_PASS
    })
}

fn suite_failure(e: SuiteError) -> Failure {
    match e {
        SuiteError::Config(m) => Failure { code: EXIT_CONFIG, message: m },
        SuiteError::Numeric(m) => Failure { code: EXIT_NUMERIC, message: m },
    }
}

fn cmd_verify(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let built = build(cli)?;
    let spec = kernel_spec(cli, &built.file)?;
    let tol = cli.tol.unwrap_or(2e-2);
    if !(tol > 0.0) {
        return Err(config(format!("--tol {tol} must be positive")));
    }
    let cfg = SuiteConfig::for_plane(tol, cli.seed);
    let report = run_suite(&built, &spec, &cfg).map_err(suite_failure)?;
    let _ = write!(out, "{}", report.to_text());
    write_json(&cli.json_out, &report)?;
    Ok(report.exit_code())
}
