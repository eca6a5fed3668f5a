//! Saturated Grushin solution on a small grid around a pole, written as CSV.

use hypolift::kernels::calibrated_heisenberg;
use hypolift::model_file::BuiltModel;
use hypolift::saturation::{batch_saturate, grid_csv, saturate, GridSpec, SaturationOptions};
use hypolift::suite::lifted_operator;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = BuiltModel::builtin("grushin")?;
    let (kernel, _) = calibrated_heisenberg(&b.model, &lifted_operator(&b)?)?;
    let opts = SaturationOptions::default();
    let r = saturate(&kernel, &b.model, &[0.0, 0.0], &[1.0, 0.0], &[0.0], &opts)?;
    eprintln!("Gamma((0,0);(1,0)) = {:.10} +- {:.1e}, radius {}, {} evals", r.value, r.error, r.radius, r.evals);
    let grid = GridSpec::parse("pole=0,0;s=0;y1=-1:1:5;y2=-1:1:5", 2)?;
    let rows = batch_saturate(&kernel, &b.model, &grid, &opts);
    print!("{}", grid_csv(&grid, &rows, &["x1", "x2"]));
    Ok(())
}
