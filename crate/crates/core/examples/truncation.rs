//! Cutoff sequence diagnostics: II_j shrinks, I_j settles at -phi(x).

use hypolift::kernels::calibrated_heisenberg;
use hypolift::model_file::BuiltModel;
use hypolift::saturation::truncation_diagnostics;
use hypolift::suite::{lifted_adjoint, lifted_operator};
use hypolift::verification::{BumpFunction, QuadSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = BuiltModel::builtin("grushin")?;
    let (kernel, _) = calibrated_heisenberg(&b.model, &lifted_operator(&b)?)?;
    let bump = BumpFunction::new(vec![0.2, 0.1], 1.0, 6);
    let t = truncation_diagnostics(&kernel, &b.model, &lifted_adjoint(&b)?, &[0.3, 0.1], &bump, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], &QuadSpec::default())?;
    println!("phi(x) = {:.8}", t.phi_x);
    println!("{:>6} {:>14} {:>12} {:>12} {:>9} {:>9}", "R", "I", "II", "I+II+phi", "|th'|", "|th''|");
    for r in &t.rows {
        println!("{:>6} {:>14.8} {:>12.3e} {:>12.3e} {:>9.4} {:>9.4}", r.radius, r.i, r.ii, r.identity, r.theta_d1_max, r.theta_d2_max);
    }
    println!("II decreasing {}, I stabilized {}", t.ii_decreasing, t.i_stabilized);
    Ok(())
}
