//! Calibrates the Heisenberg kernel constant on the lifted Grushin operator and checks its hypotheses.

use std::time::Instant;

use hypolift::kernels::{calibrated_heisenberg, check_kernel_hypotheses};
use hypolift::model_file::BuiltModel;
use hypolift::suite::lifted_operator;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = BuiltModel::builtin("grushin")?;
    let op = lifted_operator(&b)?;
    let t = Instant::now();
    let (kernel, cal) = calibrated_heisenberg(&b.model, &op)?;
    println!("c_H = {:.10} (1/2pi = {:.10})", cal.constant, 1.0 / std::f64::consts::TAU);
    println!("quadrature error {:.1e}, resolution change {:.1e}, check residual {:.1e} ({:.1?})", cal.error, cal.resolution_change, cal.check_residual, t.elapsed());
    let h = check_kernel_hypotheses(&kernel, &op, 2, 200, 5);
    println!("positivity {:.3}, harmonicity {:.2e}, fiber tail exponent {:.3}, fiber L1 {}, pass {}", h.positivity_rate, h.harmonicity, h.fiber_tail_exponent, h.fiber_l1, h.pass);
    Ok(())
}
