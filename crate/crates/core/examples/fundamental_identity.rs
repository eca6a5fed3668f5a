//! End-to-end check of the saturated Grushin solution against bump functions.

use std::time::Instant;

use hypolift::kernels::calibrated_heisenberg;
use hypolift::model_file::BuiltModel;
use hypolift::saturation::{SaturatedGamma, SaturationOptions};
use hypolift::verification::{fundamental_identity_residual, BumpFunction, CompiledOperator, QuadSpec};
use hypolift::Expr;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = BuiltModel::builtin("grushin")?;
    let lifted = b.lifted()?;
    let lop = lifted.lift_operator(&b.operator)?;
    let t = Instant::now();
    let (kernel, cal) = calibrated_heisenberg(&b.model, &CompiledOperator::new(&lop.full)?)?;
    println!("constant {:.10} ({:.1?})", cal.constant, t.elapsed());
    let adjoint = CompiledOperator::new(&b.operator.adjoint(&Expr::one()).coordinate_form())?;
    let gamma = SaturatedGamma::new(&kernel, &b.model, SaturationOptions::with_tol(1e-6));
    for (x, c, r) in [([0.3, 0.1], [0.3, 0.1], 1.0), ([0.0, 0.0], [0.1, -0.2], 0.9), ([0.5, -0.4], [0.2, 0.0], 1.2), ([2.0, 0.0], [0.0, 0.0], 1.0)] {
        let t = Instant::now();
        let bump = BumpFunction::new(c.to_vec(), r, 6);
        let res = fundamental_identity_residual(&gamma, &adjoint, &bump, &x, &QuadSpec::default())?;
        println!("x = {x:?}: integral {:+.6} phi(x) {:.6} residual {:.2e} evals {} ({:.1?})", res.integral, res.phi_x, res.residual, res.evals, t.elapsed());
    }
    println!("min gamma {:.3e}, non-positive {}", gamma.min_value(), gamma.non_positive());
    Ok(())
}
