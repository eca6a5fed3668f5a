//! The 2pi quotient of the sin model: invariance, centrality, injectivity, representative independence.

use hypolift::kernels::SyntheticKernel;
use hypolift::model_file::BuiltModel;
use hypolift::quotient::{centrality_check, check_field_invariance, check_rho_invariance, fiber_injectivity, quotient_solution, DiscreteSubgroup};
use hypolift::saturation::{SaturatedGamma, SaturationOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = BuiltModel::builtin("sine-se2")?;
    let group = DiscreteSubgroup::from_section(b.file.quotient.as_ref().ok_or("no quotient section")?, 2)?;
    let shift = &group.translation_exprs[0];
    let inv = check_field_invariance(&b.model, shift);
    println!("fields invariant under x -> x + ({}, {}): {}", shift[0], shift[1], inv.invariant);
    println!("rho invariant: {}", check_rho_invariance(&b.model, shift));
    let c = centrality_check(&b.model, &group.generators[0], 50, 3)?;
    println!("centrality residual {:.2e} over {} samples, fixed points {}", c.max_residual, c.samples, c.fixed_points);
    let f = fiber_injectivity(&b.model, &group, &[0.5, 0.2], &[-3.0, -1.0, 0.0, 2.0])?;
    println!("fiber injective {}, min orbit gap {:.4}", f.injective, f.min_orbit_gap);
    let kernel = SyntheticKernel::new(b.model.clone());
    let gamma = SaturatedGamma::new(&kernel, &b.model, SaturationOptions::default());
    let q = quotient_solution(&gamma, &group, &[0.3, 0.2], &[1.0, -0.4], &[-2, -1, 0, 1, 2], 5e-6)?;
    println!("Gamma_M = {:.10}, representative deviation {:.1e}", q.value, q.max_deviation);
    Ok(())
}
