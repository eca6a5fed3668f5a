//! Haar density, the density rho on M, the fiber scaling c, and rho_bar.

use hypolift::model_file::BuiltModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["grushin", "sine-se2"] {
        let g = BuiltModel::builtin(name)?.model;
        println!("== {name}: rho = {}", g.rho_symbolic());
        for x in g.sample_points(4, 3) {
            let c0 = g.fiber_scaling_c_at(&x, &[0.0])?;
            let c1 = g.fiber_scaling_c_at(&x, &[1.5])?;
            println!("  x = [{:+.3}, {:+.3}]: rho {:.8}, c {:.8} (s = 1.5: {:.8}), rho_bar {:.8}", x[0], x[1], g.rho(&x)?, c0, c1, g.rho_bar(&x)?);
        }
        println!("  haar at xi = (0.4, -0.3, 0.8): {:.8}", g.haar(&[0.4, -0.3, 0.8]));
    }
    Ok(())
}
