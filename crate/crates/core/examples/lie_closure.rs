//! Lie closure of the built-in generator sets: basis, structure constants, nilpotency.

use hypolift::closure::is_nilpotent;
use hypolift::model_file::BuiltModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["grushin", "sine-se2"] {
        let b = BuiltModel::builtin(name)?;
        let p = &b.model.presentation;
        println!("{name}: n = {}, depth {}", p.n(), p.depth);
        for (f, w) in p.basis.iter().zip(&p.words) {
            println!("  {f}  from {:?}", w.iter().map(|i| i + 1).collect::<Vec<_>>());
        }
        for (i, j, k, c) in p.constants.nonzero() {
            if i < j {
                println!("  c_{}{}^{} = {c}", i + 1, j + 1, k + 1);
            }
        }
        let nil = is_nilpotent(&p.constants);
        println!("  jacobi {}, nilpotent {} (lower central {:?}), certified {}", p.constants.satisfies_jacobi(), nil.nilpotent, nil.lower_central_dims, p.certify()?);
    }
    Ok(())
}
