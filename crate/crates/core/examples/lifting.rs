//! Lifted fields, vertical matrix and densities for both built-in models.

use hypolift::model_file::BuiltModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["grushin", "sine-se2"] {
        let b = BuiltModel::builtin(name)?;
        let l = b.lifted()?;
        let points = b.model.sample_points(3, 1);
        println!("== {name}");
        print!("{}", l.report(Some(&b.operator), &points)?.to_text());
        println!("morphism holds: {}", l.morphism_holds()?);
        let lop = l.lift_operator(&b.operator)?;
        println!("lifted operator: {}", lop.full.display());
    }
    Ok(())
}
