//! Exponential coordinates: the flow-based E against the closed forms, and split coordinates.

use hypolift::model_file::BuiltModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["grushin", "sine-se2"] {
        let g = BuiltModel::builtin(name)?.model;
        println!("== {name}");
        let mut worst: f64 = 0.0;
        for xi in [[0.5, -1.0, 0.3], [2.0, 1.5, -0.7], [-1.2, 0.0, 2.0], [1e-9, 1.0, 1.0]] {
            let flow = g.e_map_flow(&xi)?;
            let closed = g.e_map(&xi)?;
            let split = g.to_split(&xi)?;
            let back = g.from_split(&split)?;
            let d = flow.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
            let rt = back.iter().zip(&xi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            println!("  xi {xi:?}: E = {closed:.6?}, split = {split:.6?}, |flow - closed| {d:.1e}, round trip {rt:.1e}");
        }
        println!("  max flow/closed gap {worst:.2e}");
    }
    Ok(())
}
