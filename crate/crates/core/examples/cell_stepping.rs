//! Steps every cell kind through a short sine input, one sample at a time.

use ltcse::cells::{init_cell, CellConfig, CellKind};
use ltcse::numerics::Tensor;

fn main() -> ltcse::Result<()> {
    for kind in CellKind::ALL {
        let config = CellConfig::new(kind, 2, 4, 1);
        let (model, mut state) = init_cell(config.clone(), 7)?;
        let mut outputs = Vec::new();
        for t in 0..8 {
            let phase = t as f64 * 0.4;
            let u = Tensor::new(&[1, 2], vec![phase.sin(), phase.cos()])?;
            let (next, y) = model.step(&state, &u, 1.0)?;
            state = next;
            outputs.push(format!("{:+.3}", y.data()[0]));
        }
        println!(
            "{:<6} solver {:<5} unfolds {}  y: {}",
            kind.name(),
            config.solver.name(),
            config.ode_unfolds,
            outputs.join(" ")
        );
    }
    Ok(())
}
