//! Compares reverse-mode gradients of a full unrolled sequence loss with
//! central finite differences, for each cell kind.

use ltcse::cells::{sequence_forward, Bound, CellConfig, CellKind, Model};
use ltcse::data::TargetKind;
use ltcse::numerics::{grad_check_many, Graph, Tensor, Var};
use ltcse::training::sequence_loss;

fn main() -> ltcse::Result<()> {
    let inputs = Tensor::from_fn(&[2, 4, 3], |i| (i as f64 * 0.7).sin());
    let targets = [0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
    for kind in CellKind::ALL {
        let config = CellConfig::new(kind, 3, 5, 2);
        let model = Model::init(config.clone(), 1)?;
        let leaves: Vec<Tensor> = model.params.named().into_iter().map(|(_, t)| t.clone()).collect();
        let program = |g: &mut Graph, vars: &[Var]| {
            let mut next = vars.iter().copied();
            let params = model.params.try_map(|_, _| Ok(next.next().expect("leaf per tensor")))?;
            let outputs = sequence_forward(g, &Bound::new(&config, params), &inputs, 1.0)?;
            sequence_loss(g, &outputs, &targets, TargetKind::Classes(2))
        };
        let err = grad_check_many(program, &leaves, 1e-5)?;
        println!("{:<6} {:>5} parameters  max relative error {err:.2e}", kind.name(), model.params.count());
    }
    Ok(())
}
