//! Saves a model, reloads it and checks that outputs are bitwise unchanged.

use std::collections::BTreeMap;

use ltcse::cells::{CellConfig, CellKind, Model};
use ltcse::model_io::{Checkpoint, Dtype};
use ltcse::numerics::Tensor;
use ltcse::training::TrainConfig;

fn main() -> ltcse::Result<()> {
    let dir = std::env::temp_dir().join("ltcse-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let model = Model::init(CellConfig::new(CellKind::Ltc, 5, 16, 2), 3)?;
    let metrics = BTreeMap::from([("test_accuracy".to_string(), 0.5)]);
    let ckpt = Checkpoint::from_model(&model, &TrainConfig::default(), 3, metrics);
    let path = dir.join("ltc.ckpt");
    ckpt.save(&path)?;

    let loaded = Checkpoint::load(&path)?;
    let (restored, train) = loaded.model()?;
    let batch = Tensor::from_fn(&[2, 6, 5], |i| (i as f64).cos());
    let a = model.forward_sequence(&batch, 1.0)?;
    let b = restored.forward_sequence(&batch, 1.0)?;
    let same = a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits());
    println!("{} bytes, {} tensors, task {}", std::fs::metadata(&path)?.len(), loaded.tensors.len(), train.task);
    println!("outputs bitwise equal: {same}");
    println!("re-save identical: {}", loaded.to_bytes()? == std::fs::read(&path)?);

    let mut small = loaded;
    small.dtype = Dtype::F32;
    println!("single-precision export: {} bytes", small.to_bytes()?.len());
    Ok(())
}
