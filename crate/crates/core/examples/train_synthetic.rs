//! Trains an LTC on the synthetic occupancy fixture and reports test accuracy.
//!
//! `cargo run --release --example train_synthetic -- [epochs]`

use std::time::Instant;

use ltcse::cells::CellKind;
use ltcse::data::{synth_fixture, Dataset, Task};
use ltcse::training::{cell_config_for, run, TrainConfig};

fn main() -> ltcse::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let table = synth_fixture(Task::Occupancy, config.data_seed, config.synth_rows)?;
    let dataset = Dataset::prepare(&table, &Task::Occupancy.spec(), config.bptt_len)?;
    let cell = cell_config_for(&dataset, CellKind::Ltc, &config);
    let start = Instant::now();
    let outcome = run(&dataset, &cell, &config, 0)?;
    for e in &outcome.record.epochs {
        println!(
            "epoch {:>3}  loss {:.4}  valid acc {:.4}",
            e.epoch,
            e.train_loss,
            e.valid_metric.unwrap_or(f64::NAN)
        );
    }
    println!(
        "test accuracy {:.4} (best epoch {:?}) in {:.1}s",
        outcome.record.test_metric,
        outcome.record.best_epoch,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
