//! Five seeds of a small CT-RNN on the synthetic occupancy fixture, run on
//! two worker threads and summarized as mean and sample std.

use ltcse::cells::CellKind;
use ltcse::data::{synth_fixture, Dataset, Task};
use ltcse::model_io::write_summary_csv;
use ltcse::training::{cell_config_for, repeat_runs, TrainConfig};

fn main() -> ltcse::Result<()> {
    let config = TrainConfig {
        epochs: 5,
        hidden_units: 16,
        synth_rows: 4_000,
        ..TrainConfig::default()
    };
    let table = synth_fixture(Task::Occupancy, config.data_seed, config.synth_rows)?;
    let dataset = Dataset::prepare(&table, &Task::Occupancy.spec(), config.bptt_len)?;
    let cell = cell_config_for(&dataset, CellKind::Ctrnn, &config);
    let outcome = repeat_runs(&dataset, &cell, &config, 2)?;
    for r in &outcome.runs {
        println!("seed {} test accuracy {:.4}", r.record.seed, r.record.test_metric);
    }
    write_summary_csv(&outcome.summary, std::io::stdout().lock())?;
    Ok(())
}
