//! Synthetic stand-ins for each task pushed through normalization,
//! chronological splitting and windowing.

use ltcse::data::{synth_fixture, Dataset, Task};

fn main() -> ltcse::Result<()> {
    println!("{:<10} {:>6} {:>4} {:>8} {:>6} {:>6} {:>6}", "task", "rows", "K", "metric", "train", "valid", "test");
    for task in Task::ALL {
        let spec = task.spec();
        let table = synth_fixture(task, 0, 4_000)?;
        let data = Dataset::prepare(&table, &spec, 32)?;
        println!(
            "{:<10} {:>6} {:>4} {:>8} {:>6} {:>6} {:>6}",
            task.name(),
            table.rows(),
            spec.input_size(),
            spec.target_kind.metric_name(),
            data.train.len(),
            data.valid.len(),
            data.test.len()
        );
    }
    let out = std::env::temp_dir().join("ltcse-occupancy-fixture.csv");
    let table = synth_fixture(Task::Occupancy, 0, 100)?;
    ltcse::data::save_csv(&table, &Task::Occupancy.spec(), &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
