//! Closed-form parameter counts next to the published table and the
//! implementation's own tensors, as a bench CSV.

use ltcse::bench::{actual_params, table1_report, write_bench_csv};
use ltcse::cells::{CellConfig, CellKind};

fn main() -> ltcse::Result<()> {
    let rows = table1_report()?;
    write_bench_csv(&rows, std::io::stdout().lock())?;
    for r in rows.iter().filter(|r| r.discrepancy()) {
        eprintln!(
            "{}: formula {} vs printed {}",
            r.kind,
            r.formula_count.unwrap_or_default(),
            r.table1_printed.unwrap_or_default()
        );
    }
    let (total, parts) = actual_params(&CellConfig::new(CellKind::Ltc, 8, 128, 1))?;
    eprintln!("ltc tensors ({total} total):");
    for (name, count) in parts {
        eprintln!("  {name:<20} {count}");
    }
    Ok(())
}
