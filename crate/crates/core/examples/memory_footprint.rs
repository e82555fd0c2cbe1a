//! Analytic training memory per cell kind as the unroll length grows.

use ltcse::bench::{memory_footprint, step_flops};
use ltcse::cells::{CellConfig, CellKind};

fn main() -> ltcse::Result<()> {
    println!("{:<6} {:>12} {:>14} {:>14} {:>14}", "kind", "flops/step", "T=8", "T=32", "T=128");
    for kind in CellKind::ALL {
        let config = CellConfig::new(kind, 8, 32, 1);
        let mut line = format!("{:<6} {:>12}", kind.name(), step_flops(&config).total());
        for t in [8, 32, 128] {
            let r = memory_footprint(&config, 16, t)?;
            line.push_str(&format!(" {:>14}", r.total_bytes));
        }
        println!("{line}");
    }
    Ok(())
}
