//! Renders a loss-curve chart and a memory bar chart to SVG files.

use ltcse::bench::{bench_row, BenchDims};
use ltcse::cells::CellKind;
use ltcse::plot::{bar_chart, line_chart, Panel, Series};

fn main() -> ltcse::Result<()> {
    let dir = std::env::temp_dir().join("ltcse-plots");
    std::fs::create_dir_all(&dir)?;
    let series = (0..3)
        .map(|s| Series {
            name: format!("seed{s}"),
            points: (1..=20).map(|e| (e as f64, 1.0 / (e as f64 + s as f64))).collect(),
        })
        .collect();
    let curves = line_chart(&[Panel {
        title: "train loss".into(),
        series,
    }]);
    std::fs::write(dir.join("curves.svg"), curves)?;

    let dims = BenchDims { m: Some(8), ..BenchDims::default() };
    let bars = CellKind::ALL
        .into_iter()
        .map(|k| Ok((k.name().to_string(), bench_row(k, dims)?.total_bytes as f64)))
        .collect::<ltcse::Result<Vec<_>>>()?;
    std::fs::write(dir.join("bench.svg"), bar_chart("training memory (bytes)", &bars))?;
    println!("wrote {}", dir.display());
    Ok(())
}
