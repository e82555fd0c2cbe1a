use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::training::{EpochRecord, RunRecord, SummaryRow};

pub const RUN_HEADER: [&str; 3] = ["epoch", "train_loss", "valid_metric"];
pub const SUMMARY_HEADER: [&str; 6] = ["task", "model", "metric", "mean", "std", "seeds"];

/// 17 significant digits; parses back to the same double.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Data(format!("not a number: \"{s}\"")))
}

pub fn write_run_csv(record: &RunRecord, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_HEADER)?;
    for e in &record.epochs {
        w.write_record([
            e.epoch.to_string(),
            format_float(e.train_loss),
            e.valid_metric.map(format_float).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_run_csv(input: impl Read) -> Result<Vec<EpochRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(rdr.headers()?, &RUN_HEADER)?;
    rdr.records()
        .map(|r| {
            let r = r?;
            let epoch = r[0]
                .parse()
                .map_err(|_| Error::Data(format!("bad epoch \"{}\"", &r[0])))?;
            let valid_metric = if r[2].is_empty() { None } else { Some(parse_float(&r[2])?) };
            Ok(EpochRecord {
                epoch,
                train_loss: parse_float(&r[1])?,
                valid_metric,
            })
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for row in rows {
        let seeds: Vec<String> = row.seeds.iter().map(u64::to_string).collect();
        w.write_record([
            row.task.clone(),
            row.model.clone(),
            row.metric.clone(),
            format_float(row.mean),
            format_float(row.std),
            seeds.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(input: impl Read) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(rdr.headers()?, &SUMMARY_HEADER)?;
    rdr.records()
        .map(|r| {
            let r = r?;
            let seeds = r[5]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::Data(format!("bad seed \"{s}\""))))
                .collect::<Result<_>>()?;
            Ok(SummaryRow {
                task: r[0].to_string(),
                model: r[1].to_string(),
                metric: r[2].to_string(),
                mean: parse_float(&r[3])?,
                std: parse_float(&r[4])?,
                seeds,
            })
        })
        .collect()
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        let missing = expected
            .iter()
            .filter(|c| !found.iter().any(|f| f == **c))
            .map(|c| c.to_string())
            .collect::<Vec<_>>();
        if missing.is_empty() {
            return Err(Error::Data(format!("unexpected CSV header {found:?}")));
        }
        return Err(Error::Schema { missing });
    }
    Ok(())
}

/// Summary rows for a set of finished runs, one per metric.
pub fn export_metrics(task: &str, model: &str, metric_name: &str, records: &[RunRecord], out: impl Write) -> Result<()> {
    let rows = if records.is_empty() {
        Vec::new()
    } else {
        crate::training::summarize(task, model, metric_name, records)
    };
    write_summary_csv(&rows, out)
}
