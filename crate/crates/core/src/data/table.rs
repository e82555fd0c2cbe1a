use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};

use super::task::{TargetKind, Task, TaskSpec};
use crate::error::{Error, Result};

/// A cleaned, time-ordered multivariate series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable {
    pub task: Task,
    /// Seconds since the Unix epoch, or the row position when the source has
    /// no timestamp column. Strictly increasing.
    pub timestamps: Vec<i64>,
    /// Row-major `[rows×K]`.
    pub features: Vec<f64>,
    pub k: usize,
    /// Class ids (as floats) or real targets, one per row.
    pub targets: Vec<f64>,
    /// Median spacing between consecutive timestamps.
    pub period: Option<i64>,
}

impl SeriesTable {
    pub fn new(task: Task, timestamps: Vec<i64>, features: Vec<f64>, k: usize, targets: Vec<f64>) -> Result<Self> {
        let rows = timestamps.len();
        if features.len() != rows * k || targets.len() != rows {
            return Err(Error::Data(format!(
                "inconsistent table: {rows} timestamps, {} feature values for K={k}, {} targets",
                features.len(),
                targets.len()
            )));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Data(format!("timestamps not strictly increasing at row {}", i + 1)));
        }
        let period = median_spacing(&timestamps);
        Ok(Self {
            task,
            timestamps,
            features,
            k,
            targets,
            period,
        })
    }

    pub fn rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.k..(i + 1) * self.k]
    }

    /// Rows `start..end` as a new table.
    pub fn slice(&self, start: usize, end: usize) -> SeriesTable {
        let timestamps = self.timestamps[start..end].to_vec();
        Self {
            task: self.task,
            period: median_spacing(&timestamps),
            timestamps,
            features: self.features[start * self.k..end * self.k].to_vec(),
            k: self.k,
            targets: self.targets[start..end].to_vec(),
        }
    }
}

fn median_spacing(ts: &[i64]) -> Option<i64> {
    let mut gaps: Vec<i64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_unstable();
    Some(gaps[gaps.len() / 2])
}

const MISSING: [&str; 4] = ["", "?", "NA", "NaN"];

const DATETIME_FORMATS: [&str; 5] = [
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%d/%m/%Y %H:%M:%S",
    "%m/%d/%Y %H:%M:%S",
];

const DATE_FORMATS: [&str; 2] = ["%Y-%m-%d", "%m/%d/%Y"];

/// Parses the timestamp spellings found in the task sources.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    for f in DATETIME_FORMATS {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, f) {
            return Some(t.and_utc().timestamp());
        }
    }
    for f in DATE_FORMATS {
        if let Ok(d) = NaiveDate::parse_from_str(s, f) {
            return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
        }
    }
    None
}

pub fn format_timestamp(t: i64) -> String {
    chrono::DateTime::from_timestamp(t, 0)
        .map(|d| d.naive_utc().format("%Y-%m-%d %H:%M:%S").to_string())
        .unwrap_or_else(|| t.to_string())
}

fn parse_value(token: &str) -> Option<f64> {
    let token = token.trim();
    if MISSING.contains(&token) {
        return None;
    }
    token.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_csv(path: impl AsRef<Path>, spec: &TaskSpec) -> Result<SeriesTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file, spec)
}

/// Reads a canonical task CSV.
///
/// Extra columns are ignored. A leading unnamed row-index column (one more
/// field per record than the header has) is skipped. Missing or unparseable
/// values are forward-filled; rows before the first complete row are
/// dropped, as are rows whose timestamp does not advance.
pub fn read_csv(reader: impl Read, spec: &TaskSpec) -> Result<SeriesTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let wanted = spec.columns();
    let missing: Vec<String> = wanted.iter().filter(|c| !header.contains(c)).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::Schema { missing });
    }
    let index_of = |name: &str| header.iter().position(|h| h == name).expect("checked above");
    let ts_col = spec.timestamp.map(index_of);
    let feat_cols: Vec<usize> = spec.features.iter().map(|f| index_of(f)).collect();
    let target_col = index_of(spec.target);
    let k = feat_cols.len();

    let mut last: Vec<Option<f64>> = vec![None; k + 1];
    let mut timestamps = Vec::new();
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut line = 0usize;
    while rdr.read_record(&mut record)? {
        line += 1;
        let offset = match record.len() {
            n if n == header.len() => 0,
            n if n == header.len() + 1 => 1,
            n => {
                return Err(Error::Data(format!(
                    "record {line} has {n} fields, header has {}",
                    header.len()
                )))
            }
        };
        let field = |c: usize| record.get(c + offset).unwrap_or("");
        let stamp = match ts_col {
            Some(c) => parse_timestamp(field(c))
                .ok_or_else(|| Error::Data(format!("record {line}: unparseable timestamp \"{}\"", field(c))))?,
            None => line as i64 - 1,
        };
        for (slot, &c) in last.iter_mut().zip(feat_cols.iter().chain([&target_col])) {
            if let Some(v) = parse_value(field(c)) {
                *slot = Some(v);
            }
        }
        if last.iter().any(Option::is_none) {
            continue;
        }
        if timestamps.last().is_some_and(|&prev| stamp <= prev) {
            continue;
        }
        timestamps.push(stamp);
        features.extend(last[..k].iter().map(|v| v.expect("complete row")));
        targets.push(last[k].expect("complete row"));
    }
    if timestamps.is_empty() {
        return Err(Error::Data("no complete rows".into()));
    }
    if let TargetKind::Classes(c) = spec.target_kind {
        if let Some(bad) = targets.iter().find(|&&y| y.fract() != 0.0 || y < 0.0 || y >= c as f64) {
            return Err(Error::Data(format!(
                "target {bad} outside class range 0..{c} for task {}",
                spec.task
            )));
        }
    }
    let table = SeriesTable::new(spec.task, timestamps, features, k, targets)?;
    Ok(if spec.hourly { hourly_means(&table) } else { table })
}

/// Averages rows that share the same hour.
pub fn hourly_means(table: &SeriesTable) -> SeriesTable {
    let k = table.k;
    let mut timestamps = Vec::new();
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut i = 0;
    while i < table.rows() {
        let hour = table.timestamps[i].div_euclid(3600);
        let mut j = i;
        while j < table.rows() && table.timestamps[j].div_euclid(3600) == hour {
            j += 1;
        }
        let n = (j - i) as f64;
        timestamps.push(hour * 3600);
        for c in 0..k {
            features.push((i..j).map(|r| table.features[r * k + c]).sum::<f64>() / n);
        }
        targets.push(table.targets[i..j].iter().sum::<f64>() / n);
        i = j;
    }
    SeriesTable::new(table.task, timestamps, features, k, targets).expect("bucketed hours increase")
}

/// Writes `table` in the canonical layout of `spec`; floats use the
/// shortest representation that reads back bit-exactly.
pub fn write_csv(table: &SeriesTable, spec: &TaskSpec, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(spec.columns())?;
    let mut record = Vec::with_capacity(table.k + 2);
    for i in 0..table.rows() {
        record.clear();
        if spec.timestamp.is_some() {
            record.push(format_timestamp(table.timestamps[i]));
        }
        record.extend(table.row(i).iter().map(|v| v.to_string()));
        record.push(table.targets[i].to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(table: &SeriesTable, spec: &TaskSpec, path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_csv(table, spec, file)
}
