//! Download cache for the UCI source archives.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Cursor, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::table::{format_timestamp, parse_timestamp, read_csv, write_csv, SeriesTable};
use super::task::{Task, TaskSpec};
use crate::error::{Error, Result};

/// Where a task's raw archive lives and what it should hash to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub url: String,
    /// Lowercase hex SHA-256 of the archive; recorded on first download
    /// when not pinned.
    pub sha256: Option<String>,
    pub bytes: Option<u64>,
}

pub type Manifest = BTreeMap<String, SourceEntry>;

pub fn default_url(task: Task) -> &'static str {
    match task {
        Task::Occupancy => "https://archive.ics.uci.edu/static/public/357/occupancy+detection.zip",
        Task::Har => "https://archive.ics.uci.edu/static/public/240/human+activity+recognition+using+smartphones.zip",
        Task::Traffic => "https://archive.ics.uci.edu/static/public/492/metro+interstate+traffic+volume.zip",
        Task::Power => {
            "https://archive.ics.uci.edu/static/public/235/individual+household+electric+power+consumption.zip"
        }
        Task::Ozone => "https://archive.ics.uci.edu/static/public/172/ozone+level+detection.zip",
    }
}

pub fn default_manifest() -> Manifest {
    Task::ALL
        .into_iter()
        .map(|t| {
            let entry = SourceEntry {
                url: default_url(t).to_string(),
                sha256: None,
                bytes: None,
            };
            (t.name().to_string(), entry)
        })
        .collect()
}

/// Fetches raw bytes for a URL.
pub trait Downloader {
    fn download(&self, url: &str) -> Result<Vec<u8>>;
}

/// Plain HTTPS download.
pub struct HttpDownloader;

impl Downloader for HttpDownloader {
    fn download(&self, url: &str) -> Result<Vec<u8>> {
        let response = ureq::get(url)
            .call()
            .map_err(|e| Error::Data(format!("download of {url} failed: {e}")))?;
        let mut bytes = Vec::new();
        response.into_body().into_reader().read_to_end(&mut bytes)?;
        Ok(bytes)
    }
}

/// `$LTCSE_CACHE`, else `~/.cache/ltcse`.
pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os("LTCSE_CACHE") {
        return PathBuf::from(dir);
    }
    let home = std::env::var_os("HOME").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    home.join(".cache").join("ltcse")
}

#[derive(Clone, Debug)]
pub struct FetchOptions {
    pub cache_dir: PathBuf,
    /// Never touch the network; fail when the cache is incomplete.
    pub offline: bool,
}

impl Default for FetchOptions {
    fn default() -> Self {
        Self {
            cache_dir: default_cache_dir(),
            offline: false,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Exclusive lock on a task directory, released on drop.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Data(format!(
                "cache directory {} is locked by another process (delete {} if it is stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn manifest_path(cache: &Path) -> PathBuf {
    cache.join("manifest.json")
}

pub fn load_manifest(cache: &Path) -> Result<Manifest> {
    let mut manifest = default_manifest();
    let path = manifest_path(cache);
    if path.exists() {
        let stored: Manifest = serde_json::from_slice(&fs::read(&path)?)?;
        manifest.extend(stored);
    }
    Ok(manifest)
}

fn save_manifest(cache: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    let tmp = manifest_path(cache).with_extension("json.tmp");
    fs::write(&tmp, text)?;
    fs::rename(tmp, manifest_path(cache))?;
    Ok(())
}

/// Paths of the raw archive and the canonical CSV for `task`.
pub fn cache_paths(cache: &Path, task: Task) -> (PathBuf, PathBuf) {
    let dir = cache.join(task.name());
    (dir.join("raw.zip"), dir.join(format!("{}.csv", task.name())))
}

fn offline_help(task: Task, entry: &SourceEntry, raw: &Path) -> Error {
    Error::Data(format!(
        "dataset \"{task}\" is not cached. Download {} and save it as {}, \
         or run `ltcse data fetch --task {task}` with network access \
         (cache root is set by LTCSE_CACHE)",
        entry.url,
        raw.display()
    ))
}

/// Ensures the canonical CSV for `task` exists and returns its path.
///
/// A cached archive is hashed and compared with the manifest before use.
/// The network is touched only when the archive is absent and
/// `opts.offline` is false.
pub fn fetch(task: Task, opts: &FetchOptions, downloader: &dyn Downloader) -> Result<PathBuf> {
    let (raw, canonical) = cache_paths(&opts.cache_dir, task);
    let dir = raw.parent().expect("task dir");
    fs::create_dir_all(dir)?;
    let _lock = DirLock::acquire(dir)?;
    let mut manifest = load_manifest(&opts.cache_dir)?;
    let entry = manifest[task.name()].clone();

    let bytes = if raw.exists() {
        let bytes = fs::read(&raw)?;
        verify(&raw, &bytes, &entry)?;
        if canonical.exists() {
            return Ok(canonical);
        }
        bytes
    } else {
        if opts.offline {
            return Err(offline_help(task, &entry, &raw));
        }
        log::info!("downloading {}", entry.url);
        let bytes = downloader.download(&entry.url).map_err(|e| match e {
            Error::Data(msg) => Error::Data(format!(
                "{msg}. Download {} manually and save it as {}",
                entry.url,
                raw.display()
            )),
            other => other,
        })?;
        verify(&raw, &bytes, &entry)?;
        manifest.insert(
            task.name().to_string(),
            SourceEntry {
                sha256: Some(sha256_hex(&bytes)),
                bytes: Some(bytes.len() as u64),
                ..entry
            },
        );
        fs::write(&raw, &bytes)?;
        save_manifest(&opts.cache_dir, &manifest)?;
        bytes
    };
    let tmp = canonical.with_extension("csv.tmp");
    convert(task, &bytes, BufWriter::new(File::create(&tmp)?))?;
    fs::rename(&tmp, &canonical)?;
    Ok(canonical)
}

fn verify(path: &Path, bytes: &[u8], entry: &SourceEntry) -> Result<()> {
    if let Some(expected) = &entry.sha256 {
        let actual = sha256_hex(bytes);
        if !actual.eq_ignore_ascii_case(expected) {
            return Err(Error::HashMismatch {
                path: path.to_path_buf(),
                expected: expected.clone(),
                actual,
            });
        }
    }
    Ok(())
}

/// Fetches (if needed) and loads the cleaned table.
pub fn load_task(task: Task, opts: &FetchOptions, downloader: &dyn Downloader) -> Result<SeriesTable> {
    let path = fetch(task, opts, downloader)?;
    super::table::load_csv(path, &task.spec())
}

type Archive = zip::ZipArchive<Cursor<Vec<u8>>>;

fn open_zip(bytes: Vec<u8>) -> Result<Archive> {
    zip::ZipArchive::new(Cursor::new(bytes)).map_err(|e| Error::Data(format!("not a zip archive: {e}")))
}

/// Bytes of the first entry whose name ends with `suffix`, searching nested
/// archives too.
fn find_entry(archive: &mut Archive, suffix: &str) -> Result<Option<Vec<u8>>> {
    let names: Vec<String> = archive.file_names().map(str::to_string).collect();
    let read = |archive: &mut Archive, name: &str| -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        archive
            .by_name(name)
            .map_err(|e| Error::Data(format!("zip entry {name}: {e}")))?
            .read_to_end(&mut buf)?;
        Ok(buf)
    };
    if let Some(name) = names.iter().find(|n| n.ends_with(suffix) && !n.contains("__MACOSX")) {
        return Ok(Some(read(archive, name)?));
    }
    for name in names.iter().filter(|n| n.ends_with(".zip") && !n.contains("__MACOSX")) {
        let mut inner = open_zip(read(archive, name)?)?;
        if let Some(found) = find_entry(&mut inner, suffix)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

fn require(archive: &mut Archive, suffix: &str) -> Result<Vec<u8>> {
    find_entry(archive, suffix)?.ok_or_else(|| Error::Data(format!("archive has no entry named *{suffix}")))
}

/// Converts a raw UCI archive into the canonical CSV layout of the task.
pub fn convert(task: Task, archive: &[u8], out: impl Write) -> Result<()> {
    let mut zip = open_zip(archive.to_vec())?;
    match task {
        Task::Occupancy => convert_occupancy(&mut zip, out),
        Task::Har => convert_har(&mut zip, out),
        Task::Traffic => convert_traffic(&mut zip, out),
        Task::Power => convert_power(&mut zip, out),
        Task::Ozone => convert_ozone(&mut zip, out),
    }
}

fn convert_occupancy(zip: &mut Archive, out: impl Write) -> Result<()> {
    let spec = TaskSpec::new(Task::Occupancy);
    let mut rows: Vec<(i64, Vec<f64>, f64)> = Vec::new();
    for part in ["datatraining.txt", "datatest.txt", "datatest2.txt"] {
        let table = read_csv(Cursor::new(require(zip, part)?), &spec)?;
        for i in 0..table.rows() {
            rows.push((table.timestamps[i], table.row(i).to_vec(), table.targets[i]));
        }
    }
    rows.sort_by_key(|r| r.0);
    rows.dedup_by_key(|r| r.0);
    let k = spec.input_size();
    let table = SeriesTable::new(
        Task::Occupancy,
        rows.iter().map(|r| r.0).collect(),
        rows.iter().flat_map(|r| r.1.iter().copied()).collect(),
        k,
        rows.iter().map(|r| r.2).collect(),
    )?;
    write_csv(&table, &spec, out)
}

fn convert_har(zip: &mut Archive, out: impl Write) -> Result<()> {
    let spec = TaskSpec::new(Task::Har);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(spec.columns())?;
    for part in ["train", "test"] {
        let x = require(zip, &format!("{part}/X_{part}.txt"))?;
        let y = require(zip, &format!("{part}/y_{part}.txt"))?;
        let labels: Vec<&str> = std::str::from_utf8(&y)
            .map_err(|_| Error::Data("labels are not UTF-8".into()))?
            .split_whitespace()
            .collect();
        for (line, label) in BufReader::new(Cursor::new(x)).lines().zip(labels) {
            let line = line?;
            let mut record: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if record.len() != spec.input_size() {
                return Err(Error::Data(format!("HAR row with {} features", record.len())));
            }
            let class: i64 = label
                .parse()
                .map_err(|_| Error::Data(format!("bad HAR label \"{label}\"")))?;
            record.push((class - 1).to_string());
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn convert_traffic(zip: &mut Archive, out: impl Write) -> Result<()> {
    let spec = TaskSpec::new(Task::Traffic);
    let bytes = match find_entry(zip, ".csv.gz")? {
        Some(gz) => {
            let mut buf = Vec::new();
            flate2::read::GzDecoder::new(Cursor::new(gz)).read_to_end(&mut buf)?;
            buf
        }
        None => require(zip, ".csv")?,
    };
    let mut rdr = csv::Reader::from_reader(Cursor::new(bytes));
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema { missing: vec![name.to_string()] })
    };
    let (holiday, temp, rain, snow, clouds, date, volume) = (
        col("holiday")?,
        col("temp")?,
        col("rain_1h")?,
        col("snow_1h")?,
        col("clouds_all")?,
        col("date_time")?,
        col("traffic_volume")?,
    );
    let mut w = csv::Writer::from_writer(out);
    w.write_record(spec.columns())?;
    for record in rdr.records() {
        let r = record?;
        let Some(t) = parse_timestamp(&r[date]) else {
            return Err(Error::Data(format!("bad traffic timestamp \"{}\"", &r[date])));
        };
        let day = t.div_euclid(86_400);
        let dow = (day + 3).rem_euclid(7);
        let is_holiday = !matches!(r[holiday].trim(), "" | "None");
        w.write_record([
            format_timestamp(t),
            r[temp].to_string(),
            r[rain].to_string(),
            r[snow].to_string(),
            r[clouds].to_string(),
            (t.rem_euclid(86_400) / 3600).to_string(),
            dow.to_string(),
            u8::from(dow >= 5).to_string(),
            u8::from(is_holiday).to_string(),
            r[volume].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn convert_power(zip: &mut Archive, out: impl Write) -> Result<()> {
    let spec = TaskSpec::new(Task::Power);
    let bytes = require(zip, "household_power_consumption.txt")?;
    let mut rdr = csv::ReaderBuilder::new().delimiter(b';').from_reader(Cursor::new(bytes));
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema { missing: vec![name.to_string()] })
    };
    let (date, time) = (col("Date")?, col("Time")?);
    let values: Vec<usize> = spec
        .features
        .iter()
        .map(String::as_str)
        .chain([spec.target])
        .map(col)
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(spec.columns())?;
    for record in rdr.records() {
        let r = record?;
        let stamp = format!("{} {}", &r[date], &r[time]);
        let t = parse_timestamp(&stamp).ok_or_else(|| Error::Data(format!("bad power timestamp \"{stamp}\"")))?;
        let mut row = vec![format_timestamp(t)];
        row.extend(values.iter().map(|&c| r[c].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn convert_ozone(zip: &mut Archive, out: impl Write) -> Result<()> {
    let spec = TaskSpec::new(Task::Ozone);
    let bytes = require(zip, "eighthr.data")?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(Cursor::new(bytes));
    let mut w = csv::Writer::from_writer(out);
    let columns = spec.columns();
    w.write_record(&columns)?;
    for record in rdr.records() {
        let r = record?;
        if r.len() < columns.len() {
            continue;
        }
        w.write_record(r.iter().take(columns.len()).map(str::trim))?;
    }
    w.flush()?;
    Ok(())
}
