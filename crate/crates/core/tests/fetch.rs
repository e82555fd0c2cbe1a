use std::cell::Cell;
use std::fs;
use std::io::{Cursor, Write};

use ltcse::data::fetch::{cache_paths, load_manifest, sha256_hex};
use ltcse::data::{fetch, load_task, Downloader, FetchOptions, Task};
use ltcse::Error;
use zip::write::SimpleFileOptions;

const HEADER: &str = "\"date\",\"Temperature\",\"Humidity\",\"Light\",\"CO2\",\"HumidityRatio\",\"Occupancy\"\n";

fn occupancy_part(start_minute: usize, rows: usize) -> String {
    let mut s = HEADER.to_string();
    for i in 0..rows {
        let m = start_minute + i;
        s.push_str(&format!(
            "\"{}\",\"2015-02-04 {:02}:{:02}:00\",23.1,27.2,{},721.25,0.0047,{}\n",
            m + 1,
            10 + m / 60,
            m % 60,
            400 + i,
            i % 2
        ));
    }
    s
}

fn zip_of(entries: &[(&str, Vec<u8>)]) -> Vec<u8> {
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    for (name, body) in entries {
        w.start_file(*name, SimpleFileOptions::default()).unwrap();
        w.write_all(body).unwrap();
    }
    w.finish().unwrap().into_inner()
}

fn occupancy_archive(nested: bool) -> Vec<u8> {
    let parts = vec![
        ("datatraining.txt", occupancy_part(0, 6).into_bytes()),
        ("datatest.txt", occupancy_part(6, 4).into_bytes()),
        ("datatest2.txt", occupancy_part(8, 5).into_bytes()),
    ];
    if nested {
        zip_of(&[("occupancy_data.zip", zip_of(&parts))])
    } else {
        zip_of(&parts)
    }
}

struct FakeDownloader {
    body: Vec<u8>,
    calls: Cell<usize>,
}

impl FakeDownloader {
    fn new(body: Vec<u8>) -> Self {
        Self { body, calls: Cell::new(0) }
    }
}

impl Downloader for FakeDownloader {
    fn download(&self, _url: &str) -> ltcse::Result<Vec<u8>> {
        self.calls.set(self.calls.get() + 1);
        Ok(self.body.clone())
    }
}

fn options(dir: &std::path::Path, offline: bool) -> FetchOptions {
    FetchOptions {
        cache_dir: dir.to_path_buf(),
        offline,
    }
}

#[test]
fn first_fetch_downloads_converts_and_pins_hash() {
    let dir = tempfile::tempdir().unwrap();
    let archive = occupancy_archive(false);
    let dl = FakeDownloader::new(archive.clone());
    let table = load_task(Task::Occupancy, &options(dir.path(), false), &dl).unwrap();
    assert_eq!(dl.calls.get(), 1);
    // overlapping minutes 8 and 9 appear twice and are kept once
    assert_eq!(table.rows(), 13);
    assert_eq!(table.k, 5);
    assert!(table.timestamps.windows(2).all(|w| w[0] < w[1]));

    let manifest = load_manifest(dir.path()).unwrap();
    let entry = &manifest["occupancy"];
    assert_eq!(entry.sha256.as_deref(), Some(sha256_hex(&archive).as_str()));
    assert_eq!(entry.bytes, Some(archive.len() as u64));
    assert!(manifest["har"].sha256.is_none());

    let again = load_task(Task::Occupancy, &options(dir.path(), true), &dl).unwrap();
    assert_eq!(dl.calls.get(), 1);
    assert_eq!(again, table);
    assert!(!dir.path().join("occupancy/.lock").exists());
}

#[test]
fn nested_archives_are_searched() {
    let dir = tempfile::tempdir().unwrap();
    let dl = FakeDownloader::new(occupancy_archive(true));
    let table = load_task(Task::Occupancy, &options(dir.path(), false), &dl).unwrap();
    assert_eq!(table.rows(), 13);
}

#[test]
fn tampered_archive_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let dl = FakeDownloader::new(occupancy_archive(false));
    let csv = fetch(Task::Occupancy, &options(dir.path(), false), &dl).unwrap();
    fs::remove_file(&csv).unwrap();
    let (raw, _) = cache_paths(dir.path(), Task::Occupancy);
    let mut bytes = fs::read(&raw).unwrap();
    bytes.push(0);
    fs::write(&raw, bytes).unwrap();
    let err = fetch(Task::Occupancy, &options(dir.path(), true), &dl).unwrap_err();
    assert!(matches!(err, Error::HashMismatch { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn pinned_hash_mismatch_on_download() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("manifest.json"),
        "{\"occupancy\": {\"url\": \"https://example.invalid/o.zip\", \"sha256\": \"00\", \"bytes\": null}}",
    )
    .unwrap();
    let dl = FakeDownloader::new(occupancy_archive(false));
    let err = fetch(Task::Occupancy, &options(dir.path(), false), &dl).unwrap_err();
    assert!(matches!(err, Error::HashMismatch { ref expected, .. } if expected == "00"));
    let (raw, csv) = cache_paths(dir.path(), Task::Occupancy);
    assert!(!raw.exists() && !csv.exists());
}

#[test]
fn offline_never_downloads() {
    let dir = tempfile::tempdir().unwrap();
    let dl = FakeDownloader::new(Vec::new());
    for task in Task::ALL {
        let err = fetch(task, &options(dir.path(), true), &dl).unwrap_err();
        assert!(matches!(err, Error::Data(ref m) if m.contains("raw.zip")), "{err}");
    }
    assert_eq!(dl.calls.get(), 0);
}

#[test]
fn held_lock_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("occupancy")).unwrap();
    fs::write(dir.path().join("occupancy/.lock"), "1\n").unwrap();
    let dl = FakeDownloader::new(occupancy_archive(false));
    let err = fetch(Task::Occupancy, &options(dir.path(), false), &dl).unwrap_err();
    assert!(matches!(err, Error::Data(ref m) if m.contains("locked")));
    assert_eq!(dl.calls.get(), 0);
}

#[test]
fn garbage_archive_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let dl = FakeDownloader::new(b"not a zip".to_vec());
    let err = fetch(Task::Har, &options(dir.path(), false), &dl).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn har_conversion_shifts_labels() {
    let row = |v: f64| vec![format!("{v:.6e}"); 561].join(" ");
    let x_train = format!("{}\n{}\n", row(0.1), row(-0.2));
    let x_test = format!("{}\n", row(0.3));
    let archive = zip_of(&[(
        "UCI HAR Dataset.zip",
        zip_of(&[
            ("UCI HAR Dataset/train/X_train.txt", x_train.into_bytes()),
            ("UCI HAR Dataset/train/y_train.txt", b"1\n6\n".to_vec()),
            ("UCI HAR Dataset/test/X_test.txt", x_test.into_bytes()),
            ("UCI HAR Dataset/test/y_test.txt", b"3\n".to_vec()),
        ]),
    )]);
    let dir = tempfile::tempdir().unwrap();
    let table = load_task(Task::Har, &options(dir.path(), false), &FakeDownloader::new(archive)).unwrap();
    assert_eq!(table.rows(), 3);
    assert_eq!(table.targets, vec![0.0, 5.0, 2.0]);
    assert_eq!(table.k, 561);
}
