//! Task schemas, CSV ingestion, normalization, windowing and splitting,
//! synthetic fixtures and the download cache.

pub mod fetch;
mod prepare;
pub mod synth;
mod table;
mod task;

use std::fmt;
use std::str::FromStr;

pub use fetch::{fetch, load_task, Downloader, FetchOptions, HttpDownloader};
pub use prepare::{split, split_points, window_starts, Dataset, Normalizer, SequenceBatch, SequenceSet, Split};
pub use synth::synth_fixture;
pub use table::{format_timestamp, hourly_means, load_csv, parse_timestamp, read_csv, save_csv, write_csv, SeriesTable};
pub use task::{TargetKind, Task, TaskSpec};

use crate::error::{Error, Result};

/// Rows generated for a synthetic task unless configured otherwise.
pub const DEFAULT_SYNTH_ROWS: usize = 10_000;

/// A real dataset from the cache or a synthetic stand-in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskSource {
    Real(Task),
    Synth(Task),
}

impl TaskSource {
    pub fn task(self) -> Task {
        match self {
            TaskSource::Real(t) | TaskSource::Synth(t) => t,
        }
    }

    /// Loads the cleaned table.
    pub fn load(
        self,
        synth_rows: usize,
        synth_seed: u64,
        fetch: &FetchOptions,
        downloader: &dyn Downloader,
    ) -> Result<SeriesTable> {
        match self {
            TaskSource::Synth(t) => synth_fixture(t, synth_seed, synth_rows),
            TaskSource::Real(t) => load_task(t, fetch, downloader),
        }
    }
}

impl fmt::Display for TaskSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskSource::Real(t) => write!(f, "{t}"),
            TaskSource::Synth(t) => write!(f, "synth:{t}"),
        }
    }
}

impl FromStr for TaskSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("synth:") {
            Some(rest) => Ok(TaskSource::Synth(rest.parse()?)),
            None => Ok(TaskSource::Real(s.parse()?)),
        }
    }
}

#[cfg(test)]
mod tests;
