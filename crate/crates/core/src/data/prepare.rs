use super::table::SeriesTable;
use super::task::{TargetKind, TaskSpec};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Per-feature z-score statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Features whose spread falls below this are emitted as zeros.
pub const DEGENERATE_STD: f64 = 1e-12;

impl Normalizer {
    /// Fits on row-major `[rows×k]` values (population standard deviation).
    pub fn fit(values: &[f64], k: usize) -> Self {
        let rows = if k == 0 { 0 } else { values.len() / k };
        let mut mean = vec![0.0; k];
        let mut std = vec![0.0; k];
        if rows == 0 {
            return Self { mean, std };
        }
        for row in values.chunks(k) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= rows as f64;
        }
        for row in values.chunks(k) {
            for ((s, v), m) in std.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / rows as f64).sqrt();
        }
        Self { mean, std }
    }

    pub fn fit_table(table: &SeriesTable) -> Self {
        Self::fit(&table.features, table.k)
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let k = self.mean.len();
        values
            .chunks(k)
            .flat_map(|row| {
                row.iter().enumerate().map(|(c, v)| {
                    if self.std[c] < DEGENERATE_STD {
                        0.0
                    } else {
                        (v - self.mean[c]) / self.std[c]
                    }
                })
            })
            .collect()
    }

    pub fn apply_table(&self, table: &SeriesTable) -> SeriesTable {
        SeriesTable {
            features: self.apply(&table.features),
            ..table.clone()
        }
    }
}

/// Window start offsets: `0, stride, 2·stride, …` while a full window fits.
pub fn window_starts(len: usize, t: usize, stride: usize) -> Vec<usize> {
    if t == 0 || stride == 0 {
        return Vec::new();
    }
    if t > len {
        log::warn!("window length {t} exceeds series length {len}; no windows");
        return Vec::new();
    }
    (0..=len - t).step_by(stride).collect()
}

/// Chronological 70/15/15 split boundaries `(train_end, valid_end)`.
pub fn split_points(rows: usize) -> (usize, usize) {
    (rows * 70 / 100, rows * 85 / 100)
}

pub fn split(table: &SeriesTable) -> (SeriesTable, SeriesTable, SeriesTable) {
    let (a, b) = split_points(table.rows());
    (table.slice(0, a), table.slice(a, b), table.slice(b, table.rows()))
}

/// Fixed-length windows stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSet {
    pub t: usize,
    pub k: usize,
    /// `[n×T×K]`
    pub inputs: Vec<f64>,
    /// `[n×T]`
    pub targets: Vec<f64>,
}

/// A minibatch: inputs `[B×T×K]`, per-step targets `[B×T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceBatch {
    pub inputs: Tensor,
    pub targets: Vec<f64>,
}

impl SequenceBatch {
    pub fn batch_size(&self) -> usize {
        self.inputs.shape()[0]
    }

    pub fn steps(&self) -> usize {
        self.inputs.shape()[1]
    }
}

impl SequenceSet {
    pub fn new(t: usize, k: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        let n = if t == 0 { 0 } else { targets.len() / t };
        if targets.len() != n * t || inputs.len() != n * t * k {
            return Err(Error::Data(format!(
                "inconsistent sequence set: {} inputs and {} targets for T={t}, K={k}",
                inputs.len(),
                targets.len()
            )));
        }
        Ok(Self { t, k, inputs, targets })
    }

    /// Windows of `table` (features already normalized).
    pub fn from_table(table: &SeriesTable, t: usize, stride: usize) -> Self {
        let k = table.k;
        let starts = window_starts(table.rows(), t, stride);
        let mut inputs = Vec::with_capacity(starts.len() * t * k);
        let mut targets = Vec::with_capacity(starts.len() * t);
        for s in starts {
            inputs.extend_from_slice(&table.features[s * k..(s + t) * k]);
            targets.extend_from_slice(&table.targets[s..s + t]);
        }
        Self { t, k, inputs, targets }
    }

    pub fn len(&self) -> usize {
        if self.t == 0 {
            0
        } else {
            self.targets.len() / self.t
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn batch(&self, indices: &[usize]) -> SequenceBatch {
        let (t, k) = (self.t, self.k);
        let mut inputs = Vec::with_capacity(indices.len() * t * k);
        let mut targets = Vec::with_capacity(indices.len() * t);
        for &i in indices {
            inputs.extend_from_slice(&self.inputs[i * t * k..(i + 1) * t * k]);
            targets.extend_from_slice(&self.targets[i * t..(i + 1) * t]);
        }
        SequenceBatch {
            inputs: Tensor::new(&[indices.len(), t, k], inputs).expect("consistent batch"),
            targets,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" | "validation" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split \"{s}\""))),
        }
    }
}

/// Normalized, windowed train/valid/test sets for one task.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub spec: TaskSpec,
    pub normalizer: Normalizer,
    /// Statistics of the raw regression target on the train split.
    pub target_normalizer: Option<Normalizer>,
    pub train: SequenceSet,
    pub valid: SequenceSet,
    pub test: SequenceSet,
}

impl Dataset {
    /// Splits, fits statistics on the train rows and windows each split.
    pub fn prepare(table: &SeriesTable, spec: &TaskSpec, bptt: usize) -> Result<Self> {
        if table.k != spec.input_size() {
            return Err(Error::Data(format!(
                "table has {} features, task {} expects {}",
                table.k,
                spec.task,
                spec.input_size()
            )));
        }
        let (train, valid, test) = split(table);
        let normalizer = Normalizer::fit_table(&train);
        let target_normalizer =
            (spec.target_kind == TargetKind::Regression).then(|| Normalizer::fit(&train.targets, 1));
        let prep = |part: &SeriesTable| {
            let mut part = normalizer.apply_table(part);
            if let Some(tn) = &target_normalizer {
                part.targets = tn.apply(&part.targets);
            }
            SequenceSet::from_table(&part, bptt, spec.stride)
        };
        let dataset = Self {
            spec: spec.clone(),
            train: prep(&train),
            valid: prep(&valid),
            test: prep(&test),
            normalizer,
            target_normalizer,
        };
        if dataset.train.is_empty() || dataset.valid.is_empty() || dataset.test.is_empty() {
            return Err(Error::Data(format!(
                "{} rows are too few for windows of {bptt} in every split",
                table.rows()
            )));
        }
        Ok(dataset)
    }

    pub fn split(&self, split: Split) -> &SequenceSet {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }
}
