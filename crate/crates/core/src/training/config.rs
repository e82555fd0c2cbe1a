use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which weights produce the reported test metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TestWeights {
    #[default]
    BestValid,
    Final,
}

impl TestWeights {
    pub fn name(self) -> &'static str {
        match self {
            TestWeights::BestValid => "best-valid",
            TestWeights::Final => "final",
        }
    }
}

impl fmt::Display for TestWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best-valid" | "best" => Ok(TestWeights::BestValid),
            "final" => Ok(TestWeights::Final),
            _ => Err(Error::Config(format!(
                "unknown test weights \"{s}\" (expected best-valid or final)"
            ))),
        }
    }
}

/// Optimization and protocol settings for one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub task: String,
    pub hidden_units: usize,
    pub minibatch: usize,
    pub learning_rate: f64,
    /// Accept a learning rate outside `LR_RANGE`.
    pub lr_override: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub bptt_len: usize,
    pub epochs: usize,
    pub eval_every: usize,
    pub repeats: usize,
    pub seed: u64,
    pub test_weights: TestWeights,
    /// Rows of a synthetic task.
    pub synth_rows: usize,
    /// Generator seed of a synthetic task, independent of the run seeds.
    pub data_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            task: "synth:occupancy".into(),
            hidden_units: 32,
            minibatch: 16,
            learning_rate: 0.01,
            lr_override: false,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            bptt_len: 32,
            epochs: 100,
            eval_every: 1,
            repeats: 5,
            seed: 0,
            test_weights: TestWeights::BestValid,
            synth_rows: crate::data::DEFAULT_SYNTH_ROWS,
            data_seed: 0,
        }
    }
}

impl TrainConfig {
    pub const LR_RANGE: (f64, f64) = (0.001, 0.01);

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hidden_units", self.hidden_units),
            ("minibatch", self.minibatch),
            ("bptt_len", self.bptt_len),
            ("eval_every", self.eval_every),
            ("repeats", self.repeats),
            ("synth_rows", self.synth_rows),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        let (lo, hi) = Self::LR_RANGE;
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if !self.lr_override && !(lo..=hi).contains(&self.learning_rate) {
            return Err(Error::Config(format!(
                "learning_rate {} outside [{lo}, {hi}]; pass the override flag to allow it",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.adam_epsilon > 0.0 && self.adam_epsilon.is_finite()) {
            return Err(Error::Config(format!("adam_epsilon must be positive, got {}", self.adam_epsilon)));
        }
        if self.seed > i64::MAX as u64 || self.data_seed > i64::MAX as u64 {
            return Err(Error::Config("seeds must not exceed 2^63 - 1".into()));
        }
        self.task.parse::<crate::data::TaskSource>()?;
        Ok(())
    }

    /// Seeds of the repeated runs, `seed..seed + repeats`.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64).map(|i| self.seed + i).collect()
    }
}
