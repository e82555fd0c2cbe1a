use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cells::{CellConfig, CellKind};
use crate::error::{Error, Result};
use crate::numerics::ActivationKind;
use crate::training::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
}

impl fmt::Display for ConfigValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigValue::Bool(b) => write!(f, "{b}"),
            ConfigValue::Int(i) => write!(f, "{i}"),
            ConfigValue::Real(r) => write!(f, "{r}"),
            ConfigValue::Str(s) => f.write_str(s),
        }
    }
}

/// Flat key → value view of a cell and training configuration.
pub type ConfigMap = BTreeMap<String, ConfigValue>;

pub const CELL_KEYS: [&str; 11] = [
    "kind",
    "input_size",
    "hidden_size",
    "output_size",
    "input_mapping",
    "solver",
    "ode_unfolds",
    "ctgru_scales",
    "tau_min",
    "scale_ratio",
    "activation",
];

pub const TRAIN_KEYS: [&str; 16] = [
    "task",
    "hidden_units",
    "minibatch",
    "learning_rate",
    "lr_override",
    "beta1",
    "beta2",
    "adam_epsilon",
    "bptt_len",
    "epochs",
    "eval_every",
    "repeats",
    "seed",
    "test_weights",
    "synth_rows",
    "data_seed",
];

fn int(v: usize) -> ConfigValue {
    ConfigValue::Int(v as i64)
}

fn text(s: &str) -> ConfigValue {
    ConfigValue::Str(s.to_string())
}

pub fn to_config(cell: &CellConfig, train: &TrainConfig) -> ConfigMap {
    let entries = [
        ("kind", text(cell.kind.name())),
        ("input_size", int(cell.input_size)),
        ("hidden_size", int(cell.hidden_size)),
        ("output_size", int(cell.output_size)),
        ("input_mapping", text(cell.input_mapping.name())),
        ("solver", text(cell.solver.name())),
        ("ode_unfolds", int(cell.ode_unfolds)),
        ("ctgru_scales", int(cell.ctgru_scales)),
        ("tau_min", ConfigValue::Real(cell.tau_min)),
        ("scale_ratio", ConfigValue::Real(cell.scale_ratio)),
        ("activation", text(cell.activation.name())),
        ("task", text(&train.task)),
        ("hidden_units", int(train.hidden_units)),
        ("minibatch", int(train.minibatch)),
        ("learning_rate", ConfigValue::Real(train.learning_rate)),
        ("lr_override", ConfigValue::Bool(train.lr_override)),
        ("beta1", ConfigValue::Real(train.beta1)),
        ("beta2", ConfigValue::Real(train.beta2)),
        ("adam_epsilon", ConfigValue::Real(train.adam_epsilon)),
        ("bptt_len", int(train.bptt_len)),
        ("epochs", int(train.epochs)),
        ("eval_every", int(train.eval_every)),
        ("repeats", int(train.repeats)),
        ("seed", ConfigValue::Int(train.seed as i64)),
        ("test_weights", text(train.test_weights.name())),
        ("synth_rows", int(train.synth_rows)),
        ("data_seed", ConfigValue::Int(train.data_seed as i64)),
    ];
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

struct Reader<'a> {
    map: &'a ConfigMap,
}

impl Reader<'_> {
    fn wrong(key: &str, want: &str, got: &ConfigValue) -> Error {
        Error::Config(format!("key \"{key}\" expects {want}, got {got}"))
    }

    fn real(&self, key: &str, default: f64) -> Result<f64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(ConfigValue::Real(r)) => Ok(*r),
            Some(ConfigValue::Int(i)) => Ok(*i as f64),
            Some(other) => Err(Self::wrong(key, "a number", other)),
        }
    }

    fn uint(&self, key: &str, default: u64) -> Result<u64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(ConfigValue::Int(i)) if *i >= 0 => Ok(*i as u64),
            Some(other) => Err(Self::wrong(key, "a non-negative integer", other)),
        }
    }

    fn size(&self, key: &str, default: usize) -> Result<usize> {
        self.uint(key, default as u64).map(|v| v as usize)
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.map.get(key) {
            None => Ok(default),
            Some(ConfigValue::Bool(b)) => Ok(*b),
            Some(other) => Err(Self::wrong(key, "true or false", other)),
        }
    }

    fn text(&self, key: &str) -> Result<Option<&str>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(ConfigValue::Str(s)) => Ok(Some(s)),
            Some(other) => Err(Self::wrong(key, "a string", other)),
        }
    }
}

/// Rebuilds and validates both configurations; absent keys take defaults.
pub fn from_config(map: &ConfigMap) -> Result<(CellConfig, TrainConfig)> {
    if let Some(key) = map
        .keys()
        .find(|k| !CELL_KEYS.contains(&k.as_str()) && !TRAIN_KEYS.contains(&k.as_str()))
    {
        return Err(Error::UnknownKey(key.clone()));
    }
    let r = Reader { map };
    let d = TrainConfig::default();
    let train = TrainConfig {
        task: r.text("task")?.unwrap_or(&d.task).to_string(),
        hidden_units: r.size("hidden_units", d.hidden_units)?,
        minibatch: r.size("minibatch", d.minibatch)?,
        learning_rate: r.real("learning_rate", d.learning_rate)?,
        lr_override: r.flag("lr_override", d.lr_override)?,
        beta1: r.real("beta1", d.beta1)?,
        beta2: r.real("beta2", d.beta2)?,
        adam_epsilon: r.real("adam_epsilon", d.adam_epsilon)?,
        bptt_len: r.size("bptt_len", d.bptt_len)?,
        epochs: r.size("epochs", d.epochs)?,
        eval_every: r.size("eval_every", d.eval_every)?,
        repeats: r.size("repeats", d.repeats)?,
        seed: r.uint("seed", d.seed)?,
        test_weights: r.text("test_weights")?.map_or(Ok(d.test_weights), str::parse)?,
        synth_rows: r.size("synth_rows", d.synth_rows)?,
        data_seed: r.uint("data_seed", d.data_seed)?,
    };
    let kind: CellKind = r.text("kind")?.map_or(Ok(CellKind::Ltc), str::parse)?;
    let base = CellConfig::new(kind, 1, train.hidden_units, 1);
    let cell = CellConfig {
        kind,
        input_size: r.size("input_size", base.input_size)?,
        hidden_size: r.size("hidden_size", base.hidden_size)?,
        output_size: r.size("output_size", base.output_size)?,
        input_mapping: r.text("input_mapping")?.map_or(Ok(base.input_mapping), str::parse)?,
        solver: r.text("solver")?.map_or(Ok(base.solver), str::parse)?,
        ode_unfolds: r.size("ode_unfolds", base.ode_unfolds)?,
        ctgru_scales: r.size("ctgru_scales", base.ctgru_scales)?,
        tau_min: r.real("tau_min", base.tau_min)?,
        scale_ratio: r.real("scale_ratio", base.scale_ratio)?,
        activation: match r.text("activation")? {
            None => base.activation,
            Some(s) => ActivationKind::parse(s).ok_or_else(|| Error::Config(format!("unknown activation \"{s}\"")))?,
        },
    };
    cell.validate()?;
    train.validate()?;
    Ok((cell, train))
}

pub fn config_to_json(map: &ConfigMap) -> Result<String> {
    let mut s = serde_json::to_string_pretty(map)?;
    s.push('\n');
    Ok(s)
}

pub fn config_from_json(text: &str) -> Result<ConfigMap> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("config file is not a flat JSON object: {e}")))
}
