use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// What a task predicts at every step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    Classes(usize),
    Regression,
}

impl TargetKind {
    /// Width of the model readout.
    pub fn output_size(self) -> usize {
        match self {
            TargetKind::Classes(c) => c,
            TargetKind::Regression => 1,
        }
    }

    pub fn metric_name(self) -> &'static str {
        match self {
            TargetKind::Classes(_) => "accuracy",
            TargetKind::Regression => "mse",
        }
    }

    /// Whether a larger metric value is better.
    pub fn maximize(self) -> bool {
        matches!(self, TargetKind::Classes(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Occupancy,
    Har,
    Traffic,
    Power,
    Ozone,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Occupancy, Task::Har, Task::Traffic, Task::Power, Task::Ozone];

    pub fn name(self) -> &'static str {
        match self {
            Task::Occupancy => "occupancy",
            Task::Har => "har",
            Task::Traffic => "traffic",
            Task::Power => "power",
            Task::Ozone => "ozone",
        }
    }

    pub fn spec(self) -> TaskSpec {
        TaskSpec::new(self)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown task \"{s}\" (expected occupancy, har, traffic, power or ozone)"
                ))
            })
    }
}

const OZONE_FEATURES: [&str; 72] = [
    "WSR0", "WSR1", "WSR2", "WSR3", "WSR4", "WSR5", "WSR6", "WSR7", "WSR8", "WSR9", "WSR10", "WSR11", "WSR12",
    "WSR13", "WSR14", "WSR15", "WSR16", "WSR17", "WSR18", "WSR19", "WSR20", "WSR21", "WSR22", "WSR23", "WSR_PK",
    "WSR_AV", "T0", "T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9", "T10", "T11", "T12", "T13", "T14", "T15",
    "T16", "T17", "T18", "T19", "T20", "T21", "T22", "T23", "T_PK", "T_AV", "T85", "RH85", "U85", "V85", "HT85",
    "T70", "RH70", "U70", "V70", "HT70", "T50", "RH50", "U50", "V50", "HT50", "KI", "TT", "SLP", "SLP_", "Precp",
];

/// Canonical file schema and modelling choices for one task.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub task: Task,
    /// Timestamp column; `None` means rows are indexed by position.
    pub timestamp: Option<&'static str>,
    pub features: Vec<String>,
    pub target: &'static str,
    pub target_kind: TargetKind,
    /// Start offset between consecutive windows.
    pub stride: usize,
    /// Average rows into hourly buckets after loading.
    pub hourly: bool,
}

impl TaskSpec {
    pub fn new(task: Task) -> Self {
        let names = |cols: &[&str]| cols.iter().map(|c| c.to_string()).collect::<Vec<_>>();
        match task {
            Task::Occupancy => Self {
                task,
                timestamp: Some("date"),
                features: names(&["Temperature", "Humidity", "Light", "CO2", "HumidityRatio"]),
                target: "Occupancy",
                target_kind: TargetKind::Classes(2),
                stride: 32,
                hourly: false,
            },
            Task::Har => Self {
                task,
                timestamp: None,
                features: (0..561).map(|i| format!("f{i:03}")).collect(),
                target: "activity",
                target_kind: TargetKind::Classes(6),
                stride: 32,
                hourly: false,
            },
            Task::Traffic => Self {
                task,
                timestamp: Some("date_time"),
                features: names(&[
                    "temp",
                    "rain_1h",
                    "snow_1h",
                    "clouds_all",
                    "hour",
                    "day_of_week",
                    "is_weekend",
                    "is_holiday",
                ]),
                target: "traffic_volume",
                target_kind: TargetKind::Regression,
                stride: 32,
                hourly: false,
            },
            Task::Power => Self {
                task,
                timestamp: Some("datetime"),
                features: names(&[
                    "Global_reactive_power",
                    "Voltage",
                    "Global_intensity",
                    "Sub_metering_1",
                    "Sub_metering_2",
                    "Sub_metering_3",
                ]),
                target: "Global_active_power",
                target_kind: TargetKind::Regression,
                stride: 32,
                hourly: true,
            },
            Task::Ozone => Self {
                task,
                timestamp: Some("date"),
                features: names(&OZONE_FEATURES),
                target: "ozone",
                target_kind: TargetKind::Classes(2),
                stride: 1,
                hourly: false,
            },
        }
    }

    pub fn input_size(&self) -> usize {
        self.features.len()
    }

    /// Every column the canonical CSV must provide, in file order.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.timestamp.iter().map(|t| t.to_string()).collect();
        cols.extend(self.features.iter().cloned());
        cols.push(self.target.to_string());
        cols
    }
}
