use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::ActivationKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellKind {
    Ltc,
    Ctrnn,
    Node,
    Ctgru,
    Lstm,
    Gru,
}

impl CellKind {
    pub const ALL: [CellKind; 6] = [
        CellKind::Ltc,
        CellKind::Ctrnn,
        CellKind::Node,
        CellKind::Ctgru,
        CellKind::Lstm,
        CellKind::Gru,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Ltc => "ltc",
            CellKind::Ctrnn => "ctrnn",
            CellKind::Node => "node",
            CellKind::Ctgru => "ctgru",
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }

    /// Continuous-time kinds integrate `ode_unfolds` sub-steps per sample.
    pub fn is_continuous(self) -> bool {
        !matches!(self, CellKind::Lstm | CellKind::Gru)
    }

    /// Solver used when none is requested.
    pub fn default_solver(self) -> Solver {
        match self {
            CellKind::Ltc => Solver::Fused,
            CellKind::Node => Solver::Rk4,
            _ => Solver::Euler,
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for CellKind {
    type Err = Error;

    /// Accepts both the model names and the row labels used in parameter
    /// tables (`ct-rnn`, `ode-rnn`, `ct-gru`, `ltc-se`).
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ltc" | "ltc-se" | "ltcse" => CellKind::Ltc,
            "ctrnn" | "ct-rnn" => CellKind::Ctrnn,
            "node" | "ode-rnn" | "odernn" => CellKind::Node,
            "ctgru" | "ct-gru" => CellKind::Ctgru,
            "lstm" => CellKind::Lstm,
            "gru" => CellKind::Gru,
            other => return Err(Error::Config(format!("unknown model kind \"{other}\""))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InputMapping {
    Identity,
    Linear,
    Affine,
}

impl InputMapping {
    pub fn name(self) -> &'static str {
        match self {
            InputMapping::Identity => "identity",
            InputMapping::Linear => "linear",
            InputMapping::Affine => "affine",
        }
    }
}

impl FromStr for InputMapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(InputMapping::Identity),
            "linear" => Ok(InputMapping::Linear),
            "affine" => Ok(InputMapping::Affine),
            other => Err(Error::Config(format!("unknown input mapping \"{other}\""))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Solver {
    /// Semi-implicit LTC update.
    Fused,
    Euler,
    Rk4,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Fused => "fused",
            Solver::Euler => "euler",
            Solver::Rk4 => "rk4",
        }
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fused" => Ok(Solver::Fused),
            "euler" => Ok(Solver::Euler),
            "rk4" => Ok(Solver::Rk4),
            other => Err(Error::Config(format!("unknown solver \"{other}\""))),
        }
    }
}

/// Architecture of one recurrent layer plus its readout.
#[derive(Clone, Debug, PartialEq)]
pub struct CellConfig {
    pub kind: CellKind,
    pub hidden_size: usize,
    pub input_size: usize,
    pub output_size: usize,
    pub input_mapping: InputMapping,
    pub solver: Solver,
    pub ode_unfolds: usize,
    pub ctgru_scales: usize,
    pub tau_min: f64,
    pub scale_ratio: f64,
    /// Drive nonlinearity of the CT-RNN and neural-ODE right-hand sides.
    pub activation: ActivationKind,
}

impl CellConfig {
    pub const DEFAULT_UNFOLDS: usize = 6;
    pub const DEFAULT_CTGRU_SCALES: usize = 8;

    pub fn new(kind: CellKind, input_size: usize, hidden_size: usize, output_size: usize) -> Self {
        Self {
            kind,
            hidden_size,
            input_size,
            output_size,
            input_mapping: InputMapping::Affine,
            solver: kind.default_solver(),
            ode_unfolds: Self::DEFAULT_UNFOLDS,
            ctgru_scales: Self::DEFAULT_CTGRU_SCALES,
            tau_min: 1.0,
            scale_ratio: 10f64.sqrt(),
            activation: ActivationKind::Tanh,
        }
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_unfolds(mut self, unfolds: usize) -> Self {
        self.ode_unfolds = unfolds;
        self
    }

    pub fn with_mapping(mut self, mapping: InputMapping) -> Self {
        self.input_mapping = mapping;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hidden_size", self.hidden_size),
            ("input_size", self.input_size),
            ("output_size", self.output_size),
            ("ode_unfolds", self.ode_unfolds),
            ("ctgru_scales", self.ctgru_scales),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.tau_min > 0.0 && self.tau_min.is_finite()) {
            return Err(Error::Config(format!("tau_min must be positive, got {}", self.tau_min)));
        }
        if !(self.scale_ratio > 1.0 && self.scale_ratio.is_finite()) {
            return Err(Error::Config(format!(
                "scale_ratio must exceed 1, got {}",
                self.scale_ratio
            )));
        }
        if self.solver == Solver::Fused && self.kind != CellKind::Ltc {
            return Err(Error::Config(format!(
                "solver \"fused\" is only valid for kind \"ltc\", not \"{}\"",
                self.kind
            )));
        }
        Ok(())
    }

    /// Geometric CT-GRU time scales `tau_min · scale_ratio^j`.
    pub fn tau_scales(&self) -> Vec<f64> {
        (0..self.ctgru_scales)
            .map(|j| self.tau_min * self.scale_ratio.powi(j as i32))
            .collect()
    }

    /// Whether the continuous kinds carry per-feature input weights/offsets.
    pub(crate) fn mapping_tensors(&self) -> (bool, bool) {
        if !self.kind.is_continuous() {
            return (false, false);
        }
        match self.input_mapping {
            InputMapping::Identity => (false, false),
            InputMapping::Linear => (true, false),
            InputMapping::Affine => (true, true),
        }
    }
}
