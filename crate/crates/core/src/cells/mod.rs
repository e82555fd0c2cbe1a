//! Continuous-time recurrent cells (LTC, CT-RNN, neural ODE, CT-GRU) and
//! discrete LSTM/GRU baselines.
//!
//! Every cell is expressed as graph operations so that the same code path
//! serves inference and backpropagation through the unrolled solver. The
//! free functions at the bottom of this module evaluate single steps on
//! concrete tensors without gradients.

mod config;
mod continuous;
pub mod ctgru;
mod forward;
mod gated;
pub mod ltc;
mod params;
pub mod solver;

pub use config::{CellConfig, CellKind, InputMapping, Solver};
pub use ctgru::StorageGate;
pub use forward::{
    cell_forward, map_input, readout, sequence_forward, stack_outputs, step_input, visible, Bound, CellState,
    StateVars,
};
pub use ltc::synapse_gate;
pub use params::{CellParams, CtgruParams, CtrnnParams, GruParams, LstmParams, LtcParams, ModelParams, NodeParams};

use crate::error::Result;
use crate::numerics::{ActivationKind, Graph, Tensor, Var};

/// A configured cell with concrete parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: CellConfig,
    pub params: ModelParams,
}

impl Model {
    pub fn init(config: CellConfig, seed: u64) -> Result<Self> {
        let params = ModelParams::init(&config, seed)?;
        Ok(Self { config, params })
    }

    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Bound {
        Bound::new(&self.config, self.params.bind(g, trainable))
    }

    /// One input sample from an explicit state.
    pub fn step(&self, state: &CellState, u: &Tensor, dt: f64) -> Result<(CellState, Tensor)> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let s = state.bind(&mut g);
        let u = g.constant(u.clone());
        let (next, y) = cell_forward(&mut g, &bound, s, u, dt)?;
        Ok((CellState::read(&g, next), g.value(y).clone()))
    }

    /// Readouts `[B×T×O]` for inputs `[B×T×K]`, starting from zero state.
    pub fn forward_sequence(&self, inputs: &Tensor, dt: f64) -> Result<Tensor> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let outputs = sequence_forward(&mut g, &bound, inputs, dt)?;
        stack_outputs(&g, &outputs)
    }
}

/// Fresh parameters and the zero state for a batch of one.
pub fn init_cell(config: CellConfig, seed: u64) -> Result<(Model, CellState)> {
    let state = CellState::zeros(&config, 1);
    Ok((Model::init(config, seed)?, state))
}

fn constants<P, Q>(g: &mut Graph, p: &P, map: impl FnOnce(&P, &mut dyn FnMut(&'static str, &Tensor) -> Result<Var>) -> Result<Q>) -> Q {
    map(p, &mut |_, t| Ok(g.constant(t.clone()))).expect("binding constants cannot fail")
}

/// Applies an input mapping to concrete tensors.
pub fn apply_input_mapping(u: &Tensor, mapping: InputMapping, w: Option<&Tensor>, b: Option<&Tensor>) -> Result<Tensor> {
    let mut g = Graph::new();
    let uv = g.constant(u.clone());
    let wv = w.map(|t| g.constant(t.clone()));
    let bv = b.map(|t| g.constant(t.clone()));
    let out = map_input(&mut g, uv, mapping, wv, bv)?;
    Ok(g.value(out).clone())
}

/// One fused semi-implicit LTC sub-step of size `h`.
pub fn ltc_fused_step(v: &Tensor, u_mapped: &Tensor, p: &LtcParams, h: f64) -> Result<Tensor> {
    let mut g = Graph::new();
    let pv = constants(&mut g, p, |p, f| p.try_map(f));
    let (vv, uv) = (g.constant(v.clone()), g.constant(u_mapped.clone()));
    let drive = ltc::LtcDrive::new(&mut g, &pv, uv)?;
    let rate = drive.capacitance_rate(&mut g, h)?;
    let out = drive.fused(&mut g, vv, rate)?;
    Ok(g.value(out).clone())
}

/// LTC right-hand side `dv/dt`.
pub fn ltc_rhs(v: &Tensor, u_mapped: &Tensor, p: &LtcParams) -> Result<Tensor> {
    let mut g = Graph::new();
    let pv = constants(&mut g, p, |p, f| p.try_map(f));
    let (vv, uv) = (g.constant(v.clone()), g.constant(u_mapped.clone()));
    let drive = ltc::LtcDrive::new(&mut g, &pv, uv)?;
    let out = drive.rhs(&mut g, vv)?;
    Ok(g.value(out).clone())
}

pub fn ctrnn_rhs(x: &Tensor, u_mapped: &Tensor, p: &CtrnnParams, activation: ActivationKind) -> Result<Tensor> {
    let mut g = Graph::new();
    let pv = constants(&mut g, p, |p, f| p.try_map(f));
    let (xv, uv) = (g.constant(x.clone()), g.constant(u_mapped.clone()));
    let drive = continuous::DenseDrive::ctrnn(&mut g, &pv, uv, activation)?;
    let out = drive.rhs(&mut g, xv)?;
    Ok(g.value(out).clone())
}

pub fn node_rhs(x: &Tensor, u_mapped: &Tensor, p: &NodeParams, activation: ActivationKind) -> Result<Tensor> {
    let mut g = Graph::new();
    let pv = constants(&mut g, p, |p, f| p.try_map(f));
    let (xv, uv) = (g.constant(x.clone()), g.constant(u_mapped.clone()));
    let drive = continuous::DenseDrive::node(&mut g, &pv, uv, activation)?;
    let out = drive.rhs(&mut g, xv)?;
    Ok(g.value(out).clone())
}

/// One CT-GRU update of the trace bank `hhat: [B×M×N]`.
pub fn ctgru_step(
    hhat: &Tensor,
    u: &Tensor,
    p: &CtgruParams,
    tau_scales: &[f64],
    dt: f64,
    storage: StorageGate,
) -> Result<Tensor> {
    let mut g = Graph::new();
    let pv = constants(&mut g, p, |p, f| p.try_map(f));
    let (hv, uv) = (g.constant(hhat.clone()), g.constant(u.clone()));
    let out = ctgru::step(&mut g, hv, uv, &pv, tau_scales, dt, storage)?;
    Ok(g.value(out).clone())
}

/// Returns `(h', c')`.
pub fn lstm_step(h: &Tensor, c: &Tensor, u: &Tensor, p: &LstmParams) -> Result<(Tensor, Tensor)> {
    let mut g = Graph::new();
    let pv = constants(&mut g, p, |p, f| p.try_map(f));
    let (hv, cv, uv) = (g.constant(h.clone()), g.constant(c.clone()), g.constant(u.clone()));
    let (h2, c2) = gated::lstm_step(&mut g, hv, cv, uv, &pv)?;
    Ok((g.value(h2).clone(), g.value(c2).clone()))
}

pub fn gru_step(h: &Tensor, u: &Tensor, p: &GruParams) -> Result<Tensor> {
    let mut g = Graph::new();
    let pv = constants(&mut g, p, |p, f| p.try_map(f));
    let (hv, uv) = (g.constant(h.clone()), g.constant(u.clone()));
    let out = gated::gru_step(&mut g, hv, uv, &pv)?;
    Ok(g.value(out).clone())
}

#[cfg(test)]
mod tests;
