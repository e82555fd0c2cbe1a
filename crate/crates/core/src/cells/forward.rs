use crate::error::{Error, Result};
use crate::numerics::{Graph, Tensor, Var};

use super::config::{CellConfig, CellKind, InputMapping, Solver};
use super::continuous::DenseDrive;
use super::ctgru::{self, StorageGate};
use super::gated;
use super::ltc::LtcDrive;
use super::params::{CellParams, ModelParams};
use super::solver::{euler_step, rk4_step};

/// Recurrent state held in a graph.
#[derive(Clone, Copy, Debug)]
pub enum StateVars {
    /// `v` or `x` or `h`, `[B×N]`
    Single(Var),
    Lstm { h: Var, c: Var },
    /// Trace bank `[B×M×N]`.
    Ctgru(Var),
}

/// Concrete recurrent state.
#[derive(Clone, Debug, PartialEq)]
pub enum CellState {
    Single(Tensor),
    Lstm { h: Tensor, c: Tensor },
    Ctgru(Tensor),
}

impl CellState {
    pub fn zeros(config: &CellConfig, batch: usize) -> Self {
        let n = config.hidden_size;
        match config.kind {
            CellKind::Lstm => CellState::Lstm {
                h: Tensor::zeros(&[batch, n]),
                c: Tensor::zeros(&[batch, n]),
            },
            CellKind::Ctgru => CellState::Ctgru(Tensor::zeros(&[batch, config.ctgru_scales, n])),
            _ => CellState::Single(Tensor::zeros(&[batch, n])),
        }
    }

    pub fn bind(&self, g: &mut Graph) -> StateVars {
        match self {
            CellState::Single(t) => StateVars::Single(g.constant(t.clone())),
            CellState::Lstm { h, c } => StateVars::Lstm {
                h: g.constant(h.clone()),
                c: g.constant(c.clone()),
            },
            CellState::Ctgru(t) => StateVars::Ctgru(g.constant(t.clone())),
        }
    }

    pub fn read(g: &Graph, s: StateVars) -> Self {
        match s {
            StateVars::Single(v) => CellState::Single(g.value(v).clone()),
            StateVars::Lstm { h, c } => CellState::Lstm {
                h: g.value(h).clone(),
                c: g.value(c).clone(),
            },
            StateVars::Ctgru(v) => CellState::Ctgru(g.value(v).clone()),
        }
    }
}

/// Graph-bound model: configuration plus parameter leaves.
pub struct Bound {
    pub config: CellConfig,
    pub params: ModelParams<Var>,
    tau_scales: Vec<f64>,
    /// Test hook for the CT-GRU storage gate.
    pub storage: StorageGate,
}

impl Bound {
    pub fn new(config: &CellConfig, params: ModelParams<Var>) -> Self {
        Self {
            tau_scales: config.tau_scales(),
            config: config.clone(),
            params,
            storage: StorageGate::Learned,
        }
    }

    pub fn zero_state(&self, g: &mut Graph, batch: usize) -> StateVars {
        CellState::zeros(&self.config, batch).bind(g)
    }
}

/// Per-feature input transform: identity, `u⊙w`, or `u⊙w + b`.
pub fn map_input(g: &mut Graph, u: Var, mapping: InputMapping, w: Option<Var>, b: Option<Var>) -> Result<Var> {
    let batch = g.shape(u)[0];
    let missing = |what: &str| Error::Config(format!("input mapping {} needs {what}", mapping.name()));
    match mapping {
        InputMapping::Identity => Ok(u),
        InputMapping::Linear | InputMapping::Affine => {
            let w = w.ok_or_else(|| missing("input.w"))?;
            let w = g.repeat(w, 0, batch)?;
            let scaled = g.mul(u, w)?;
            if mapping == InputMapping::Linear {
                return Ok(scaled);
            }
            let b = b.ok_or_else(|| missing("input.b"))?;
            let b = g.repeat(b, 0, batch)?;
            g.add(scaled, b)
        }
    }
}

/// Visible state `[B×N]` used by the readout.
pub fn visible(g: &mut Graph, state: StateVars) -> Result<Var> {
    match state {
        StateVars::Single(v) => Ok(v),
        StateVars::Lstm { h, .. } => Ok(h),
        StateVars::Ctgru(hhat) => ctgru::visible(g, hhat),
    }
}

/// Affine readout `[h, 1]·R`.
pub fn readout(g: &mut Graph, h: Var, r: Var) -> Result<Var> {
    let batch = g.shape(h)[0];
    let ones = g.constant(Tensor::ones(&[batch, 1]));
    let h1 = g.concat_cols(h, ones)?;
    g.matmul(h1, r)
}

fn integrate<F>(g: &mut Graph, x: Var, solver: Solver, h: f64, steps: usize, mut f: F) -> Result<Var>
where
    F: FnMut(&mut Graph, Var) -> Result<Var>,
{
    let mut x = x;
    for _ in 0..steps {
        x = match solver {
            Solver::Euler => euler_step(g, x, h, &mut f)?,
            Solver::Rk4 => rk4_step(g, x, h, &mut f)?,
            Solver::Fused => unreachable!("fused solver is handled by the LTC path"),
        };
    }
    Ok(x)
}

/// Advances one input sample of duration `dt` and reads out `[B×O]`.
///
/// Continuous-time kinds take exactly `ode_unfolds` sub-steps of size
/// `dt / ode_unfolds`; LSTM and GRU take one discrete step.
pub fn cell_forward(g: &mut Graph, bound: &Bound, state: StateVars, u: Var, dt: f64) -> Result<(StateVars, Var)> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let cfg = &bound.config;
    let p = &bound.params;
    let unfolds = cfg.ode_unfolds;
    let h = dt / unfolds as f64;
    let u_mapped = if cfg.kind.is_continuous() {
        map_input(g, u, cfg.input_mapping, p.input_w, p.input_b)?
    } else {
        u
    };

    let next = match (&p.cell, state) {
        (CellParams::Ltc(lp), StateVars::Single(v0)) => {
            let drive = LtcDrive::new(g, lp, u_mapped)?;
            let v = match cfg.solver {
                Solver::Fused => {
                    let rate = drive.capacitance_rate(g, h)?;
                    let mut v = v0;
                    for _ in 0..unfolds {
                        v = drive.fused(g, v, rate)?;
                    }
                    v
                }
                solver => integrate(g, v0, solver, h, unfolds, |g, v| drive.rhs(g, v))?,
            };
            StateVars::Single(v)
        }
        (CellParams::Ctrnn(cp), StateVars::Single(x0)) => {
            let drive = DenseDrive::ctrnn(g, cp, u_mapped, cfg.activation)?;
            StateVars::Single(integrate(g, x0, cfg.solver, h, unfolds, |g, x| drive.rhs(g, x))?)
        }
        (CellParams::Node(np), StateVars::Single(x0)) => {
            let drive = DenseDrive::node(g, np, u_mapped, cfg.activation)?;
            StateVars::Single(integrate(g, x0, cfg.solver, h, unfolds, |g, x| drive.rhs(g, x))?)
        }
        (CellParams::Ctgru(cp), StateVars::Ctgru(hhat0)) => {
            let mut hhat = hhat0;
            for _ in 0..unfolds {
                hhat = ctgru::step(g, hhat, u_mapped, cp, &bound.tau_scales, h, bound.storage)?;
            }
            StateVars::Ctgru(hhat)
        }
        (CellParams::Lstm(lp), StateVars::Lstm { h, c }) => {
            let (h, c) = gated::lstm_step(g, h, c, u, lp)?;
            StateVars::Lstm { h, c }
        }
        (CellParams::Gru(gp), StateVars::Single(h)) => StateVars::Single(gated::gru_step(g, h, u, gp)?),
        _ => return Err(Error::Config(format!("state does not match cell kind {}", cfg.kind))),
    };
    let vis = visible(g, next)?;
    let y = readout(g, vis, p.readout)?;
    Ok((next, y))
}

/// Inputs of step `t` from a `[B×T×K]` tensor, as `[B×K]`.
pub fn step_input(inputs: &Tensor, t: usize) -> Tensor {
    let (b, steps, k) = (inputs.shape()[0], inputs.shape()[1], inputs.shape()[2]);
    let mut out = Vec::with_capacity(b * k);
    for row in 0..b {
        let start = (row * steps + t) * k;
        out.extend_from_slice(&inputs.data()[start..start + k]);
    }
    Tensor::new(&[b, k], out).expect("consistent slice")
}

/// Unrolls the cell over all `T` steps of `inputs: [B×T×K]` from a zero
/// state, returning the per-step readouts.
pub fn sequence_forward(g: &mut Graph, bound: &Bound, inputs: &Tensor, dt: f64) -> Result<Vec<Var>> {
    if inputs.rank() != 3 || inputs.shape()[2] != bound.config.input_size {
        return Err(Error::shape(
            "sequence_forward",
            format!(
                "inputs {:?} do not match input size {}",
                inputs.shape(),
                bound.config.input_size
            ),
        ));
    }
    let (batch, steps) = (inputs.shape()[0], inputs.shape()[1]);
    let mut state = bound.zero_state(g, batch);
    let mut outputs = Vec::with_capacity(steps);
    for t in 0..steps {
        let u = g.constant(step_input(inputs, t));
        let (next, y) = cell_forward(g, bound, state, u, dt)?;
        state = next;
        outputs.push(y);
    }
    Ok(outputs)
}

/// Stacks per-step `[B×O]` readouts into `[B×T×O]`.
pub fn stack_outputs(g: &Graph, outputs: &[Var]) -> Result<Tensor> {
    let Some(&first) = outputs.first() else {
        return Err(Error::shape("stack_outputs", "no steps"));
    };
    let (b, o) = (g.shape(first)[0], g.shape(first)[1]);
    let steps = outputs.len();
    let mut data = vec![0.0; b * steps * o];
    for (t, &y) in outputs.iter().enumerate() {
        let v = g.value(y).data();
        for row in 0..b {
            data[(row * steps + t) * o..(row * steps + t + 1) * o].copy_from_slice(&v[row * o..(row + 1) * o]);
        }
    }
    Tensor::new(&[b, steps, o], data)
}
