//! CT-RNN and neural-ODE right-hand sides.
//!
//! ```text
//! CT-RNN:  dx/dt = (−x + φ(x·W_rec + u·W_in + bias)) / tau
//! NODE:    dx/dt =       φ(x·W_rec + u·W_in + bias)
//! ```

use crate::error::Result;
use crate::numerics::{ActivationKind, Graph, Var};

use super::params::{CtrnnParams, NodeParams};

pub struct DenseDrive {
    w_rec: Var,
    /// `u·W_in + bias`, fixed for one input sample.
    input: Var,
    /// Tiled time constants; `None` for the neural ODE.
    tau: Option<Var>,
    activation: ActivationKind,
}

impl DenseDrive {
    fn build(
        g: &mut Graph,
        w_rec: Var,
        w_in: Var,
        bias: Var,
        tau: Option<Var>,
        u_mapped: Var,
        activation: ActivationKind,
    ) -> Result<Self> {
        let batch = g.shape(u_mapped)[0];
        let proj = g.matmul(u_mapped, w_in)?;
        let bias = g.repeat(bias, 0, batch)?;
        let input = g.add(proj, bias)?;
        let tau = tau.map(|t| g.repeat(t, 0, batch)).transpose()?;
        Ok(Self {
            w_rec,
            input,
            tau,
            activation,
        })
    }

    pub fn ctrnn(g: &mut Graph, p: &CtrnnParams<Var>, u_mapped: Var, activation: ActivationKind) -> Result<Self> {
        Self::build(g, p.w_rec, p.w_in, p.bias, Some(p.tau), u_mapped, activation)
    }

    pub fn node(g: &mut Graph, p: &NodeParams<Var>, u_mapped: Var, activation: ActivationKind) -> Result<Self> {
        Self::build(g, p.w_rec, p.w_in, p.bias, None, u_mapped, activation)
    }

    pub fn rhs(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let rec = g.matmul(x, self.w_rec)?;
        let pre = g.add(rec, self.input)?;
        let drive = g.activation(self.activation, pre)?;
        match self.tau {
            None => Ok(drive),
            Some(tau) => {
                let net = g.sub(drive, x)?;
                g.div(net, tau)
            }
        }
    }
}
