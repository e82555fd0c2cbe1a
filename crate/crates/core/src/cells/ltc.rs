//! Liquid time-constant dynamics.
//!
//! Each neuron `j` integrates
//!
//! ```text
//! cm_j dv_j/dt = gleak_j (vleak_j − v_j)
//!              + Σ_i w_ij σ(sigma_ij (v_i − mu_ij)) (erev_ij − v_j)
//!              + Σ_k sw_kj σ(ssigma_kj (u_k − smu_kj)) (serev_kj − v_j)
//! ```
//!
//! The fused solver treats the synaptic conductances as constant over one
//! sub-step and solves the resulting linear equation implicitly in `v_j`:
//!
//! ```text
//! v'_j = (cm_j/h · v_j + gleak_j vleak_j + Σ a_ij erev_ij + Σ s_kj serev_kj)
//!      / (cm_j/h + gleak_j + Σ a_ij + Σ s_kj)
//! ```
//!
//! With non-negative weights this is a convex combination of the current
//! state, the leak reversal and the synaptic reversal potentials.

use crate::error::Result;
use crate::numerics::{sigmoid, Graph, SynapseInputs, Var};

use super::params::LtcParams;

/// Synaptic gate `σ(sigma · (v_pre − mu))`.
pub fn synapse_gate(v_pre: f64, mu: f64, sigma: f64) -> f64 {
    sigmoid(sigma * (v_pre - mu))
}

/// Terms of the LTC equation that stay fixed while one input sample is
/// integrated: tiled per-neuron constants and the sensory synapse sums.
pub struct LtcDrive<'a> {
    p: &'a LtcParams<Var>,
    n: usize,
    cm: Var,
    /// `gleak·vleak + Σ sensory a·erev`, `[B×N]`
    leak_num: Var,
    /// `gleak + Σ sensory a`, `[B×N]`
    leak_den: Var,
}

impl<'a> LtcDrive<'a> {
    pub fn new(g: &mut Graph, p: &'a LtcParams<Var>, u_mapped: Var) -> Result<Self> {
        let batch = g.shape(u_mapped)[0];
        let n = g.shape(p.gleak)[0];
        let sens = g.synapse_sums(SynapseInputs {
            pre: u_mapped,
            weight: p.sensory_w,
            erev: p.sensory_erev,
            mu: p.sensory_mu,
            sigma: p.sensory_sigma,
        })?;
        let sens_num = g.slice_cols(sens, 0, n)?;
        let sens_den = g.slice_cols(sens, n, n)?;
        let gl_vl = g.mul(p.gleak, p.vleak)?;
        let gl_vl = g.repeat(gl_vl, 0, batch)?;
        let gleak = g.repeat(p.gleak, 0, batch)?;
        let cm = g.repeat(p.cm, 0, batch)?;
        let leak_num = g.add(gl_vl, sens_num)?;
        let leak_den = g.add(gleak, sens_den)?;
        Ok(Self {
            p,
            n,
            cm,
            leak_num,
            leak_den,
        })
    }

    /// Recurrent synapse sums `(Σ a·erev, Σ a)` for presynaptic state `v`.
    fn recurrent(&self, g: &mut Graph, v: Var) -> Result<(Var, Var)> {
        let s = g.synapse_sums(SynapseInputs {
            pre: v,
            weight: self.p.w,
            erev: self.p.erev,
            mu: self.p.mu,
            sigma: self.p.sigma,
        })?;
        Ok((g.slice_cols(s, 0, self.n)?, g.slice_cols(s, self.n, self.n)?))
    }

    /// `cm/h` tiled over the batch; compute once per sub-step size.
    pub fn capacitance_rate(&self, g: &mut Graph, h: f64) -> Result<Var> {
        g.scale(self.cm, 1.0 / h)
    }

    /// One semi-implicit sub-step. `cm_rate` comes from [`Self::capacitance_rate`].
    pub fn fused(&self, g: &mut Graph, v: Var, cm_rate: Var) -> Result<Var> {
        let (rec_num, rec_den) = self.recurrent(g, v)?;
        let held = g.mul(cm_rate, v)?;
        let num = g.add(held, self.leak_num)?;
        let num = g.add(num, rec_num)?;
        let den = g.add(cm_rate, self.leak_den)?;
        let den = g.add(den, rec_den)?;
        g.div(num, den)
    }

    /// Right-hand side `dv/dt` for the explicit solvers.
    pub fn rhs(&self, g: &mut Graph, v: Var) -> Result<Var> {
        let (rec_num, rec_den) = self.recurrent(g, v)?;
        let pull = g.add(self.leak_num, rec_num)?;
        let conductance = g.add(self.leak_den, rec_den)?;
        let loss = g.mul(v, conductance)?;
        let net = g.sub(pull, loss)?;
        g.div(net, self.cm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_midpoint_and_saturation() {
        assert_eq!(synapse_gate(0.3, 0.3, 5.0), 0.5);
        let sigma = 4.0;
        assert!(synapse_gate(0.1 + 100.0 / sigma, 0.1, sigma) > 1.0 - 1e-10);
        assert_eq!(synapse_gate(0.0, 0.0, 4.0), 0.5);
        assert!((synapse_gate(0.5, 0.0, 4.0) - 0.880797).abs() < 1e-6);
        assert!((synapse_gate(0.5, 0.0, 4.0) - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn gate_is_monotone() {
        let mut prev = 0.0;
        for i in -50..50 {
            let g = synapse_gate(i as f64 * 0.1, 0.2, 3.0);
            assert!(g > prev && g < 1.0);
            prev = g;
        }
    }
}
