//! Continuous-time GRU with a bank of exponentially decaying traces.
//!
//! The state `hhat` is `[B×M×N]`: one trace per time scale `τ_j`. The
//! visible state is the sum over traces. Retrieval and storage gates are
//! softmax attention over the scales, scored by the squared distance
//! between a predicted log time scale and `ln τ_j`:
//!
//! ```text
//! h       = Σ_j hhat_j
//! r_j     = softmax_j(−(ln τ̂_r − ln τ_j)²),  ln τ̂_r = [u,h]·W_r + b_r
//! q       = tanh([u, Σ_j r_j hhat_j]·W_q + b_q)
//! s_j     = softmax_j(−(ln τ̂_s − ln τ_j)²),  ln τ̂_s = [u,h]·W_s + b_s
//! hhat'_j = ((1 − s_j) hhat_j + s_j q) · exp(−dt/τ_j)
//! ```

use crate::error::Result;
use crate::numerics::{Graph, Tensor, Var};

use super::params::CtgruParams;

/// How the storage gate is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StorageGate {
    #[default]
    Learned,
    /// Forces `s = 0`, leaving only the free decay of the traces.
    Closed,
}

/// Visible state `Σ_j hhat_j`.
pub fn visible(g: &mut Graph, hhat: Var) -> Result<Var> {
    g.sum_axis(hhat, 1)
}

/// Scale-attention weights `softmax_j(−(log_tau − ln τ_j)²)`, `[B×M×N]`.
pub fn scale_attention(g: &mut Graph, log_tau: Var, tau_scales: &[f64]) -> Result<Var> {
    let shape = g.shape(log_tau).to_vec();
    let (batch, n, m) = (shape[0], shape[1], tau_scales.len());
    let centers = Tensor::from_fn(&[batch, m, n], |i| tau_scales[(i / n) % m].ln());
    let centers = g.constant(centers);
    let spread = g.repeat(log_tau, 1, m)?;
    let d = g.sub(spread, centers)?;
    let d2 = g.mul(d, d)?;
    let score = g.neg(d2)?;
    g.softmax(score, 1)
}

fn log_scale(g: &mut Graph, uh: Var, w: Var, b: Var) -> Result<Var> {
    let batch = g.shape(uh)[0];
    let proj = g.matmul(uh, w)?;
    let b = g.repeat(b, 0, batch)?;
    g.add(proj, b)
}

pub fn step(
    g: &mut Graph,
    hhat: Var,
    u: Var,
    p: &CtgruParams<Var>,
    tau_scales: &[f64],
    dt: f64,
    storage: StorageGate,
) -> Result<Var> {
    let shape = g.shape(hhat).to_vec();
    let (batch, m, n) = (shape[0], shape[1], shape[2]);

    let h = visible(g, hhat)?;
    let uh = g.concat_cols(u, h)?;

    let ln_r = log_scale(g, uh, p.w_r, p.b_r)?;
    let r = scale_attention(g, ln_r, tau_scales)?;
    let weighted = g.mul(r, hhat)?;
    let retrieved = g.sum_axis(weighted, 1)?;
    let ur = g.concat_cols(u, retrieved)?;
    let q_pre = log_scale(g, ur, p.w_q, p.b_q)?;
    let q = g.tanh(q_pre)?;

    let decay = Tensor::from_fn(&[batch, m, n], |i| (-dt / tau_scales[(i / n) % m]).exp());
    let decay = g.constant(decay);

    let stored = match storage {
        StorageGate::Closed => hhat,
        StorageGate::Learned => {
            let ln_s = log_scale(g, uh, p.w_s, p.b_s)?;
            let s = scale_attention(g, ln_s, tau_scales)?;
            let q_rep = g.repeat(q, 1, m)?;
            let toward = g.sub(q_rep, hhat)?;
            let moved = g.mul(s, toward)?;
            g.add(hhat, moved)?
        }
    };
    g.mul(stored, decay)
}
