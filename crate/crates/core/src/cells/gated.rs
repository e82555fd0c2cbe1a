//! Discrete LSTM and GRU baselines.

use crate::error::Result;
use crate::numerics::{Graph, Var};

use super::params::{GruParams, LstmParams};

fn affine(g: &mut Graph, x: Var, w: Var, b: Var) -> Result<Var> {
    let batch = g.shape(x)[0];
    let proj = g.matmul(x, w)?;
    let b = g.repeat(b, 0, batch)?;
    g.add(proj, b)
}

/// Returns `(h', c')`.
pub fn lstm_step(g: &mut Graph, h: Var, c: Var, u: Var, p: &LstmParams<Var>) -> Result<(Var, Var)> {
    let n = g.shape(h)[1];
    let uh = g.concat_cols(u, h)?;
    let z = affine(g, uh, p.w, p.b)?;
    let zi = g.slice_cols(z, 0, n)?;
    let zf = g.slice_cols(z, n, n)?;
    let zg = g.slice_cols(z, 2 * n, n)?;
    let zo = g.slice_cols(z, 3 * n, n)?;
    let i = g.sigmoid(zi)?;
    let f = g.sigmoid(zf)?;
    let cand = g.tanh(zg)?;
    let o = g.sigmoid(zo)?;
    let kept = g.mul(f, c)?;
    let written = g.mul(i, cand)?;
    let c_next = g.add(kept, written)?;
    let squashed = g.tanh(c_next)?;
    let h_next = g.mul(o, squashed)?;
    Ok((h_next, c_next))
}

/// `h' = z⊙h + (1 − z)⊙n` with `n = tanh([u, r⊙h]·W + b)`.
pub fn gru_step(g: &mut Graph, h: Var, u: Var, p: &GruParams<Var>) -> Result<Var> {
    let n = g.shape(h)[1];
    let uh = g.concat_cols(u, h)?;
    let gates = affine(g, uh, p.w_gates, p.b_gates)?;
    let gates = g.sigmoid(gates)?;
    let z = g.slice_cols(gates, 0, n)?;
    let r = g.slice_cols(gates, n, n)?;
    let rh = g.mul(r, h)?;
    let urh = g.concat_cols(u, rh)?;
    let cand = affine(g, urh, p.w_cand, p.b_cand)?;
    let cand = g.tanh(cand)?;
    let diff = g.sub(h, cand)?;
    let keep = g.mul(z, diff)?;
    g.add(cand, keep)
}
