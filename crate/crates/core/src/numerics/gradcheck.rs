//! Central finite-difference gradient checking.

use crate::error::{Error, Result};

use super::graph::{Graph, Var};
use super::tensor::Tensor;

/// Builds a scalar loss from the given leaf variables.
pub trait ScalarProgram: Fn(&mut Graph, &[Var]) -> Result<Var> {}
impl<F: Fn(&mut Graph, &[Var]) -> Result<Var>> ScalarProgram for F {}

fn evaluate(f: &impl ScalarProgram, inputs: &[Tensor]) -> Result<f64> {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    let v = g.value(out).item()?;
    if !v.is_finite() {
        return Err(Error::NonFinite {
            op: "grad_check evaluation".into(),
        });
    }
    Ok(v)
}

/// Analytic gradients of `f` with respect to every input.
pub fn analytic_gradients(f: &impl ScalarProgram, inputs: &[Tensor]) -> Result<Vec<Tensor>> {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    let grads = g.backward(out)?;
    Ok(vars.iter().map(|&v| grads.get(v)).collect())
}

/// Maximum over all input coordinates of
/// `|analytic − central difference| / max(1, |analytic|)`.
pub fn grad_check_many(f: impl ScalarProgram, inputs: &[Tensor], step: f64) -> Result<f64> {
    if step <= 0.0 {
        return Err(Error::Config(format!("finite-difference step must be positive, got {step}")));
    }
    let analytic = analytic_gradients(&f, inputs)?;
    let mut worst: f64 = 0.0;
    let mut probe = inputs.to_vec();
    for (t, grad) in analytic.iter().enumerate() {
        for i in 0..probe[t].len() {
            let orig = probe[t].data()[i];
            probe[t].data_mut()[i] = orig + step;
            let up = evaluate(&f, &probe)?;
            probe[t].data_mut()[i] = orig - step;
            let down = evaluate(&f, &probe)?;
            probe[t].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = grad.data()[i];
            if !a.is_finite() {
                return Err(Error::NonFinite {
                    op: "grad_check analytic gradient".into(),
                });
            }
            worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
        }
    }
    Ok(worst)
}

/// Single-input form of [`grad_check_many`].
pub fn grad_check(
    f: impl Fn(&mut Graph, Var) -> Result<Var>,
    at: &Tensor,
    step: f64,
) -> Result<f64> {
    grad_check_many(|g: &mut Graph, v: &[Var]| f(g, v[0]), std::slice::from_ref(at), step)
}
