//! Fixed-step explicit integrators over graph variables.

use crate::error::{Error, Result};
use crate::numerics::{Graph, Var};

fn finite(g: &Graph, v: Var, what: &str) -> Result<Var> {
    if g.value(v).is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { op: what.to_string() })
    }
}

/// `x + h·f(x)`.
pub fn euler_step<F>(g: &mut Graph, x: Var, h: f64, f: &mut F) -> Result<Var>
where
    F: FnMut(&mut Graph, Var) -> Result<Var>,
{
    let d = f(g, x)?;
    let d = finite(g, d, "euler derivative")?;
    let hd = g.scale(d, h)?;
    g.add(x, hd)
}

/// Classical four-stage Runge–Kutta: `x + h/6·(k1 + 2k2 + 2k3 + k4)`.
pub fn rk4_step<F>(g: &mut Graph, x: Var, h: f64, f: &mut F) -> Result<Var>
where
    F: FnMut(&mut Graph, Var) -> Result<Var>,
{
    let k1 = f(g, x)?;
    let k1 = finite(g, k1, "rk4 stage 1")?;
    let s = g.scale(k1, h / 2.0)?;
    let x2 = g.add(x, s)?;
    let k2 = f(g, x2)?;
    let k2 = finite(g, k2, "rk4 stage 2")?;
    let s = g.scale(k2, h / 2.0)?;
    let x3 = g.add(x, s)?;
    let k3 = f(g, x3)?;
    let k3 = finite(g, k3, "rk4 stage 3")?;
    let s = g.scale(k3, h)?;
    let x4 = g.add(x, s)?;
    let k4 = f(g, x4)?;
    let k4 = finite(g, k4, "rk4 stage 4")?;

    let mid = g.add(k2, k3)?;
    let mid = g.scale(mid, 2.0)?;
    let ends = g.add(k1, k4)?;
    let total = g.add(ends, mid)?;
    let incr = g.scale(total, h / 6.0)?;
    g.add(x, incr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    fn decay(g: &mut Graph, x: Var) -> Result<Var> {
        g.neg(x)
    }

    fn step(solver: fn(&mut Graph, Var, f64, &mut fn(&mut Graph, Var) -> Result<Var>) -> Result<Var>, x0: f64, h: f64) -> f64 {
        let mut g = Graph::new();
        let x = g.constant(Tensor::scalar(x0));
        let mut f: fn(&mut Graph, Var) -> Result<Var> = decay;
        let y = solver(&mut g, x, h, &mut f).unwrap();
        g.value(y).item().unwrap()
    }

    #[test]
    fn euler_on_decay() {
        assert!((step(euler_step, 1.0, 0.1) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rk4_on_decay() {
        let y = step(rk4_step, 1.0, 0.1);
        // closed form e^-0.1; RK4 local error ~ h^5/120
        assert!((y - 0.9048375).abs() < 1e-7, "{y}");
        assert!((y - (-0.1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn zero_field_is_identity() {
        for solver in [euler_step::<fn(&mut Graph, Var) -> Result<Var>>, rk4_step] {
            let mut g = Graph::new();
            let x = g.constant(Tensor::vector(&[1.5, -2.0]));
            let mut zero: fn(&mut Graph, Var) -> Result<Var> = |g, x| g.scale(x, 0.0);
            let y = solver(&mut g, x, 0.3, &mut zero).unwrap();
            assert_eq!(g.value(y).data(), &[1.5, -2.0]);
        }
    }

    #[test]
    fn non_finite_derivative_is_an_error() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::scalar(1.0));
        let mut bad = |g: &mut Graph, x: Var| g.scale(x, f64::INFINITY);
        assert!(euler_step(&mut g, x, 0.1, &mut bad).is_err());
        assert!(rk4_step(&mut g, x, 0.1, &mut bad).is_err());
    }
}
