//! Measures the convergence order of the explicit solvers on dx/dt = -x.

use ltcse::cells::solver::{euler_step, rk4_step};
use ltcse::numerics::{Graph, Tensor, Var};

fn error(h: f64, rk4: bool) -> ltcse::Result<f64> {
    let mut g = Graph::new();
    let mut x = g.constant(Tensor::scalar(1.0));
    let mut f = |g: &mut Graph, v: Var| g.scale(v, -1.0);
    for _ in 0..(1.0 / h).round() as usize {
        x = if rk4 { rk4_step(&mut g, x, h, &mut f)? } else { euler_step(&mut g, x, h, &mut f)? };
    }
    Ok((g.value(x).item()? - (-1.0f64).exp()).abs())
}

fn main() -> ltcse::Result<()> {
    let hs = [0.1, 0.05, 0.025, 0.0125];
    for (name, rk4) in [("euler", false), ("rk4", true)] {
        let values: Vec<f64> = hs.iter().map(|&h| error(h, rk4)).collect::<ltcse::Result<_>>()?;
        let slopes: Vec<String> = values.windows(2).map(|w| format!("{:.3}", (w[0] / w[1]).log2())).collect();
        let errs: Vec<String> = values.iter().map(|e| format!("{e:.3e}")).collect();
        println!("{name:<5} errors {}  local slopes {}", errs.join(" "), slopes.join(" "));
    }
    Ok(())
}
