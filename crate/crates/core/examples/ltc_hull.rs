//! A stiff LTC neuron: the fused step stays between the reversal potentials
//! at any step size, while explicit Euler overshoots.

use ltcse::cells::{ltc_fused_step, ltc_rhs, LtcParams};
use ltcse::numerics::Tensor;

fn neuron() -> ltcse::Result<LtcParams> {
    Ok(LtcParams {
        gleak: Tensor::vector(&[1.0]),
        vleak: Tensor::vector(&[0.0]),
        cm: Tensor::vector(&[0.05]),
        w: Tensor::new(&[1, 1], vec![0.0])?,
        erev: Tensor::new(&[1, 1], vec![0.0])?,
        mu: Tensor::new(&[1, 1], vec![0.0])?,
        sigma: Tensor::new(&[1, 1], vec![1.0])?,
        sensory_w: Tensor::new(&[1, 1], vec![5.0])?,
        sensory_erev: Tensor::new(&[1, 1], vec![1.0])?,
        sensory_mu: Tensor::new(&[1, 1], vec![0.0])?,
        sensory_sigma: Tensor::new(&[1, 1], vec![4.0])?,
    })
}

fn main() -> ltcse::Result<()> {
    let p = neuron()?;
    let u = Tensor::new(&[1, 1], vec![1.0])?;
    println!("hull is [0, 1]");
    for h in [0.01, 0.1, 0.5, 1.0] {
        let (mut fused, mut euler) = (Tensor::zeros(&[1, 1]), Tensor::zeros(&[1, 1]));
        for _ in 0..10 {
            fused = ltc_fused_step(&fused, &u, &p, h)?;
            let d = ltc_rhs(&euler, &u, &p)?;
            euler = Tensor::new(&[1, 1], vec![euler.data()[0] + h * d.data()[0]])?;
        }
        println!("h {h:<5} fused {:>12.6}  euler {:>14.6e}", fused.data()[0], euler.data()[0]);
    }
    Ok(())
}
