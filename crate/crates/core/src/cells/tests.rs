use super::*;
use crate::numerics::rng::SplitMix64;

fn ltc_scalar(cm: f64, gleak: f64, vleak: f64, w: f64, erev: f64, mu: f64, sigma: f64) -> LtcParams {
    LtcParams {
        gleak: Tensor::vector(&[gleak]),
        vleak: Tensor::vector(&[vleak]),
        cm: Tensor::vector(&[cm]),
        w: Tensor::new(&[1, 1], vec![w]).unwrap(),
        erev: Tensor::new(&[1, 1], vec![erev]).unwrap(),
        mu: Tensor::new(&[1, 1], vec![mu]).unwrap(),
        sigma: Tensor::new(&[1, 1], vec![sigma]).unwrap(),
        sensory_w: Tensor::zeros(&[0, 1]),
        sensory_erev: Tensor::zeros(&[0, 1]),
        sensory_mu: Tensor::zeros(&[0, 1]),
        sensory_sigma: Tensor::zeros(&[0, 1]),
    }
}

fn random_tensor(shape: &[usize], rng: &mut SplitMix64, lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.uniform(lo, hi))
}

#[test]
fn input_mapping_cases() {
    let u = Tensor::new(&[1, 2], vec![1.0, -3.0]).unwrap();
    assert_eq!(apply_input_mapping(&u, InputMapping::Identity, None, None).unwrap(), u);
    let w = Tensor::vector(&[2.0, 2.0]);
    let out = apply_input_mapping(&u, InputMapping::Linear, Some(&w), None).unwrap();
    assert_eq!(out.data(), &[2.0, -6.0]);
    let u = Tensor::new(&[1, 2], vec![0.0, 1.0]).unwrap();
    let (w, b) = (Tensor::vector(&[1.0, 1.0]), Tensor::vector(&[0.5, 0.5]));
    let out = apply_input_mapping(&u, InputMapping::Affine, Some(&w), Some(&b)).unwrap();
    assert_eq!(out.data(), &[0.5, 1.5]);
}

#[test]
fn fused_leak_only() {
    let p = ltc_scalar(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let v = Tensor::new(&[1, 1], vec![1.0]).unwrap();
    let u = Tensor::zeros(&[1, 0]);
    let out = ltc_fused_step(&v, &u, &p, 1.0).unwrap();
    assert_eq!(out.data(), &[0.5]);
}

#[test]
fn fused_single_synapse_arithmetic() {
    for sigma in [0.5, 3.0, 7.0] {
        let p = ltc_scalar(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, sigma);
        let v = Tensor::new(&[1, 1], vec![0.0]).unwrap();
        let out = ltc_fused_step(&v, &Tensor::zeros(&[1, 0]), &p, 0.1).unwrap();
        // (10·0 + 0 + 0.5·1) / (10 + 1 + 0.5)
        assert!((out.data()[0] - 0.5 / 11.5).abs() < 1e-15);
        assert!((out.data()[0] - 0.0434783).abs() < 1e-7);
    }
}

#[test]
fn rhs_equilibrium_and_leak() {
    let p = ltc_scalar(1.0, 1.0, 0.3, 0.0, 0.0, 0.0, 1.0);
    let v = Tensor::new(&[1, 1], vec![0.3]).unwrap();
    let d = ltc_rhs(&v, &Tensor::zeros(&[1, 0]), &p).unwrap();
    assert_eq!(d.data(), &[0.0]);

    let p = ltc_scalar(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let v = Tensor::new(&[1, 1], vec![1.0]).unwrap();
    let d = ltc_rhs(&v, &Tensor::zeros(&[1, 0]), &p).unwrap();
    assert_eq!(d.data(), &[-1.0]);
}

fn random_ltc(n: usize, k: usize, rng: &mut SplitMix64) -> LtcParams {
    LtcParams {
        gleak: random_tensor(&[n], rng, 0.1, 2.0),
        vleak: random_tensor(&[n], rng, -0.5, 0.5),
        cm: random_tensor(&[n], rng, 0.3, 1.0),
        w: random_tensor(&[n, n], rng, 0.0, 1.0),
        erev: random_tensor(&[n, n], rng, -1.0, 1.0),
        mu: random_tensor(&[n, n], rng, 0.0, 1.0),
        sigma: random_tensor(&[n, n], rng, 1.0, 8.0),
        sensory_w: random_tensor(&[k, n], rng, 0.0, 1.0),
        sensory_erev: random_tensor(&[k, n], rng, -1.0, 1.0),
        sensory_mu: random_tensor(&[k, n], rng, 0.0, 1.0),
        sensory_sigma: random_tensor(&[k, n], rng, 1.0, 8.0),
    }
}

#[test]
fn fused_converges_to_fine_euler() {
    let mut rng = SplitMix64::new(11);
    let (n, k) = (4, 2);
    let p = random_ltc(n, k, &mut rng);
    let v0 = random_tensor(&[2, n], &mut rng, -0.5, 0.5);
    let u = random_tensor(&[2, k], &mut rng, -1.0, 1.0);

    // fine explicit Euler over one unit of time
    let mut reference = v0.clone();
    let h_fine = 1e-4;
    for _ in 0..10_000 {
        let d = ltc_rhs(&reference, &u, &p).unwrap();
        for (x, dx) in reference.data_mut().iter_mut().zip(d.data()) {
            *x += h_fine * dx;
        }
    }

    let run_fused = |steps: usize| {
        let h = 1.0 / steps as f64;
        let mut v = v0.clone();
        for _ in 0..steps {
            v = ltc_fused_step(&v, &u, &p, h).unwrap();
        }
        v
    };
    let fused = run_fused(1000);
    assert!(fused.max_abs_diff(&reference) < 1e-3, "{}", fused.max_abs_diff(&reference));

    // first-order convergence: halving h roughly halves the error
    let e1 = run_fused(50).max_abs_diff(&reference);
    let e2 = run_fused(100).max_abs_diff(&reference);
    let e3 = run_fused(200).max_abs_diff(&reference);
    let order = ((e1 / e2).log2() + (e2 / e3).log2()) / 2.0;
    assert!(order >= 0.9, "order {order} ({e1}, {e2}, {e3})");
}

#[test]
fn fused_order_on_leak_only_system() {
    // dv/dt = −(v − vleak)·gleak/cm; exact solution known in closed form
    let p = ltc_scalar(0.5, 1.0, 0.2, 0.0, 0.0, 0.0, 1.0);
    let exact = 0.2 + (1.0 - 0.2) * (-2.0f64).exp();
    let err = |steps: usize| {
        let mut v = Tensor::new(&[1, 1], vec![1.0]).unwrap();
        for _ in 0..steps {
            v = ltc_fused_step(&v, &Tensor::zeros(&[1, 0]), &p, 1.0 / steps as f64).unwrap();
        }
        (v.data()[0] - exact).abs()
    };
    let slope = (err(100) / err(200)).log2();
    assert!(slope >= 1.0 - 0.05, "{slope}");
}

fn dense_oracle(x: &Tensor, u: &Tensor, w_rec: &Tensor, w_in: &Tensor, bias: &Tensor) -> Vec<f64> {
    let (b, n, k) = (x.shape()[0], x.shape()[1], u.shape()[1]);
    let mut out = vec![0.0; b * n];
    for r in 0..b {
        for j in 0..n {
            let mut s = bias.data()[j];
            for i in 0..n {
                s += x.at(r, i) * w_rec.at(i, j);
            }
            for i in 0..k {
                s += u.at(r, i) * w_in.at(i, j);
            }
            out[r * n + j] = s.tanh();
        }
    }
    out
}

#[test]
fn ctrnn_and_node_rhs() {
    let (n, k) = (3, 2);
    let zero = CtrnnParams {
        w_rec: Tensor::zeros(&[n, n]),
        w_in: Tensor::zeros(&[k, n]),
        bias: Tensor::zeros(&[n]),
        tau: Tensor::ones(&[n]),
    };
    let x = Tensor::new(&[1, n], vec![0.5, -1.0, 2.0]).unwrap();
    let u = Tensor::new(&[1, k], vec![0.3, 0.4]).unwrap();
    let d = ctrnn_rhs(&x, &u, &zero, ActivationKind::Tanh).unwrap();
    assert_eq!(d.data(), &[-0.5, 1.0, -2.0]);

    let b = 0.7;
    let tau = 2.0;
    let biased = CtrnnParams {
        bias: Tensor::full(&[n], b),
        tau: Tensor::full(&[n], tau),
        ..zero.clone()
    };
    let d = ctrnn_rhs(&Tensor::zeros(&[1, n]), &Tensor::zeros(&[1, k]), &biased, ActivationKind::Tanh).unwrap();
    assert!(d.data().iter().all(|&v| (v - b.tanh() / tau).abs() < 1e-15));

    let node_zero = NodeParams {
        w_rec: Tensor::zeros(&[n, n]),
        w_in: Tensor::zeros(&[k, n]),
        bias: Tensor::zeros(&[n]),
    };
    let d = node_rhs(&x, &u, &node_zero, ActivationKind::Tanh).unwrap();
    assert!(d.data().iter().all(|&v| v == 0.0));

    let mut rng = SplitMix64::new(5);
    for _ in 0..5 {
        let x = random_tensor(&[2, n], &mut rng, -1.0, 1.0);
        let u = random_tensor(&[2, k], &mut rng, -1.0, 1.0);
        let node = NodeParams {
            w_rec: random_tensor(&[n, n], &mut rng, -1.0, 1.0),
            w_in: random_tensor(&[k, n], &mut rng, -1.0, 1.0),
            bias: random_tensor(&[n], &mut rng, -1.0, 1.0),
        };
        let tau = random_tensor(&[n], &mut rng, 0.5, 2.0);
        let ctrnn = CtrnnParams {
            w_rec: node.w_rec.clone(),
            w_in: node.w_in.clone(),
            bias: node.bias.clone(),
            tau: tau.clone(),
        };
        let drive = dense_oracle(&x, &u, &node.w_rec, &node.w_in, &node.bias);
        let dn = node_rhs(&x, &u, &node, ActivationKind::Tanh).unwrap();
        let dc = ctrnn_rhs(&x, &u, &ctrnn, ActivationKind::Tanh).unwrap();
        for i in 0..2 * n {
            assert!((dn.data()[i] - drive[i]).abs() < 1e-12);
            let expected = (drive[i] - x.data()[i]) / tau.data()[i % n];
            assert!((dc.data()[i] - expected).abs() < 1e-12);
        }
        // ctrnn with unit tau is node − x
        let unit = CtrnnParams {
            tau: Tensor::ones(&[n]),
            ..ctrnn
        };
        let dc1 = ctrnn_rhs(&x, &u, &unit, ActivationKind::Tanh).unwrap();
        for i in 0..2 * n {
            assert!((dc1.data()[i] - (dn.data()[i] - x.data()[i])).abs() < 1e-15);
        }
    }
}

fn random_ctgru(n: usize, k: usize, rng: &mut SplitMix64) -> CtgruParams {
    CtgruParams {
        w_r: random_tensor(&[k + n, n], rng, -1.0, 1.0),
        b_r: random_tensor(&[n], rng, -1.0, 1.0),
        w_s: random_tensor(&[k + n, n], rng, -1.0, 1.0),
        b_s: random_tensor(&[n], rng, -1.0, 1.0),
        w_q: random_tensor(&[k + n, n], rng, -1.0, 1.0),
        b_q: random_tensor(&[n], rng, -1.0, 1.0),
    }
}

/// Scalar re-implementation of the CT-GRU update for B=1.
fn ctgru_oracle(hhat: &[Vec<f64>], u: &[f64], p: &CtgruParams, taus: &[f64], dt: f64) -> Vec<Vec<f64>> {
    let m = taus.len();
    let n = hhat[0].len();
    let k = u.len();
    let h: Vec<f64> = (0..n).map(|i| (0..m).map(|j| hhat[j][i]).sum()).collect();
    let uh: Vec<f64> = u.iter().chain(&h).copied().collect();
    let proj = |x: &[f64], w: &Tensor, b: &Tensor, i: usize| {
        (0..k + n).map(|r| x[r] * w.at(r, i)).sum::<f64>() + b.data()[i]
    };
    let attend = |ln: f64| {
        let scores: Vec<f64> = taus.iter().map(|t| -(ln - t.ln()).powi(2)).collect();
        let mx = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = scores.iter().map(|s| (s - mx).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|v| v / z).collect::<Vec<_>>()
    };
    let mut out = vec![vec![0.0; n]; m];
    let mut retrieved = vec![0.0; n];
    let mut s_all = vec![vec![0.0; n]; m];
    for i in 0..n {
        let r = attend(proj(&uh, &p.w_r, &p.b_r, i));
        retrieved[i] = (0..m).map(|j| r[j] * hhat[j][i]).sum();
        let s = attend(proj(&uh, &p.w_s, &p.b_s, i));
        for j in 0..m {
            s_all[j][i] = s[j];
        }
    }
    let ur: Vec<f64> = u.iter().chain(&retrieved).copied().collect();
    for i in 0..n {
        let q = proj(&ur, &p.w_q, &p.b_q, i).tanh();
        for j in 0..m {
            let s = s_all[j][i];
            out[j][i] = ((1.0 - s) * hhat[j][i] + s * q) * (-dt / taus[j]).exp();
        }
    }
    out
}

#[test]
fn ctgru_matches_scalar_oracle() {
    let mut rng = SplitMix64::new(8);
    for (m, n, k) in [(2, 1, 1), (3, 2, 2), (8, 3, 1)] {
        let p = random_ctgru(n, k, &mut rng);
        let taus: Vec<f64> = (0..m).map(|j| 10f64.sqrt().powi(j as i32)).collect();
        let hhat = random_tensor(&[1, m, n], &mut rng, -1.0, 1.0);
        let u = random_tensor(&[1, k], &mut rng, -1.0, 1.0);
        let out = ctgru_step(&hhat, &u, &p, &taus, 0.7, StorageGate::Learned).unwrap();
        let rows: Vec<Vec<f64>> = (0..m).map(|j| hhat.data()[j * n..(j + 1) * n].to_vec()).collect();
        let expected = ctgru_oracle(&rows, u.data(), &p, &taus, 0.7);
        for j in 0..m {
            for i in 0..n {
                assert!((out.data()[j * n + i] - expected[j][i]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn ctgru_pure_decay_and_single_scale() {
    let p = CtgruParams {
        w_r: Tensor::zeros(&[2, 1]),
        b_r: Tensor::zeros(&[1]),
        w_s: Tensor::zeros(&[2, 1]),
        b_s: Tensor::zeros(&[1]),
        w_q: Tensor::zeros(&[2, 1]),
        b_q: Tensor::zeros(&[1]),
    };
    let hhat = Tensor::ones(&[1, 1, 1]);
    let u = Tensor::zeros(&[1, 1]);
    let out = ctgru_step(&hhat, &u, &p, &[2.0], 2.0, StorageGate::Closed).unwrap();
    assert!((out.data()[0] - (-1.0f64).exp()).abs() < 1e-15);
    assert!((out.data()[0] - 0.367879).abs() < 1e-6);

    // M = 1: both gates are exactly one, so the trace becomes q·decay = 0
    let out = ctgru_step(&hhat, &u, &p, &[2.0], 2.0, StorageGate::Learned).unwrap();
    assert_eq!(out.data()[0], 0.0);
    let mut g = Graph::new();
    let x = g.constant(Tensor::new(&[1, 1], vec![3.7]).unwrap());
    let r = ctgru::scale_attention(&mut g, x, &[5.0]).unwrap();
    assert_eq!(g.value(r).data(), &[1.0]);
}

#[test]
fn ctgru_gates_sum_to_one() {
    let mut rng = SplitMix64::new(12);
    let taus = CellConfig::new(CellKind::Ctgru, 1, 1, 1).tau_scales();
    for _ in 0..50 {
        let mut g = Graph::new();
        let ln = random_tensor(&[3, 4], &mut rng, -20.0, 20.0);
        let x = g.constant(ln);
        let r = ctgru::scale_attention(&mut g, x, &taus).unwrap();
        let total = g.sum_axis(r, 1).unwrap();
        assert!(g.value(total).data().iter().all(|s| (s - 1.0).abs() < 1e-12));
    }
}

#[test]
fn lstm_and_gru_zero_weights() {
    let (n, k) = (2, 3);
    let lp = LstmParams {
        w: Tensor::zeros(&[k + n, 4 * n]),
        b: Tensor::zeros(&[4 * n]),
    };
    let u = Tensor::ones(&[1, k]);
    let (h, c) = lstm_step(&Tensor::zeros(&[1, n]), &Tensor::zeros(&[1, n]), &u, &lp).unwrap();
    assert!(h.data().iter().chain(c.data()).all(|&v| v == 0.0));
    let (_, c) = lstm_step(&Tensor::zeros(&[1, n]), &Tensor::full(&[1, n], 2.0), &u, &lp).unwrap();
    assert!(c.data().iter().all(|&v| v == 1.0));

    let gp = GruParams {
        w_gates: Tensor::zeros(&[k + n, 2 * n]),
        b_gates: Tensor::zeros(&[2 * n]),
        w_cand: Tensor::zeros(&[k + n, n]),
        b_cand: Tensor::zeros(&[n]),
    };
    let h = gru_step(&Tensor::full(&[1, n], 4.0), &u, &gp).unwrap();
    assert!(h.data().iter().all(|&v| v == 2.0));
}

fn zero_ctrnn_model(unfolds: usize, solver: Solver) -> Model {
    let config = CellConfig::new(CellKind::Ctrnn, 1, 1, 1)
        .with_unfolds(unfolds)
        .with_solver(solver)
        .with_mapping(InputMapping::Identity);
    let mut model = Model::init(config, 0).unwrap();
    for (_, t) in model.params.named_mut() {
        for v in t.data_mut() {
            *v = 0.0;
        }
    }
    if let CellParams::Ctrnn(p) = &mut model.params.cell {
        p.tau = Tensor::ones(&[1]);
    }
    model
}

#[test]
fn unfolds_apply_sub_steps() {
    // zero weights and unit tau reduce the CT-RNN to dx/dt = −x
    let model = zero_ctrnn_model(6, Solver::Euler);
    let state = CellState::Single(Tensor::new(&[1, 1], vec![1.0]).unwrap());
    let (next, y) = model.step(&state, &Tensor::zeros(&[1, 1]), 0.6).unwrap();
    let CellState::Single(x) = next else { unreachable!() };
    assert!((x.data()[0] - 0.9f64.powi(6)).abs() < 1e-15);
    assert!((x.data()[0] - 0.531441).abs() < 1e-12);
    assert_eq!(y.shape(), &[1, 1]);

    let single = zero_ctrnn_model(1, Solver::Euler);
    let (next, _) = single.step(&state, &Tensor::zeros(&[1, 1]), 0.1).unwrap();
    let CellState::Single(x) = next else { unreachable!() };
    assert!((x.data()[0] - 0.9).abs() < 1e-15);
}

#[test]
fn output_shapes_and_readout_bias() {
    for kind in CellKind::ALL {
        let config = CellConfig::new(kind, 3, 4, 2);
        let mut model = Model::init(config, 1).unwrap();
        let inputs = Tensor::from_fn(&[2, 5, 3], |i| (i as f64 * 0.37).sin());
        let out = model.forward_sequence(&inputs, 1.0).unwrap();
        assert_eq!(out.shape(), &[2, 5, 2]);

        // zero readout weights → every output equals the bias row
        let r = &mut model.params.readout;
        for (i, v) in r.data_mut().iter_mut().enumerate() {
            *v = if i >= 4 * 2 { 0.25 * (i as f64 - 7.0) } else { 0.0 };
        }
        let out = model.forward_sequence(&inputs, 1.0).unwrap();
        for chunk in out.data().chunks(2) {
            assert_eq!(chunk, &[0.25, 0.5]);
        }
    }
}

#[test]
fn single_step_sequence_equals_cell_forward() {
    let config = CellConfig::new(CellKind::Ltc, 3, 4, 2);
    let model = Model::init(config.clone(), 9).unwrap();
    let inputs = Tensor::from_fn(&[2, 1, 3], |i| i as f64 * 0.1);
    let seq = model.forward_sequence(&inputs, 1.0).unwrap();
    let (_, y) = model
        .step(&CellState::zeros(&config, 2), &step_input(&inputs, 0), 1.0)
        .unwrap();
    assert_eq!(seq.data(), y.data());
}

#[test]
fn forward_is_bitwise_deterministic() {
    for kind in CellKind::ALL {
        let config = CellConfig::new(kind, 2, 3, 1);
        let a = Model::init(config.clone(), 4).unwrap();
        let b = Model::init(config, 4).unwrap();
        let inputs = Tensor::from_fn(&[1, 4, 2], |i| (i as f64).cos());
        let ya = a.forward_sequence(&inputs, 1.0).unwrap();
        let yb = b.forward_sequence(&inputs, 1.0).unwrap();
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&ya), bits(&yb));
    }
}

#[test]
fn non_positive_dt_rejected() {
    let model = Model::init(CellConfig::new(CellKind::Gru, 1, 2, 1), 0).unwrap();
    let state = CellState::zeros(&model.config, 1);
    assert!(model.step(&state, &Tensor::zeros(&[1, 1]), 0.0).is_err());
}
