//! Learnable parameter sets for each cell kind.
//!
//! Every parameter struct is generic over its storage so the same layout
//! holds concrete tensors (`T = Tensor`) and their graph bindings
//! (`T = Var`).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::rng::SplitMix64;
use crate::numerics::{Graph, Tensor, Var};

use super::config::{CellConfig, CellKind};

macro_rules! param_set {
    ($(#[$meta:meta])* $name:ident { $($field:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name<T = Tensor> {
            $(pub $field: T,)+
        }

        impl<T> $name<T> {
            pub const NAMES: &'static [&'static str] = &[$(stringify!($field)),+];

            pub fn fields(&self) -> Vec<(&'static str, &T)> {
                vec![$((stringify!($field), &self.$field)),+]
            }

            pub fn fields_mut(&mut self) -> Vec<(&'static str, &mut T)> {
                vec![$((stringify!($field), &mut self.$field)),+]
            }

            pub fn try_map<U>(&self, mut f: impl FnMut(&'static str, &T) -> Result<U>) -> Result<$name<U>> {
                Ok($name { $($field: f(stringify!($field), &self.$field)?,)+ })
            }
        }
    };
}

param_set!(
    /// Liquid time-constant cell: per-neuron leak and capacitance, and
    /// conductance-based recurrent (`N×N`) and sensory (`K×N`) synapses.
    LtcParams {
        gleak,
        vleak,
        cm,
        w,
        erev,
        mu,
        sigma,
        sensory_w,
        sensory_erev,
        sensory_mu,
        sensory_sigma,
    }
);

param_set!(CtrnnParams { w_rec, w_in, bias, tau });

param_set!(NodeParams { w_rec, w_in, bias });

param_set!(
    /// Retrieval (`r`), storage (`s`) and candidate (`q`) weights of a CT-GRU.
    /// The time scales are fixed by the config and not learned.
    CtgruParams { w_r, b_r, w_s, b_s, w_q, b_q }
);

param_set!(
    /// Gate blocks are stacked column-wise in the order input, forget,
    /// candidate, output.
    LstmParams { w, b }
);

param_set!(
    /// `w_gates` stacks the update and reset gates column-wise.
    GruParams { w_gates, b_gates, w_cand, b_cand }
);

#[derive(Clone, Debug, PartialEq)]
pub enum CellParams<T = Tensor> {
    Ltc(LtcParams<T>),
    Ctrnn(CtrnnParams<T>),
    Node(NodeParams<T>),
    Ctgru(CtgruParams<T>),
    Lstm(LstmParams<T>),
    Gru(GruParams<T>),
}

impl<T> CellParams<T> {
    pub fn fields(&self) -> Vec<(&'static str, &T)> {
        match self {
            CellParams::Ltc(p) => p.fields(),
            CellParams::Ctrnn(p) => p.fields(),
            CellParams::Node(p) => p.fields(),
            CellParams::Ctgru(p) => p.fields(),
            CellParams::Lstm(p) => p.fields(),
            CellParams::Gru(p) => p.fields(),
        }
    }

    pub fn fields_mut(&mut self) -> Vec<(&'static str, &mut T)> {
        match self {
            CellParams::Ltc(p) => p.fields_mut(),
            CellParams::Ctrnn(p) => p.fields_mut(),
            CellParams::Node(p) => p.fields_mut(),
            CellParams::Ctgru(p) => p.fields_mut(),
            CellParams::Lstm(p) => p.fields_mut(),
            CellParams::Gru(p) => p.fields_mut(),
        }
    }

    pub fn try_map<U>(&self, f: impl FnMut(&'static str, &T) -> Result<U>) -> Result<CellParams<U>> {
        Ok(match self {
            CellParams::Ltc(p) => CellParams::Ltc(p.try_map(f)?),
            CellParams::Ctrnn(p) => CellParams::Ctrnn(p.try_map(f)?),
            CellParams::Node(p) => CellParams::Node(p.try_map(f)?),
            CellParams::Ctgru(p) => CellParams::Ctgru(p.try_map(f)?),
            CellParams::Lstm(p) => CellParams::Lstm(p.try_map(f)?),
            CellParams::Gru(p) => CellParams::Gru(p.try_map(f)?),
        })
    }
}

/// Cell parameters plus the shared input mapping and affine readout.
///
/// The readout is a single `[(N+1)×O]` tensor whose last row is the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T = Tensor> {
    pub cell: CellParams<T>,
    pub input_w: Option<T>,
    pub input_b: Option<T>,
    pub readout: T,
}

impl<T> ModelParams<T> {
    /// `(qualified name, tensor)` pairs in a fixed order.
    pub fn named(&self) -> Vec<(String, &T)> {
        let mut out: Vec<(String, &T)> = self
            .cell
            .fields()
            .into_iter()
            .map(|(n, t)| (format!("cell.{n}"), t))
            .collect();
        if let Some(w) = &self.input_w {
            out.push(("input.w".into(), w));
        }
        if let Some(b) = &self.input_b {
            out.push(("input.b".into(), b));
        }
        out.push(("readout".into(), &self.readout));
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut T)> {
        let mut out: Vec<(String, &mut T)> = self
            .cell
            .fields_mut()
            .into_iter()
            .map(|(n, t)| (format!("cell.{n}"), t))
            .collect();
        if let Some(w) = &mut self.input_w {
            out.push(("input.w".into(), w));
        }
        if let Some(b) = &mut self.input_b {
            out.push(("input.b".into(), b));
        }
        out.push(("readout".into(), &mut self.readout));
        out
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(&str, &T) -> Result<U>) -> Result<ModelParams<U>> {
        Ok(ModelParams {
            cell: self.cell.try_map(|n, t| f(&format!("cell.{n}"), t))?,
            input_w: self.input_w.as_ref().map(|t| f("input.w", t)).transpose()?,
            input_b: self.input_b.as_ref().map(|t| f("input.b", t)).transpose()?,
            readout: f("readout", &self.readout)?,
        })
    }
}

/// Initialization rule for one tensor.
enum Init {
    Const(f64),
    Uniform(f64, f64),
    Sign,
    Glorot,
    Readout,
}

fn expected_shapes(config: &CellConfig) -> Vec<(String, Vec<usize>, Init)> {
    let (n, k, o) = (config.hidden_size, config.input_size, config.output_size);
    let cell: Vec<(&str, Vec<usize>, Init)> = match config.kind {
        CellKind::Ltc => vec![
            ("gleak", vec![n], Init::Const(1.0)),
            ("vleak", vec![n], Init::Uniform(-0.2, 0.2)),
            ("cm", vec![n], Init::Uniform(0.4, 0.6)),
            ("w", vec![n, n], Init::Uniform(0.001, 1.0)),
            ("erev", vec![n, n], Init::Sign),
            ("mu", vec![n, n], Init::Uniform(0.3, 0.8)),
            ("sigma", vec![n, n], Init::Uniform(3.0, 8.0)),
            ("sensory_w", vec![k, n], Init::Uniform(0.001, 1.0)),
            ("sensory_erev", vec![k, n], Init::Sign),
            ("sensory_mu", vec![k, n], Init::Uniform(0.3, 0.8)),
            ("sensory_sigma", vec![k, n], Init::Uniform(3.0, 8.0)),
        ],
        CellKind::Ctrnn => vec![
            ("w_rec", vec![n, n], Init::Glorot),
            ("w_in", vec![k, n], Init::Glorot),
            ("bias", vec![n], Init::Const(0.0)),
            ("tau", vec![n], Init::Const(1.0)),
        ],
        CellKind::Node => vec![
            ("w_rec", vec![n, n], Init::Glorot),
            ("w_in", vec![k, n], Init::Glorot),
            ("bias", vec![n], Init::Const(0.0)),
        ],
        CellKind::Ctgru => vec![
            ("w_r", vec![k + n, n], Init::Glorot),
            ("b_r", vec![n], Init::Const(0.0)),
            ("w_s", vec![k + n, n], Init::Glorot),
            ("b_s", vec![n], Init::Const(0.0)),
            ("w_q", vec![k + n, n], Init::Glorot),
            ("b_q", vec![n], Init::Const(0.0)),
        ],
        CellKind::Lstm => vec![
            ("w", vec![k + n, 4 * n], Init::Glorot),
            ("b", vec![4 * n], Init::Const(0.0)),
        ],
        CellKind::Gru => vec![
            ("w_gates", vec![k + n, 2 * n], Init::Glorot),
            ("b_gates", vec![2 * n], Init::Const(0.0)),
            ("w_cand", vec![k + n, n], Init::Glorot),
            ("b_cand", vec![n], Init::Const(0.0)),
        ],
    };
    let mut out: Vec<(String, Vec<usize>, Init)> = cell
        .into_iter()
        .map(|(name, shape, init)| (format!("cell.{name}"), shape, init))
        .collect();
    let (has_w, has_b) = config.mapping_tensors();
    if has_w {
        out.push(("input.w".into(), vec![k], Init::Const(1.0)));
    }
    if has_b {
        out.push(("input.b".into(), vec![k], Init::Const(0.0)));
    }
    out.push(("readout".into(), vec![n + 1, o], Init::Readout));
    out
}

fn draw(shape: &[usize], init: &Init, rng: &mut SplitMix64) -> Tensor {
    match *init {
        Init::Const(c) => Tensor::full(shape, c),
        Init::Uniform(lo, hi) => Tensor::from_fn(shape, |_| rng.uniform(lo, hi)),
        Init::Sign => Tensor::from_fn(shape, |_| if rng.bernoulli(0.5) { 1.0 } else { -1.0 }),
        Init::Glorot => {
            let a = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
            Tensor::from_fn(shape, |_| rng.uniform(-a, a))
        }
        Init::Readout => {
            let (rows, cols) = (shape[0], shape[1]);
            let a = (6.0 / (rows - 1 + cols) as f64).sqrt();
            Tensor::from_fn(shape, |i| if i / cols == rows - 1 { 0.0 } else { rng.uniform(-a, a) })
        }
    }
}

impl ModelParams<Tensor> {
    /// Draws every tensor from its own `(seed, name)` stream.
    pub fn init(config: &CellConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut tensors: BTreeMap<String, Tensor> = expected_shapes(config)
            .into_iter()
            .map(|(name, shape, init)| {
                let mut rng = SplitMix64::for_stream(seed, &name);
                let t = draw(&shape, &init, &mut rng);
                (name, t)
            })
            .collect();
        Self::assemble(config, |name| {
            tensors
                .remove(name)
                .ok_or_else(|| Error::Config(format!("missing tensor {name}")))
        })
    }

    /// Rebuilds parameters from named tensors, checking every shape.
    pub fn from_named(config: &CellConfig, mut tensors: BTreeMap<String, Tensor>) -> Result<Self> {
        config.validate()?;
        let expected = expected_shapes(config);
        for (name, shape, _) in &expected {
            match tensors.get(name) {
                None => return Err(Error::Checkpoint(format!("missing tensor \"{name}\""))),
                Some(t) if t.shape() != shape.as_slice() => {
                    return Err(Error::Checkpoint(format!(
                        "tensor \"{name}\" has shape {:?}, expected {:?}",
                        t.shape(),
                        shape
                    )))
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = tensors.keys().find(|k| !expected.iter().any(|(n, ..)| n == *k)) {
            return Err(Error::Checkpoint(format!("unexpected tensor \"{extra}\"")));
        }
        Self::assemble(config, |name| {
            tensors
                .remove(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor \"{name}\"")))
        })
    }

    fn assemble(config: &CellConfig, mut take: impl FnMut(&str) -> Result<Tensor>) -> Result<Self> {
        let mut cell = |n: &str| take(&format!("cell.{n}"));
        let cell = match config.kind {
            CellKind::Ltc => CellParams::Ltc(LtcParams {
                gleak: cell("gleak")?,
                vleak: cell("vleak")?,
                cm: cell("cm")?,
                w: cell("w")?,
                erev: cell("erev")?,
                mu: cell("mu")?,
                sigma: cell("sigma")?,
                sensory_w: cell("sensory_w")?,
                sensory_erev: cell("sensory_erev")?,
                sensory_mu: cell("sensory_mu")?,
                sensory_sigma: cell("sensory_sigma")?,
            }),
            CellKind::Ctrnn => CellParams::Ctrnn(CtrnnParams {
                w_rec: cell("w_rec")?,
                w_in: cell("w_in")?,
                bias: cell("bias")?,
                tau: cell("tau")?,
            }),
            CellKind::Node => CellParams::Node(NodeParams {
                w_rec: cell("w_rec")?,
                w_in: cell("w_in")?,
                bias: cell("bias")?,
            }),
            CellKind::Ctgru => CellParams::Ctgru(CtgruParams {
                w_r: cell("w_r")?,
                b_r: cell("b_r")?,
                w_s: cell("w_s")?,
                b_s: cell("b_s")?,
                w_q: cell("w_q")?,
                b_q: cell("b_q")?,
            }),
            CellKind::Lstm => CellParams::Lstm(LstmParams {
                w: cell("w")?,
                b: cell("b")?,
            }),
            CellKind::Gru => CellParams::Gru(GruParams {
                w_gates: cell("w_gates")?,
                b_gates: cell("b_gates")?,
                w_cand: cell("w_cand")?,
                b_cand: cell("b_cand")?,
            }),
        };
        let (has_w, has_b) = config.mapping_tensors();
        Ok(ModelParams {
            cell,
            input_w: has_w.then(|| take("input.w")).transpose()?,
            input_b: has_b.then(|| take("input.b")).transpose()?,
            readout: take("readout")?,
        })
    }

    /// Registers every tensor as a graph leaf.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> ModelParams<Var> {
        self.try_map(|_, t| {
            Ok(if trainable {
                g.param(t.clone())
            } else {
                g.constant(t.clone())
            })
        })
        .expect("binding cannot fail")
    }

    /// Projects parameters back into their admissible ranges.
    ///
    /// Synaptic weights stay non-negative and capacitances, leak
    /// conductances, gate steepness and time constants stay strictly
    /// positive, which keeps the fused LTC denominator positive.
    pub fn constrain(&mut self) {
        fn clamp(t: &mut Tensor, lo: f64, hi: f64) {
            for v in t.data_mut() {
                *v = v.clamp(lo, hi);
            }
        }
        match &mut self.cell {
            CellParams::Ltc(p) => {
                clamp(&mut p.w, 0.0, f64::INFINITY);
                clamp(&mut p.sensory_w, 0.0, f64::INFINITY);
                clamp(&mut p.cm, 1e-6, 1e3);
                clamp(&mut p.gleak, 1e-5, 1e3);
                clamp(&mut p.sigma, 1e-5, 1e3);
                clamp(&mut p.sensory_sigma, 1e-5, 1e3);
            }
            CellParams::Ctrnn(p) => clamp(&mut p.tau, 1e-5, 1e3),
            _ => {}
        }
    }

    /// Name of the first tensor outside its admissible range, if any.
    pub fn constraint_violation(&self) -> Option<&'static str> {
        let below = |t: &Tensor, lo: f64| t.data().iter().any(|&v| !(v >= lo));
        match &self.cell {
            CellParams::Ltc(p) => [
                ("cell.w", below(&p.w, 0.0)),
                ("cell.sensory_w", below(&p.sensory_w, 0.0)),
                ("cell.cm", below(&p.cm, 1e-6)),
                ("cell.gleak", below(&p.gleak, 1e-5)),
                ("cell.sigma", below(&p.sigma, 1e-5)),
                ("cell.sensory_sigma", below(&p.sensory_sigma, 1e-5)),
            ]
            .into_iter()
            .find(|(_, bad)| *bad)
            .map(|(name, _)| name),
            CellParams::Ctrnn(p) if below(&p.tau, 1e-5) => Some("cell.tau"),
            _ => None,
        }
    }

    /// Total number of learnable scalars.
    pub fn count(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::config::Solver;

    #[test]
    fn same_seed_is_bitwise_identical() {
        for kind in CellKind::ALL {
            let c = CellConfig::new(kind, 4, 8, 2);
            let a = ModelParams::init(&c, 42).unwrap();
            let b = ModelParams::init(&c, 42).unwrap();
            for ((_, x), (_, y)) in a.named().iter().zip(b.named()) {
                let xb: Vec<u64> = x.data().iter().map(|v| v.to_bits()).collect();
                let yb: Vec<u64> = y.data().iter().map(|v| v.to_bits()).collect();
                assert_eq!(xb, yb);
            }
            let c2 = ModelParams::init(&c, 43).unwrap();
            assert_ne!(a, c2);
        }
    }

    #[test]
    fn ltc_init_ranges() {
        let c = CellConfig::new(CellKind::Ltc, 4, 8, 1);
        let p = ModelParams::init(&c, 0).unwrap();
        let CellParams::Ltc(l) = &p.cell else { unreachable!() };
        let within = |t: &Tensor, lo: f64, hi: f64| t.data().iter().all(|&v| v >= lo && v <= hi);
        assert!(within(&l.w, 0.001, 1.0) && within(&l.sensory_w, 0.001, 1.0));
        assert!(within(&l.sigma, 3.0, 8.0) && within(&l.sensory_sigma, 3.0, 8.0));
        assert!(within(&l.cm, 0.4, 0.6));
        assert!(within(&l.mu, 0.3, 0.8));
        assert!(within(&l.vleak, -0.2, 0.2));
        assert!(l.gleak.data().iter().all(|&v| v == 1.0));
        assert!(l.erev.data().iter().all(|&v| v == 1.0 || v == -1.0));
        assert_eq!(l.w.shape(), &[8, 8]);
        assert_eq!(l.sensory_w.shape(), &[4, 8]);
    }

    #[test]
    fn lstm_has_three_tensors() {
        let c = CellConfig::new(CellKind::Lstm, 4, 8, 1);
        let p = ModelParams::init(&c, 0).unwrap();
        let names: Vec<String> = p.named().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["cell.w", "cell.b", "readout"]);
        let CellParams::Lstm(l) = &p.cell else { unreachable!() };
        assert_eq!(l.w.shape(), &[12, 32]);
        assert_eq!(l.b.shape(), &[32]);
    }

    #[test]
    fn invalid_pair_rejected_at_init() {
        let c = CellConfig::new(CellKind::Ctrnn, 4, 8, 1).with_solver(Solver::Fused);
        assert!(ModelParams::init(&c, 0).is_err());
    }

    #[test]
    fn constrain_restores_positivity() {
        let c = CellConfig::new(CellKind::Ltc, 2, 3, 1);
        let mut p = ModelParams::init(&c, 1).unwrap();
        for (_, t) in p.named_mut() {
            for v in t.data_mut() {
                *v = -5.0;
            }
        }
        p.constrain();
        let CellParams::Ltc(l) = &p.cell else { unreachable!() };
        assert!(l.w.data().iter().all(|&v| v == 0.0));
        assert!(l.cm.data().iter().all(|&v| v == 1e-6));
        assert!(l.gleak.data().iter().all(|&v| v == 1e-5));
        assert!(l.sigma.data().iter().all(|&v| v == 1e-5));
        assert!(l.erev.data().iter().all(|&v| v == -5.0));
    }

    #[test]
    fn from_named_checks_shapes() {
        let c = CellConfig::new(CellKind::Gru, 2, 3, 1);
        let p = ModelParams::init(&c, 1).unwrap();
        let mut map: BTreeMap<String, Tensor> =
            p.named().into_iter().map(|(n, t)| (n, t.clone())).collect();
        assert_eq!(ModelParams::from_named(&c, map.clone()).unwrap(), p);
        map.insert("readout".into(), Tensor::zeros(&[2, 2]));
        assert!(ModelParams::from_named(&c, map).is_err());
    }
}
