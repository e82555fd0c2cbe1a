//! Arena-based reverse-mode automatic differentiation.
//!
//! A [`Graph`] records every operation of one forward pass as a node in a
//! flat arena. Nodes are appended in evaluation order, so the arena is
//! already topologically sorted and [`Graph::backward`] simply walks it in
//! reverse, visiting each operation once. Gradients from a tensor that fans
//! out to several consumers accumulate additively.
//!
//! Binary operations require equal shapes, except that either operand may
//! be a one-element tensor (scalar-with-tensor). All other broadcasting is
//! explicit through [`Graph::repeat`].

use crate::error::{Error, Result};

use super::tensor::{matmul_kernel, Tensor};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Nonlinearities available to the cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Tanh,
    Sigmoid,
    Relu,
    HardTanh,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [
        ActivationKind::Tanh,
        ActivationKind::Sigmoid,
        ActivationKind::Relu,
        ActivationKind::HardTanh,
    ];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Tanh => x.tanh(),
            ActivationKind::Sigmoid => sigmoid(x),
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::HardTanh => x.clamp(-1.0, 1.0),
        }
    }

    /// Derivative given input `x` and output `y`. Kinks use subgradient 0.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            ActivationKind::Tanh => 1.0 - y * y,
            ActivationKind::Sigmoid => y * (1.0 - y),
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::HardTanh => {
                if x > -1.0 && x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Relu => "relu",
            ActivationKind::HardTanh => "hard_tanh",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Copy, Debug)]
enum Binary {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug)]
enum Unary {
    Act(ActivationKind),
    Exp,
    Neg,
    Log,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Binary(Binary, Var, Var),
    Scale(Var, f64),
    Shift(Var),
    Unary(Unary, Var),
    MatMul(Var, Var),
    SumAll(Var),
    SumAxis(Var, usize),
    Repeat { src: Var, axis: usize },
    Reshape(Var),
    Concat(Var, Var),
    SliceCols { src: Var, start: usize },
    Softmax(Var, usize),
    LogSoftmax(Var, usize),
    SynapseSums(SynapseInputs),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Binary(Binary::Add, ..) => "add",
            Op::Binary(Binary::Sub, ..) => "sub",
            Op::Binary(Binary::Mul, ..) => "mul",
            Op::Binary(Binary::Div, ..) => "div",
            Op::Scale(..) => "scale",
            Op::Shift(..) => "shift",
            Op::Unary(Unary::Act(a), _) => a.name(),
            Op::Unary(Unary::Exp, _) => "exp",
            Op::Unary(Unary::Neg, _) => "neg",
            Op::Unary(Unary::Log, _) => "log",
            Op::MatMul(..) => "matmul",
            Op::SumAll(_) => "sum",
            Op::SumAxis(..) => "sum_axis",
            Op::Repeat { .. } => "repeat",
            Op::Reshape(_) => "reshape",
            Op::Concat(..) => "concat",
            Op::SliceCols { .. } => "slice_cols",
            Op::Softmax(..) => "softmax",
            Op::LogSoftmax(..) => "log_softmax",
            Op::SynapseSums(_) => "synapse_sums",
        }
    }
}

/// Operands of the batched synapse reduction, all `[P×N]` except `pre`.
#[derive(Clone, Copy, Debug)]
pub struct SynapseInputs {
    pub pre: Var,
    pub weight: Var,
    pub erev: Var,
    pub mu: Var,
    pub sigma: Var,
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Recording of one forward pass.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    checked: bool,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// A graph that scans every produced tensor for NaN/Inf.
    pub fn checked() -> Self {
        Self {
            nodes: Vec::new(),
            checked: true,
        }
    }

    pub fn set_checked(&mut self, checked: bool) {
        self.checked = checked;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of values held by non-leaf nodes, i.e. what a backward pass
    /// keeps alive beyond the parameters and inputs.
    pub fn saved_values(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| !matches!(n.op, Op::Leaf))
            .map(|n| n.value.len())
            .sum()
    }

    /// Leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, false)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.constant(Tensor::scalar(value))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push_leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Result<Var> {
        if self.checked && !value.is_finite() {
            return Err(Error::NonFinite {
                op: op.name().to_string(),
            });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn binary(&mut self, kind: Binary, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let f = |x: f64, y: f64| match kind {
            Binary::Add => x + y,
            Binary::Sub => x - y,
            Binary::Mul => x * y,
            Binary::Div => x / y,
        };
        let value = if ta.shape() == tb.shape() {
            let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
            Tensor::new(ta.shape(), data)?
        } else if tb.len() == 1 {
            let y = tb.data()[0];
            ta.map(|x| f(x, y))
        } else if ta.len() == 1 {
            let x = ta.data()[0];
            tb.map(|y| f(x, y))
        } else {
            return Err(Error::shape(
                "elementwise",
                format!("{:?} vs {:?}", ta.shape(), tb.shape()),
            ));
        };
        self.push(value, Op::Binary(kind, a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Mul, a, b)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Div, a, b)
    }

    /// `x * c` for a fixed real `c`.
    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let value = self.value(x).map(|v| v * c);
        self.push(value, Op::Scale(x, c), &[x])
    }

    /// `x + c` for a fixed real `c`.
    pub fn shift(&mut self, x: Var, c: f64) -> Result<Var> {
        let value = self.value(x).map(|v| v + c);
        self.push(value, Op::Shift(x), &[x])
    }

    fn unary(&mut self, kind: Unary, x: Var) -> Result<Var> {
        let value = match kind {
            Unary::Act(a) => self.value(x).map(|v| a.apply(v)),
            Unary::Exp => self.value(x).map(f64::exp),
            Unary::Neg => self.value(x).map(|v| -v),
            Unary::Log => self.value(x).map(f64::ln),
        };
        self.push(value, Op::Unary(kind, x), &[x])
    }

    pub fn activation(&mut self, kind: ActivationKind, x: Var) -> Result<Var> {
        self.unary(Unary::Act(kind), x)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.activation(ActivationKind::Tanh, x)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.activation(ActivationKind::Sigmoid, x)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.activation(ActivationKind::Relu, x)
    }

    pub fn hard_tanh(&mut self, x: Var) -> Result<Var> {
        self.activation(ActivationKind::HardTanh, x)
    }

    pub fn exp(&mut self, x: Var) -> Result<Var> {
        self.unary(Unary::Exp, x)
    }

    pub fn neg(&mut self, x: Var) -> Result<Var> {
        self.unary(Unary::Neg, x)
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        self.unary(Unary::Log, x)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(Error::shape(
                "matmul",
                format!("cannot multiply {:?} by {:?}", ta.shape(), tb.shape()),
            ));
        }
        let (m, p, q) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let data = matmul_kernel(ta.data(), tb.data(), m, p, q);
        let value = Tensor::new(&[m, q], data)?;
        self.push(value, Op::MatMul(a, b), &[a, b])
    }

    /// Sum of all elements, as a rank-0 tensor.
    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let value = Tensor::scalar(self.value(x).data().iter().sum());
        self.push(value, Op::SumAll(x), &[x])
    }

    /// Sum along `axis`, removing it from the shape.
    pub fn sum_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        let t = self.value(x);
        if axis >= t.rank() {
            return Err(Error::shape(
                "sum_axis",
                format!("axis {axis} out of range for rank {}", t.rank()),
            ));
        }
        let (outer, extent, inner) = t.axis_split(axis);
        let mut out = vec![0.0; outer * inner];
        let d = t.data();
        for o in 0..outer {
            for a in 0..extent {
                let base = (o * extent + a) * inner;
                for i in 0..inner {
                    out[o * inner + i] += d[base + i];
                }
            }
        }
        let mut shape = t.shape().to_vec();
        shape.remove(axis);
        let value = Tensor::new(&shape, out)?;
        self.push(value, Op::SumAxis(x, axis), &[x])
    }

    /// Inserts a new axis at position `axis` holding `count` copies of `x`.
    pub fn repeat(&mut self, x: Var, axis: usize, count: usize) -> Result<Var> {
        let t = self.value(x);
        if axis > t.rank() {
            return Err(Error::shape(
                "repeat",
                format!("axis {axis} out of range for rank {}", t.rank()),
            ));
        }
        let outer: usize = t.shape()[..axis].iter().product();
        let inner: usize = t.shape()[axis..].iter().product();
        let d = t.data();
        let mut out = Vec::with_capacity(outer * count * inner);
        for o in 0..outer {
            let block = &d[o * inner..(o + 1) * inner];
            for _ in 0..count {
                out.extend_from_slice(block);
            }
        }
        let mut shape = t.shape().to_vec();
        shape.insert(axis, count);
        let value = Tensor::new(&shape, out)?;
        self.push(value, Op::Repeat { src: x, axis }, &[x])
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).reshape(shape)?;
        self.push(value, Op::Reshape(x), &[x])
    }

    /// Concatenates two matrices along columns.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[0] != tb.shape()[0] {
            return Err(Error::shape(
                "concat",
                format!("{:?} and {:?}", ta.shape(), tb.shape()),
            ));
        }
        let (rows, ca, cb) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let mut out = Vec::with_capacity(rows * (ca + cb));
        for r in 0..rows {
            out.extend_from_slice(&ta.data()[r * ca..(r + 1) * ca]);
            out.extend_from_slice(&tb.data()[r * cb..(r + 1) * cb]);
        }
        let value = Tensor::new(&[rows, ca + cb], out)?;
        self.push(value, Op::Concat(a, b), &[a, b])
    }

    /// Columns `start..start + width` of a matrix.
    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Result<Var> {
        let t = self.value(x);
        if t.rank() != 2 || start + width > t.shape()[1] {
            return Err(Error::shape(
                "slice_cols",
                format!("columns {start}..{} of {:?}", start + width, t.shape()),
            ));
        }
        let (rows, cols) = (t.shape()[0], t.shape()[1]);
        let mut out = Vec::with_capacity(rows * width);
        for r in 0..rows {
            out.extend_from_slice(&t.data()[r * cols + start..r * cols + start + width]);
        }
        let value = Tensor::new(&[rows, width], out)?;
        self.push(value, Op::SliceCols { src: x, start }, &[x])
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let value = softmax_along(self.value(x), axis, false)?;
        self.push(value, Op::Softmax(x, axis), &[x])
    }

    pub fn log_softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let value = softmax_along(self.value(x), axis, true)?;
        self.push(value, Op::LogSoftmax(x, axis), &[x])
    }

    /// Conductance-weighted synapse reduction over presynaptic units.
    ///
    /// For `pre: [B×P]` and `[P×N]` synapse tensors, computes the activation
    /// `a[b,p,n] = weight[p,n] · sigmoid(sigma[p,n] · (pre[b,p] − mu[p,n]))` and
    /// returns `[B×2N]`: columns `0..N` hold `Σ_p a·erev`, columns `N..2N`
    /// hold `Σ_p a`.
    pub fn synapse_sums(&mut self, s: SynapseInputs) -> Result<Var> {
        let pre = self.value(s.pre);
        let w = self.value(s.weight);
        if pre.rank() != 2 || w.rank() != 2 || pre.shape()[1] != w.shape()[0] {
            return Err(Error::shape(
                "synapse_sums",
                format!("pre {:?} vs synapses {:?}", pre.shape(), w.shape()),
            ));
        }
        for other in [s.erev, s.mu, s.sigma] {
            if self.value(other).shape() != w.shape() {
                return Err(Error::shape(
                    "synapse_sums",
                    format!("{:?} vs {:?}", self.value(other).shape(), w.shape()),
                ));
            }
        }
        let (batch, p_len, n) = (pre.shape()[0], pre.shape()[1], w.shape()[1]);
        let (erev, mu, sigma) = (
            self.value(s.erev).data(),
            self.value(s.mu).data(),
            self.value(s.sigma).data(),
        );
        let (pre, w) = (pre.data(), w.data());
        let mut out = vec![0.0; batch * 2 * n];
        for b in 0..batch {
            let (num, den) = out[b * 2 * n..(b + 1) * 2 * n].split_at_mut(n);
            for p in 0..p_len {
                let x = pre[b * p_len + p];
                let row = p * n..(p + 1) * n;
                let (wr, er, mr, sr) = (&w[row.clone()], &erev[row.clone()], &mu[row.clone()], &sigma[row]);
                for j in 0..n {
                    let a = wr[j] * sigmoid(sr[j] * (x - mr[j]));
                    num[j] += a * er[j];
                    den[j] += a;
                }
            }
        }
        let value = Tensor::new(&[batch, 2 * n], out)?;
        self.push(
            value,
            Op::SynapseSums(s),
            &[s.pre, s.weight, s.erev, s.mu, s.sigma],
        )
    }

    /// Reverse pass from a scalar `loss`.
    ///
    /// Every node that requires a gradient and is reachable from `loss` gets
    /// one; unreachable parameters read back as zeros via [`Gradients::get`].
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.len() != 1 {
            return Err(Error::shape(
                "backward",
                format!("loss must be scalar, got shape {:?}", lt.shape()),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::ones(lt.shape()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &g, &mut grads)?;
            grads[idx] = Some(g);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let target = self.value(v);
        // scalar operand broadcast against a larger tensor
        let g = if g.len() != target.len() {
            Tensor::full(target.shape(), g.data().iter().sum())
        } else if g.shape() != target.shape() {
            Tensor::new(target.shape(), g.into_data()).expect("same length")
        } else {
            g
        };
        match &mut grads[v.0] {
            Some(acc) => {
                for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                    *a += b;
                }
            }
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let node = &self.nodes[idx];
        let y = &node.value;
        match node.op {
            Op::Leaf => {}
            Op::Binary(kind, a, b) => {
                let (ta, tb) = (self.value(a), self.value(b));
                let at = |t: &Tensor, i: usize| if t.len() == 1 { t.data()[0] } else { t.data()[i] };
                let n = g.len();
                let gd = g.data();
                let (ga, gb): (Vec<f64>, Vec<f64>) = match kind {
                    Binary::Add => (gd.to_vec(), gd.to_vec()),
                    Binary::Sub => (gd.to_vec(), gd.iter().map(|v| -v).collect()),
                    Binary::Mul => (
                        (0..n).map(|i| gd[i] * at(tb, i)).collect(),
                        (0..n).map(|i| gd[i] * at(ta, i)).collect(),
                    ),
                    Binary::Div => (
                        (0..n).map(|i| gd[i] / at(tb, i)).collect(),
                        (0..n)
                            .map(|i| {
                                let d = at(tb, i);
                                -gd[i] * at(ta, i) / (d * d)
                            })
                            .collect(),
                    ),
                };
                self.accumulate(grads, a, Tensor::new(g.shape(), ga)?);
                self.accumulate(grads, b, Tensor::new(g.shape(), gb)?);
            }
            Op::Scale(x, c) => self.accumulate(grads, x, g.map(|v| v * c)),
            Op::Shift(x) => self.accumulate(grads, x, g.clone()),
            Op::Unary(kind, x) => {
                let xv = self.value(x).data();
                let data = g
                    .data()
                    .iter()
                    .zip(xv)
                    .zip(y.data())
                    .map(|((&gv, &xi), &yi)| {
                        gv * match kind {
                            Unary::Act(a) => a.derivative(xi, yi),
                            Unary::Exp => yi,
                            Unary::Neg => -1.0,
                            Unary::Log => 1.0 / xi,
                        }
                    })
                    .collect();
                self.accumulate(grads, x, Tensor::new(g.shape(), data)?);
            }
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(a), self.value(b));
                let (m, p, q) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                if self.nodes[a.0].requires_grad {
                    // g[m×q] · bᵀ[q×p]
                    let mut ga = vec![0.0; m * p];
                    for i in 0..m {
                        for k in 0..p {
                            let brow = &tb.data()[k * q..(k + 1) * q];
                            let grow = &g.data()[i * q..(i + 1) * q];
                            ga[i * p + k] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                        }
                    }
                    self.accumulate(grads, a, Tensor::new(&[m, p], ga)?);
                }
                if self.nodes[b.0].requires_grad {
                    // aᵀ[p×m] · g[m×q]
                    let mut gb = vec![0.0; p * q];
                    for i in 0..m {
                        let grow = &g.data()[i * q..(i + 1) * q];
                        for k in 0..p {
                            let aik = ta.data()[i * p + k];
                            for (o, gv) in gb[k * q..(k + 1) * q].iter_mut().zip(grow) {
                                *o += aik * gv;
                            }
                        }
                    }
                    self.accumulate(grads, b, Tensor::new(&[p, q], gb)?);
                }
            }
            Op::SumAll(x) => {
                let gv = g.data()[0];
                self.accumulate(grads, x, Tensor::full(self.shape(x), gv));
            }
            Op::SumAxis(x, axis) => {
                let src = self.value(x);
                let (outer, extent, inner) = src.axis_split(axis);
                let mut out = Vec::with_capacity(src.len());
                for o in 0..outer {
                    for _ in 0..extent {
                        out.extend_from_slice(&g.data()[o * inner..(o + 1) * inner]);
                    }
                }
                self.accumulate(grads, x, Tensor::new(src.shape(), out)?);
            }
            Op::Repeat { src, axis } => {
                let (outer, extent, inner) = y.axis_split(axis);
                let mut out = vec![0.0; outer * inner];
                for o in 0..outer {
                    for a in 0..extent {
                        let base = (o * extent + a) * inner;
                        for i in 0..inner {
                            out[o * inner + i] += g.data()[base + i];
                        }
                    }
                }
                self.accumulate(grads, src, Tensor::new(self.shape(src), out)?);
            }
            Op::Reshape(x) => {
                self.accumulate(grads, x, g.reshape(self.shape(x))?);
            }
            Op::Concat(a, b) => {
                let (ca, cb) = (self.shape(a)[1], self.shape(b)[1]);
                let rows = y.shape()[0];
                let mut ga = Vec::with_capacity(rows * ca);
                let mut gb = Vec::with_capacity(rows * cb);
                for r in 0..rows {
                    let row = &g.data()[r * (ca + cb)..(r + 1) * (ca + cb)];
                    ga.extend_from_slice(&row[..ca]);
                    gb.extend_from_slice(&row[ca..]);
                }
                self.accumulate(grads, a, Tensor::new(&[rows, ca], ga)?);
                self.accumulate(grads, b, Tensor::new(&[rows, cb], gb)?);
            }
            Op::SliceCols { src, start } => {
                let shape = self.shape(src).to_vec();
                let (rows, cols, width) = (shape[0], shape[1], y.shape()[1]);
                let mut out = vec![0.0; rows * cols];
                for r in 0..rows {
                    out[r * cols + start..r * cols + start + width]
                        .copy_from_slice(&g.data()[r * width..(r + 1) * width]);
                }
                self.accumulate(grads, src, Tensor::new(&shape, out)?);
            }
            Op::Softmax(x, axis) => {
                let (outer, extent, inner) = y.axis_split(axis);
                let (yd, gd) = (y.data(), g.data());
                let mut out = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |a: usize| (o * extent + a) * inner + i;
                        let dot: f64 = (0..extent).map(|a| gd[at(a)] * yd[at(a)]).sum();
                        for a in 0..extent {
                            out[at(a)] = yd[at(a)] * (gd[at(a)] - dot);
                        }
                    }
                }
                self.accumulate(grads, x, Tensor::new(y.shape(), out)?);
            }
            Op::LogSoftmax(x, axis) => {
                let (outer, extent, inner) = y.axis_split(axis);
                let (yd, gd) = (y.data(), g.data());
                let mut out = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |a: usize| (o * extent + a) * inner + i;
                        let total: f64 = (0..extent).map(|a| gd[at(a)]).sum();
                        for a in 0..extent {
                            out[at(a)] = gd[at(a)] - yd[at(a)].exp() * total;
                        }
                    }
                }
                self.accumulate(grads, x, Tensor::new(y.shape(), out)?);
            }
            Op::SynapseSums(s) => self.synapse_backward(s, g, grads)?,
        }
        Ok(())
    }

    fn synapse_backward(&self, s: SynapseInputs, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let pre_t = self.value(s.pre);
        let (batch, p_len) = (pre_t.shape()[0], pre_t.shape()[1]);
        let n = self.shape(s.weight)[1];
        let pre = pre_t.data();
        let w = self.value(s.weight).data();
        let erev = self.value(s.erev).data();
        let mu = self.value(s.mu).data();
        let sigma = self.value(s.sigma).data();

        let mut d_pre = vec![0.0; batch * p_len];
        let mut d_w = vec![0.0; p_len * n];
        let mut d_erev = vec![0.0; p_len * n];
        let mut d_mu = vec![0.0; p_len * n];
        let mut d_sigma = vec![0.0; p_len * n];

        for b in 0..batch {
            let grow = &g.data()[b * 2 * n..(b + 1) * 2 * n];
            let (g_num, g_den) = grow.split_at(n);
            for p in 0..p_len {
                let x = pre[b * p_len + p];
                let mut acc_pre = 0.0;
                for j in 0..n {
                    let k = p * n + j;
                    let centered = x - mu[k];
                    let gate = sigmoid(sigma[k] * centered);
                    let a = w[k] * gate;
                    let d_a = g_num[j] * erev[k] + g_den[j];
                    d_erev[k] += g_num[j] * a;
                    d_w[k] += d_a * gate;
                    let dz = d_a * w[k] * gate * (1.0 - gate);
                    d_sigma[k] += dz * centered;
                    d_mu[k] -= dz * sigma[k];
                    acc_pre += dz * sigma[k];
                }
                d_pre[b * p_len + p] += acc_pre;
            }
        }
        let syn_shape = [p_len, n];
        self.accumulate(grads, s.pre, Tensor::new(&[batch, p_len], d_pre)?);
        self.accumulate(grads, s.weight, Tensor::new(&syn_shape, d_w)?);
        self.accumulate(grads, s.erev, Tensor::new(&syn_shape, d_erev)?);
        self.accumulate(grads, s.mu, Tensor::new(&syn_shape, d_mu)?);
        self.accumulate(grads, s.sigma, Tensor::new(&syn_shape, d_sigma)?);
        Ok(())
    }
}

fn softmax_along(t: &Tensor, axis: usize, log: bool) -> Result<Tensor> {
    if axis >= t.rank() {
        return Err(Error::shape(
            "softmax",
            format!("axis {axis} out of range for rank {}", t.rank()),
        ));
    }
    let (outer, extent, inner) = t.axis_split(axis);
    let d = t.data();
    let mut out = vec![0.0; t.len()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |a: usize| (o * extent + a) * inner + i;
            let max = (0..extent).map(|a| d[at(a)]).fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = (0..extent).map(|a| (d[at(a)] - max).exp()).sum();
            let lse = max + total.ln();
            for a in 0..extent {
                out[at(a)] = if log {
                    d[at(a)] - lse
                } else {
                    (d[at(a)] - max).exp() / total
                };
            }
        }
    }
    Tensor::new(t.shape(), out)
}

/// Result of [`Graph::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for `v`, or zeros when `v` did not influence the loss.
    pub fn get(&self, v: Var) -> Tensor {
        self.try_get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[v.0]))
    }

    pub fn try_get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}
