//! Parameter-count formulas, actual tensor audits, per-step operation counts
//! and analytic training-memory accounting.

use std::io::Write;

use crate::cells::{sequence_forward, CellConfig, CellKind, Model, ModelParams, Solver};
use crate::error::{Error, Result};
use crate::numerics::{Graph, Tensor};
use crate::training::SAMPLE_DT;

/// Reference dimensions of the published parameter table.
pub const TABLE_DIMS: (u64, u64, u64) = (128, 8, 128);

/// Closed-form parameter count in `n`, `k` (and `m` for CT-GRU).
pub fn formula_params(kind: CellKind, n: u64, k: u64, m: Option<u64>) -> Result<u64> {
    if n == 0 || k == 0 {
        return Err(Error::Config("n and k must be at least 1".into()));
    }
    Ok(match kind {
        CellKind::Ctrnn => n * k * k + 2 * n * k,
        CellKind::Node => n * k * k + n * k,
        CellKind::Lstm => 4 * n * k * k + 4 * n * k,
        CellKind::Ctgru => {
            let m = m.ok_or_else(|| Error::Config("ctgru needs m (number of time scales)".into()))?;
            if m == 0 {
                return Err(Error::Config("m must be at least 1".into()));
            }
            2 * m * k * k + 2 * m * k + k * k + k
        }
        CellKind::Ltc => 4 * n * k * k + 3 * n * k,
        CellKind::Gru => return Err(Error::Config("no parameter formula is defined for gru".into())),
    })
}

/// Value printed in the published table at [`TABLE_DIMS`].
pub fn table1_printed(kind: CellKind) -> Option<u64> {
    match kind {
        CellKind::Ctrnn => Some(8_320),
        CellKind::Node => Some(8_192),
        CellKind::Lstm => Some(32_896),
        CellKind::Ctgru => Some(24_704),
        CellKind::Ltc => Some(32_896),
        CellKind::Gru => None,
    }
}

/// Learnable scalars per tensor, in canonical name order, and their total.
pub fn actual_params(config: &CellConfig) -> Result<(u64, Vec<(String, u64)>)> {
    let params = ModelParams::init(config, 0)?;
    let mut breakdown: Vec<(String, u64)> = params.named().into_iter().map(|(n, t)| (n, t.len() as u64)).collect();
    breakdown.sort();
    Ok((breakdown.iter().map(|(_, c)| c).sum(), breakdown))
}

/// Operation counts for one input sample at batch size one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepFlops {
    pub macs: u64,
    pub bias_adds: u64,
    pub activations: u64,
    pub elementwise: u64,
}

impl StepFlops {
    pub fn total(&self) -> u64 {
        self.macs + self.bias_adds + self.activations + self.elementwise
    }

    fn scaled(self, f: u64) -> Self {
        Self {
            macs: self.macs * f,
            bias_adds: self.bias_adds * f,
            activations: self.activations * f,
            elementwise: self.elementwise * f,
        }
    }

    fn plus_elementwise(mut self, e: u64) -> Self {
        self.elementwise += e;
        self
    }
}

/// Counts for the recurrent core only (no input mapping, no readout).
///
/// Continuous kinds count a naive evaluation of every term at each of the
/// `ode_unfolds` sub-steps; RK4 evaluates the right-hand side four times.
pub fn step_flops(config: &CellConfig) -> StepFlops {
    let (n, k) = (config.hidden_size as u64, config.input_size as u64);
    let m = config.ctgru_scales as u64;
    let unfolds = config.ode_unfolds as u64;
    let solve = |rhs: StepFlops| match config.solver {
        Solver::Rk4 => rhs.scaled(4).plus_elementwise(13 * n),
        _ => rhs.plus_elementwise(2 * n),
    };
    match config.kind {
        CellKind::Lstm => StepFlops {
            macs: 4 * n * (n + k),
            bias_adds: 4 * n,
            activations: 5 * n,
            elementwise: 4 * n,
        },
        CellKind::Gru => StepFlops {
            macs: 3 * n * (n + k),
            bias_adds: 3 * n,
            activations: 3 * n,
            elementwise: 4 * n,
        },
        CellKind::Ctrnn | CellKind::Node => {
            let decay = if config.kind == CellKind::Ctrnn { 2 * n } else { 0 };
            let rhs = StepFlops {
                macs: n * (n + k),
                bias_adds: n,
                activations: n,
                elementwise: decay,
            };
            solve(rhs).scaled(unfolds)
        }
        CellKind::Ltc => {
            let synapses = n * n + k * n;
            let gates = StepFlops {
                macs: 2 * synapses,
                bias_adds: 0,
                activations: synapses,
                elementwise: 3 * synapses,
            };
            let per_step = match config.solver {
                Solver::Fused => gates.plus_elementwise(7 * n),
                _ => solve(gates.plus_elementwise(7 * n)),
            };
            per_step.scaled(unfolds)
        }
        CellKind::Ctgru => {
            let gate = StepFlops {
                macs: n * (n + k),
                bias_adds: n,
                activations: m * n,
                elementwise: 4 * m * n,
            };
            StepFlops {
                macs: 2 * gate.macs + m * n + n * (n + k),
                bias_adds: 3 * n,
                activations: 2 * gate.activations + n,
                elementwise: 2 * gate.elementwise + 5 * m * n,
            }
            .scaled(unfolds)
        }
    }
}

/// Analytic training-memory breakdown at double precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FootprintReport {
    pub kind: CellKind,
    pub hidden_size: usize,
    pub input_size: usize,
    pub output_size: usize,
    pub ode_unfolds: usize,
    pub batch: usize,
    pub steps: usize,
    pub param_bytes: u64,
    /// Adam first and second moments.
    pub optimizer_bytes: u64,
    /// Values a backward pass keeps alive over one window.
    pub activation_bytes: u64,
    pub total_bytes: u64,
}

impl FootprintReport {
    pub fn parts_sum(&self) -> u64 {
        self.param_bytes + self.optimizer_bytes + self.activation_bytes
    }
}

fn recorded_values(model: &Model, steps: usize) -> Result<usize> {
    let mut g = Graph::new();
    let bound = model.bind(&mut g, true);
    let inputs = Tensor::zeros(&[1, steps, model.config.input_size]);
    sequence_forward(&mut g, &bound, &inputs, SAMPLE_DT)?;
    Ok(g.saved_values())
}

/// Intermediate values one sequence step records for backpropagation.
pub fn saved_values_per_step(config: &CellConfig) -> Result<u64> {
    let model = Model::init(config.clone(), 0)?;
    Ok((recorded_values(&model, 2)? - recorded_values(&model, 1)?) as u64)
}

pub fn memory_footprint(config: &CellConfig, batch: usize, steps: usize) -> Result<FootprintReport> {
    let (params, _) = actual_params(config)?;
    let per_step = saved_values_per_step(config)?;
    let param_bytes = params * 8;
    let optimizer_bytes = 2 * params * 8;
    let activation_bytes = batch as u64 * steps as u64 * per_step * 8;
    let report = FootprintReport {
        kind: config.kind,
        hidden_size: config.hidden_size,
        input_size: config.input_size,
        output_size: config.output_size,
        ode_unfolds: config.ode_unfolds,
        batch,
        steps,
        param_bytes,
        optimizer_bytes,
        activation_bytes,
        total_bytes: param_bytes + optimizer_bytes + activation_bytes,
    };
    debug_assert_eq!(report.total_bytes, report.parts_sum());
    Ok(report)
}

pub const BENCH_HEADER: [&str; 9] = [
    "kind",
    "n",
    "k",
    "m",
    "formula_count",
    "table1_printed",
    "actual_count",
    "flops_per_step",
    "total_bytes",
];

/// One line of the bench CSV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRow {
    pub kind: CellKind,
    pub n: usize,
    pub k: usize,
    pub m: Option<usize>,
    pub formula_count: Option<u64>,
    pub table1_printed: Option<u64>,
    pub actual_count: u64,
    pub flops_per_step: u64,
    pub total_bytes: u64,
}

impl BenchRow {
    /// Formula and printed table value are both known and disagree.
    pub fn discrepancy(&self) -> bool {
        matches!((self.formula_count, self.table1_printed), (Some(f), Some(p)) if f != p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchDims {
    pub n: usize,
    pub k: usize,
    pub m: Option<usize>,
    pub output: usize,
    pub batch: usize,
    pub steps: usize,
}

impl Default for BenchDims {
    fn default() -> Self {
        Self {
            n: 32,
            k: 8,
            m: None,
            output: 1,
            batch: 16,
            steps: 32,
        }
    }
}

/// `n` is the hidden size, `k` the input size and `m` the CT-GRU scale count.
pub fn bench_row(kind: CellKind, dims: BenchDims) -> Result<BenchRow> {
    if kind == CellKind::Ctgru && dims.m.is_none() {
        return Err(Error::Config("ctgru needs --m (number of time scales)".into()));
    }
    let mut config = CellConfig::new(kind, dims.k, dims.n, dims.output);
    if let Some(m) = dims.m {
        config.ctgru_scales = m;
    }
    config.validate()?;
    let formula_count = match kind {
        CellKind::Gru => None,
        _ => Some(formula_params(kind, dims.n as u64, dims.k as u64, dims.m.map(|m| m as u64))?),
    };
    let (t_n, t_k, t_m) = TABLE_DIMS;
    let at_table_dims =
        dims.n as u64 == t_n && dims.k as u64 == t_k && (kind != CellKind::Ctgru || dims.m == Some(t_m as usize));
    let (actual_count, _) = actual_params(&config)?;
    Ok(BenchRow {
        kind,
        n: dims.n,
        k: dims.k,
        m: if kind == CellKind::Ctgru { dims.m } else { None },
        formula_count,
        table1_printed: if at_table_dims { table1_printed(kind) } else { None },
        actual_count,
        flops_per_step: step_flops(&config).total(),
        total_bytes: memory_footprint(&config, dims.batch, dims.steps)?.total_bytes,
    })
}

/// The five tabulated kinds at the table's reference dimensions.
pub fn table1_report() -> Result<Vec<BenchRow>> {
    let (n, k, m) = TABLE_DIMS;
    [CellKind::Ctrnn, CellKind::Node, CellKind::Lstm, CellKind::Ctgru, CellKind::Ltc]
        .into_iter()
        .map(|kind| {
            bench_row(
                kind,
                BenchDims {
                    n: n as usize,
                    k: k as usize,
                    m: Some(m as usize),
                    ..BenchDims::default()
                },
            )
        })
        .collect()
}

pub fn write_bench_csv(rows: &[BenchRow], out: impl Write) -> Result<()> {
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.write_record([
            r.kind.name().to_string(),
            r.n.to_string(),
            r.k.to_string(),
            opt(r.m.map(|m| m as u64)),
            opt(r.formula_count),
            opt(r.table1_printed),
            r.actual_count.to_string(),
            r.flops_per_step.to_string(),
            r.total_bytes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
