use std::time::Instant;

use rayon::prelude::*;

use super::adam::{adam_step, AdamHyper, AdamState};
use super::config::{TestWeights, TrainConfig};
use super::loss::{sequence_loss, MetricAccumulator};
use crate::cells::{sequence_forward, stack_outputs, CellConfig, CellKind, Model};
use crate::data::{Dataset, SequenceSet, TargetKind};
use crate::error::{Error, Result};
use crate::numerics::rng::SplitMix64;
use crate::numerics::{Graph, Tensor};

/// Duration of one sample in solver time units.
pub const SAMPLE_DT: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` on epochs without validation.
    pub valid_metric: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub test_metric: f64,
    pub seconds: f64,
    /// Epoch whose weights scored best on validation; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
    /// Last epoch's training loss, or the untrained model's loss.
    pub final_train_loss: f64,
}

/// A finished run and the weights its test metric was computed with.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub model: Model,
}

/// Cell configuration for `kind` sized to the dataset and `config`.
pub fn cell_config_for(dataset: &Dataset, kind: CellKind, config: &TrainConfig) -> CellConfig {
    CellConfig::new(
        kind,
        dataset.spec.input_size(),
        config.hidden_units,
        dataset.spec.target_kind.output_size(),
    )
}

fn hyper(config: &TrainConfig) -> AdamHyper {
    AdamHyper {
        lr: config.learning_rate,
        beta1: config.beta1,
        beta2: config.beta2,
        epsilon: config.adam_epsilon,
    }
}

/// Forward, backward and one optimizer step on a minibatch; returns the loss.
pub fn train_batch(
    model: &mut Model,
    inputs: &Tensor,
    targets: &[f64],
    kind: TargetKind,
    adam: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<f64> {
    let mut g = Graph::new();
    let bound = model.bind(&mut g, true);
    let outputs = sequence_forward(&mut g, &bound, inputs, SAMPLE_DT)?;
    let loss = sequence_loss(&mut g, &outputs, targets, kind)?;
    let value = g.value(loss).item()?;
    if !value.is_finite() {
        return Err(Error::NonFinite { op: "loss".into() });
    }
    let grads = g.backward(loss)?;
    let grads: Vec<Tensor> = bound.params.named().into_iter().map(|(_, &v)| grads.get(v)).collect();
    let mut params: Vec<&mut Tensor> = model.params.named_mut().into_iter().map(|(_, t)| t).collect();
    adam_step(&mut params, &grads, adam, hyper)?;
    model.params.constrain();
    Ok(value)
}

/// One pass over `set` in the given window order; returns the mean loss.
pub fn train_epoch(
    model: &mut Model,
    set: &SequenceSet,
    order: &[usize],
    adam: &mut AdamState,
    config: &TrainConfig,
    kind: TargetKind,
) -> Result<f64> {
    let hyper = hyper(config);
    let mut total = 0.0;
    let mut count = 0;
    for (i, chunk) in order.chunks(config.minibatch).enumerate() {
        let batch = set.batch(chunk);
        let loss = train_batch(model, &batch.inputs, &batch.targets, kind, adam, &hyper).map_err(|e| match e {
            Error::NonFinite { op } => Error::Training {
                window: i,
                reason: format!("non-finite value in {op}"),
            },
            other => other,
        })?;
        total += loss * chunk.len() as f64;
        count += chunk.len();
    }
    Ok(if count == 0 { f64::NAN } else { total / count as f64 })
}

/// Mean loss and metric of `model` over every window of `set`.
pub fn evaluate(model: &Model, set: &SequenceSet, kind: TargetKind, batch: usize) -> Result<(f64, f64)> {
    let mut metric = MetricAccumulator::default();
    let mut loss_sum = 0.0;
    let indices: Vec<usize> = (0..set.len()).collect();
    for chunk in indices.chunks(batch.max(1)) {
        let b = set.batch(chunk);
        let mut g = Graph::new();
        let bound = model.bind(&mut g, false);
        let outputs = sequence_forward(&mut g, &bound, &b.inputs, SAMPLE_DT)?;
        let loss = sequence_loss(&mut g, &outputs, &b.targets, kind)?;
        loss_sum += g.value(loss).item()? * (chunk.len() * set.t) as f64;
        metric.add(&stack_outputs(&g, &outputs)?, &b.targets, kind)?;
    }
    let loss = if metric.count == 0 { f64::NAN } else { loss_sum / metric.count as f64 };
    Ok((loss, metric.value()))
}

fn improves(candidate: f64, best: Option<f64>, maximize: bool) -> bool {
    match best {
        None => !candidate.is_nan(),
        Some(b) if maximize => candidate > b,
        Some(b) => candidate < b,
    }
}

/// Trains one model from `seed` and scores it on the test split.
pub fn run(dataset: &Dataset, cell: &CellConfig, config: &TrainConfig, seed: u64) -> Result<RunOutcome> {
    config.validate()?;
    cell.validate()?;
    let start = Instant::now();
    let kind = dataset.spec.target_kind;
    let mut model = Model::init(cell.clone(), seed)?;
    let mut adam = AdamState::new(model.params.named().into_iter().map(|(_, t)| t));
    let mut shuffle = SplitMix64::for_stream(seed, "shuffle");
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Model)> = None;

    for epoch in 1..=config.epochs {
        shuffle.shuffle(&mut order);
        let train_loss = train_epoch(&mut model, &dataset.train, &order, &mut adam, config, kind)?;
        if let Some(name) = model.params.constraint_violation() {
            return Err(Error::Training {
                window: 0,
                reason: format!("{name} left its admissible range after epoch {epoch}"),
            });
        }
        let valid_metric = if epoch % config.eval_every == 0 {
            let (_, m) = evaluate(&model, &dataset.valid, kind, config.minibatch)?;
            if improves(m, best.as_ref().map(|b| b.0), kind.maximize()) {
                best = Some((m, epoch, model.clone()));
            }
            Some(m)
        } else {
            None
        };
        log::info!(
            "seed {seed} epoch {epoch}: train_loss {train_loss:.6} valid_{} {}",
            kind.metric_name(),
            valid_metric.map_or("-".to_string(), |m| format!("{m:.6}"))
        );
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            valid_metric,
        });
    }

    let best_epoch = best.as_ref().map(|b| b.1);
    let chosen = match (config.test_weights, best) {
        (TestWeights::BestValid, Some((_, _, m))) => m,
        _ => model,
    };
    let (_, test_metric) = evaluate(&chosen, &dataset.test, kind, config.minibatch)?;
    let final_train_loss = match epochs.last() {
        Some(e) => e.train_loss,
        None => evaluate(&chosen, &dataset.train, kind, config.minibatch)?.0,
    };
    Ok(RunOutcome {
        record: RunRecord {
            seed,
            epochs,
            test_metric,
            seconds: start.elapsed().as_secs_f64(),
            best_epoch,
            final_train_loss,
        },
        model: chosen,
    })
}

/// Mean and sample (n−1) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// One row of the summary CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub task: String,
    pub model: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub seeds: Vec<u64>,
}

pub fn summarize(task: &str, model: &str, metric_name: &str, records: &[RunRecord]) -> Vec<SummaryRow> {
    let seeds: Vec<u64> = records.iter().map(|r| r.seed).collect();
    let row = |metric: String, values: Vec<f64>| {
        let (mean, std) = mean_std(&values);
        SummaryRow {
            task: task.to_string(),
            model: model.to_string(),
            metric,
            mean,
            std,
            seeds: seeds.clone(),
        }
    };
    vec![
        row(format!("test_{metric_name}"), records.iter().map(|r| r.test_metric).collect()),
        row("final_train_loss".into(), records.iter().map(|r| r.final_train_loss).collect()),
    ]
}

#[derive(Clone, Debug)]
pub struct RepeatOutcome {
    /// In seed order.
    pub runs: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every seed of `config.seeds()` on at most `jobs` threads.
pub fn repeat_runs(dataset: &Dataset, cell: &CellConfig, config: &TrainConfig, jobs: usize) -> Result<RepeatOutcome> {
    let seeds = config.seeds();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<RunOutcome> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run(dataset, cell, config, s))
            .collect::<Result<_>>()
    })?;
    let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
    let summary = summarize(
        &config.task,
        cell.kind.name(),
        dataset.spec.target_kind.metric_name(),
        &records,
    );
    Ok(RepeatOutcome { runs, summary })
}
