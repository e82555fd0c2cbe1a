use crate::data::TargetKind;
use crate::error::{Error, Result};
use crate::numerics::{Graph, Tensor, Var};

fn check(b: usize, steps: usize, targets: &[f64]) -> Result<()> {
    if targets.len() != b * steps {
        return Err(Error::shape(
            "loss",
            format!("{} targets for {b} sequences of {steps} steps", targets.len()),
        ));
    }
    Ok(())
}

/// Mean per-step loss over a batch.
///
/// `outputs[t]` is the `[B×O]` readout of step `t`; `targets` is `[B×T]`
/// row-major. Classification uses softmax cross-entropy, regression squared
/// error.
pub fn sequence_loss(g: &mut Graph, outputs: &[Var], targets: &[f64], kind: TargetKind) -> Result<Var> {
    let Some(&first) = outputs.first() else {
        return Err(Error::shape("loss", "no steps"));
    };
    let (b, o) = (g.shape(first)[0], g.shape(first)[1]);
    let steps = outputs.len();
    check(b, steps, targets)?;
    if o != kind.output_size() {
        return Err(Error::shape(
            "loss",
            format!("readout width {o}, task needs {}", kind.output_size()),
        ));
    }
    let target_at = |row: usize, t: usize| targets[row * steps + t];
    let mut total: Option<Var> = None;
    for (t, &y) in outputs.iter().enumerate() {
        let term = match kind {
            TargetKind::Classes(c) => {
                let mut onehot = Tensor::zeros(&[b, c]);
                for row in 0..b {
                    onehot.data_mut()[row * c + target_at(row, t) as usize] = 1.0;
                }
                let onehot = g.constant(onehot);
                let logp = g.log_softmax(y, 1)?;
                let picked = g.mul(logp, onehot)?;
                g.sum(picked)?
            }
            TargetKind::Regression => {
                let target = g.constant(Tensor::from_fn(&[b, 1], |row| target_at(row, t)));
                let diff = g.sub(y, target)?;
                let sq = g.mul(diff, diff)?;
                g.sum(sq)?
            }
        };
        total = Some(match total {
            Some(acc) => g.add(acc, term)?,
            None => term,
        });
    }
    let scale = match kind {
        TargetKind::Classes(_) => -1.0,
        TargetKind::Regression => 1.0,
    } / (b * steps) as f64;
    g.scale(total.expect("at least one step"), scale)
}

/// [`sequence_loss`] on concrete `[B×T×O]` outputs.
pub fn loss_value(outputs: &Tensor, targets: &[f64], kind: TargetKind) -> Result<f64> {
    let mut g = Graph::new();
    let steps = split_steps(&mut g, outputs)?;
    let l = sequence_loss(&mut g, &steps, targets, kind)?;
    g.value(l).item()
}

fn split_steps(g: &mut Graph, outputs: &Tensor) -> Result<Vec<Var>> {
    if outputs.rank() != 3 {
        return Err(Error::shape("loss", format!("outputs must be [B×T×O], got {:?}", outputs.shape())));
    }
    let (b, steps, o) = (outputs.shape()[0], outputs.shape()[1], outputs.shape()[2]);
    Ok((0..steps)
        .map(|t| {
            let data = (0..b)
                .flat_map(|row| outputs.data()[(row * steps + t) * o..(row * steps + t + 1) * o].iter().copied())
                .collect();
            g.constant(Tensor::new(&[b, o], data).expect("consistent"))
        })
        .collect())
}

/// Running totals for accuracy or mean squared error.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricAccumulator {
    pub sum: f64,
    pub count: usize,
}

impl MetricAccumulator {
    /// Adds every step of `[B×T×O]` outputs.
    pub fn add(&mut self, outputs: &Tensor, targets: &[f64], kind: TargetKind) -> Result<()> {
        let (b, steps, o) = (outputs.shape()[0], outputs.shape()[1], outputs.shape()[2]);
        check(b, steps, targets)?;
        for (i, y) in outputs.data().chunks(o).enumerate() {
            let target = targets[i];
            self.sum += match kind {
                TargetKind::Classes(_) => {
                    let mut best = 0;
                    for (c, v) in y.iter().enumerate() {
                        if *v > y[best] {
                            best = c;
                        }
                    }
                    f64::from(u8::from(best == target as usize))
                }
                TargetKind::Regression => (y[0] - target).powi(2),
            };
        }
        self.count += b * steps;
        Ok(())
    }

    pub fn value(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }
}

/// Accuracy (classification) or mean squared error (regression).
pub fn metric(outputs: &Tensor, targets: &[f64], kind: TargetKind) -> Result<f64> {
    let mut acc = MetricAccumulator::default();
    acc.add(outputs, targets, kind)?;
    Ok(acc.value())
}
