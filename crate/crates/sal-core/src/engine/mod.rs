//! The training engine: direct and guidance phases, the outer-step loop,
//! the plain baseline, early stopping, and the time-matched comparison.
//!
//! One outer step runs, literally:
//!
//! ```text
//! for f = F−1 down to 1 {
//!     train floor f+1 on labels for t epochs (CE);
//!     for r epochs, per mini-batch: store floor f+1's hidden/output
//!     values and train floor f against them (MSE);
//! }
//! train floor 1 on labels for t epochs (CE);
//! ```
//!
//! Floor 1 is evaluated on the validation split after every step and the
//! best checkpoint is kept in memory. The plain baseline is the identical
//! floor-1 architecture trained on labels alone, evaluated per epoch.

mod clock;
mod config;
mod history;

pub use clock::{Clock, RealClock, VirtualClock};
pub use config::{Monitor, TrainConfig};
pub use history::{
    BestCheckpoint, FloorLoss, Method, PhaseKind, PhaseRecord, PhaseTag, RunHistory, RunRecord,
    StepRecord, UnitKind,
};

use ndarray::Array2;

use crate::data::{batch_plan, Dataset};
use crate::floors::{extract_targets, guidance_head, map_layers, FloorStack, GuidanceMapping};
use crate::nn::{backward, loss, softmax, BackwardSignal, Network, Optimizer};
use crate::rng;
use crate::{Error, Result};

/// Train/validation/test triple with consistent dimensions.
#[derive(Debug, Clone)]
pub struct DataSplits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl DataSplits {
    pub fn validate(&self) -> Result<()> {
        let d = self.train.in_dim();
        let n = self.train.n_classes();
        for (name, ds) in [("val", &self.val), ("test", &self.test)] {
            if ds.in_dim() != d || ds.n_classes() != n {
                return Err(Error::Data(format!(
                    "{name} split dimensions ({}, {}) do not match train ({d}, {n})",
                    ds.in_dim(),
                    ds.n_classes()
                )));
            }
        }
        Ok(())
    }
}

/// Hook invoked after each evaluation unit with the monitored model.
pub trait UnitObserver {
    fn on_unit(&mut self, unit_index: u32, model: &Network) -> Result<()>;
}

/// Observer that does nothing.
pub struct NoopObserver;

impl UnitObserver for NoopObserver {
    fn on_unit(&mut self, _unit_index: u32, _model: &Network) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalResult {
    pub accuracy: f64,
    pub mean_ce: f64,
}

/// Accuracy and mean CE over a dataset, in fixed-size chunks.
pub fn evaluate(net: &Network, ds: &Dataset) -> Result<EvalResult> {
    let m = ds.len();
    let mut correct = 0usize;
    let mut total_loss = 0.0;
    let chunk = 512;
    let indices: Vec<usize> = (0..m).collect();
    for batch in indices.chunks(chunk) {
        let (x, y) = ds.gather(batch);
        let trace = net.forward(&x)?;
        for ((logit_row, y_row), &i) in
            trace.logits.outer_iter().zip(y.outer_iter()).zip(batch.iter())
        {
            let (l, _) = loss::softmax_ce(logit_row, y_row)?;
            total_loss += l;
            if argmax(logit_row.as_slice().expect("contiguous")) == ds.labels()[i] {
                correct += 1;
            }
        }
    }
    Ok(EvalResult { accuracy: correct as f64 / m as f64, mean_ce: total_loss / m as f64 })
}

/// Per-class probability scores (softmax of logits) for metric reports.
pub fn score_matrix(net: &Network, ds: &Dataset) -> Result<Array2<f64>> {
    let m = ds.len();
    let mut scores = Array2::zeros((m, ds.n_classes()));
    let indices: Vec<usize> = (0..m).collect();
    for batch in indices.chunks(512) {
        let (x, _) = ds.gather(batch);
        let trace = net.forward(&x)?;
        for (row, &i) in trace.logits.outer_iter().zip(batch.iter()) {
            scores.row_mut(i).assign(&softmax(row));
        }
    }
    Ok(scores)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mini-batch CE training for `epochs` epochs; returns each epoch's mean
/// loss. Optimizer state persists in `opt` across calls.
pub fn train_direct(
    net: &mut Network,
    opt: &mut Optimizer,
    data: &Dataset,
    epochs: usize,
    batch_size: usize,
    shuffle_seed: u64,
    epoch_counter: &mut u64,
    clock: &mut dyn Clock,
) -> Result<Vec<f64>> {
    let m = data.len();
    let mut per_epoch = Vec::with_capacity(epochs);
    clock.phase_start();
    for _ in 0..epochs {
        let plan = batch_plan(m, batch_size, shuffle_seed, *epoch_counter)?;
        *epoch_counter += 1;
        let mut total = 0.0;
        for indices in &plan {
            let (x, y) = data.gather(indices);
            let trace = net.forward(&x)?;
            let (batch_loss, grad) = loss::ce_head(&trace.logits, &y)?;
            let grads =
                backward(net, &trace, &BackwardSignal::output_only(grad, net.depth() - 1))?;
            opt.step(net, &grads)?;
            clock.on_optimizer_step();
            total += batch_loss * indices.len() as f64;
        }
        per_epoch.push(total / m as f64);
    }
    clock.phase_end();
    Ok(per_epoch)
}

/// Guidance training: for each of `epochs` epochs and each mini-batch, run
/// the frozen upper network forward, store its hidden/output values, and
/// take one optimizer step on the lower network against the multi-layer MSE
/// head. Returns each epoch's mean guidance loss.
pub fn train_guided(
    lower: &mut Network,
    opt: &mut Optimizer,
    upper: &Network,
    mapping: &GuidanceMapping,
    data: &Dataset,
    epochs: usize,
    batch_size: usize,
    shuffle_seed: u64,
    epoch_counter: &mut u64,
    clock: &mut dyn Clock,
) -> Result<Vec<f64>> {
    let m = data.len();
    let mut per_epoch = Vec::with_capacity(epochs);
    clock.phase_start();
    for _ in 0..epochs {
        let plan = batch_plan(m, batch_size, shuffle_seed, *epoch_counter)?;
        *epoch_counter += 1;
        let mut total = 0.0;
        for indices in &plan {
            let (x, _) = data.gather(indices);
            let targets = extract_targets(&upper.forward(&x)?, mapping)?;
            let trace = lower.forward(&x)?;
            let (gl, signal) = guidance_head(&trace, &targets, mapping)?;
            let grads = backward(lower, &trace, &signal)?;
            opt.step(lower, &grads)?;
            clock.on_optimizer_step();
            total += gl.total * indices.len() as f64;
        }
        per_epoch.push(total / m as f64);
    }
    clock.phase_end();
    Ok(per_epoch)
}

/// One outer step over the whole stack; see the module docs for the exact
/// phase order.
pub fn run_sal_step(
    stack: &mut FloorStack,
    opts: &mut [Optimizer],
    train: &Dataset,
    cfg: &TrainConfig,
    shuffle_seed: u64,
    epoch_counter: &mut u64,
    clock: &mut dyn Clock,
) -> Result<StepRecord> {
    let floor_count = stack.floor_count();
    let mut phases = Vec::with_capacity(2 * floor_count.saturating_sub(1) + 1);
    for f in (1..floor_count).rev() {
        let upper_floor = stack.get_mut(f + 1);
        let losses = train_direct(
            &mut upper_floor.net,
            &mut opts[f],
            train,
            cfg.t,
            cfg.batch_size,
            shuffle_seed,
            epoch_counter,
            clock,
        )?;
        phases.push(PhaseRecord { floor: f + 1, kind: PhaseKind::Direct, epoch_losses: losses });

        let (lower_floor, upper_floor) = stack.lower_and_upper(f);
        let mapping = map_layers(&upper_floor.spec, &lower_floor.spec)?;
        let losses = train_guided(
            &mut lower_floor.net,
            &mut opts[f - 1],
            &upper_floor.net,
            &mapping,
            train,
            cfg.r,
            cfg.batch_size,
            shuffle_seed,
            epoch_counter,
            clock,
        )?;
        phases.push(PhaseRecord { floor: f, kind: PhaseKind::Guide, epoch_losses: losses });
    }
    let bottom = stack.get_mut(1);
    let losses = train_direct(
        &mut bottom.net,
        &mut opts[0],
        train,
        cfg.t,
        cfg.batch_size,
        shuffle_seed,
        epoch_counter,
        clock,
    )?;
    phases.push(PhaseRecord { floor: 1, kind: PhaseKind::Direct, epoch_losses: losses });
    Ok(StepRecord { phases })
}

/// A finished run: full history plus the best-checkpoint parameters of the
/// monitored model.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub history: RunHistory,
    pub best_net: Network,
}

fn monitored_value(cfg: &TrainConfig, val: &EvalResult) -> f64 {
    match cfg.monitor {
        Monitor::ValAccuracy => val.accuracy,
        // negated so "greater is better" holds for both monitors
        Monitor::ValLoss => -val.mean_ce,
    }
}

/// Hierarchical run with early stopping; see [`run_sal_observed`].
pub fn run_sal(cfg: &TrainConfig, splits: &DataSplits, clock: &mut dyn Clock) -> Result<RunOutput> {
    run_sal_observed(cfg, splits, clock, &mut NoopObserver)
}

/// Hierarchical run: up to `s_max` outer steps, evaluating floor 1 after
/// each and stopping once the monitored metric fails to improve for
/// `patience` consecutive steps.
pub fn run_sal_observed(
    cfg: &TrainConfig,
    splits: &DataSplits,
    clock: &mut dyn Clock,
    observer: &mut dyn UnitObserver,
) -> Result<RunOutput> {
    cfg.validate()?;
    splits.validate()?;
    let mut stack = FloorStack::build(
        cfg.base_depth,
        cfg.base_width,
        cfg.floors,
        splits.train.in_dim(),
        splits.train.n_classes(),
        cfg.activation,
        rng::derive(cfg.seed, "stack"),
    )?;
    let mut opts: Vec<Optimizer> =
        (0..cfg.floors).map(|_| Optimizer::new(cfg.optimizer, cfg.lr)).collect();
    let shuffle_seed = rng::derive(cfg.seed, "shuffle");
    let mut epoch_counter = 0u64;

    let mut records = Vec::new();
    let mut step_phases = Vec::new();
    let mut best: Option<(f64, BestCheckpoint, Network)> = None;
    let mut fails = 0usize;
    let mut stopped_early = false;

    for step in 1..=cfg.s_max as u32 {
        let rec =
            run_sal_step(&mut stack, &mut opts, &splits.train, cfg, shuffle_seed, &mut epoch_counter, clock)?;
        step_phases.push(rec.tags());

        let floor1 = &stack.get(1).net;
        let val = evaluate(floor1, &splits.val)?;
        let test = evaluate(floor1, &splits.test)?;
        let train_loss = rec
            .phases
            .last()
            .map(PhaseRecord::final_loss)
            .expect("step has at least the bottom direct phase");
        records.push(RunRecord {
            unit_index: step,
            wall_clock_s: clock.elapsed_s(),
            train_loss,
            val_acc: val.accuracy,
            val_loss: val.mean_ce,
            test_acc: test.accuracy,
            floor_losses: rec
                .phases
                .iter()
                .map(|p| FloorLoss { floor: p.floor, kind: p.kind, loss: p.final_loss() })
                .collect(),
        });
        observer.on_unit(step, floor1)?;

        let value = monitored_value(cfg, &val);
        let improved = best.as_ref().map_or(true, |(b, _, _)| value > *b);
        if improved {
            best = Some((
                value,
                BestCheckpoint {
                    unit_index: step,
                    val_acc: val.accuracy,
                    val_loss: val.mean_ce,
                    test_acc: test.accuracy,
                },
                floor1.clone(),
            ));
            fails = 0;
        } else {
            fails += 1;
            if fails >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let (_, best_ckpt, best_net) = best.expect("at least one step ran");
    Ok(RunOutput {
        history: RunHistory {
            method: Method::Sal,
            unit_kind: UnitKind::Step,
            records,
            best: best_ckpt,
            total_wall_clock_s: clock.elapsed_s(),
            stopped_early,
            step_phases,
        },
        best_net,
    })
}

/// Plain baseline; see [`run_plain_observed`].
pub fn run_plain(cfg: &TrainConfig, splits: &DataSplits, clock: &mut dyn Clock) -> Result<RunOutput> {
    run_plain_observed(cfg, splits, clock, &mut NoopObserver)
}

/// Plain baseline: the floor-1 architecture (identical seed and shapes)
/// trained on labels alone, evaluated per epoch, stopping on patience or
/// the epoch cap.
pub fn run_plain_observed(
    cfg: &TrainConfig,
    splits: &DataSplits,
    clock: &mut dyn Clock,
    observer: &mut dyn UnitObserver,
) -> Result<RunOutput> {
    run_plain_inner(cfg, splits, clock, observer, None)
}

/// Plain baseline run until wall-clock `budget` seconds of training, with
/// patience disabled; the time-matched protocol's second leg.
pub fn run_plain_budgeted(
    cfg: &TrainConfig,
    splits: &DataSplits,
    clock: &mut dyn Clock,
    budget_s: f64,
) -> Result<RunOutput> {
    run_plain_inner(cfg, splits, clock, &mut NoopObserver, Some(budget_s))
}

fn run_plain_inner(
    cfg: &TrainConfig,
    splits: &DataSplits,
    clock: &mut dyn Clock,
    observer: &mut dyn UnitObserver,
    budget_s: Option<f64>,
) -> Result<RunOutput> {
    cfg.validate()?;
    splits.validate()?;
    // a one-floor stack is exactly the baseline: same init stream as the
    // hierarchical run's floor 1
    let mut stack = FloorStack::build(
        cfg.base_depth,
        cfg.base_width,
        1,
        splits.train.in_dim(),
        splits.train.n_classes(),
        cfg.activation,
        rng::derive(cfg.seed, "stack"),
    )?;
    let net = &mut stack.get_mut(1).net;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr);
    let shuffle_seed = rng::derive(cfg.seed, "shuffle");
    let mut epoch_counter = 0u64;

    let mut records = Vec::new();
    let mut best: Option<(f64, BestCheckpoint, Network)> = None;
    let mut fails = 0usize;
    let mut stopped_early = false;
    let cap = match budget_s {
        Some(_) => usize::MAX,
        None => cfg.plain_epoch_cap(),
    };

    for epoch in 1..=cap {
        let losses = train_direct(
            net,
            &mut opt,
            &splits.train,
            1,
            cfg.batch_size,
            shuffle_seed,
            &mut epoch_counter,
            clock,
        )?;
        let val = evaluate(net, &splits.val)?;
        let test = evaluate(net, &splits.test)?;
        records.push(RunRecord {
            unit_index: epoch as u32,
            wall_clock_s: clock.elapsed_s(),
            train_loss: losses[0],
            val_acc: val.accuracy,
            val_loss: val.mean_ce,
            test_acc: test.accuracy,
            floor_losses: vec![FloorLoss { floor: 1, kind: PhaseKind::Direct, loss: losses[0] }],
        });
        observer.on_unit(epoch as u32, net)?;

        let value = monitored_value(cfg, &val);
        let improved = best.as_ref().map_or(true, |(b, _, _)| value > *b);
        if improved {
            best = Some((
                value,
                BestCheckpoint {
                    unit_index: epoch as u32,
                    val_acc: val.accuracy,
                    val_loss: val.mean_ce,
                    test_acc: test.accuracy,
                },
                net.clone(),
            ));
            fails = 0;
        } else {
            fails += 1;
        }
        match budget_s {
            Some(budget) => {
                if clock.elapsed_s() >= budget {
                    break;
                }
            }
            None => {
                if fails >= cfg.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    let (_, best_ckpt, best_net) = best.expect("at least one epoch ran");
    Ok(RunOutput {
        history: RunHistory {
            method: Method::Plain,
            unit_kind: UnitKind::Epoch,
            records,
            best: best_ckpt,
            total_wall_clock_s: clock.elapsed_s(),
            stopped_early,
            step_phases: Vec::new(),
        },
        best_net,
    })
}

/// Both runs of the time-matched protocol.
#[derive(Debug, Clone)]
pub struct TimeMatchedPair {
    pub sal: RunHistory,
    pub plain: RunHistory,
}

/// Run the hierarchical method to its early stop under a real clock, then
/// run plain training for at least the same wall-clock training time. Both
/// histories carry real timestamps for overlay plots.
pub fn run_time_matched(cfg: &TrainConfig, splits: &DataSplits) -> Result<TimeMatchedPair> {
    let mut sal_clock = RealClock::new();
    let sal = run_sal(cfg, splits, &mut sal_clock)?;
    let budget = sal.history.total_wall_clock_s;
    let mut plain_clock = RealClock::new();
    let plain = run_plain_budgeted(cfg, splits, &mut plain_clock, budget)?;
    Ok(TimeMatchedPair { sal: sal.history, plain: plain.history })
}
