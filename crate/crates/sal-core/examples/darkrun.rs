//! Scratch harness for timing/accuracy calibration on the MNIST subset
//! experiment. Not part of the test suite.

use std::path::Path;
use std::time::Instant;

use sal_core::data::{holdout, load_idx, subsample};
use sal_core::engine::{
    run_plain, run_sal, DataSplits, Monitor, RealClock, TrainConfig,
};
use sal_core::nn::{Activation, OptimizerKind};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let depth: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    let width: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(256);
    let s_max: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(25);
    let optimizer = match args.get(5).map(String::as_str) {
        Some("sgd") => OptimizerKind::Sgd,
        _ => OptimizerKind::Adam,
    };
    let lr: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(1e-3);

    let dir = Path::new("data/mnist");
    let t0 = Instant::now();
    let train_full = load_idx(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )
    .unwrap();
    let test_full = load_idx(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
    )
    .unwrap();
    println!("loaded MNIST in {:?}: train {} test {}", t0.elapsed(), train_full.len(), test_full.len());

    let sub = subsample(&train_full, 0.01, true, seed).unwrap();
    let (train, val) = holdout(&sub.dataset, 0.1, true, seed).unwrap();
    let test = subsample(&test_full, 2048.0 / test_full.len() as f64, true, seed).unwrap().dataset;
    println!("train {} val {} test {}", train.len(), val.len(), test.len());
    let splits = DataSplits { train, val, test };

    let cfg = TrainConfig {
        base_depth: depth,
        base_width: width,
        floors: 3,
        activation: Activation::Sigmoid,
        optimizer,
        lr,
        batch_size: 64,
        t: 5,
        r: 10,
        s_max,
        patience: 10,
        seed,
        monitor: Monitor::ValAccuracy,
        max_epochs: None,
    };

    let t0 = Instant::now();
    let mut clock = RealClock::new();
    let sal = run_sal(&cfg, &splits, &mut clock).unwrap();
    println!(
        "SAL: {} steps in {:?} (train-time {:.1}s), best val {:.4} test {:.4}, stopped_early={}",
        sal.history.records.len(),
        t0.elapsed(),
        sal.history.total_wall_clock_s,
        sal.history.best.val_acc,
        sal.history.best.test_acc,
        sal.history.stopped_early,
    );
    for r in &sal.history.records {
        let fl: Vec<String> = r
            .floor_losses
            .iter()
            .map(|f| format!("f{}/{}={:.4}", f.floor, f.kind.loss_name(), f.loss))
            .collect();
        println!(
            "  step {:2} wall {:6.1}s train_loss {:.4} val {:.4} test {:.4} [{}]",
            r.unit_index,
            r.wall_clock_s,
            r.train_loss,
            r.val_acc,
            r.test_acc,
            fl.join(" ")
        );
    }

    let t0 = Instant::now();
    let mut clock = RealClock::new();
    let plain = run_plain(&cfg, &splits, &mut clock).unwrap();
    println!(
        "plain: {} epochs in {:?} (train-time {:.1}s), best val {:.4} test {:.4}, stopped_early={}",
        plain.history.records.len(),
        t0.elapsed(),
        plain.history.total_wall_clock_s,
        plain.history.best.val_acc,
        plain.history.best.test_acc,
        plain.history.stopped_early,
    );
    println!(
        "GAP (test): {:.2} points",
        100.0 * (sal.history.best.test_acc - plain.history.best.test_acc)
    );
}
