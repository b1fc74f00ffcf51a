use serde::Serialize;

use super::data::{synth_dataset, Dataset};
use super::train::{evaluate, train_with, TrainConfig};
use crate::error::Result;
use crate::heads::HeadTag;

/// Learning rates tried for every head on the toy benchmark.
pub const LR_GRID: [f64; 4] = [1.0, 0.3, 0.1, 0.03];

/// Shape of the standard synthetic benchmark.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkShape {
    pub classes: usize,
    pub d: usize,
    pub n: usize,
    pub spread: f64,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
}

impl Default for BenchmarkShape {
    fn default() -> Self {
        Self { classes: 4, d: 8, n: 16, spread: 1.0, train_per_class: 20, val_per_class: 40, test_per_class: 100 }
    }
}

impl BenchmarkShape {
    /// Train, validation and test sets drawn from the same class covariances.
    pub fn generate(&self, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
        let total = self.train_per_class + self.val_per_class + self.test_per_class;
        let all = synth_dataset(self.classes, self.d, self.n, total, self.spread, seed)?;
        let (train, rest) = all.split_at(self.classes * self.train_per_class);
        let (val, test) = rest.split_at(self.classes * self.val_per_class);
        Ok((train, val, test))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult {
    pub head: HeadTag,
    pub theta: f64,
    pub best_lr: f64,
    pub val_top1: f64,
    pub test_top1: f64,
    pub test_top5: f64,
}

/// Trains `cfg` once per learning rate in `grid`, keeps the first rate with the best
/// final validation top-1 and reports its test accuracy.
pub fn lr_grid_search(
    train: &Dataset,
    val: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    grid: &[f64],
) -> Result<GridResult> {
    let mut best: Option<GridResult> = None;
    for &lr in grid {
        let mut run_cfg = cfg.clone();
        run_cfg.sgd.lr = lr;
        let (model, record) = train_with(train, Some(val), &run_cfg, None)?;
        let val_top1 = record.epochs.last().and_then(|e| e.val_top1).unwrap_or(0.0);
        if best.as_ref().is_none_or(|b| val_top1 > b.val_top1) {
            let (test_top1, test_top5) = evaluate(&model, test)?;
            best = Some(GridResult { head: cfg.head, theta: cfg.theta, best_lr: lr, val_top1, test_top1, test_top5 });
        }
    }
    best.ok_or_else(|| crate::error::Error::Config("learning-rate grid is empty".into()))
}
