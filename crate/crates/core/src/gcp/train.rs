use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{raw_covariance, ridge, Dataset};
use crate::error::{Error, Result};
use crate::heads::{fc_forward, head_backward, head_feature, softmax_xent, HeadCache, HeadKind, HeadTag};
use crate::optim::{sgd_step_matrix, SgdConfig};
use crate::symlin::random::trial_rng;
use crate::symlin::{Matrix, SpdMatrix, SymMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub head: HeadTag,
    pub theta: f64,
    /// Newton–Schulz iterations for the square root (`theta = 0.5` only).
    pub newton_schulz: Option<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub sgd: SgdConfig,
    pub weight_decay: f64,
    /// Covariance ridge; `None` uses `1e-6·tr(Σ)/d`.
    pub eps_reg: Option<f64>,
    /// `(epoch, divisor)`: from that 0-based epoch on the learning rate is divided again.
    pub lr_schedule: Vec<(usize, f64)>,
    /// Extra multiplier on the FC weight learning rate (biases are unaffected).
    pub weight_lr_scale: f64,
    /// Learned channel reduction `d → d'` applied before pooling.
    pub reduce_to: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            head: HeadTag::PowEmlr,
            theta: 0.5,
            newton_schulz: None,
            epochs: 30,
            batch_size: 8,
            sgd: SgdConfig::default(),
            weight_decay: 0.0,
            eps_reg: None,
            lr_schedule: Vec::new(),
            weight_lr_scale: 1.0,
            reduce_to: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.sgd.validate()?;
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0) || !(self.weight_lr_scale > 0.0) {
            return Err(Error::Config("weight decay must be >= 0 and the weight lr scale > 0".into()));
        }
        if let Some(eps) = self.eps_reg {
            if !(eps >= 0.0) {
                return Err(Error::Config(format!("eps_reg must be nonnegative, got {eps}")));
            }
        }
        if let Some(&(e, div)) = self.lr_schedule.iter().find(|(_, div)| !(*div > 0.0)) {
            return Err(Error::Config(format!("schedule divisor at epoch {e} must be positive, got {div}")));
        }
        if self.reduce_to == Some(0) {
            return Err(Error::Config("channel reduction target must be positive".into()));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr_schedule.iter().filter(|(e, _)| *e <= epoch).fold(self.sgd.lr, |lr, (_, div)| lr / div)
    }

    fn base_kind(&self, n: usize) -> HeadKind {
        let mut kind = HeadKind::new(self.head, self.theta);
        kind.newton_schulz = self.newton_schulz;
        if self.head == HeadTag::PowEmlrPrime {
            kind.shared_p = Some(SymMatrix::identity(n));
        }
        kind
    }
}

/// Pipeline parameters: optional reduction, matrix-function head and FC layer.
#[derive(Clone, Debug, PartialEq)]
pub struct GcpModel {
    pub head: HeadKind,
    /// `C × d'²`
    pub weights: Matrix,
    pub bias: Vec<f64>,
    /// `d' × d`
    pub reduction: Option<Matrix>,
    pub eps_reg: Option<f64>,
    pub classes: usize,
}

impl GcpModel {
    /// Pooled (and reduced) covariance of one feature map.
    pub fn pool(&self, x: &Matrix) -> Result<SpdMatrix> {
        let cov = raw_covariance(x)?;
        match &self.reduction {
            None => ridge(cov, self.eps_reg),
            Some(w) => ridge(w.matmul(&cov).matmul_tr(w).symmetrized(), self.eps_reg),
        }
    }

    /// Cache of the part of the forward pass that does not depend on the shared anchor.
    fn cache(&self, s: &SpdMatrix) -> Result<HeadCache> {
        let mut kind = self.head.clone();
        if kind.tag == HeadTag::PowEmlrPrime {
            kind.tag = HeadTag::PowEmlr;
            kind.shared_p = None;
        }
        head_feature(&kind, s)
    }

    fn effective(&self, cache: &HeadCache) -> HeadCache {
        match (&self.head.shared_p, self.head.tag) {
            (Some(p), HeadTag::PowEmlrPrime) => cache.with_feature(cache.feature.sub(p)),
            _ => cache.clone(),
        }
    }

    fn logits_cached(&self, cache: &HeadCache) -> Result<Vec<f64>> {
        fc_forward(&self.head, &self.effective(cache).feature, &self.weights, &self.bias)
    }

    pub fn logits(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.logits_cached(&self.cache(&self.pool(x)?)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Mean loss over the epoch, each sample measured before its batch update.
    pub train_loss: f64,
    pub train_top1: f64,
    pub train_top5: f64,
    pub val_top1: Option<f64>,
    pub val_top5: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: TrainConfig,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    /// Not serialized.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// Optional starting point for the FC layer.
#[derive(Clone, Debug, PartialEq)]
pub struct FcInit {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

fn init_model(ds: &Dataset, cfg: &TrainConfig, init: Option<FcInit>) -> Result<GcpModel> {
    let mut rng = trial_rng(cfg.sgd.seed, 0);
    let m = cfg.reduce_to.unwrap_or(ds.d);
    let reduction = cfg.reduce_to.map(|r| {
        let bound = 1.0 / (ds.d as f64).sqrt();
        Matrix::from_fn(r, ds.d, |_, _| rng.random_range(-bound..bound))
    });
    let (weights, bias) = match init {
        Some(FcInit { weights, bias }) => {
            if weights.rows() != ds.classes || weights.cols() != m * m || bias.len() != ds.classes {
                return Err(Error::Shape("initial FC parameters do not match the dataset".into()));
            }
            (weights, bias)
        }
        None => {
            let bound = 1.0 / (m as f64);
            (Matrix::from_fn(ds.classes, m * m, |_, _| rng.random_range(-bound..bound)), vec![0.0; ds.classes])
        }
    };
    Ok(GcpModel { head: cfg.base_kind(m), weights, bias, reduction, eps_reg: cfg.eps_reg, classes: ds.classes })
}

/// Caches for every sample when the pooled covariances are fixed (no learned reduction).
fn prepare(model: &GcpModel, ds: &Dataset) -> Result<Option<Vec<HeadCache>>> {
    if model.reduction.is_some() {
        return Ok(None);
    }
    ds.samples
        .iter()
        .enumerate()
        .map(|(i, s)| model.cache(&model.pool(&s.x)?).map_err(|e| e.context(format!("sample {i}"))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn sample_logits(model: &GcpModel, ds: &Dataset, caches: &Option<Vec<HeadCache>>, i: usize) -> Result<Vec<f64>> {
    match caches {
        Some(c) => model.logits_cached(&c[i]),
        None => model.logits(&ds.samples[i].x),
    }
}

/// Rank of the true label: classes with a larger logit, or an equal logit and a lower index.
fn label_rank(logits: &[f64], label: usize) -> usize {
    let z = logits[label];
    logits.iter().enumerate().filter(|&(j, &v)| v > z || (v == z && j < label)).count()
}

/// Top-1 and top-5 accuracy from precomputed logits.
pub fn topk_accuracy(logits: &[Vec<f64>], labels: &[usize]) -> (f64, f64) {
    if labels.is_empty() {
        return (0.0, 0.0);
    }
    let ranks: Vec<usize> = logits.iter().zip(labels).map(|(z, &l)| label_rank(z, l)).collect();
    let total = labels.len() as f64;
    let top1 = ranks.iter().filter(|&&r| r < 1).count() as f64 / total;
    let top5 = ranks.iter().filter(|&&r| r < 5).count() as f64 / total;
    (top1, top5)
}

fn accuracy(model: &GcpModel, ds: &Dataset, caches: &Option<Vec<HeadCache>>) -> Result<(f64, f64)> {
    let logits = (0..ds.len()).map(|i| sample_logits(model, ds, caches, i)).collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = ds.samples.iter().map(|s| s.label).collect();
    Ok(topk_accuracy(&logits, &labels))
}

/// Top-1 and top-5 accuracy of `model` on `dataset`; ties go to the lower class index.
pub fn evaluate(model: &GcpModel, dataset: &Dataset) -> Result<(f64, f64)> {
    if dataset.classes != model.classes {
        return Err(Error::Shape(format!("model has {} classes, dataset {}", model.classes, dataset.classes)));
    }
    accuracy(model, dataset, &prepare(model, dataset)?)
}

pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<(GcpModel, RunRecord)> {
    train_with(dataset, None, cfg, None)
}

/// Minibatch SGD on softmax cross-entropy, with optional validation set and FC initialization.
pub fn train_with(
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &TrainConfig,
    init: Option<FcInit>,
) -> Result<(GcpModel, RunRecord)> {
    let started = Instant::now();
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if let Some(v) = val {
        if v.d != train.d || v.classes != train.classes {
            return Err(Error::Shape("validation set does not match the training set".into()));
        }
    }
    let mut model = init_model(train, cfg, init)?;
    model.head.validate(cfg.reduce_to.unwrap_or(train.d))?;
    let caches = prepare(&model, train)?;
    let val_caches = match val {
        Some(v) => Some(prepare(&model, v)?),
        None => None,
    };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        let mut rng = trial_rng(cfg.sgd.seed, 1 + epoch as u64);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (bi, batch) in order.chunks(cfg.batch_size).enumerate() {
            loss_sum += batch_step(&mut model, train, &caches, batch, cfg, lr)
                .map_err(|e| e.context(format!("epoch {epoch}, batch {bi}")))?;
        }
        let (train_top1, train_top5) = accuracy(&model, train, &caches)?;
        let (val_top1, val_top5) = match (val, &val_caches) {
            (Some(v), Some(c)) => {
                let (a, b) = accuracy(&model, v, c)?;
                (Some(a), Some(b))
            }
            _ => (None, None),
        };
        epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / train.len() as f64,
            train_top1,
            train_top5,
            val_top1,
            val_top5,
        });
    }
    let record = RunRecord {
        config: cfg.clone(),
        seed: cfg.sgd.seed,
        epochs,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((model, record))
}

/// Accumulates gradients over the batch in order, applies one update and returns the summed loss.
fn batch_step(
    model: &mut GcpModel,
    ds: &Dataset,
    caches: &Option<Vec<HeadCache>>,
    batch: &[usize],
    cfg: &TrainConfig,
    lr: f64,
) -> Result<f64> {
    let (c, m2) = (model.weights.rows(), model.weights.cols());
    let mut g_weights = Matrix::zeros(c, m2);
    let mut g_bias = vec![0.0; c];
    let mut g_p = model.head.shared_p.as_ref().map(|p| SymMatrix::zeros(p.n()));
    let mut g_red = model.reduction.as_ref().map(|w| Matrix::zeros(w.rows(), w.cols()));
    let mut loss_sum = 0.0;

    for &i in batch {
        let sample = &ds.samples[i];
        let (cache, raw_cov) = match caches {
            Some(cs) => (model.effective(&cs[i]), None),
            None => {
                let cov = raw_covariance(&sample.x)?;
                (model.effective(&model.cache(&model.pool(&sample.x)?)?), Some(cov))
            }
        };
        let logits = fc_forward(&model.head, &cache.feature, &model.weights, &model.bias)?;
        let (loss, g) = softmax_xent(&logits, sample.label)?;
        loss_sum += loss;
        let grads = head_backward(&model.head, &cache, &model.weights, &g, g_red.is_some())?;
        g_weights.axpy(1.0, &grads.weights);
        for (acc, v) in g_bias.iter_mut().zip(&grads.bias) {
            *acc += v;
        }
        if let (Some(acc), Some(v)) = (g_p.as_mut(), grads.shared_p.as_ref()) {
            *acc = acc.add(v);
        }
        if let (Some(acc), Some(w), Some(sbar), Some(cov)) =
            (g_red.as_mut(), model.reduction.as_ref(), grads.input.as_ref(), raw_cov.as_ref())
        {
            // Σ' = W Σ Wᵀ + εI  ⇒  dL/dW = 2 Σ̄' W Σ
            acc.axpy(2.0, &sbar.as_matrix().matmul(w).matmul(cov));
        }
    }

    let scale = 1.0 / batch.len() as f64;
    let fc_lr = lr * cfg.sgd.classifier_factor;
    let mut g_weights = g_weights.scale(scale);
    g_weights.axpy(cfg.weight_decay, &model.weights);
    sgd_step_matrix(&mut model.weights, &g_weights, fc_lr * cfg.weight_lr_scale)?;
    let g_bias: Vec<f64> = g_bias.iter().map(|v| v * scale).collect();
    model.bias = crate::optim::sgd_step(&model.bias, &g_bias, fc_lr)?;
    if let (Some(p), Some(gp)) = (model.head.shared_p.as_mut(), g_p) {
        *p = p.sub(&gp.scale(scale * fc_lr));
    }
    if let (Some(w), Some(gw)) = (model.reduction.as_mut(), g_red) {
        let mut gw = gw.scale(scale);
        gw.axpy(cfg.weight_decay, w);
        sgd_step_matrix(w, &gw, lr)?;
    }
    Ok(loss_sum)
}
