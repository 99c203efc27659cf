//! The convolutional autoencoder: assembly, unsupervised training, loss
//! logging, checkpointing, and feature-map extraction.
//!
//! Encoder: Conv1d(2→c1, k=8, same) + ReLU + MaxPool(2), then
//! Conv1d(c1→4, k=8, same) + ReLU + MaxPool(4), so L sites compress to a
//! 4 × L/8 feature map (4 × 16 at L=128). Decoder: flatten →
//! Dense(L/2, H) + Dropout(0.5) + ReLU → Dense(H, 2L), no activation on
//! the output. Loss is the mean squared difference against the 2-channel
//! input.

use crate::checkpoint::{Checkpoint, CheckpointError, ParamBlock, TrainMeta};
use crate::dataset::DatasetRecord;
use crate::net::{
    mse_loss, relu_backward, relu_forward, scale_grads, sgd_step, Conv1d, Conv1dCache, Dense,
    DenseCache, Dropout, DropoutCache, MaxPool1d, MaxPool1dCache, Mode, NetError, Param, Tensor,
};
use crate::rng::Rng;
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

/// Filter count of the deepest encoder layer; probes and feature files
/// assume exactly 4 maps.
pub const DEEP_FILTERS: usize = 4;
/// Convolution kernel taps.
pub const KERNEL: usize = 8;
/// Pool windows of the two encoder stages.
pub const POOL1: usize = 2;
pub const POOL2: usize = 4;
/// Dropout rate of the decoder hidden layer.
pub const DROPOUT_RATE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum AeError {
    #[error("bad architecture: {0}")]
    BadArchitecture(String),
    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Diverged { epoch: usize, step: usize, loss: f64 },
    #[error("{0} set is empty")]
    EmptyData(&'static str),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Training hyperparameters for the autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AeTrainConfig {
    pub c1: usize,
    pub hidden: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    /// Evaluate and log every this many epochs (the final epoch always
    /// logs).
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        AeTrainConfig {
            c1: 4,
            hidden: 128,
            lr: 0.05,
            batch: 10,
            epochs: 30,
            eval_every: 1,
            seed: 2,
        }
    }
}

/// One evaluation point of the loss curves. `wall_time` is elapsed seconds
/// since training started; it stays in memory for console display and is
/// never written to the persisted log, which must be byte-reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub wall_time: f64,
}

/// Deepest-layer activations for one sample, filter-major (4 × L/8), with
/// the labels carried along for grouping and probing.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub sample_id: u64,
    pub pattern: String,
    pub label_nw: i64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Autoencoder {
    l: usize,
    c1: usize,
    hidden: usize,
    conv1: Conv1d,
    pool1: MaxPool1d,
    conv2: Conv1d,
    pool2: MaxPool1d,
    dense1: Dense,
    dropout: Dropout,
    dense2: Dense,
}

/// Everything backward needs from one training forward pass.
pub struct ForwardCache {
    conv1: Conv1dCache,
    act1: Tensor,
    pool1: MaxPool1dCache,
    conv2: Conv1dCache,
    act2: Tensor,
    pool2: MaxPool1dCache,
    dense1: DenseCache,
    dropped: Tensor,
    dropout: DropoutCache,
    dense2: DenseCache,
}

impl Autoencoder {
    /// Fresh model with seeded initialization. Layers draw their weights in
    /// a fixed order (conv1, conv2, dense1, dense2), so one seed pins every
    /// parameter.
    pub fn new(l: usize, c1: usize, hidden: usize, rng: &mut Rng) -> Result<Self, AeError> {
        if l == 0 || !l.is_multiple_of(POOL1 * POOL2) {
            return Err(AeError::BadArchitecture(format!(
                "input length {l} must be a positive multiple of {}",
                POOL1 * POOL2
            )));
        }
        if c1 == 0 || hidden == 0 {
            return Err(AeError::BadArchitecture(format!(
                "c1 and hidden must be >= 1, got c1={c1} hidden={hidden}"
            )));
        }
        let flat = DEEP_FILTERS * l / (POOL1 * POOL2);
        Ok(Autoencoder {
            l,
            c1,
            hidden,
            conv1: Conv1d::new(2, c1, KERNEL, rng)?,
            pool1: MaxPool1d::new(POOL1)?,
            conv2: Conv1d::new(c1, DEEP_FILTERS, KERNEL, rng)?,
            pool2: MaxPool1d::new(POOL2)?,
            dense1: Dense::new(flat, hidden, rng)?,
            dropout: Dropout::new(DROPOUT_RATE)?,
            dense2: Dense::new(hidden, 2 * l, rng)?,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn c1(&self) -> usize {
        self.c1
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Sites per feature map (L/8).
    pub fn feature_sites(&self) -> usize {
        self.l / (POOL1 * POOL2)
    }

    /// Encoder-only eval forward: 2×L input to 4×(L/8) nonnegative map.
    pub fn encode(&self, input: &Tensor) -> Result<Tensor, AeError> {
        let (a1, _) = self.conv1.forward(input)?;
        let (p1, _) = self.pool1.forward(&relu_forward(&a1))?;
        let (a2, _) = self.conv2.forward(&p1)?;
        let (p2, _) = self.pool2.forward(&relu_forward(&a2))?;
        Ok(p2)
    }

    /// Eval-mode reconstruction (dropout off): 2×L input to flat 2L output.
    pub fn reconstruct(&self, input: &Tensor) -> Result<Tensor, AeError> {
        let p2 = self.encode(input)?;
        let flat = p2.reshaped(vec![self.dense1.in_dim()])?;
        let (h, _) = self.dense1.forward(&flat)?;
        let (out, _) = self.dense2.forward(&relu_forward(&h))?;
        Ok(out)
    }

    /// Training forward with dropout active; returns output and cache.
    pub fn forward_train(
        &self,
        input: &Tensor,
        rng: &mut Rng,
    ) -> Result<(Tensor, ForwardCache), AeError> {
        let (a1, conv1) = self.conv1.forward(input)?;
        let r1 = relu_forward(&a1);
        let (p1, pool1) = self.pool1.forward(&r1)?;
        let (a2, conv2) = self.conv2.forward(&p1)?;
        let r2 = relu_forward(&a2);
        let (p2, pool2) = self.pool2.forward(&r2)?;
        let flat = p2.reshaped(vec![self.dense1.in_dim()])?;
        let (h, dense1) = self.dense1.forward(&flat)?;
        let (dropped, dropout) = self.dropout.forward(&h, Mode::Train, rng);
        let rh = relu_forward(&dropped);
        let (out, dense2) = self.dense2.forward(&rh)?;
        Ok((
            out,
            ForwardCache {
                conv1,
                act1: a1,
                pool1,
                conv2,
                act2: a2,
                pool2,
                dense1,
                dropped,
                dropout,
                dense2,
            },
        ))
    }

    /// Backpropagates a loss gradient, accumulating parameter gradients.
    pub fn backward(&mut self, grad_out: &Tensor, cache: &ForwardCache) -> Result<(), AeError> {
        let g = self.dense2.backward(grad_out, &cache.dense2)?;
        let g = relu_backward(&g, &cache.dropped);
        let g = self.dropout.backward(&g, &cache.dropout);
        let g = self.dense1.backward(&g, &cache.dense1)?;
        let g = g.reshaped(vec![DEEP_FILTERS, self.feature_sites()])?;
        let g = self.pool2.backward(&g, &cache.pool2)?;
        let g = relu_backward(&g, &cache.act2);
        let g = self.conv2.backward(&g, &cache.conv2)?;
        let g = self.pool1.backward(&g, &cache.pool1)?;
        let g = relu_backward(&g, &cache.act1);
        let _ = self.conv1.backward(&g, &cache.conv1)?;
        Ok(())
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.conv1.w,
            &mut self.conv1.b,
            &mut self.conv2.w,
            &mut self.conv2.b,
            &mut self.dense1.w,
            &mut self.dense1.b,
            &mut self.dense2.w,
            &mut self.dense2.b,
        ]
    }

    /// Eval-mode mean loss over a set, accumulated in sample order.
    pub fn mean_loss(&self, set: &[Tensor]) -> Result<f64, AeError> {
        if set.is_empty() {
            return Err(AeError::EmptyData("evaluation"));
        }
        let mut total = 0.0;
        for x in set {
            let out = self.reconstruct(x)?;
            let target = x.clone().reshaped(vec![2 * self.l])?;
            total += mse_loss(&out, &target)?.0;
        }
        Ok(total / set.len() as f64)
    }

    pub fn to_checkpoint(&self, meta: TrainMeta) -> Checkpoint {
        let mut arch = BTreeMap::new();
        arch.insert("l".into(), self.l as i64);
        arch.insert("c1".into(), self.c1 as i64);
        arch.insert("c2".into(), DEEP_FILTERS as i64);
        arch.insert("kernel".into(), KERNEL as i64);
        arch.insert("pool1".into(), POOL1 as i64);
        arch.insert("pool2".into(), POOL2 as i64);
        arch.insert("hidden".into(), self.hidden as i64);
        let flat = self.dense1.in_dim();
        let params = vec![
            ParamBlock::from_values("conv1.w", vec![self.c1, 2, KERNEL], &self.conv1.w.value),
            ParamBlock::from_values("conv1.b", vec![self.c1], &self.conv1.b.value),
            ParamBlock::from_values(
                "conv2.w",
                vec![DEEP_FILTERS, self.c1, KERNEL],
                &self.conv2.w.value,
            ),
            ParamBlock::from_values("conv2.b", vec![DEEP_FILTERS], &self.conv2.b.value),
            ParamBlock::from_values("dense1.w", vec![self.hidden, flat], &self.dense1.w.value),
            ParamBlock::from_values("dense1.b", vec![self.hidden], &self.dense1.b.value),
            ParamBlock::from_values("dense2.w", vec![2 * self.l, self.hidden], &self.dense2.w.value),
            ParamBlock::from_values("dense2.b", vec![2 * self.l], &self.dense2.b.value),
        ];
        Checkpoint::new("autoencoder", arch, meta, params)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, AeError> {
        ck.expect_model("autoencoder")?;
        let l = ck.arch("l")? as usize;
        let c1 = ck.arch("c1")? as usize;
        let hidden = ck.arch("hidden")? as usize;
        for (key, want) in [
            ("c2", DEEP_FILTERS as i64),
            ("kernel", KERNEL as i64),
            ("pool1", POOL1 as i64),
            ("pool2", POOL2 as i64),
        ] {
            let got = ck.arch(key)?;
            if got != want {
                return Err(AeError::BadArchitecture(format!(
                    "checkpoint {key} = {got}, this build supports {want}"
                )));
            }
        }
        let mut rng = Rng::from_seed(0);
        let mut model = Autoencoder::new(l, c1, hidden, &mut rng)?;
        let load = |param: &mut Param, name: &str| -> Result<(), AeError> {
            let values = ck.block(name)?.values()?;
            if values.len() != param.value.len() {
                return Err(AeError::BadArchitecture(format!(
                    "block {name} holds {} values, architecture wants {}",
                    values.len(),
                    param.value.len()
                )));
            }
            param.value = values;
            Ok(())
        };
        load(&mut model.conv1.w, "conv1.w")?;
        load(&mut model.conv1.b, "conv1.b")?;
        load(&mut model.conv2.w, "conv2.w")?;
        load(&mut model.conv2.b, "conv2.b")?;
        load(&mut model.dense1.w, "dense1.w")?;
        load(&mut model.dense1.b, "dense1.b")?;
        load(&mut model.dense2.w, "dense2.w")?;
        load(&mut model.dense2.b, "dense2.b")?;
        Ok(model)
    }
}

/// Builds the 2×L input tensor (channel 0 = Re, channel 1 = Im).
pub fn input_tensor(rec: &DatasetRecord) -> Result<Tensor, AeError> {
    let l = rec.re.len();
    let mut data = Vec::with_capacity(2 * l);
    data.extend_from_slice(&rec.re);
    data.extend_from_slice(&rec.im);
    Ok(Tensor::new(vec![2, l], data)?)
}

/// Result of a training run: the model at the last epoch, the model at the
/// best evaluated test loss (earliest epoch on ties), and the loss curve.
pub struct TrainResult {
    pub final_model: Autoencoder,
    pub best_model: Autoencoder,
    pub best_epoch: usize,
    pub log: Vec<TrainLogRecord>,
}

/// Mini-batch SGD over shuffled training data.
///
/// Gradients are averaged over each batch; dropout is active only in the
/// training passes; evaluation happens every `eval_every` epochs and at the
/// final epoch. Aborts with a diagnostic if the loss leaves the finite
/// range.
pub fn train(
    train_set: &[Tensor],
    test_set: &[Tensor],
    cfg: &AeTrainConfig,
) -> Result<TrainResult, AeError> {
    if train_set.is_empty() {
        return Err(AeError::EmptyData("train"));
    }
    if cfg.batch == 0 || cfg.eval_every == 0 {
        return Err(AeError::BadArchitecture(
            "batch and eval_every must be >= 1".into(),
        ));
    }
    let l = train_set[0].shape()[1];
    let mut rng = Rng::from_seed(cfg.seed);
    let mut model = Autoencoder::new(l, cfg.c1, cfg.hidden, &mut rng)?;
    let mut best_model = model.clone();
    let mut best_epoch = 0usize;
    let mut best_test = f64::INFINITY;
    let mut log = Vec::new();
    let started = Instant::now();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for (step, batch) in order.chunks(cfg.batch).enumerate() {
            let mut batch_loss = 0.0;
            for &i in batch {
                let x = &train_set[i];
                let (out, cache) = model.forward_train(x, &mut rng)?;
                let target = x.clone().reshaped(vec![2 * l])?;
                let (loss, grad) = mse_loss(&out, &target)?;
                batch_loss += loss;
                model.backward(&grad, &cache)?;
            }
            batch_loss /= batch.len() as f64;
            if !batch_loss.is_finite() {
                return Err(AeError::Diverged { epoch, step: step + 1, loss: batch_loss });
            }
            let inv = 1.0 / batch.len() as f64;
            scale_grads(&mut model.params_mut(), inv);
            sgd_step(&mut model.params_mut(), cfg.lr);
        }
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let train_loss = model.mean_loss(train_set)?;
            let test_loss = if test_set.is_empty() {
                f64::NAN
            } else {
                model.mean_loss(test_set)?
            };
            if !train_loss.is_finite() {
                return Err(AeError::Diverged { epoch, step: 0, loss: train_loss });
            }
            log.push(TrainLogRecord {
                epoch,
                train_loss,
                test_loss,
                wall_time: started.elapsed().as_secs_f64(),
            });
            let criterion = if test_set.is_empty() { train_loss } else { test_loss };
            if criterion < best_test {
                best_test = criterion;
                best_model = model.clone();
                best_epoch = epoch;
            }
        }
    }
    Ok(TrainResult { final_model: model, best_model, best_epoch, log })
}

/// Encoder features for each record, in input order.
pub fn extract_features(
    model: &Autoencoder,
    records: &[DatasetRecord],
) -> Result<Vec<FeatureMap>, AeError> {
    let mut out = Vec::with_capacity(records.len());
    for rec in records {
        let x = input_tensor(rec)?;
        let map = model.encode(&x)?;
        out.push(FeatureMap {
            sample_id: rec.id,
            pattern: pattern_string(&rec.pattern),
            label_nw: rec.n_w,
            values: map.data,
        });
    }
    Ok(out)
}

fn pattern_string(directions: &[i8]) -> String {
    std::iter::once('(')
        .chain(directions.iter().map(|&p| if p > 0 { '+' } else { '-' }))
        .chain(std::iter::once(')'))
        .collect()
}

/// Arithmetic mean of feature maps grouped by pattern, keyed by the pattern
/// string, in first-appearance order.
pub fn pattern_averaged_features(
    maps: &[FeatureMap],
) -> Result<Vec<(String, Vec<f64>)>, AeError> {
    if maps.is_empty() {
        return Err(AeError::EmptyData("feature"));
    }
    let mut order: Vec<String> = Vec::new();
    let mut sums: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    for m in maps {
        let entry = sums.entry(m.pattern.clone()).or_insert_with(|| {
            order.push(m.pattern.clone());
            (vec![0.0; m.values.len()], 0)
        });
        for (s, v) in entry.0.iter_mut().zip(&m.values) {
            *s += v;
        }
        entry.1 += 1;
    }
    Ok(order
        .into_iter()
        .map(|p| {
            let (sum, n) = &sums[&p];
            let mean = sum.iter().map(|s| s / *n as f64).collect();
            (p, mean)
        })
        .collect())
}
