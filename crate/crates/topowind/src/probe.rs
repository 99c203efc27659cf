//! Supervised probe over frozen feature maps: a two-layer classifier that
//! reads the first k filters of each 4 × (L/8) map and predicts the winding
//! class n_w + 5. Its ranked predictions measure how much of the label
//! survives compression; the encoder is never updated here.

use crate::ae::{FeatureMap, DEEP_FILTERS};
use crate::checkpoint::{Checkpoint, CheckpointError, ParamBlock, TrainMeta};
use crate::net::{
    relu_backward, relu_forward, scale_grads, sgd_step, softmax_xent, Dense, NetError, Param,
    Tensor,
};
use crate::rng::{derive_seed, Rng};
use std::collections::BTreeMap;
use thiserror::Error;

/// Winding classes: n_w ∈ [−5, +5] maps to class n_w + 5.
pub const CLASSES: usize = 11;
const MAX_ABS_NW: i64 = 5;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("bad architecture: {0}")]
    BadArchitecture(String),
    #[error("sample {id}: winding label {n_w} outside [-5, +5]")]
    BadLabel { id: u64, n_w: i64 },
    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Diverged { epoch: usize, step: usize, loss: f64 },
    #[error("{0} set is empty")]
    EmptyData(&'static str),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Class index for a winding label, rejecting out-of-range labels.
pub fn class_of(id: u64, n_w: i64) -> Result<usize, ProbeError> {
    if !(-MAX_ABS_NW..=MAX_ABS_NW).contains(&n_w) {
        return Err(ProbeError::BadLabel { id, n_w });
    }
    Ok((n_w + MAX_ABS_NW) as usize)
}

/// Training hyperparameters for the probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTrainConfig {
    pub hidden: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    /// How many of the 4 deep filters feed the probe (1..=4).
    pub filters_used: usize,
    pub seed: u64,
}

impl Default for ProbeTrainConfig {
    fn default() -> Self {
        ProbeTrainConfig {
            hidden: 64,
            lr: 1e-2,
            batch: 32,
            epochs: 200,
            filters_used: DEEP_FILTERS,
            seed: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Probe {
    filters_used: usize,
    sites: usize,
    hidden: usize,
    dense1: Dense,
    dense2: Dense,
}

impl Probe {
    pub fn new(
        filters_used: usize,
        sites: usize,
        hidden: usize,
        rng: &mut Rng,
    ) -> Result<Self, ProbeError> {
        if filters_used == 0 || filters_used > DEEP_FILTERS {
            return Err(ProbeError::BadArchitecture(format!(
                "filters_used must be in 1..={DEEP_FILTERS}, got {filters_used}"
            )));
        }
        if sites == 0 || hidden == 0 {
            return Err(ProbeError::BadArchitecture(format!(
                "sites and hidden must be >= 1, got sites={sites} hidden={hidden}"
            )));
        }
        Ok(Probe {
            filters_used,
            sites,
            hidden,
            dense1: Dense::new(filters_used * sites, hidden, rng)?,
            dense2: Dense::new(hidden, CLASSES, rng)?,
        })
    }

    pub fn filters_used(&self) -> usize {
        self.filters_used
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// The probe's view of a feature map: the first `filters_used` filters,
    /// flattened filter-major.
    pub fn input_from(&self, map: &FeatureMap) -> Result<Tensor, ProbeError> {
        let want = DEEP_FILTERS * self.sites;
        if map.values.len() != want {
            return Err(ProbeError::BadArchitecture(format!(
                "sample {}: feature map holds {} values, probe expects {want}",
                map.sample_id,
                map.values.len()
            )));
        }
        let data = map.values[..self.filters_used * self.sites].to_vec();
        Ok(Tensor::new(vec![self.filters_used * self.sites], data)?)
    }

    /// Class probabilities for one feature map.
    pub fn predict(&self, map: &FeatureMap) -> Result<Vec<f64>, ProbeError> {
        let x = self.input_from(map)?;
        let (h, _) = self.dense1.forward(&x)?;
        let (logits, _) = self.dense2.forward(&relu_forward(&h))?;
        // softmax with a dummy target: only the probabilities are read.
        Ok(softmax_xent(&logits, 0)?.probs.data)
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.dense1.w,
            &mut self.dense1.b,
            &mut self.dense2.w,
            &mut self.dense2.b,
        ]
    }

    /// Loss and gradient accumulation for one labeled map.
    fn train_sample(&mut self, map: &FeatureMap) -> Result<f64, ProbeError> {
        let class = class_of(map.sample_id, map.label_nw)?;
        let x = self.input_from(map)?;
        let (h, c1) = self.dense1.forward(&x)?;
        let r = relu_forward(&h);
        let (logits, c2) = self.dense2.forward(&r)?;
        let out = softmax_xent(&logits, class)?;
        let g = self.dense2.backward(&out.grad, &c2)?;
        let g = relu_backward(&g, &h);
        let _ = self.dense1.backward(&g, &c1)?;
        Ok(out.loss)
    }

    pub fn to_checkpoint(&self, meta: TrainMeta) -> Checkpoint {
        let mut arch = BTreeMap::new();
        arch.insert("filters_used".into(), self.filters_used as i64);
        arch.insert("sites".into(), self.sites as i64);
        arch.insert("hidden".into(), self.hidden as i64);
        arch.insert("classes".into(), CLASSES as i64);
        let in_dim = self.filters_used * self.sites;
        let params = vec![
            ParamBlock::from_values("dense1.w", vec![self.hidden, in_dim], &self.dense1.w.value),
            ParamBlock::from_values("dense1.b", vec![self.hidden], &self.dense1.b.value),
            ParamBlock::from_values("dense2.w", vec![CLASSES, self.hidden], &self.dense2.w.value),
            ParamBlock::from_values("dense2.b", vec![CLASSES], &self.dense2.b.value),
        ];
        Checkpoint::new("probe", arch, meta, params)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, ProbeError> {
        ck.expect_model("probe")?;
        let classes = ck.arch("classes")?;
        if classes != CLASSES as i64 {
            return Err(ProbeError::BadArchitecture(format!(
                "checkpoint has {classes} classes, this build supports {CLASSES}"
            )));
        }
        let filters_used = ck.arch("filters_used")? as usize;
        let sites = ck.arch("sites")? as usize;
        let hidden = ck.arch("hidden")? as usize;
        let mut rng = Rng::from_seed(0);
        let mut probe = Probe::new(filters_used, sites, hidden, &mut rng)?;
        let load = |param: &mut Param, name: &str| -> Result<(), ProbeError> {
            let values = ck.block(name)?.values()?;
            if values.len() != param.value.len() {
                return Err(ProbeError::BadArchitecture(format!(
                    "block {name} holds {} values, architecture wants {}",
                    values.len(),
                    param.value.len()
                )));
            }
            param.value = values;
            Ok(())
        };
        load(&mut probe.dense1.w, "dense1.w")?;
        load(&mut probe.dense1.b, "dense1.b")?;
        load(&mut probe.dense2.w, "dense2.w")?;
        load(&mut probe.dense2.b, "dense2.b")?;
        Ok(probe)
    }
}

/// Mini-batch SGD on labeled feature maps. Labels are validated up front so
/// a bad record fails before any training happens.
pub fn train_probe(maps: &[FeatureMap], cfg: &ProbeTrainConfig) -> Result<Probe, ProbeError> {
    if maps.is_empty() {
        return Err(ProbeError::EmptyData("train"));
    }
    if cfg.batch == 0 {
        return Err(ProbeError::BadArchitecture("batch must be >= 1".into()));
    }
    for m in maps {
        class_of(m.sample_id, m.label_nw)?;
    }
    let sites = maps[0].values.len() / DEEP_FILTERS;
    let mut rng = Rng::from_seed(cfg.seed);
    let mut probe = Probe::new(cfg.filters_used, sites, cfg.hidden, &mut rng)?;
    let mut order: Vec<usize> = (0..maps.len()).collect();
    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for (step, batch) in order.chunks(cfg.batch).enumerate() {
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += probe.train_sample(&maps[i])?;
            }
            batch_loss /= batch.len() as f64;
            if !batch_loss.is_finite() {
                return Err(ProbeError::Diverged { epoch, step: step + 1, loss: batch_loss });
            }
            let inv = 1.0 / batch.len() as f64;
            scale_grads(&mut probe.params_mut(), inv);
            sgd_step(&mut probe.params_mut(), cfg.lr);
        }
    }
    Ok(probe)
}

/// Rank of the true class among the predicted probabilities: 1 plus the
/// number of strictly larger entries, plus the number of equal entries at a
/// lower index. Rank 1 means the truth was the top prediction.
pub fn rank_of_truth(probs: &[f64], true_class: usize) -> usize {
    let pt = probs[true_class];
    let higher = probs.iter().filter(|&&p| p > pt).count();
    let tied_before = probs[..true_class].iter().filter(|&&p| p == pt).count();
    1 + higher + tied_before
}

/// Counts of predictions by rank of the true class, ranks 1..=CLASSES.
#[derive(Debug, Clone, PartialEq)]
pub struct RankHistogram {
    pub counts: Vec<usize>,
    pub total: usize,
}

impl RankHistogram {
    pub fn rate(&self, rank: usize) -> f64 {
        self.counts[rank - 1] as f64 / self.total as f64
    }

    pub fn rank1_rate(&self) -> f64 {
        self.rate(1)
    }
}

/// Ranks every map's true class under the probe.
pub fn evaluate(probe: &Probe, maps: &[FeatureMap]) -> Result<RankHistogram, ProbeError> {
    if maps.is_empty() {
        return Err(ProbeError::EmptyData("evaluation"));
    }
    let mut counts = vec![0usize; CLASSES];
    for m in maps {
        let class = class_of(m.sample_id, m.label_nw)?;
        let probs = probe.predict(m)?;
        counts[rank_of_truth(&probs, class) - 1] += 1;
    }
    Ok(RankHistogram { counts, total: maps.len() })
}

/// One row of the filter sweep: the rate at which the true class lands at
/// `rank` when the probe reads `filters_used` filters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub filters_used: usize,
    pub rank: usize,
    pub rate: f64,
}

/// Trains one probe per filter count 1..=4 and evaluates each on the test
/// maps. Each probe gets its own seed substream so runs are independent of
/// sweep order.
pub fn filter_sweep(
    train_maps: &[FeatureMap],
    test_maps: &[FeatureMap],
    cfg: &ProbeTrainConfig,
) -> Result<Vec<SweepRow>, ProbeError> {
    let mut rows = Vec::with_capacity(DEEP_FILTERS * CLASSES);
    for k in 1..=DEEP_FILTERS {
        let sub = ProbeTrainConfig {
            filters_used: k,
            seed: derive_seed(cfg.seed, &[k as u64]),
            ..cfg.clone()
        };
        let probe = train_probe(train_maps, &sub)?;
        let hist = evaluate(&probe, test_maps)?;
        for rank in 1..=CLASSES {
            rows.push(SweepRow { filters_used: k, rank, rate: hist.rate(rank) });
        }
    }
    Ok(rows)
}
