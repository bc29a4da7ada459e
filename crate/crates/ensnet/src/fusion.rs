//! Weighted late fusion of per-network score vectors.
//!
//! Each backbone contributes an e-length score vector F_i. With weights
//! w_i >= 0, sum w_i = 1, the fused feature is the concatenation of the
//! blocks w_i * F_i (length e*eta), which feeds a small head:
//! ReLU -> fully connected (e*eta -> e) -> softmax. The decision is the
//! argmax class, 1-based, with ties going to the smallest index.
//!
//! Weights are chosen by enumerating the simplex grid with a fixed step,
//! retraining the head per candidate, and keeping the weights with the best
//! top-1 accuracy (lexicographically smallest on ties).

use crate::checkpoint::{read_checkpoint, write_checkpoint, CheckpointError, CheckpointRecord};
use crate::net::{ScoreMatrix, TrainSchedule};
use crate::ops::{
    cross_entropy, cross_entropy_logits_grad, dense, dense_backward, relu, sgd_step, softmax,
    OpError, SgdCfg,
};
use crate::rng::Rng;
use crate::tensor::Tensor;
use std::fmt;
use std::path::Path;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum FusionError {
    WeightSum(f64),
    NegativeWeight(f64),
    TooFewNetworks(usize),
    LengthMismatch(String),
    Empty(String),
    BadStep(f64),
    Op(OpError),
    Checkpoint(String),
}

impl fmt::Display for FusionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionError::WeightSum(s) => write!(f, "fusion weights must sum to 1, got {s}"),
            FusionError::NegativeWeight(w) => {
                write!(f, "fusion weights must be nonnegative, got {w}")
            }
            FusionError::TooFewNetworks(n) => {
                write!(f, "fusion needs at least 2 networks, got {n}")
            }
            FusionError::LengthMismatch(m) => write!(f, "length mismatch: {m}"),
            FusionError::Empty(m) => write!(f, "empty input: {m}"),
            FusionError::BadStep(s) => {
                write!(f, "grid step must divide 1 and lie in (0, 1], got {s}")
            }
            FusionError::Op(e) => write!(f, "{e}"),
            FusionError::Checkpoint(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for FusionError {}

impl From<OpError> for FusionError {
    fn from(e: OpError) -> Self {
        FusionError::Op(e)
    }
}

impl From<CheckpointError> for FusionError {
    fn from(e: CheckpointError) -> Self {
        FusionError::Checkpoint(e.to_string())
    }
}

/// Per-network fusion coefficients on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    w: Vec<f64>,
}

impl FusionWeights {
    pub fn new(w: Vec<f64>) -> Result<Self, FusionError> {
        if w.len() < 2 {
            return Err(FusionError::TooFewNetworks(w.len()));
        }
        if let Some(&bad) = w.iter().find(|&&x| x < 0.0) {
            return Err(FusionError::NegativeWeight(bad));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(FusionError::WeightSum(sum));
        }
        Ok(FusionWeights { w })
    }

    pub fn uniform(eta: usize) -> Result<Self, FusionError> {
        FusionWeights::new(vec![1.0 / eta as f64; eta])
    }

    pub fn eta(&self) -> usize {
        self.w.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

/// 1-based class decision (class 1 is the first score).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassId(usize);

impl ClassId {
    pub fn from_index(index: usize) -> Self {
        ClassId(index + 1)
    }

    /// 1-based class number.
    pub fn number(&self) -> usize {
        self.0
    }

    /// 0-based index into a score vector.
    pub fn index(&self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Concatenates the blocks w_i * F_i. All feature vectors must share one
/// length and there must be exactly one weight per vector.
pub fn fuse(features: &[&[f64]], weights: &FusionWeights) -> Result<Vec<f64>, FusionError> {
    if features.len() != weights.eta() {
        return Err(FusionError::LengthMismatch(format!(
            "{} feature vectors for {} weights",
            features.len(),
            weights.eta()
        )));
    }
    let e = features[0].len();
    if e == 0 {
        return Err(FusionError::Empty("feature vectors are empty".into()));
    }
    let mut out = Vec::with_capacity(e * features.len());
    for (f, &w) in features.iter().zip(weights.as_slice()) {
        if f.len() != e {
            return Err(FusionError::LengthMismatch(format!(
                "feature vector of length {} next to one of length {e}",
                f.len()
            )));
        }
        out.extend(f.iter().map(|&v| w * v));
    }
    Ok(out)
}

/// Smallest index attaining the maximum score, as a 1-based class.
pub fn predict(scores: &[f64]) -> Result<ClassId, FusionError> {
    if scores.is_empty() {
        return Err(FusionError::Empty("score vector is empty".into()));
    }
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate() {
        if v > scores[best] {
            best = i;
        }
    }
    Ok(ClassId::from_index(best))
}

/// The fusion head: ReLU -> dense (e*eta -> e) -> softmax, plus the fixed
/// per-network weights used to build its input.
#[derive(Debug, Clone)]
pub struct FusionModel {
    weights: FusionWeights,
    head_weight: Tensor,
    head_bias: Tensor,
    classes: usize,
}

impl FusionModel {
    pub fn new(classes: usize, weights: FusionWeights, seed: u64) -> Result<Self, FusionError> {
        if classes < 2 {
            return Err(FusionError::Empty(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        let eta = weights.eta();
        let fan_in = classes * eta;
        let limit = (6.0 / fan_in as f64).sqrt();
        let mut rng = Rng::new(seed);
        let head_weight = Tensor::from_vec(
            &[fan_in, classes],
            (0..fan_in * classes)
                .map(|_| rng.uniform(-limit, limit))
                .collect(),
        );
        Ok(FusionModel {
            weights,
            head_weight,
            head_bias: Tensor::zeros(&[classes]),
            classes,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn eta(&self) -> usize {
        self.weights.eta()
    }

    pub fn input_width(&self) -> usize {
        self.classes * self.weights.eta()
    }

    pub fn weights(&self) -> &FusionWeights {
        &self.weights
    }

    pub fn head(&self) -> (&Tensor, &Tensor) {
        (&self.head_weight, &self.head_bias)
    }

    pub fn head_mut(&mut self) -> (&mut Tensor, &mut Tensor) {
        (&mut self.head_weight, &mut self.head_bias)
    }

    /// Scores for one fused feature vector.
    pub fn forward(&self, fused: &[f64]) -> Result<Vec<f64>, FusionError> {
        let rows = self.forward_batch(&[fused.to_vec()])?;
        Ok(rows.into_iter().next().unwrap())
    }

    /// Scores for a batch of fused feature vectors.
    pub fn forward_batch(&self, fused: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FusionError> {
        if fused.is_empty() {
            return Err(FusionError::Empty("no fused rows".into()));
        }
        let width = self.input_width();
        for row in fused {
            if row.len() != width {
                return Err(FusionError::LengthMismatch(format!(
                    "fused row of length {}, head expects {width}",
                    row.len()
                )));
            }
        }
        let x = Tensor::from_vec(
            &[fused.len(), width],
            fused.iter().flatten().copied().collect(),
        );
        let probs = softmax(&dense(&relu(&x), &self.head_weight, &self.head_bias)?)?;
        let e = self.classes;
        Ok((0..fused.len())
            .map(|r| probs.data()[r * e..(r + 1) * e].to_vec())
            .collect())
    }

    /// Fuses per-network score rows for item `row` and scores them.
    pub fn score_item(
        &self,
        features: &[ScoreMatrix],
        row: usize,
    ) -> Result<Vec<f64>, FusionError> {
        let parts: Vec<&[f64]> = features.iter().map(|m| m.rows[row].as_slice()).collect();
        let fused = fuse(&parts, &self.weights)?;
        self.forward(&fused)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FusionError> {
        let records = vec![
            CheckpointRecord {
                label: "head.weight".into(),
                dims: self.head_weight.dims().to_vec(),
                data: self.head_weight.data().to_vec(),
            },
            CheckpointRecord {
                label: "head.bias".into(),
                dims: self.head_bias.dims().to_vec(),
                data: self.head_bias.data().to_vec(),
            },
        ];
        write_checkpoint(path, &records, Some(self.weights.as_slice()))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FusionError> {
        let (records, trailer) = read_checkpoint(path)?;
        let weights = FusionWeights::new(
            trailer.ok_or_else(|| FusionError::Checkpoint("no fusion weight record".into()))?,
        )?;
        let mut head_weight = None;
        let mut head_bias = None;
        for r in records {
            match r.label.as_str() {
                "head.weight" => head_weight = Some(Tensor::from_vec(&r.dims, r.data)),
                "head.bias" => head_bias = Some(Tensor::from_vec(&r.dims, r.data)),
                other => {
                    return Err(FusionError::Checkpoint(format!(
                        "unexpected tensor {other}"
                    )))
                }
            }
        }
        let head_weight =
            head_weight.ok_or_else(|| FusionError::Checkpoint("missing head.weight".into()))?;
        let head_bias =
            head_bias.ok_or_else(|| FusionError::Checkpoint("missing head.bias".into()))?;
        let classes = head_bias.len();
        if head_weight.dims() != [classes * weights.eta(), classes] {
            return Err(FusionError::Checkpoint(format!(
                "head weight dims {:?} do not match {} classes x {} networks",
                head_weight.dims(),
                classes,
                weights.eta()
            )));
        }
        Ok(FusionModel {
            weights,
            head_weight,
            head_bias,
            classes,
        })
    }
}

/// The 30-epoch default used to train the fusion head.
pub fn default_fusion_schedule() -> TrainSchedule {
    TrainSchedule {
        epochs: 30,
        batch: 32,
        lr: 0.1,
        momentum: 0.9,
        seed: 1,
    }
}

/// Shorter schedule used per candidate during the weight search.
pub fn default_search_schedule() -> TrainSchedule {
    TrainSchedule {
        epochs: 10,
        batch: 32,
        lr: 0.1,
        momentum: 0.9,
        seed: 7,
    }
}

fn check_alignment(
    features: &[ScoreMatrix],
    labels: &[u32],
) -> Result<(usize, usize), FusionError> {
    if features.len() < 2 {
        return Err(FusionError::TooFewNetworks(features.len()));
    }
    let n = features[0].len();
    let e = features[0].classes;
    if n == 0 {
        return Err(FusionError::Empty("no feature rows".into()));
    }
    for (i, m) in features.iter().enumerate() {
        if m.len() != n {
            return Err(FusionError::LengthMismatch(format!(
                "network {i} has {} rows, network 0 has {n}",
                m.len()
            )));
        }
        if m.classes != e {
            return Err(FusionError::LengthMismatch(format!(
                "network {i} has {} classes, network 0 has {e}",
                m.classes
            )));
        }
    }
    if labels.len() != n {
        return Err(FusionError::LengthMismatch(format!(
            "{} labels for {n} rows",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= e) {
        return Err(FusionError::LengthMismatch(format!(
            "label {bad} out of range for {e} classes"
        )));
    }
    Ok((n, e))
}

fn fused_rows(
    features: &[ScoreMatrix],
    weights: &FusionWeights,
    n: usize,
) -> Result<Vec<Vec<f64>>, FusionError> {
    (0..n)
        .map(|row| {
            let parts: Vec<&[f64]> = features.iter().map(|m| m.rows[row].as_slice()).collect();
            fuse(&parts, weights)
        })
        .collect()
}

/// Trains the fusion head by cross-entropy SGD with the per-network weights
/// held fixed. Returns the model and per-epoch mean loss.
pub fn train_fusion(
    features: &[ScoreMatrix],
    labels: &[u32],
    weights: &FusionWeights,
    sched: &TrainSchedule,
) -> Result<(FusionModel, Vec<f64>), FusionError> {
    sched
        .validate()
        .map_err(|e| FusionError::Empty(e.to_string()))?;
    let (n, e) = check_alignment(features, labels)?;
    if weights.eta() != features.len() {
        return Err(FusionError::LengthMismatch(format!(
            "{} weights for {} networks",
            weights.eta(),
            features.len()
        )));
    }
    let mut model = FusionModel::new(e, weights.clone(), sched.seed)?;
    let fused = fused_rows(features, weights, n)?;
    let width = model.input_width();
    let mut rng = Rng::new(sched.seed ^ 0x5e_ed);
    let mut vel_w = Tensor::zeros(model.head_weight.dims());
    let mut vel_b = Tensor::zeros(model.head_bias.dims());
    let mut history = Vec::with_capacity(sched.epochs);
    for epoch in 0..sched.epochs {
        let cfg = SgdCfg {
            lr: if 3 * epoch >= 2 * sched.epochs {
                sched.lr * 0.1
            } else {
                sched.lr
            },
            momentum: sched.momentum,
        };
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(sched.batch) {
            let x = Tensor::from_vec(
                &[chunk.len(), width],
                chunk
                    .iter()
                    .flat_map(|&i| fused[i].iter().copied())
                    .collect(),
            );
            let batch_labels: Vec<u32> = chunk.iter().map(|&i| labels[i]).collect();
            let activated = relu(&x);
            let probs = softmax(&dense(&activated, &model.head_weight, &model.head_bias)?)?;
            let loss = cross_entropy(&probs, &batch_labels)?;
            let glogits = cross_entropy_logits_grad(&probs, &batch_labels)?;
            let grads = dense_backward(&activated, &model.head_weight, &glogits)?;
            model.head_weight.zero_grad();
            model.head_bias.zero_grad();
            for (g, &v) in model
                .head_weight
                .grad_mut()
                .iter_mut()
                .zip(grads.weight.data())
            {
                *g += v;
            }
            for (g, &v) in model.head_bias.grad_mut().iter_mut().zip(grads.bias.data()) {
                *g += v;
            }
            sgd_step(&mut model.head_weight, &mut vel_w, &cfg);
            sgd_step(&mut model.head_bias, &mut vel_b, &cfg);
            loss_sum += loss * chunk.len() as f64;
        }
        history.push(loss_sum / n as f64);
    }
    Ok((model, history))
}

/// Top-1 accuracy (%) of a fusion model over aligned feature matrices.
pub fn fusion_top1(
    model: &FusionModel,
    features: &[ScoreMatrix],
    labels: &[u32],
) -> Result<f64, FusionError> {
    let (n, _) = check_alignment(features, labels)?;
    let mut hits = 0usize;
    for row in 0..n {
        let scores = model.score_item(features, row)?;
        if predict(&scores)?.index() == labels[row] as usize {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / n as f64)
}

/// All weight vectors on the simplex grid with the given step, in
/// lexicographic order. The step must divide 1 (within 1e-9).
pub fn simplex_grid(step: f64, eta: usize) -> Result<Vec<Vec<f64>>, FusionError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(FusionError::BadStep(step));
    }
    let m = (1.0 / step).round() as usize;
    if m == 0 || ((m as f64) * step - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(FusionError::BadStep(step));
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; eta];
    compositions(m, 0, &mut current, &mut out, step);
    Ok(out)
}

fn compositions(
    left: usize,
    pos: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<f64>>,
    step: f64,
) {
    if pos == current.len() - 1 {
        current[pos] = left;
        out.push(current.iter().map(|&u| u as f64 * step).collect());
        return;
    }
    for units in 0..=left {
        current[pos] = units;
        compositions(left - units, pos + 1, current, out, step);
    }
}

/// Grid search over fusion weights: a head is trained per candidate with a
/// fixed short schedule and the candidate with the best top-1 wins (ties go
/// to the lexicographically smallest weights).
pub fn search_weights(
    features: &[ScoreMatrix],
    labels: &[u32],
    step: f64,
) -> Result<FusionWeights, FusionError> {
    search_weights_with(features, labels, step, &default_search_schedule())
}

pub fn search_weights_with(
    features: &[ScoreMatrix],
    labels: &[u32],
    step: f64,
    sched: &TrainSchedule,
) -> Result<FusionWeights, FusionError> {
    check_alignment(features, labels)?;
    let grid = simplex_grid(step, features.len())?;
    let mut best: Option<(f64, FusionWeights)> = None;
    for candidate in grid {
        let weights = FusionWeights::new(candidate)?;
        let (model, _) = train_fusion(features, labels, &weights, sched)?;
        let accuracy = fusion_top1(&model, features, labels)?;
        let better = match &best {
            None => true,
            Some((best_acc, _)) => accuracy > *best_acc,
        };
        if better {
            best = Some((accuracy, weights));
        }
    }
    Ok(best.expect("grid is never empty").1)
}
