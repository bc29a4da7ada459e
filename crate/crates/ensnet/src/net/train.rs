//! Head replacement, the training loop, and score extraction.

use super::network::{Network, NodeParams};
use super::NetError;
use crate::arch::{expand, infer_shapes, parse_arch, NodeKind};
use crate::image::{image_to_input_rows, LabeledSet};
use crate::ops::{sgd_step, SgdCfg};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Epochs, batch size, learning rate, momentum, and the shuffle/init seed.
/// The learning rate decays by 10x once two thirds of the epochs are done.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            epochs: 16,
            batch: 32,
            lr: 0.01,
            momentum: 0.9,
            seed: 1,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.epochs == 0 {
            return Err(NetError::Invalid("schedule needs at least 1 epoch".into()));
        }
        if self.batch == 0 {
            return Err(NetError::Invalid(
                "schedule needs a positive batch size".into(),
            ));
        }
        // lr == 0 is allowed: it freezes parameters, which tests rely on
        let nonneg = |x: f64| x >= 0.0 && x.is_finite();
        if !nonneg(self.lr) || !nonneg(self.momentum) {
            return Err(NetError::Invalid(
                "learning rate and momentum must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        if 3 * epoch >= 2 * self.epochs {
            self.lr * 0.1
        } else {
            self.lr
        }
    }
}

/// Softmax score rows for a batch of items, all of length `classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub classes: usize,
    pub rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn batch_tensor(rows: &[Vec<f64>], h: usize, w: usize, c: usize) -> Tensor {
    let mut data = Vec::with_capacity(rows.len() * h * w * c);
    for r in rows {
        data.extend_from_slice(r);
    }
    Tensor::from_vec(&[rows.len(), h, w, c], data)
}

fn prepare_inputs(net: &Network, data: &LabeledSet) -> Vec<Vec<f64>> {
    let shape = net.input_shape();
    data.items
        .iter()
        .map(|item| image_to_input_rows(&item.image, shape.w, shape.h))
        .collect()
}

struct Velocities(Vec<Option<(Tensor, Tensor)>>);

impl Velocities {
    fn for_net(net: &Network) -> Self {
        Velocities(
            net.params()
                .iter()
                .map(|p| match p {
                    NodeParams::Conv { weight, bias } | NodeParams::Dense { weight, bias } => {
                        Some((Tensor::zeros(weight.dims()), Tensor::zeros(bias.dims())))
                    }
                    NodeParams::Bn(st) => Some((
                        Tensor::zeros(st.gamma.dims()),
                        Tensor::zeros(st.beta.dims()),
                    )),
                    NodeParams::None => None,
                })
                .collect(),
        )
    }

    fn step(&mut self, net: &mut Network, cfg: &SgdCfg) {
        for (p, v) in net.params_mut().iter_mut().zip(self.0.iter_mut()) {
            match (p, v) {
                (NodeParams::Conv { weight, bias }, Some((vw, vb)))
                | (NodeParams::Dense { weight, bias }, Some((vw, vb))) => {
                    sgd_step(weight, vw, cfg);
                    sgd_step(bias, vb, cfg);
                }
                (NodeParams::Bn(st), Some((vg, vb))) => {
                    sgd_step(&mut st.gamma, vg, cfg);
                    sgd_step(&mut st.beta, vb, cfg);
                }
                _ => {}
            }
        }
    }
}

/// Minibatch SGD over the labeled set. Returns the trained network and the
/// per-epoch mean loss. Deterministic for a given schedule seed.
pub fn train(
    mut net: Network,
    data: &LabeledSet,
    sched: &TrainSchedule,
) -> Result<(Network, Vec<f64>), NetError> {
    sched.validate()?;
    if data.is_empty() {
        return Err(NetError::Invalid("training set is empty".into()));
    }
    let labels = data.labels();
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= net.classes()) {
        return Err(NetError::Invalid(format!(
            "label {bad} out of range for {} classes",
            net.classes()
        )));
    }
    let shape = net.input_shape();
    let inputs = prepare_inputs(&net, data);
    let mut rng = Rng::new(sched.seed);
    let mut velocities = Velocities::for_net(&net);
    let mut history = Vec::with_capacity(sched.epochs);
    let n = data.len();
    for epoch in 0..sched.epochs {
        let cfg = SgdCfg {
            lr: sched.lr_at(epoch),
            momentum: sched.momentum,
        };
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(sched.batch) {
            let rows: Vec<Vec<f64>> = chunk.iter().map(|&i| inputs[i].clone()).collect();
            let batch_labels: Vec<u32> = chunk.iter().map(|&i| labels[i]).collect();
            let x = batch_tensor(&rows, shape.h, shape.w, shape.c);
            net.zero_grads();
            let trace = net.forward_trace(&x)?;
            let loss = net.backward(&trace, &batch_labels)?;
            velocities.step(&mut net, &cfg);
            loss_sum += loss * chunk.len() as f64;
        }
        history.push(loss_sum / n as f64);
    }
    Ok((net, history))
}

/// Swaps the final fully connected layer for a freshly initialized one of
/// width `new_classes`; every other parameter is preserved bitwise.
pub fn replace_head(net: &Network, new_classes: usize, seed: u64) -> Result<Network, NetError> {
    if new_classes < 2 {
        return Err(NetError::Invalid(format!(
            "head must have at least 2 classes, got {new_classes}"
        )));
    }
    let graph = net.graph();
    let sink = graph.sink();
    let head_id = graph.nodes[sink].inputs[0];
    if !matches!(graph.nodes[head_id].kind, NodeKind::Dense { .. }) {
        return Err(NetError::Invalid(
            "network has no final dense layer to replace".into(),
        ));
    }
    // rebuild the graph from the same description shape with the new width
    let mut new_graph = graph.clone();
    new_graph.nodes[head_id].kind = NodeKind::Dense { width: new_classes };
    new_graph.classes = new_classes;
    let spec_like = infer_on(new_graph)?;
    let mut fresh = Network::init(spec_like, seed)?;
    // carry over everything except the head
    let head_label = graph.nodes[head_id].label.clone();
    let records: Vec<_> = net
        .to_records()
        .into_iter()
        .filter(|r| {
            r.label != format!("{head_label}.weight") && r.label != format!("{head_label}.bias")
        })
        .collect();
    let head_records: Vec<_> = fresh
        .to_records()
        .into_iter()
        .filter(|r| {
            r.label == format!("{head_label}.weight") || r.label == format!("{head_label}.bias")
        })
        .collect();
    let mut all = records;
    all.extend(head_records);
    fresh.load_records(&all)?;
    Ok(fresh)
}

fn infer_on(mut graph: crate::arch::LayerGraph) -> Result<crate::arch::LayerGraph, NetError> {
    infer_shapes(&mut graph)?;
    Ok(graph)
}

/// Runs inference over the set and returns one softmax score row per item.
pub fn extract_scores(net: &Network, data: &LabeledSet) -> Result<ScoreMatrix, NetError> {
    let shape = net.input_shape();
    let inputs = prepare_inputs(net, data);
    let mut rows = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(16) {
        let x = batch_tensor(chunk, shape.h, shape.w, shape.c);
        let scores = net.forward(&x)?;
        let e = net.classes();
        for r in 0..chunk.len() {
            rows.push(scores.data()[r * e..(r + 1) * e].to_vec());
        }
    }
    Ok(ScoreMatrix {
        classes: net.classes(),
        rows,
    })
}

/// Builds a network directly from a description text.
pub fn network_from_text(text: &str, classes: usize, seed: u64) -> Result<Network, NetError> {
    let spec = parse_arch(text)?;
    let mut graph = expand(&spec, classes)?;
    infer_shapes(&mut graph)?;
    Network::init(graph, seed)
}
