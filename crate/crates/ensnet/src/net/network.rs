//! A layer graph bound to parameters: initialization, batched forward in
//! train or inference mode, backpropagation, and checkpoint conversion.

use crate::arch::{ArchError, LayerGraph, NodeKind, Shape};
use crate::checkpoint::CheckpointRecord;
use crate::ops::{
    batchnorm_backward, batchnorm_infer, batchnorm_train, conv2d, conv2d_backward, cross_entropy,
    cross_entropy_logits_grad, dense, dense_backward, lrn, lrn_backward, pool2d, pool2d_backward,
    relu, relu_backward, softmax, BnCache, BnState, Conv2dCfg, LrnParams, OpError, Pool2dCfg,
    PoolMode,
};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::NetError;

#[derive(Debug, Clone)]
pub enum NodeParams {
    None,
    Conv { weight: Tensor, bias: Tensor },
    Dense { weight: Tensor, bias: Tensor },
    Bn(BnState),
}

#[derive(Debug, Clone)]
pub struct Network {
    graph: LayerGraph,
    params: Vec<NodeParams>,
    classes: usize,
    lrn: LrnParams,
}

/// Activations and batch-norm caches from a training-mode forward pass.
pub struct ForwardTrace {
    acts: Vec<Tensor>,
    bn_caches: Vec<Option<BnCache>>,
}

fn he_uniform(rng: &mut Rng, dims: &[usize], fan_in: usize) -> Tensor {
    let limit = (6.0 / fan_in as f64).sqrt();
    let n: usize = dims.iter().product();
    Tensor::from_vec(dims, (0..n).map(|_| rng.uniform(-limit, limit)).collect())
}

fn conv_cfg(kind: &NodeKind) -> Option<Conv2dCfg> {
    match *kind {
        NodeKind::Conv {
            kernel,
            stride,
            pad,
            ..
        } => Some(Conv2dCfg {
            kernel,
            stride,
            pad,
        }),
        NodeKind::Proj { stride, .. } => Some(Conv2dCfg {
            kernel: 1,
            stride,
            pad: 0,
        }),
        _ => None,
    }
}

impl Network {
    /// Initializes parameters for a shape-inferred graph. Weights are
    /// He-uniform over fan-in, biases zero, batch-norm scale 1 / shift 0.
    pub fn init(graph: LayerGraph, seed: u64) -> Result<Network, NetError> {
        let shapes = graph
            .shapes()
            .ok_or_else(|| ArchError::Shape("network init needs inferred shapes".into()))?
            .to_vec();
        let classes = graph.classes;
        let mut rng = Rng::new(seed);
        let mut params = Vec::with_capacity(graph.nodes.len());
        for node in &graph.nodes {
            let p = match &node.kind {
                NodeKind::Conv {
                    kernel, filters, ..
                } => {
                    let c_in = shapes[node.inputs[0]].c;
                    let fan_in = kernel * kernel * c_in;
                    NodeParams::Conv {
                        weight: he_uniform(&mut rng, &[*kernel, *kernel, c_in, *filters], fan_in),
                        bias: Tensor::zeros(&[*filters]),
                    }
                }
                NodeKind::Proj { filters, .. } => {
                    let c_in = shapes[node.inputs[0]].c;
                    NodeParams::Conv {
                        weight: he_uniform(&mut rng, &[1, 1, c_in, *filters], c_in),
                        bias: Tensor::zeros(&[*filters]),
                    }
                }
                NodeKind::Dense { width } => {
                    let f = shapes[node.inputs[0]].features();
                    NodeParams::Dense {
                        weight: he_uniform(&mut rng, &[f, *width], f),
                        bias: Tensor::zeros(&[*width]),
                    }
                }
                NodeKind::BatchNorm => NodeParams::Bn(BnState::new(shapes[node.inputs[0]].c)),
                _ => NodeParams::None,
            };
            params.push(p);
        }
        Ok(Network {
            graph,
            params,
            classes,
            lrn: LrnParams::default(),
        })
    }

    pub fn graph(&self) -> &LayerGraph {
        &self.graph
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn params(&self) -> &[NodeParams] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [NodeParams] {
        &mut self.params
    }

    pub fn input_shape(&self) -> Shape {
        match self.graph.nodes[0].kind {
            NodeKind::Input { w, h, c } => Shape { w, h, c },
            _ => unreachable!("node 0 is always the input"),
        }
    }

    fn check_input(&self, input: &Tensor) -> Result<(), NetError> {
        let s = self.input_shape();
        let (_, h, w, c) = input.dims4();
        if h != s.h || w != s.w || c != s.c {
            return Err(NetError::Op(OpError::ShapeMismatch(format!(
                "network expects {}x{}x{} input, got {}x{}x{}",
                s.w, s.h, s.c, w, h, c
            ))));
        }
        Ok(())
    }

    /// Evaluates every node except batch norm, which depends on the mode.
    fn eval_stateless(&self, id: usize, acts: &[Tensor]) -> Result<Option<Tensor>, NetError> {
        let node = &self.graph.nodes[id];
        let x = &acts[node.inputs[0]];
        let out = match &node.kind {
            NodeKind::Input { .. } | NodeKind::BatchNorm => return Ok(None),
            NodeKind::Conv { .. } | NodeKind::Proj { .. } => {
                let (weight, bias) = self.conv_params(id);
                conv2d(x, weight, bias, conv_cfg(&node.kind).unwrap())?
            }
            NodeKind::Pool {
                window,
                stride,
                pad,
                avg,
            } => {
                let mode = if *avg { PoolMode::Avg } else { PoolMode::Max };
                pool2d(
                    x,
                    Pool2dCfg {
                        window: *window,
                        stride: *stride,
                        pad: *pad,
                        mode,
                    },
                )?
            }
            NodeKind::Lrn => lrn(x, &self.lrn)?,
            NodeKind::Relu => relu(x),
            NodeKind::Dense { .. } => {
                let (weight, bias) = self.dense_params(id);
                dense(x, weight, bias)?
            }
            NodeKind::Concat => {
                let parts: Vec<&Tensor> = node.inputs.iter().map(|&i| &acts[i]).collect();
                concat_channels(&parts)?
            }
            NodeKind::Add => {
                let mut sum = acts[node.inputs[0]].clone();
                for &i in &node.inputs[1..] {
                    if acts[i].dims() != sum.dims() {
                        return Err(NetError::Op(OpError::ShapeMismatch(format!(
                            "{}: add inputs disagree",
                            node.label
                        ))));
                    }
                    for (o, &v) in sum.data_mut().iter_mut().zip(acts[i].data()) {
                        *o += v;
                    }
                }
                sum
            }
            NodeKind::Softmax => softmax(&flatten_rows(x))?,
        };
        Ok(Some(out))
    }

    fn conv_params(&self, id: usize) -> (&Tensor, &Tensor) {
        match &self.params[id] {
            NodeParams::Conv { weight, bias } => (weight, bias),
            _ => unreachable!("conv node without conv params"),
        }
    }

    fn dense_params(&self, id: usize) -> (&Tensor, &Tensor) {
        match &self.params[id] {
            NodeParams::Dense { weight, bias } => (weight, bias),
            _ => unreachable!("dense node without dense params"),
        }
    }

    /// Training-mode forward keeping every activation. Batch norm uses batch
    /// statistics and updates the running ones.
    pub fn forward_trace(&mut self, input: &Tensor) -> Result<ForwardTrace, NetError> {
        self.check_input(input)?;
        let n = self.graph.nodes.len();
        let mut acts: Vec<Tensor> = Vec::with_capacity(n);
        let mut bn_caches: Vec<Option<BnCache>> = vec![None; n];
        acts.push(input.clone());
        for id in 1..n {
            let out = match self.eval_stateless(id, &acts)? {
                Some(out) => out,
                None => {
                    let x = &acts[self.graph.nodes[id].inputs[0]];
                    match &mut self.params[id] {
                        NodeParams::Bn(state) => {
                            let (y, cache) = batchnorm_train(x, state)?;
                            bn_caches[id] = Some(cache);
                            y
                        }
                        _ => unreachable!("only batch norm defers to the stateful path"),
                    }
                }
            };
            acts.push(out);
        }
        Ok(ForwardTrace { acts, bn_caches })
    }

    /// Inference: batch of images in, softmax score rows out. Frozen
    /// batch-norm statistics; no state is touched.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NetError> {
        self.check_input(input)?;
        let n = self.graph.nodes.len();
        let mut acts: Vec<Tensor> = Vec::with_capacity(n);
        acts.push(input.clone());
        for id in 1..n {
            let out = match self.eval_stateless(id, &acts)? {
                Some(out) => out,
                None => {
                    let x = &acts[self.graph.nodes[id].inputs[0]];
                    match &self.params[id] {
                        NodeParams::Bn(state) => batchnorm_infer(x, state)?,
                        _ => unreachable!(),
                    }
                }
            };
            acts.push(out);
        }
        Ok(acts.pop().unwrap())
    }

    /// Backpropagates cross-entropy through the trace, accumulating
    /// parameter gradients. Returns the batch loss.
    pub fn backward(&mut self, trace: &ForwardTrace, labels: &[u32]) -> Result<f64, NetError> {
        let sink = self.graph.sink();
        let probs = &trace.acts[sink];
        let loss = cross_entropy(probs, labels)?;
        let n = self.graph.nodes.len();
        let mut grads: Vec<Option<Tensor>> = vec![None; n];
        // fused softmax + cross-entropy: seed the gradient at the logits
        let logits_id = self.graph.nodes[sink].inputs[0];
        let seed = cross_entropy_logits_grad(probs, labels)?;
        grads[logits_id] = Some(reshape_like(seed, trace.acts[logits_id].dims()));

        for id in (1..n).rev() {
            if id == sink {
                continue;
            }
            let g = match grads[id].take() {
                Some(g) => g,
                None => continue,
            };
            let node = self.graph.nodes[id].clone();
            let x_id = node.inputs[0];
            match &node.kind {
                NodeKind::Conv { .. } | NodeKind::Proj { .. } => {
                    let cfg = conv_cfg(&node.kind).unwrap();
                    let (weight, _) = self.conv_params(id);
                    let out = conv2d_backward(&trace.acts[x_id], weight, cfg, &g)?;
                    accumulate(&mut grads[x_id], out.input);
                    match &mut self.params[id] {
                        NodeParams::Conv { weight, bias } => {
                            add_into_grad(weight, out.weight.data());
                            add_into_grad(bias, out.bias.data());
                        }
                        _ => unreachable!(),
                    }
                }
                NodeKind::Dense { .. } => {
                    let (weight, _) = self.dense_params(id);
                    let out = dense_backward(&trace.acts[x_id], weight, &g)?;
                    accumulate(&mut grads[x_id], out.input);
                    match &mut self.params[id] {
                        NodeParams::Dense { weight, bias } => {
                            add_into_grad(weight, out.weight.data());
                            add_into_grad(bias, out.bias.data());
                        }
                        _ => unreachable!(),
                    }
                }
                NodeKind::Pool {
                    window,
                    stride,
                    pad,
                    avg,
                } => {
                    let mode = if *avg { PoolMode::Avg } else { PoolMode::Max };
                    let cfg = Pool2dCfg {
                        window: *window,
                        stride: *stride,
                        pad: *pad,
                        mode,
                    };
                    let gx = pool2d_backward(&trace.acts[x_id], cfg, &g)?;
                    accumulate(&mut grads[x_id], gx);
                }
                NodeKind::Lrn => {
                    let gx = lrn_backward(&trace.acts[x_id], &self.lrn, &g)?;
                    accumulate(&mut grads[x_id], gx);
                }
                NodeKind::Relu => {
                    let gx = relu_backward(&trace.acts[x_id], &g)?;
                    accumulate(&mut grads[x_id], gx);
                }
                NodeKind::BatchNorm => {
                    let cache = trace.bn_caches[id].as_ref().ok_or_else(|| {
                        NetError::Invalid("backward without train forward".into())
                    })?;
                    let out = match &self.params[id] {
                        NodeParams::Bn(state) => {
                            batchnorm_backward(&trace.acts[x_id], state, cache, &g)?
                        }
                        _ => unreachable!(),
                    };
                    accumulate(&mut grads[x_id], out.input);
                    match &mut self.params[id] {
                        NodeParams::Bn(state) => {
                            add_into_grad(&mut state.gamma, out.gamma.data());
                            add_into_grad(&mut state.beta, out.beta.data());
                        }
                        _ => unreachable!(),
                    }
                }
                NodeKind::Add => {
                    for &i in &node.inputs {
                        accumulate(&mut grads[i], g.clone());
                    }
                }
                NodeKind::Concat => {
                    let (b, h, w, total_c) = g.dims4();
                    let mut offset = 0;
                    for &i in &node.inputs {
                        let ci = trace.acts[i].dims4().3;
                        let mut part = Tensor::zeros(trace.acts[i].dims());
                        {
                            let pd = part.data_mut();
                            let gd = g.data();
                            for bi in 0..b {
                                for y in 0..h {
                                    for xk in 0..w {
                                        let src = ((bi * h + y) * w + xk) * total_c + offset;
                                        let dst = ((bi * h + y) * w + xk) * ci;
                                        pd[dst..dst + ci].copy_from_slice(&gd[src..src + ci]);
                                    }
                                }
                            }
                        }
                        offset += ci;
                        accumulate(&mut grads[i], part);
                    }
                }
                NodeKind::Input { .. } | NodeKind::Softmax => {}
            }
        }
        Ok(loss)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            match p {
                NodeParams::Conv { weight, bias } | NodeParams::Dense { weight, bias } => {
                    weight.zero_grad();
                    bias.zero_grad();
                }
                NodeParams::Bn(state) => {
                    state.gamma.zero_grad();
                    state.beta.zero_grad();
                }
                NodeParams::None => {}
            }
        }
    }

    /// Persistable tensors with their labels, in node order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (node, p) in self.graph.nodes.iter().zip(&self.params) {
            match p {
                NodeParams::Conv { weight, bias } | NodeParams::Dense { weight, bias } => {
                    out.push((format!("{}.weight", node.label), weight));
                    out.push((format!("{}.bias", node.label), bias));
                }
                NodeParams::Bn(state) => {
                    out.push((format!("{}.gamma", node.label), &state.gamma));
                    out.push((format!("{}.beta", node.label), &state.beta));
                    out.push((format!("{}.running_mean", node.label), &state.running_mean));
                    out.push((format!("{}.running_var", node.label), &state.running_var));
                }
                NodeParams::None => {}
            }
        }
        out
    }

    pub fn to_records(&self) -> Vec<CheckpointRecord> {
        self.named_tensors()
            .into_iter()
            .map(|(label, t)| CheckpointRecord {
                label,
                dims: t.dims().to_vec(),
                data: t.data().to_vec(),
            })
            .collect()
    }

    /// Loads parameter values from checkpoint records; every record must
    /// match a tensor label and shape, and every tensor must be covered.
    pub fn load_records(&mut self, records: &[CheckpointRecord]) -> Result<(), NetError> {
        use std::collections::HashMap;
        let mut by_label: HashMap<&str, &CheckpointRecord> =
            records.iter().map(|r| (r.label.as_str(), r)).collect();
        let labels: Vec<String> = self
            .named_tensors()
            .iter()
            .map(|(l, _)| l.clone())
            .collect();
        for label in &labels {
            let rec = by_label.remove(label.as_str()).ok_or_else(|| {
                NetError::Invalid(format!("checkpoint is missing tensor {label}"))
            })?;
            let t = self.tensor_mut(label).expect("label enumerated above");
            if rec.dims != t.dims() {
                return Err(NetError::Invalid(format!(
                    "checkpoint tensor {label} has dims {:?}, expected {:?}",
                    rec.dims,
                    t.dims()
                )));
            }
            t.data_mut().copy_from_slice(&rec.data);
        }
        if let Some((label, _)) = by_label.into_iter().next() {
            return Err(NetError::Invalid(format!(
                "checkpoint has unknown tensor {label}"
            )));
        }
        Ok(())
    }

    fn tensor_mut(&mut self, label: &str) -> Option<&mut Tensor> {
        let (node_label, field) = label.rsplit_once('.')?;
        let id = self.graph.node_by_label(node_label)?;
        match (&mut self.params[id], field) {
            (NodeParams::Conv { weight, .. }, "weight")
            | (NodeParams::Dense { weight, .. }, "weight") => Some(weight),
            (NodeParams::Conv { bias, .. }, "bias") | (NodeParams::Dense { bias, .. }, "bias") => {
                Some(bias)
            }
            (NodeParams::Bn(st), "gamma") => Some(&mut st.gamma),
            (NodeParams::Bn(st), "beta") => Some(&mut st.beta),
            (NodeParams::Bn(st), "running_mean") => Some(&mut st.running_mean),
            (NodeParams::Bn(st), "running_var") => Some(&mut st.running_var),
            _ => None,
        }
    }
}

impl ForwardTrace {
    pub fn scores(&self) -> &Tensor {
        self.acts.last().unwrap()
    }

    pub fn activation(&self, id: usize) -> &Tensor {
        &self.acts[id]
    }
}

fn reshape_like(t: Tensor, dims: &[usize]) -> Tensor {
    Tensor::from_vec(dims, t.data().to_vec())
}

fn flatten_rows(x: &Tensor) -> Tensor {
    Tensor::from_vec(&[x.batch(), x.features()], x.data().to_vec())
}

fn concat_channels(parts: &[&Tensor]) -> Result<Tensor, OpError> {
    let (b, h, w, _) = parts[0].dims4();
    let mut total_c = 0;
    for p in parts {
        let (pb, ph, pw, pc) = p.dims4();
        if (pb, ph, pw) != (b, h, w) {
            return Err(OpError::ShapeMismatch(
                "concat inputs disagree on spatial dims".into(),
            ));
        }
        total_c += pc;
    }
    let mut out = Tensor::zeros(&[b, h, w, total_c]);
    let od = out.data_mut();
    for bi in 0..b {
        for y in 0..h {
            for x in 0..w {
                let mut offset = 0;
                for p in parts {
                    let pc = p.dims4().3;
                    let src = ((bi * h + y) * w + x) * pc;
                    let dst = ((bi * h + y) * w + x) * total_c + offset;
                    od[dst..dst + pc].copy_from_slice(&p.data()[src..src + pc]);
                    offset += pc;
                }
            }
        }
    }
    Ok(out)
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) {
    match slot {
        None => *slot = Some(g),
        Some(acc) => {
            for (a, &v) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += v;
            }
        }
    }
}

fn add_into_grad(param: &mut Tensor, grad: &[f64]) {
    for (g, &v) in param.grad_mut().iter_mut().zip(grad) {
        *g += v;
    }
}
