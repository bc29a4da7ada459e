//! Expansion of a parsed description into a primitive-layer graph.
//!
//! Nodes are stored in topological order (every edge points backward), so a
//! plain index walk is a valid execution order. Expansion unrolls residual
//! repetitions, opens inception modules into their four branches, inserts
//! ReLU after every convolution and every non-final fully connected layer,
//! and batch-norm after every convolution when the description contains
//! residual units. The chain ends in an explicit softmax node.

use super::ast::*;
use super::ArchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub w: usize,
    pub h: usize,
    pub c: usize,
}

impl Shape {
    pub fn features(&self) -> usize {
        self.w * self.h * self.c
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.w, self.h, self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Input {
        w: usize,
        h: usize,
        c: usize,
    },
    Conv {
        kernel: usize,
        stride: usize,
        pad: usize,
        filters: usize,
    },
    /// 1x1 shortcut projection; carries weights but is bookkept apart from
    /// the main-path convolutions.
    Proj {
        stride: usize,
        filters: usize,
    },
    Pool {
        window: usize,
        stride: usize,
        pad: usize,
        avg: bool,
    },
    Lrn,
    BatchNorm,
    Relu,
    Dense {
        width: usize,
    },
    Concat,
    Add,
    Softmax,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub label: String,
    pub kind: NodeKind,
    pub inputs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LayerGraph {
    pub nodes: Vec<Node>,
    pub classes: usize,
    shapes: Option<Vec<Shape>>,
}

impl LayerGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Inferred per-node output shapes; `None` before shape inference.
    pub fn shapes(&self) -> Option<&[Shape]> {
        self.shapes.as_deref()
    }

    pub(super) fn set_shapes(&mut self, shapes: Vec<Shape>) {
        self.shapes = Some(shapes);
    }

    /// The unique node consumed by nobody.
    pub fn sink(&self) -> usize {
        let mut consumed = vec![false; self.nodes.len()];
        for n in &self.nodes {
            for &i in &n.inputs {
                consumed[i] = true;
            }
        }
        (0..self.nodes.len())
            .rfind(|&i| !consumed[i])
            .expect("graph has no sink")
    }

    /// Main-path convolution and fully connected layers; the conventional
    /// depth figure for an architecture. Shortcut projections not counted.
    pub fn weighted_layer_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Conv { .. } | NodeKind::Dense { .. }))
            .count()
    }

    pub fn count_kind(&self, pred: impl Fn(&NodeKind) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.kind)).count()
    }

    pub fn node_by_label(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    fn validate(&self) -> Result<(), ArchError> {
        if self.nodes.is_empty() || !matches!(self.nodes[0].kind, NodeKind::Input { .. }) {
            return Err(ArchError::Semantic(
                "graph must start with an input node".into(),
            ));
        }
        let mut sinks = 0;
        let mut consumed = vec![false; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for &j in &n.inputs {
                if j >= i {
                    return Err(ArchError::Semantic(format!(
                        "edge {} -> {} breaks topological order",
                        j, i
                    )));
                }
                consumed[j] = true;
            }
            if i > 0 && n.inputs.is_empty() {
                return Err(ArchError::Semantic(format!(
                    "node {} has no inputs",
                    n.label
                )));
            }
            if matches!(n.kind, NodeKind::Input { .. }) && i != 0 {
                return Err(ArchError::Semantic("more than one input node".into()));
            }
        }
        for (i, c) in consumed.iter().enumerate() {
            if !c && i != self.nodes.len() - 1 {
                sinks += 1;
            }
        }
        if sinks > 0 {
            return Err(ArchError::Semantic("graph has more than one sink".into()));
        }
        Ok(())
    }
}

struct Builder {
    nodes: Vec<Node>,
    conv_n: usize,
    pool_n: usize,
    avgpool_n: usize,
    lrn_n: usize,
    fc_n: usize,
    incep_n: usize,
    res_n: usize,
}

impl Builder {
    fn new() -> Self {
        Builder {
            nodes: Vec::new(),
            conv_n: 0,
            pool_n: 0,
            avgpool_n: 0,
            lrn_n: 0,
            fc_n: 0,
            incep_n: 0,
            res_n: 0,
        }
    }

    fn add(&mut self, label: String, kind: NodeKind, inputs: Vec<usize>) -> usize {
        self.nodes.push(Node {
            label,
            kind,
            inputs,
        });
        self.nodes.len() - 1
    }

    /// conv [+ batchnorm] [+ relu] with labels derived from `label`.
    fn conv_block(
        &mut self,
        label: String,
        decl: &ConvDecl,
        stride: usize,
        from: usize,
        batch_norm: bool,
        with_relu: bool,
    ) -> usize {
        let mut cur = self.add(
            label.clone(),
            NodeKind::Conv {
                kernel: decl.kernel,
                stride,
                pad: decl.pad,
                filters: decl.filters,
            },
            vec![from],
        );
        if batch_norm {
            cur = self.add(format!("{label}.bn"), NodeKind::BatchNorm, vec![cur]);
        }
        if with_relu {
            cur = self.add(format!("{label}.relu"), NodeKind::Relu, vec![cur]);
        }
        cur
    }
}

/// Expands `spec` into a primitive-layer graph with the symbolic class count
/// bound to `classes`.
pub fn expand(spec: &ArchSpec, classes: usize) -> Result<LayerGraph, ArchError> {
    if classes < 2 {
        return Err(ArchError::Semantic(format!(
            "class count must be at least 2, got {classes}"
        )));
    }
    let batch_norm = spec
        .elements
        .iter()
        .any(|e| matches!(e, ElementDecl::Residual(_)));
    let last_fc = spec
        .elements
        .iter()
        .rposition(|e| matches!(e, ElementDecl::Fc(_)));

    let mut b = Builder::new();
    let mut cur = b.add(
        "input".into(),
        NodeKind::Input {
            w: spec.input.width,
            h: spec.input.height,
            c: spec.input.channels,
        },
        vec![],
    );
    let mut cur_ch = spec.input.channels;

    for (idx, el) in spec.elements.iter().enumerate() {
        match el {
            ElementDecl::Conv(c) => {
                b.conv_n += 1;
                let label = format!("conv{}", b.conv_n);
                cur = b.conv_block(label, c, c.stride, cur, batch_norm, true);
                cur_ch = c.filters;
            }
            ElementDecl::Pool(p) => {
                let label = if p.avg {
                    b.avgpool_n += 1;
                    format!("avgpool{}", b.avgpool_n)
                } else {
                    b.pool_n += 1;
                    format!("pool{}", b.pool_n)
                };
                cur = b.add(
                    label,
                    NodeKind::Pool {
                        window: p.window,
                        stride: p.stride,
                        pad: p.pad,
                        avg: p.avg,
                    },
                    vec![cur],
                );
            }
            ElementDecl::Lrn => {
                b.lrn_n += 1;
                cur = b.add(format!("lrn{}", b.lrn_n), NodeKind::Lrn, vec![cur]);
            }
            ElementDecl::Fc(size) => {
                b.fc_n += 1;
                let width = match size {
                    FcSize::Classes => classes,
                    FcSize::Fixed(n) => *n,
                };
                let label = format!("fc{}", b.fc_n);
                cur = b.add(label.clone(), NodeKind::Dense { width }, vec![cur]);
                if Some(idx) != last_fc {
                    cur = b.add(format!("{label}.relu"), NodeKind::Relu, vec![cur]);
                }
                cur_ch = width;
            }
            ElementDecl::Inception(d) => {
                b.incep_n += 1;
                let tag = format!("incep{}", b.incep_n);
                let one = |f| ConvDecl {
                    kernel: 1,
                    stride: 1,
                    filters: f,
                    pad: 0,
                };
                let b1 = b.conv_block(format!("{tag}.c1"), &one(d.c1), 1, cur, batch_norm, true);
                let r3 = b.conv_block(
                    format!("{tag}.r3"),
                    &one(d.reduce3),
                    1,
                    cur,
                    batch_norm,
                    true,
                );
                let b3 = b.conv_block(
                    format!("{tag}.c3"),
                    &ConvDecl {
                        kernel: 3,
                        stride: 1,
                        filters: d.c3,
                        pad: 1,
                    },
                    1,
                    r3,
                    batch_norm,
                    true,
                );
                let r5 = b.conv_block(
                    format!("{tag}.r5"),
                    &one(d.reduce5),
                    1,
                    cur,
                    batch_norm,
                    true,
                );
                let b5 = b.conv_block(
                    format!("{tag}.c5"),
                    &ConvDecl {
                        kernel: 5,
                        stride: 1,
                        filters: d.c5,
                        pad: 2,
                    },
                    1,
                    r5,
                    batch_norm,
                    true,
                );
                let pooled = b.add(
                    format!("{tag}.pool"),
                    NodeKind::Pool {
                        window: 3,
                        stride: 1,
                        pad: 1,
                        avg: false,
                    },
                    vec![cur],
                );
                let bm = b.conv_block(
                    format!("{tag}.mproj"),
                    &one(d.pool_proj),
                    1,
                    pooled,
                    batch_norm,
                    true,
                );
                cur = b.add(format!("{tag}.cat"), NodeKind::Concat, vec![b1, b3, b5, bm]);
                cur_ch = d.out_channels();
            }
            ElementDecl::Residual(r) => {
                for _ in 0..r.repeat {
                    b.res_n += 1;
                    let tag = format!("res{}", b.res_n);
                    let block_stride = r.block_stride();
                    let out_ch = r.out_channels();
                    // the one conv that carries the block's spatial stride:
                    // the first with a kernel above 1, else the first
                    let stride_at = r.convs.iter().position(|c| c.kernel > 1).unwrap_or(0);
                    let entry = cur;
                    let mut chain = cur;
                    let n = r.convs.len();
                    for (j, c) in r.convs.iter().enumerate() {
                        let stride = if block_stride > 1 && j == stride_at {
                            block_stride
                        } else {
                            1
                        };
                        chain = b.conv_block(
                            format!("{tag}.c{}", j + 1),
                            c,
                            stride,
                            chain,
                            batch_norm,
                            j + 1 < n, // the closing relu comes after the add
                        );
                    }
                    let shortcut = if block_stride > 1 || cur_ch != out_ch {
                        let mut s = b.add(
                            format!("{tag}.proj"),
                            NodeKind::Proj {
                                stride: block_stride,
                                filters: out_ch,
                            },
                            vec![entry],
                        );
                        if batch_norm {
                            s = b.add(format!("{tag}.proj.bn"), NodeKind::BatchNorm, vec![s]);
                        }
                        s
                    } else {
                        entry
                    };
                    let added = b.add(format!("{tag}.add"), NodeKind::Add, vec![chain, shortcut]);
                    cur = b.add(format!("{tag}.relu"), NodeKind::Relu, vec![added]);
                    cur_ch = out_ch;
                }
            }
        }
    }
    let _ = cur_ch;
    b.add("softmax".into(), NodeKind::Softmax, vec![cur]);

    let graph = LayerGraph {
        nodes: b.nodes,
        classes,
        shapes: None,
    };
    graph.validate()?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_arch;
    use super::*;

    #[test]
    fn inception_expands_to_four_branches() {
        let spec = parse_arch("I(28,28,192)->D(64,96,128,16,32,32)->F(e)").unwrap();
        let g = expand(&spec, 10).unwrap();
        assert_eq!(g.count_kind(|k| matches!(k, NodeKind::Conv { .. })), 6); // the fc is a dense node
        assert_eq!(g.count_kind(|k| matches!(k, NodeKind::Concat)), 1);
        assert_eq!(g.count_kind(|k| matches!(k, NodeKind::Pool { .. })), 1);
        // no residual units, so no batch norm
        assert_eq!(g.count_kind(|k| matches!(k, NodeKind::BatchNorm)), 0);
    }

    #[test]
    fn residual_spec_gets_batch_norm_everywhere() {
        let spec = parse_arch("I(8,8,16)->R(C(1,1,8)->C(3,1,8)->C(1,1,16))->F(e)").unwrap();
        let g = expand(&spec, 4).unwrap();
        let convs = g.count_kind(|k| matches!(k, NodeKind::Conv { .. }));
        let bns = g.count_kind(|k| matches!(k, NodeKind::BatchNorm));
        assert_eq!(convs, 3);
        assert_eq!(bns, 3); // matching channels: identity shortcut, no projection bn
        assert_eq!(g.count_kind(|k| matches!(k, NodeKind::Proj { .. })), 0);
        assert_eq!(g.count_kind(|k| matches!(k, NodeKind::Add)), 1);
    }

    #[test]
    fn channel_change_forces_projection() {
        let spec = parse_arch("I(8,8,8)->R(C(1,1,8)->C(3,1,8)->C(1,1,16))->F(e)").unwrap();
        let g = expand(&spec, 4).unwrap();
        assert_eq!(g.count_kind(|k| matches!(k, NodeKind::Proj { .. })), 1);
    }

    #[test]
    fn stride_two_lands_on_the_three_by_three_only() {
        let spec = parse_arch("I(8,8,16)->R(C(1,2,8)->C(3,2,8,1)->C(1,2,16))->F(e)").unwrap();
        let g = expand(&spec, 4).unwrap();
        let strides: Vec<(usize, usize)> = g
            .nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Conv { kernel, stride, .. } => Some((kernel, stride)),
                _ => None,
            })
            .collect();
        assert_eq!(strides, vec![(1, 1), (3, 2), (1, 1)]);
        // downsampling shortcut is a stride-2 projection
        let proj = g
            .nodes
            .iter()
            .find_map(|n| match n.kind {
                NodeKind::Proj { stride, filters } => Some((stride, filters)),
                _ => None,
            })
            .unwrap();
        assert_eq!(proj, (2, 16));
    }

    #[test]
    fn repetition_unrolls() {
        let spec = parse_arch("I(8,8,16)->3xR(C(1,1,8)->C(1,1,16))->F(e)").unwrap();
        let g = expand(&spec, 4).unwrap();
        assert_eq!(g.count_kind(|k| matches!(k, NodeKind::Add)), 3);
    }

    #[test]
    fn relu_follows_every_non_final_fc() {
        let spec = parse_arch("I(6,6,4)->F(32)->F(16)->F(e)").unwrap();
        let g = expand(&spec, 4).unwrap();
        assert!(g.node_by_label("fc1.relu").is_some());
        assert!(g.node_by_label("fc2.relu").is_some());
        assert!(g.node_by_label("fc3.relu").is_none());
    }

    #[test]
    fn sink_is_softmax() {
        let spec = parse_arch("I(6,6,4)->F(e)").unwrap();
        let g = expand(&spec, 4).unwrap();
        assert!(matches!(g.nodes[g.sink()].kind, NodeKind::Softmax));
    }

    #[test]
    fn class_count_below_two_is_rejected() {
        let spec = parse_arch("I(6,6,4)->F(e)").unwrap();
        assert!(expand(&spec, 1).is_err());
    }
}
