//! Shape inference and parameter counting over an expanded graph.

use super::graph::{LayerGraph, NodeKind, Shape};
use super::ArchError;
use crate::jsonfmt::quote;

/// Ordered (layer label, output shape) pairs plus the sink's feature length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeTrace {
    pub entries: Vec<(String, Shape)>,
    pub feature_len: usize,
}

impl ShapeTrace {
    pub fn shape_of(&self, label: &str) -> Option<Shape> {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|&(_, s)| s)
    }

    pub fn last(&self) -> &(String, Shape) {
        self.entries.last().expect("trace is never empty")
    }

    /// Stable-key-order JSON: layer label, then the shape triple, then the
    /// terminal feature length.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"trace\":[");
        for (i, (label, s)) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"layer\":{},\"w\":{},\"h\":{},\"c\":{}}}",
                quote(label),
                s.w,
                s.h,
                s.c
            ));
        }
        out.push_str(&format!("],\"features\":{}}}", self.feature_len));
        out
    }
}

fn window_out(
    side: usize,
    k: usize,
    stride: usize,
    pad: usize,
    label: &str,
) -> Result<usize, ArchError> {
    let padded = side + 2 * pad;
    if padded < k {
        return Err(ArchError::Shape(format!(
            "{label}: window {k} larger than padded input {padded}"
        )));
    }
    let out = (padded - k) / stride + 1;
    if out == 0 {
        return Err(ArchError::Shape(format!("{label}: output side is zero")));
    }
    Ok(out)
}

/// Computes every node's output shape (w, h, c). Fails on any nonpositive
/// dimension or disagreeing concat/add inputs rather than clamping.
pub fn infer_shapes(graph: &mut LayerGraph) -> Result<ShapeTrace, ArchError> {
    let mut shapes: Vec<Shape> = Vec::with_capacity(graph.nodes.len());
    for node in &graph.nodes {
        let shape = match &node.kind {
            NodeKind::Input { w, h, c } => Shape {
                w: *w,
                h: *h,
                c: *c,
            },
            NodeKind::Conv {
                kernel,
                stride,
                pad,
                filters,
            } => {
                let s = shapes[node.inputs[0]];
                Shape {
                    w: window_out(s.w, *kernel, *stride, *pad, &node.label)?,
                    h: window_out(s.h, *kernel, *stride, *pad, &node.label)?,
                    c: *filters,
                }
            }
            NodeKind::Proj { stride, filters } => {
                let s = shapes[node.inputs[0]];
                Shape {
                    w: window_out(s.w, 1, *stride, 0, &node.label)?,
                    h: window_out(s.h, 1, *stride, 0, &node.label)?,
                    c: *filters,
                }
            }
            NodeKind::Pool {
                window,
                stride,
                pad,
                ..
            } => {
                let s = shapes[node.inputs[0]];
                Shape {
                    w: window_out(s.w, *window, *stride, *pad, &node.label)?,
                    h: window_out(s.h, *window, *stride, *pad, &node.label)?,
                    c: s.c,
                }
            }
            NodeKind::Lrn | NodeKind::BatchNorm | NodeKind::Relu | NodeKind::Softmax => {
                shapes[node.inputs[0]]
            }
            NodeKind::Dense { width } => Shape {
                w: 1,
                h: 1,
                c: *width,
            },
            NodeKind::Concat => {
                let first = shapes[node.inputs[0]];
                let mut c = 0;
                for &i in &node.inputs {
                    let s = shapes[i];
                    if s.w != first.w || s.h != first.h {
                        return Err(ArchError::Shape(format!(
                            "{}: concat inputs disagree on spatial dims ({} vs {})",
                            node.label, first, s
                        )));
                    }
                    c += s.c;
                }
                Shape {
                    w: first.w,
                    h: first.h,
                    c,
                }
            }
            NodeKind::Add => {
                let first = shapes[node.inputs[0]];
                for &i in &node.inputs[1..] {
                    if shapes[i] != first {
                        return Err(ArchError::Shape(format!(
                            "{}: add inputs disagree ({} vs {})",
                            node.label, first, shapes[i]
                        )));
                    }
                }
                first
            }
        };
        shapes.push(shape);
    }
    let entries = graph
        .nodes
        .iter()
        .zip(&shapes)
        .map(|(n, &s)| (n.label.clone(), s))
        .collect::<Vec<_>>();
    let feature_len = shapes[graph.sink()].features();
    graph.set_shapes(shapes);
    Ok(ShapeTrace {
        entries,
        feature_len,
    })
}

/// Per-layer parameter counts and their total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamReport {
    pub entries: Vec<(String, usize)>,
    pub total: usize,
}

impl ParamReport {
    pub fn count_of(&self, label: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|&(_, c)| c)
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"layers\":[");
        for (i, (label, count)) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"layer\":{},\"params\":{}}}",
                quote(label),
                count
            ));
        }
        out.push_str(&format!("],\"total\":{}}}", self.total));
        out
    }
}

/// Counts parameters per node: k^2*c_in*q + q for convolutions, in*out + out
/// for dense layers, 2c for batch norm, zero for everything else.
pub fn count_params(graph: &LayerGraph) -> Result<ParamReport, ArchError> {
    let shapes = graph
        .shapes()
        .ok_or_else(|| ArchError::Shape("count_params called before shape inference".into()))?;
    let mut entries = Vec::with_capacity(graph.nodes.len());
    let mut total = 0usize;
    for node in &graph.nodes {
        let count = match &node.kind {
            NodeKind::Conv {
                kernel, filters, ..
            } => {
                let c_in = shapes[node.inputs[0]].c;
                kernel * kernel * c_in * filters + filters
            }
            NodeKind::Proj { filters, .. } => {
                let c_in = shapes[node.inputs[0]].c;
                c_in * filters + filters
            }
            NodeKind::Dense { width } => {
                let f = shapes[node.inputs[0]].features();
                f * width + width
            }
            NodeKind::BatchNorm => 2 * shapes[node.inputs[0]].c,
            _ => 0,
        };
        total += count;
        entries.push((node.label.clone(), count));
    }
    Ok(ParamReport { entries, total })
}
