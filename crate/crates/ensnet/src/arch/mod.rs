//! Architecture notation: parsing, expansion, shape inference, and
//! parameter counting.

mod ast;
mod graph;
mod parser;
mod shape;

pub use ast::{
    ArchSpec, ConvDecl, ElementDecl, FcSize, InceptionDecl, InputDecl, PoolDecl, ResidualDecl,
};
pub use graph::{expand, LayerGraph, Node, NodeKind, Shape};
pub use parser::parse_arch;
pub use shape::{count_params, infer_shapes, ParamReport, ShapeTrace};

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArchError {
    /// Malformed token; offset is in characters from the start of the text.
    Syntax {
        offset: usize,
        message: String,
    },
    Semantic(String),
    Shape(String),
}

impl fmt::Display for ArchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchError::Syntax { offset, message } => {
                write!(f, "syntax error at character {offset}: {message}")
            }
            ArchError::Semantic(m) => write!(f, "semantic error: {m}"),
            ArchError::Shape(m) => write!(f, "shape error: {m}"),
        }
    }
}

impl std::error::Error for ArchError {}
