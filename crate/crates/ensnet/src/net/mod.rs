//! Networks: preset architectures, instantiation, fine-tuning head
//! replacement, training, and score extraction.

mod network;
mod presets;
mod train;

pub use network::{ForwardTrace, Network, NodeParams};
pub use presets::{build_preset, preset, preset_default_epochs, preset_text, PresetId};
pub use train::{
    extract_scores, network_from_text, replace_head, train, ScoreMatrix, TrainSchedule,
};

use crate::arch::ArchError;
use crate::ops::OpError;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum NetError {
    Arch(ArchError),
    Op(OpError),
    Invalid(String),
}

impl fmt::Display for NetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetError::Arch(e) => write!(f, "{e}"),
            NetError::Op(e) => write!(f, "{e}"),
            NetError::Invalid(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for NetError {}

impl From<ArchError> for NetError {
    fn from(e: ArchError) -> Self {
        NetError::Arch(e)
    }
}

impl From<OpError> for NetError {
    fn from(e: OpError) -> Self {
        NetError::Op(e)
    }
}
