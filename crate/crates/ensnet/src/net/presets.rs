//! Preset architecture descriptions.
//!
//! The three full presets are the classic 8-layer, inception, and 50-layer
//! residual classifiers; spatial paddings that the notation leaves implicit
//! are written out where the defaults would not reproduce the published
//! feature-map sizes. The tiny-* presets exercise the same layer types at
//! 32x32 scale (under 200k parameters) so the whole pipeline can train on a
//! desktop in seconds.

use super::network::Network;
use super::NetError;
use crate::arch::{expand, infer_shapes, parse_arch, ArchError, ArchSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetId {
    Alexnet,
    Googlenet,
    Resnet50,
    TinyA,
    TinyG,
    TinyR,
}

impl PresetId {
    pub const ALL: [PresetId; 6] = [
        PresetId::Alexnet,
        PresetId::Googlenet,
        PresetId::Resnet50,
        PresetId::TinyA,
        PresetId::TinyG,
        PresetId::TinyR,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PresetId::Alexnet => "alexnet",
            PresetId::Googlenet => "googlenet",
            PresetId::Resnet50 => "resnet50",
            PresetId::TinyA => "tiny-a",
            PresetId::TinyG => "tiny-g",
            PresetId::TinyR => "tiny-r",
        }
    }
}

impl std::str::FromStr for PresetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alexnet" => Ok(PresetId::Alexnet),
            "googlenet" => Ok(PresetId::Googlenet),
            "resnet50" => Ok(PresetId::Resnet50),
            "tiny-a" => Ok(PresetId::TinyA),
            "tiny-g" => Ok(PresetId::TinyG),
            "tiny-r" => Ok(PresetId::TinyR),
            other => Err(format!(
                "unknown preset {other}; expected one of alexnet, googlenet, resnet50, tiny-a, tiny-g, tiny-r"
            )),
        }
    }
}

impl std::fmt::Display for PresetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The description text shipped with the crate.
pub fn preset_text(id: PresetId) -> &'static str {
    match id {
        PresetId::Alexnet => include_str!("../../assets/alexnet.arch"),
        PresetId::Googlenet => include_str!("../../assets/googlenet.arch"),
        PresetId::Resnet50 => include_str!("../../assets/resnet50.arch"),
        PresetId::TinyA => include_str!("../../assets/tiny_a.arch"),
        PresetId::TinyG => include_str!("../../assets/tiny_g.arch"),
        PresetId::TinyR => include_str!("../../assets/tiny_r.arch"),
    }
}

/// Parses the preset's description.
pub fn preset(id: PresetId) -> Result<ArchSpec, ArchError> {
    parse_arch(preset_text(id).trim())
}

/// Default training epochs: 16 for the 8-layer family, 20 for the inception
/// and residual families; tiny presets mirror their full counterparts.
pub fn preset_default_epochs(id: PresetId) -> usize {
    match id {
        PresetId::Alexnet | PresetId::TinyA => 16,
        PresetId::Googlenet | PresetId::TinyG => 20,
        PresetId::Resnet50 | PresetId::TinyR => 20,
    }
}

/// Parse + expand + infer + initialize in one step.
pub fn build_preset(id: PresetId, classes: usize, seed: u64) -> Result<Network, NetError> {
    let spec = preset(id)?;
    let mut graph = expand(&spec, classes)?;
    infer_shapes(&mut graph)?;
    Network::init(graph, seed)
}
