//! Evaluation: top-k accuracy, rank-vs-accuracy curves, prediction records,
//! and the binary feature cache.

mod cache;
mod metrics;

pub use cache::{decode_cache, encode_cache, read_cache, write_cache, FeatureCache, CACHE_MAGIC};
pub use metrics::{metrics_json, rank_curve, rank_of, topk_accuracy, EvalReport, PredictionRecord};

use std::fmt;

/// Published top-1/5/10 accuracies (%) on the 101-class food benchmark for
/// three fine-tuned classifiers and their weighted ensemble; shown next to
/// locally computed numbers for context.
pub const REFERENCE_FOOD101: [(&str, [f64; 3]); 4] = [
    ("alexnet", [42.42, 69.46, 80.26]),
    ("googlenet", [53.96, 80.11, 88.04]),
    ("resnet", [67.59, 88.76, 93.79]),
    ("ensemble", [72.12, 91.61, 95.95]),
];

/// Published top-1/5/10 accuracies (%) on the 50-class food benchmark.
pub const REFERENCE_INDIAN_FOOD: [(&str, [f64; 3]); 4] = [
    ("alexnet", [60.40, 90.50, 96.20]),
    ("googlenet", [70.70, 93.40, 97.60]),
    ("resnet", [43.90, 80.60, 91.50]),
    ("ensemble", [73.50, 94.40, 97.60]),
];

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    BadRank(String),
    Empty(String),
    Cache(String),
    Io(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::BadRank(m) => write!(f, "bad rank: {m}"),
            EvalError::Empty(m) => write!(f, "empty input: {m}"),
            EvalError::Cache(m) => write!(f, "cache error: {m}"),
            EvalError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for EvalError {}
