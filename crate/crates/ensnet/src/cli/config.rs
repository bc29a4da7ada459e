//! Schedule config files: a flat JSON object with optional numeric fields
//! `epochs`, `batch`, `lr`, `momentum`, `seed`.

use crate::net::TrainSchedule;
use std::fs;
use std::path::Path;

/// Applies the fields found in the file over `base`.
pub fn load_schedule(path: impl AsRef<Path>, base: TrainSchedule) -> Result<TrainSchedule, String> {
    let text =
        fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.as_ref().display()))?;
    apply_schedule_json(&text, base)
}

pub fn apply_schedule_json(text: &str, mut sched: TrainSchedule) -> Result<TrainSchedule, String> {
    for (key, value) in parse_flat_object(text)? {
        match key.as_str() {
            "epochs" => sched.epochs = as_usize(&value, "epochs")?,
            "batch" => sched.batch = as_usize(&value, "batch")?,
            "lr" => sched.lr = value,
            "momentum" => sched.momentum = value,
            "seed" => sched.seed = as_usize(&value, "seed")? as u64,
            other => return Err(format!("unknown config key {other}")),
        }
    }
    Ok(sched)
}

fn as_usize(v: &f64, key: &str) -> Result<usize, String> {
    if *v < 0.0 || v.fract() != 0.0 {
        return Err(format!(
            "config key {key} must be a nonnegative integer, got {v}"
        ));
    }
    Ok(*v as usize)
}

/// Parses `{ "key": number, ... }` with no nesting.
fn parse_flat_object(text: &str) -> Result<Vec<(String, f64)>, String> {
    let t = text.trim();
    let inner = t
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| "config must be a JSON object".to_string())?;
    let mut out = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, value) = part
            .split_once(':')
            .ok_or_else(|| format!("bad config entry: {part}"))?;
        let key = key.trim().trim_matches('"').to_string();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("bad number for key {key}: {}", value.trim()))?;
        out.push((key, value));
    }
    Ok(out)
}
