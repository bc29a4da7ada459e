//! Synthetic labeled images for desk-scale training runs.
//!
//! Each class gets a distinct dominant hue and stripe pattern (frequency and
//! orientation), so small networks can separate classes from color and
//! texture alone. Generation is bitwise deterministic for a given seed.

use super::dataset::{LabeledItem, LabeledSet};
use super::hsv::{hsv_to_rgb, Hsv};
use super::{Image, ImageError};
use crate::rng::Rng;

/// Dominant hue assigned to class `k` of `classes`: evenly spaced around
/// the wheel, so spacing is 360/classes degrees (>= 30 up to 12 classes).
pub fn synthetic_class_hue(classes: usize, k: usize) -> f64 {
    360.0 * k as f64 / classes as f64
}

pub fn generate_synthetic(
    classes: usize,
    per_class: usize,
    size: usize,
    seed: u64,
) -> Result<LabeledSet, ImageError> {
    if classes < 2 {
        return Err(ImageError::Data(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if per_class == 0 || size == 0 {
        return Err(ImageError::Data(
            "per-class count and size must be positive".into(),
        ));
    }
    let mut master = Rng::new(seed);
    let mut items = Vec::with_capacity(classes * per_class);
    for k in 0..classes {
        let hue = synthetic_class_hue(classes, k);
        let freq = 1.5 + 0.75 * k as f64;
        let angle = std::f64::consts::PI * k as f64 / classes as f64;
        let (dir_x, dir_y) = (angle.cos(), angle.sin());
        for i in 0..per_class {
            let mut rng = master.split();
            let phase = rng.uniform(0.0, std::f64::consts::TAU);
            let sat = rng.uniform(0.55, 0.9);
            let hue_shift = rng.uniform(-12.0, 12.0);
            let img = Image::from_fn(size, size, |x, y| {
                let t = (x as f64 * dir_x + y as f64 * dir_y) / size as f64;
                let wave = (std::f64::consts::TAU * freq * t + phase).sin();
                let v = 150.0 + 85.0 * wave;
                let h = hue + hue_shift;
                hsv_to_rgb(Hsv {
                    h: h.rem_euclid(360.0),
                    s: sat,
                    v: v.clamp(0.0, 255.0) as u8,
                })
            });
            items.push(LabeledItem {
                name: format!("class{k:02}/img{i:03}.ppm"),
                image: img,
                label: k as u32,
            });
        }
    }
    Ok(LabeledSet {
        classes: (0..classes).map(|k| format!("class{k:02}")).collect(),
        items,
    })
}
