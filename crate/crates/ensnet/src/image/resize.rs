//! Bilinear resize (half-pixel centers), jitter augmentation, and the
//! image-to-network-input path (shorter side to target, center crop,
//! channels scaled to [0, 1]).

use super::{Image, ImageError};
use crate::rng::Rng;

/// Bilinear resample with half-pixel-center sampling. Resizing to the
/// source dimensions is a bitwise identity.
pub fn resize(img: &Image, new_w: usize, new_h: usize) -> Image {
    assert!(
        new_w >= 1 && new_h >= 1,
        "resize target must be at least 1x1"
    );
    if new_w == img.width() && new_h == img.height() {
        return img.clone();
    }
    let sx_scale = img.width() as f64 / new_w as f64;
    let sy_scale = img.height() as f64 / new_h as f64;
    Image::from_fn(new_w, new_h, |x, y| {
        let sx = ((x as f64 + 0.5) * sx_scale - 0.5).clamp(0.0, (img.width() - 1) as f64);
        let sy = ((y as f64 + 0.5) * sy_scale - 0.5).clamp(0.0, (img.height() - 1) as f64);
        let x0 = sx.floor() as usize;
        let y0 = sy.floor() as usize;
        let x1 = (x0 + 1).min(img.width() - 1);
        let y1 = (y0 + 1).min(img.height() - 1);
        let fx = sx - x0 as f64;
        let fy = sy - y0 as f64;
        let mut out = [0u8; 3];
        for c in 0..3 {
            let p00 = img.get(x0, y0)[c] as f64;
            let p10 = img.get(x1, y0)[c] as f64;
            let p01 = img.get(x0, y1)[c] as f64;
            let p11 = img.get(x1, y1)[c] as f64;
            let top = p00 * (1.0 - fx) + p10 * fx;
            let bottom = p01 * (1.0 - fx) + p11 * fx;
            out[c] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
        }
        out
    })
}

fn flip_horizontal(img: &Image) -> Image {
    Image::from_fn(img.width(), img.height(), |x, y| {
        img.get(img.width() - 1 - x, y)
    })
}

fn crop(img: &Image, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image, ImageError> {
    if x0 + w > img.width() || y0 + h > img.height() {
        return Err(ImageError::Data(format!(
            "crop {w}x{h}+{x0}+{y0} exceeds canvas {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(Image::from_fn(w, h, |x, y| img.get(x0 + x, y0 + y)))
}

/// Training augmentation: horizontal flip with probability 1/2, then a
/// random crop back to the original size from a 9/8-upscaled canvas.
/// Deterministic for a given seed.
pub fn jitter(img: &Image, seed: u64) -> Image {
    let mut rng = Rng::new(seed);
    let flipped = if rng.chance(0.5) {
        flip_horizontal(img)
    } else {
        img.clone()
    };
    let cw = ((img.width() as f64 * 9.0 / 8.0).round() as usize).max(img.width());
    let ch = ((img.height() as f64 * 9.0 / 8.0).round() as usize).max(img.height());
    let canvas = resize(&flipped, cw, ch);
    let dx = rng.below(cw - img.width() + 1);
    let dy = rng.below(ch - img.height() + 1);
    crop(&canvas, dx, dy, img.width(), img.height()).expect("crop fits by construction")
}

/// Produces the (h, w, 3) row-major input values in [0, 1] for a network
/// expecting `w` x `h` pixels: shorter side scaled to fit, center crop.
pub fn image_to_input_rows(img: &Image, w: usize, h: usize) -> Vec<f64> {
    let fitted = if img.width() == w && img.height() == h {
        img.clone()
    } else {
        let scale = (w as f64 / img.width() as f64).max(h as f64 / img.height() as f64);
        let rw = ((img.width() as f64 * scale).round() as usize).max(w);
        let rh = ((img.height() as f64 * scale).round() as usize).max(h);
        let resized = resize(img, rw, rh);
        let x0 = (rw - w) / 2;
        let y0 = (rh - h) / 2;
        crop(&resized, x0, y0, w, h).expect("center crop fits by construction")
    };
    let mut rows = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        for x in 0..w {
            let p = fitted.get(x, y);
            rows.push(p[0] as f64 / 255.0);
            rows.push(p[1] as f64 / 255.0);
            rows.push(p[2] as f64 / 255.0);
        }
    }
    rows
}
