//! Histogram equalization on the intensity channel only.
//!
//! The image is taken to HSV, the V histogram is remapped through its
//! cumulative distribution, and the pixels are rebuilt from the original
//! hue and saturation with the new intensity:
//!
//! ```text
//! v' = round((cdf(v) - cdf_min) / (N - cdf_min) * 255)
//! ```
//!
//! An image with a single distinct intensity is returned unchanged (the
//! denominator would be zero).

use super::hsv::{hsv_to_rgb, rgb_to_hsv, Hsv};
use super::Image;

pub fn equalize_intensity(img: &Image) -> Image {
    let n = img.width() * img.height();
    let mut hist = [0usize; 256];
    for p in img.pixels() {
        hist[rgb_to_hsv(*p).v as usize] += 1;
    }
    let mut cdf = [0usize; 256];
    let mut acc = 0;
    for (i, &h) in hist.iter().enumerate() {
        acc += h;
        cdf[i] = acc;
    }
    let cdf_min = hist
        .iter()
        .position(|&h| h > 0)
        .map(|i| cdf[i])
        .unwrap_or(0);
    if cdf_min == n {
        return img.clone();
    }
    let mut lut = [0u8; 256];
    let denom = (n - cdf_min) as f64;
    for v in 0..256 {
        if hist[v] > 0 {
            lut[v] = ((cdf[v] - cdf_min) as f64 / denom * 255.0).round() as u8;
        }
    }
    let mut out = Image::new(img.width(), img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let hsv = rgb_to_hsv(img.get(x, y));
            let remapped = Hsv {
                h: hsv.h,
                s: hsv.s,
                v: lut[hsv.v as usize],
            };
            out.set(x, y, hsv_to_rgb(remapped));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::hsv::rgb_to_hsv;
    use super::*;

    fn v_hist(img: &Image) -> [usize; 256] {
        let mut h = [0usize; 256];
        for p in img.pixels() {
            h[rgb_to_hsv(*p).v as usize] += 1;
        }
        h
    }

    #[test]
    fn constant_image_is_unchanged() {
        let img = Image::from_fn(5, 4, |_, _| [37, 90, 12]);
        assert_eq!(equalize_intensity(&img), img);
    }

    #[test]
    fn grayscale_stays_grayscale() {
        let img = Image::from_fn(8, 8, |x, y| {
            let v = (x * 23 + y * 31) as u8;
            [v, v, v]
        });
        let out = equalize_intensity(&img);
        for p in out.pixels() {
            assert_eq!(p[0], p[1]);
            assert_eq!(p[1], p[2]);
        }
    }

    #[test]
    fn two_level_extremes_stay_put() {
        // V values {0, 255}: cdf(0)=1=cdf_min, cdf(255)=2, so 0 -> 0 and
        // 255 -> round((2-1)/(2-1)*255) = 255
        let mut img = Image::new(2, 1);
        img.set(0, 0, [0, 0, 0]);
        img.set(1, 0, [255, 255, 255]);
        let out = equalize_intensity(&img);
        assert_eq!(out.get(0, 0), [0, 0, 0]);
        assert_eq!(out.get(1, 0), [255, 255, 255]);
    }

    #[test]
    fn spreads_a_compressed_histogram() {
        // four equally likely levels packed into [100, 103] spread to span 255
        let img = Image::from_fn(4, 2, |x, y| {
            let v = 100 + ((x + y * 4) % 4) as u8;
            [v, v, v]
        });
        let out = equalize_intensity(&img);
        let hist = v_hist(&out);
        assert_eq!(hist[0], 2);
        assert_eq!(hist[85], 2);
        assert_eq!(hist[170], 2);
        assert_eq!(hist[255], 2);
    }

    #[test]
    fn hue_and_saturation_survive_within_quantization() {
        let img = Image::from_fn(16, 16, |x, y| {
            let base = 40 + ((x * 13 + y * 7) % 160) as u8;
            [base, base / 2 + 20, 30]
        });
        let out = equalize_intensity(&img);
        for y in 0..img.height() {
            for x in 0..img.width() {
                let a = rgb_to_hsv(img.get(x, y));
                let b = rgb_to_hsv(out.get(x, y));
                if b.v == 0 {
                    continue;
                }
                let delta_b = (b.s * b.v as f64).round();
                // saturation re-quantizes on the new intensity scale
                assert!(
                    (a.s - b.s).abs() <= 0.5 / b.v as f64 + 1e-12,
                    "saturation moved: {} -> {}",
                    a.s,
                    b.s
                );
                if delta_b > 0.0 {
                    let mut dh = (a.h - b.h).abs();
                    if dh > 180.0 {
                        dh = 360.0 - dh;
                    }
                    assert!(dh <= 30.0 / delta_b + 1e-9, "hue moved: {} -> {}", a.h, b.h);
                }
            }
        }
    }

    #[test]
    fn reapplication_preserves_the_intensity_histogram() {
        // images whose equalized histograms have a clean bottom bin, so a
        // second pass maps every occupied level to itself
        let gradient = Image::from_fn(16, 16, |x, y| {
            let v = (x * 16 + y) as u8;
            [v, v / 3, v / 2]
        });
        let blocks = Image::from_fn(12, 12, |x, y| {
            let v = ((x / 3 + y / 3) * 29) as u8;
            [v, 255 - v, 128]
        });
        for img in [gradient, blocks] {
            let once = equalize_intensity(&img);
            let twice = equalize_intensity(&once);
            assert_eq!(v_hist(&once), v_hist(&twice));
        }
    }
}
