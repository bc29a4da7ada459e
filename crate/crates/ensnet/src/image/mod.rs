//! Image preprocessing: HSV intensity equalization, resizing, jitter
//! augmentation, PPM ingestion, dataset loading, protocol splits, and a
//! synthetic dataset generator for desk-scale runs.

mod dataset;
mod equalize;
mod hsv;
mod ppm;
mod resize;
mod synth;

pub use dataset::{load_dataset, make_split, LabeledItem, LabeledSet, SplitManifest};
pub use equalize::equalize_intensity;
pub use hsv::{hsv_to_rgb, rgb_to_hsv, Hsv};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_ppm};
pub use resize::{image_to_input_rows, jitter, resize};
pub use synth::{generate_synthetic, synthetic_class_hue};

use std::fmt;

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width * height >= 1, "image must have at least one pixel");
        Image {
            width,
            height,
            pixels: vec![[0, 0, 0]; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Self {
        let mut img = Image::new(width, height);
        for y in 0..height {
            for x in 0..width {
                img.pixels[y * width + x] = f(x, y);
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, p: [u8; 3]) {
        self.pixels[y * self.width + x] = p;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImageError {
    Io(String),
    Format(String),
    Data(String),
}

impl fmt::Display for ImageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageError::Io(m) => write!(f, "io error: {m}"),
            ImageError::Format(m) => write!(f, "format error: {m}"),
            ImageError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl std::error::Error for ImageError {}
