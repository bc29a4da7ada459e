//! Intensity-only histogram equalization, bilinear resize, and jitter.
//!
//! ```text
//! cargo run --example preprocess
//! ```

use ensnet::image::{equalize_intensity, jitter, resize, rgb_to_hsv, Image};

fn intensity_histogram(img: &Image, bins: usize) -> Vec<usize> {
    let mut hist = vec![0usize; bins];
    for p in img.pixels() {
        let v = rgb_to_hsv(*p).v as usize;
        hist[v * bins / 256] += 1;
    }
    hist
}

fn sparkline(hist: &[usize]) -> String {
    let marks = [' ', '.', ':', '-', '=', '+', '*', '#'];
    let max = *hist.iter().max().unwrap_or(&1) as f64;
    hist.iter()
        .map(|&h| marks[((h as f64 / max) * (marks.len() - 1) as f64).round() as usize])
        .collect()
}

fn main() {
    // a dim, low-contrast image: intensities packed into a narrow band
    let img = Image::from_fn(96, 96, |x, y| {
        let v = 60 + ((x * 31 + y * 17) % 48) as u8;
        [v, v / 2, v / 3]
    });
    let eq = equalize_intensity(&img);

    println!("intensity histogram, 32 bins:");
    println!("  before |{}|", sparkline(&intensity_histogram(&img, 32)));
    println!("  after  |{}|", sparkline(&intensity_histogram(&eq, 32)));

    let small = resize(&eq, 32, 32);
    println!(
        "\nresized {}x{} -> {}x{}",
        eq.width(),
        eq.height(),
        small.width(),
        small.height()
    );

    let a = jitter(&small, 5);
    let b = jitter(&small, 5);
    let c = jitter(&small, 6);
    println!(
        "jitter: seed 5 twice identical = {}, seed 6 differs = {}",
        a == b,
        a != c
    );
}
