//! Binary PPM (P6, maxval 255) encoding and decoding.

use super::{Image, ImageError};
use std::fs;
use std::path::Path;

pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(img.width() * img.height() * 3);
    for p in img.pixels() {
        out.extend_from_slice(p);
    }
    out
}

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Result<&'a [u8], ImageError> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::Format("unexpected end of ppm header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<usize, ImageError> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Format("bad number in ppm header".into()))
    }
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Image, ImageError> {
    let mut s = HeaderScanner { bytes, pos: 0 };
    if s.token()? != b"P6" {
        return Err(ImageError::Format("not a binary ppm (P6) file".into()));
    }
    let w = s.number()?;
    let h = s.number()?;
    let maxval = s.number()?;
    if maxval != 255 {
        return Err(ImageError::Format(format!(
            "unsupported maxval {maxval}, expected 255"
        )));
    }
    if w == 0 || h == 0 {
        return Err(ImageError::Format("zero-sized ppm".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    if s.pos + 1 > bytes.len() {
        return Err(ImageError::Format("ppm raster is missing".into()));
    }
    let data = &bytes[s.pos + 1..];
    if data.len() < w * h * 3 {
        return Err(ImageError::Format("ppm raster is truncated".into()));
    }
    let mut img = Image::new(w, h);
    for i in 0..w * h {
        img.pixels_mut()[i] = [data[i * 3], data[i * 3 + 1], data[i * 3 + 2]];
    }
    Ok(img)
}

pub fn write_ppm(path: impl AsRef<Path>, img: &Image) -> Result<(), ImageError> {
    fs::write(path, encode_ppm(img)).map_err(|e| ImageError::Io(e.to_string()))
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Image, ImageError> {
    let bytes =
        fs::read(&path).map_err(|e| ImageError::Io(format!("{}: {e}", path.as_ref().display())))?;
    decode_ppm(&bytes)
}
