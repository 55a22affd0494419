//! Row-major float images plus the two on-disk forms the tools emit:
//! 8-bit PPM (P6) for eyeballing, and a raw little-endian f32 dump with a
//! 16-byte header for lossless comparisons.

use std::fs;
use std::path::Path;

use crate::error::{CoreError, Result};

/// Magic prefixing the raw float dump: "NRIM" as ASCII.
const RAW_MAGIC: [u8; 4] = *b"NRIM";

/// A H x W x C image, row-major, channel-minor. Values are kept in f64 while
/// in memory; the raw file format narrows to f32.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: u32, height: u32, channels: u32) -> Self {
        let len = width as usize * height as usize * channels as usize;
        Image {
            width,
            height,
            channels,
            data: vec![0.0; len],
        }
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> &[f64] {
        let i = self.index(x, y);
        &self.data[i..i + self.channels as usize]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [f64] {
        let i = self.index(x, y);
        let c = self.channels as usize;
        &mut self.data[i..i + c]
    }

    /// Largest absolute per-component difference, or an error on shape mismatch.
    pub fn max_abs_diff(&self, other: &Image) -> Result<f64> {
        if self.width != other.width
            || self.height != other.height
            || self.channels != other.channels
        {
            return Err(CoreError::Contract(format!(
                "image shape mismatch: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Encode the first three channels as binary PPM (P6), clamping to [0,1].
    /// Single-channel images are broadcast to gray.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        let c = self.channels as usize;
        let to_byte = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        for px in self.data.chunks_exact(c) {
            if c >= 3 {
                out.extend_from_slice(&[to_byte(px[0]), to_byte(px[1]), to_byte(px[2])]);
            } else {
                let g = to_byte(px[0]);
                out.extend_from_slice(&[g, g, g]);
            }
        }
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_ppm())
    }

    /// Encode as the raw format: 16-byte header (magic, width, height,
    /// channels, all little-endian u32) followed by f32 samples.
    pub fn to_raw(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.data.len() * 4);
        out.extend_from_slice(&RAW_MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&self.channels.to_le_bytes());
        for &v in &self.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    pub fn write_raw(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_raw())
    }

    pub fn read_raw(path: &Path) -> Result<Image> {
        let bytes = fs::read(path)?;
        if bytes.len() < 16 || bytes[..4] != RAW_MAGIC {
            return Err(CoreError::Io(format!(
                "{}: not a raw image file",
                path.display()
            )));
        }
        let field =
            |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
        let (width, height, channels) = (field(4), field(8), field(12));
        let want = width as usize * height as usize * channels as usize;
        if bytes.len() != 16 + want * 4 {
            return Err(CoreError::Io(format!(
                "{}: {} payload bytes, header implies {}",
                path.display(),
                bytes.len() - 16,
                want * 4
            )));
        }
        let data = bytes[16..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
