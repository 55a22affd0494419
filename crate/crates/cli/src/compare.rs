//! Image loading and comparison for the `compare` subcommand.
//!
//! Two formats load: the raw float dump (lossless, compared on its own
//! scale) and 8-bit binary PPM, which compares on the 0..255 scale it is
//! stored in.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nrsim_core::image::Image;

/// Load a PPM (P6) or raw float image, dispatching on file extension.
pub fn load_image(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            parse_ppm(&bytes).with_context(|| format!("parsing {}", path.display()))
        }
        _ => Ok(Image::read_raw(path)?),
    }
}

/// Minimal P6 reader: ASCII header (magic, width, height, maxval) with
/// whitespace and `#` comments, then one byte per channel. Values are kept
/// on the stored 0..=maxval scale.
fn parse_ppm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        bail!("not a binary PPM (P6) file");
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // Skip whitespace and comment lines.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => bail!("truncated PPM header"),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            bail!("malformed PPM header");
        }
        *field = std::str::from_utf8(&bytes[start..pos])?.parse()?;
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval == 0 || maxval > 255 {
        bail!("unsupported PPM maxval {maxval}; only 8-bit images load");
    }
    // Exactly one whitespace byte separates the header from the pixels.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => bail!("malformed PPM header terminator"),
    }
    let want = width as usize * height as usize * 3;
    let data = &bytes[pos..];
    if data.len() != want {
        bail!(
            "PPM payload holds {} bytes, header implies {want}",
            data.len()
        );
    }
    Ok(Image {
        width,
        height,
        channels: 3,
        data: data.iter().map(|&b| b as f64).collect(),
    })
}

/// Max-abs difference between two images of equal shape.
pub fn compare_images(a: &Path, b: &Path) -> Result<f64> {
    let ia = load_image(a)?;
    let ib = load_image(b)?;
    Ok(ia.max_abs_diff(&ib)?)
}
