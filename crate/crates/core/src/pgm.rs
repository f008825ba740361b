//! Binary 8-bit PGM (`P5`) reading and writing.

use crate::error::{Error, Result};
use crate::geometry::{GrayImage, Mask};
use crate::Scalar;

fn header_err(msg: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        field: "pgm header".into(),
        message: msg.into(),
    }
}

/// Reads a `P5` image with `maxval <= 255`; intensities are scaled to `[0, 1]`.
pub fn read_pgm<T: Scalar>(bytes: &[u8]) -> Result<GrayImage<T>> {
    let mut pos = 0usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(header_err("truncated header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| header_err("non-ascii header"))?);
    }
    if tokens[0] != "P5" {
        return Err(header_err(format!("expected P5, found {}", tokens[0])));
    }
    let parse = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| header_err(format!("bad {what} `{s}`")))
    };
    let width = parse(tokens[1], "width")?;
    let height = parse(tokens[2], "height")?;
    let maxval = parse(tokens[3], "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(header_err(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte after maxval
    pos += 1;
    let n = width * height;
    if bytes.len() < pos + n {
        return Err(header_err(format!(
            "expected {n} pixel bytes, found {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    let scale = maxval as f64;
    let data = bytes[pos..pos + n]
        .iter()
        .map(|&b| T::from_f64_lossy(b as f64 / scale))
        .collect();
    GrayImage::new(width, height, data)
}

/// Writes `round(clamp(v, 0, 1) * 255)` per pixel.
pub fn write_pgm<T: Scalar>(image: &GrayImage<T>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|v| {
        let v = v.to_f64_lossless().clamp(0.0, 1.0);
        (v * 255.0).round() as u8
    }));
    out
}

/// Writes a mask as 0 / 255.
pub fn write_mask_pgm(mask: &Mask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.data().iter().map(|&v| if v == 1 { 255 } else { 0 }));
    out
}

/// Reads a mask; pixels at or above half intensity are valid.
pub fn read_mask_pgm(bytes: &[u8]) -> Result<Mask> {
    let img: GrayImage<f64> = read_pgm(bytes)?;
    let data = img.data().iter().map(|&v| (v >= 0.5) as u8).collect();
    Mask::new(img.width(), img.height(), data)
}
