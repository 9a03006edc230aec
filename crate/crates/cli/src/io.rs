//! Image files: binary PPM (P6) and PNG, 8 or 16 bits per sample.
//!
//! Samples map to floats as `v / maxval`. With `srgb` set, decoded values go
//! through the sRGB transfer function to linear and back on write.

use std::fs;
use std::path::Path;

use bren::{Grid, RadianceImage, Rgb};
use image::{ImageBuffer, ImageFormat};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Ppm,
    Png,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("ppm") | Some("pnm") => Ok(Format::Ppm),
            Some("png") => Ok(Format::Png),
            _ => Err(CliError::Format(format!(
                "{}: unsupported extension (use .ppm or .png)",
                path.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn maxval(self) -> u16 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }
}

/// Raw interleaved RGB samples as stored in a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub depth: BitDepth,
    pub samples: Vec<u16>,
}

pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn quantize(v: f64, maxval: u16) -> u16 {
    let m = f64::from(maxval);
    (v.clamp(0.0, 1.0) * m).round() as u16
}

impl RawImage {
    pub fn from_radiance(image: &RadianceImage, depth: BitDepth, srgb: bool) -> Self {
        let maxval = depth.maxval();
        let samples = image
            .data()
            .iter()
            .flatten()
            .map(|&v| {
                let v = if srgb { linear_to_srgb(v.clamp(0.0, 1.0)) } else { v };
                quantize(v, maxval)
            })
            .collect();
        Self {
            width: image.width(),
            height: image.height(),
            depth,
            samples,
        }
    }

    pub fn to_radiance(&self, srgb: bool) -> Result<RadianceImage, CliError> {
        let m = f64::from(self.depth.maxval());
        let data: Vec<Rgb> = self
            .samples
            .chunks_exact(3)
            .map(|px| {
                [0, 1, 2].map(|c| {
                    let v = f64::from(px[c]) / m;
                    if srgb {
                        srgb_to_linear(v)
                    } else {
                        v
                    }
                })
            })
            .collect();
        Ok(RadianceImage::new(self.width, self.height, data)?)
    }
}

/// Parses a binary PPM. Header comments (`#` to end of line) are skipped.
pub fn decode_ppm(bytes: &[u8]) -> Result<RawImage, CliError> {
    let bad = |msg: &str| CliError::Format(format!("PPM: {msg}"));
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(bad("missing P6 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(bad("expected a number in header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header number out of range"))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("missing whitespace after maxval"));
    }
    pos += 1;

    let [width, height, maxval] = fields;
    let depth = match maxval {
        255 => BitDepth::Eight,
        65535 => BitDepth::Sixteen,
        other => return Err(bad(&format!("unsupported maxval {other} (expected 255 or 65535)"))),
    };
    if width == 0 || height == 0 {
        return Err(bad("zero dimension"));
    }
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| bad("dimensions overflow"))?;
    let raster = &bytes[pos..];
    let samples: Vec<u16> = match depth {
        BitDepth::Eight => {
            if raster.len() < count {
                return Err(bad("truncated raster"));
            }
            raster[..count].iter().map(|&b| u16::from(b)).collect()
        }
        BitDepth::Sixteen => {
            if raster.len() < count * 2 {
                return Err(bad("truncated raster"));
            }
            raster[..count * 2]
                .chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]))
                .collect()
        }
    };
    Ok(RawImage {
        width,
        height,
        depth,
        samples,
    })
}

pub fn encode_ppm(raw: &RawImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n{}\n", raw.width, raw.height, raw.depth.maxval()).into_bytes();
    match raw.depth {
        BitDepth::Eight => out.extend(raw.samples.iter().map(|&v| v as u8)),
        BitDepth::Sixteen => out.extend(raw.samples.iter().flat_map(|v| v.to_be_bytes())),
    }
    out
}

fn decode_png(bytes: &[u8]) -> Result<RawImage, CliError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| CliError::Format(format!("PNG: {e}")))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let sixteen = matches!(
        img.color(),
        image::ColorType::L16 | image::ColorType::La16 | image::ColorType::Rgb16 | image::ColorType::Rgba16
    );
    let (depth, samples) = if sixteen {
        (BitDepth::Sixteen, img.to_rgb16().into_raw())
    } else {
        (
            BitDepth::Eight,
            img.to_rgb8().into_raw().into_iter().map(u16::from).collect(),
        )
    };
    Ok(RawImage {
        width,
        height,
        depth,
        samples,
    })
}

fn encode_png(raw: &RawImage, path: &Path) -> Result<(), CliError> {
    let (w, h) = (raw.width as u32, raw.height as u32);
    let result = match raw.depth {
        BitDepth::Eight => {
            let buf: Vec<u8> = raw.samples.iter().map(|&v| v as u8).collect();
            ImageBuffer::<image::Rgb<u8>, _>::from_raw(w, h, buf)
                .expect("sample count matches dimensions")
                .save_with_format(path, ImageFormat::Png)
        }
        BitDepth::Sixteen => ImageBuffer::<image::Rgb<u16>, _>::from_raw(w, h, raw.samples.clone())
            .expect("sample count matches dimensions")
            .save_with_format(path, ImageFormat::Png),
    };
    result.map_err(|e| match e {
        image::ImageError::IoError(io) => CliError::Io {
            path: path.to_path_buf(),
            source: io,
        },
        other => CliError::Format(format!("PNG: {other}")),
    })
}

pub fn read_raw(path: &Path) -> Result<RawImage, CliError> {
    let format = Format::from_path(path)?;
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        Format::Ppm => decode_ppm(&bytes),
        Format::Png => decode_png(&bytes),
    }
}

pub fn write_raw(path: &Path, raw: &RawImage) -> Result<(), CliError> {
    match Format::from_path(path)? {
        Format::Ppm => fs::write(path, encode_ppm(raw)).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        Format::Png => encode_png(raw, path),
    }
}

/// Reads an image and returns it as linear radiance with its bit depth.
pub fn read_image(path: &Path, srgb: bool) -> Result<(RadianceImage, BitDepth), CliError> {
    let raw = read_raw(path)?;
    Ok((raw.to_radiance(srgb)?, raw.depth))
}

pub fn write_image(path: &Path, image: &RadianceImage, depth: BitDepth, srgb: bool) -> Result<(), CliError> {
    write_raw(path, &RawImage::from_radiance(image, depth, srgb))
}

/// Single-channel visualization written as gray RGB, clamped to `[0, 1]`.
pub fn gray_image(values: &Grid<f64>) -> RadianceImage {
    let grid = values.map(|&v| [v.clamp(0.0, 1.0); 3]);
    RadianceImage::from_grid(grid).expect("clamped values are valid radiance")
}
