//! Image preprocessing: raw captures to low-resolution patch-normalized
//! intensity grids.
//!
//! The full chain is grayscale conversion, histogram equalization, optional
//! crop, area-weighted downsampling to the match resolution, and local patch
//! normalization. The output [`ProcessedImage`] is the unit every matching
//! operation consumes; its values are contrast-normalized and therefore
//! invariant to affine illumination changes of the source.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Patches whose standard deviation falls below this are treated as
/// contrast-free and normalize to exactly 0.
pub const SIGMA_EPSILON: f64 = 1e-6;

/// 8-bit image, row-major, interleaved channels (1 = gray, 3 = RGB).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::BadPixelBuffer {
                width,
                height,
                channels,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// Single-channel constructor.
    pub fn gray(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// First channel of the pixel at (x, y).
    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[(y * self.width + x) * self.channels]
    }

    /// Reads PNG, PGM, or PPM. Color inputs load as 3 channels, grayscale
    /// as 1.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let dynamic = image::open(path.as_ref())?;
        let img = if dynamic.color().has_color() {
            let rgb = dynamic.to_rgb8();
            let (w, h) = rgb.dimensions();
            Self::new(w as usize, h as usize, 3, rgb.into_raw())?
        } else {
            let gray = dynamic.to_luma8();
            let (w, h) = gray.dimensions();
            Self::new(w as usize, h as usize, 1, gray.into_raw())?
        };
        Ok(img)
    }

    /// Writes a binary PGM (P5). Grayscale images only; the writer emits the
    /// exact pixel buffer, so output is byte-reproducible.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        if self.channels != 1 {
            return Err(Error::UnsupportedChannels(self.channels));
        }
        let file = std::fs::File::create(path.as_ref())?;
        let mut out = BufWriter::new(file);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)?;
        out.flush()?;
        Ok(())
    }
}

/// Crop rectangle in source-pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropRect {
    pub left: usize,
    pub top: usize,
    pub width: usize,
    pub height: usize,
}

/// Parameters of the preprocessing chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessConfig {
    /// Output width of the match-resolution grid.
    pub match_width: usize,
    /// Output height of the match-resolution grid.
    pub match_height: usize,
    /// Half-side of the square normalization window.
    pub patch_radius: usize,
    /// Optional crop applied before downsampling.
    pub crop_rect: Option<CropRect>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            match_width: 48,
            match_height: 24,
            patch_radius: 4,
            crop_rect: None,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.match_width < 2 || self.match_height < 2 {
            return Err(Error::Config(format!(
                "match resolution must be at least 2x2, got {}x{}",
                self.match_width, self.match_height
            )));
        }
        if self.patch_radius < 1 {
            return Err(Error::Config("patch_radius must be at least 1".into()));
        }
        Ok(())
    }
}

/// Real-valued patch-normalized intensity grid at match resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ProcessedImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if values.len() != width * height {
            return Err(Error::BadPixelBuffer {
                width,
                height,
                channels: 1,
                len: values.len(),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Collapses RGB to luminance with 0.299/0.587/0.114 weights, rounding to
/// nearest. Grayscale inputs pass through unchanged.
pub fn to_grayscale(img: &RawImage) -> Result<RawImage> {
    match img.channels {
        1 => Ok(img.clone()),
        3 => {
            let mut pixels = Vec::with_capacity(img.width * img.height);
            for px in img.pixels.chunks_exact(3) {
                let lum =
                    0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
                pixels.push(lum.round() as u8);
            }
            RawImage::gray(img.width, img.height, pixels)
        }
        n => Err(Error::UnsupportedChannels(n)),
    }
}

/// Standard CDF-based histogram equalization:
/// `out(v) = round((cdf(v) - cdf_min) / (N - cdf_min) * 255)`.
///
/// Constant images are returned unchanged (the formula degenerates to 0/0).
pub fn equalize_histogram(img: &RawImage) -> Result<RawImage> {
    if img.channels != 1 {
        return Err(Error::UnsupportedChannels(img.channels));
    }
    let mut hist = [0u64; 256];
    for &v in &img.pixels {
        hist[v as usize] += 1;
    }
    let mut cdf = [0u64; 256];
    let mut running = 0u64;
    for (v, count) in hist.iter().enumerate() {
        running += count;
        cdf[v] = running;
    }
    let n = img.pixels.len() as u64;
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if cdf_min == n {
        // Single intensity level: nothing to spread.
        return Ok(img.clone());
    }
    let denom = (n - cdf_min) as f64;
    let mut map = [0u8; 256];
    for v in 0..256 {
        let scaled = (cdf[v].saturating_sub(cdf_min)) as f64 / denom * 255.0;
        map[v] = scaled.round() as u8;
    }
    let pixels = img.pixels.iter().map(|&v| map[v as usize]).collect();
    RawImage::gray(img.width, img.height, pixels)
}

/// Exact sub-rectangle copy.
pub fn crop(img: &RawImage, rect: CropRect) -> Result<RawImage> {
    if rect.width == 0
        || rect.height == 0
        || rect.left + rect.width > img.width
        || rect.top + rect.height > img.height
    {
        return Err(Error::CropOutOfBounds {
            left: rect.left,
            top: rect.top,
            width: rect.width,
            height: rect.height,
            src_width: img.width,
            src_height: img.height,
        });
    }
    let ch = img.channels;
    let mut pixels = Vec::with_capacity(rect.width * rect.height * ch);
    for y in rect.top..rect.top + rect.height {
        let start = (y * img.width + rect.left) * ch;
        pixels.extend_from_slice(&img.pixels[start..start + rect.width * ch]);
    }
    RawImage::new(rect.width, rect.height, ch, pixels)
}

/// Area-weighted box downsample onto a `target_width` x `target_height`
/// grid. Each output pixel is the mean of its (possibly fractional) source
/// footprint, rounded to nearest. The identity ratio reproduces the input.
pub fn downsample(img: &RawImage, target_width: usize, target_height: usize) -> Result<RawImage> {
    if img.channels != 1 {
        return Err(Error::UnsupportedChannels(img.channels));
    }
    if target_width == 0 || target_height == 0 {
        return Err(Error::EmptyImage);
    }
    if target_width > img.width || target_height > img.height {
        return Err(Error::DownsampleTargetTooLarge {
            target_width,
            target_height,
            src_width: img.width,
            src_height: img.height,
        });
    }
    let sx = img.width as f64 / target_width as f64;
    let sy = img.height as f64 / target_height as f64;
    let mut pixels = Vec::with_capacity(target_width * target_height);
    for oy in 0..target_height {
        let y0 = oy as f64 * sy;
        let y1 = y0 + sy;
        let iy0 = y0.floor() as usize;
        let iy1 = (y1.ceil() as usize).min(img.height);
        for ox in 0..target_width {
            let x0 = ox as f64 * sx;
            let x1 = x0 + sx;
            let ix0 = x0.floor() as usize;
            let ix1 = (x1.ceil() as usize).min(img.width);
            let mut acc = 0.0;
            let mut weight_sum = 0.0;
            for iy in iy0..iy1 {
                let wy = (y1.min((iy + 1) as f64) - y0.max(iy as f64)).max(0.0);
                for ix in ix0..ix1 {
                    let wx = (x1.min((ix + 1) as f64) - x0.max(ix as f64)).max(0.0);
                    let w = wx * wy;
                    acc += w * f64::from(img.pixels[iy * img.width + ix]);
                    weight_sum += w;
                }
            }
            pixels.push((acc / weight_sum).clamp(0.0, 255.0).round() as u8);
        }
    }
    RawImage::gray(target_width, target_height, pixels)
}

/// Patch normalization over real-valued grids: each output is
/// `(v - mean) / sigma` with mean and population sigma taken over the square
/// window of radius `patch_radius` centered at the pixel, clipped at the
/// borders. Windows with sigma below [`SIGMA_EPSILON`] output exactly 0.
///
/// Exposed on `f64` grids so contrast-invariance holds exactly for scaled
/// inputs, without 8-bit quantization in the way.
pub fn patch_normalize_values(
    values: &[f64],
    width: usize,
    height: usize,
    patch_radius: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    for y in 0..height {
        let wy0 = y.saturating_sub(patch_radius);
        let wy1 = (y + patch_radius).min(height - 1);
        for x in 0..width {
            let wx0 = x.saturating_sub(patch_radius);
            let wx1 = (x + patch_radius).min(width - 1);
            let n = ((wy1 - wy0 + 1) * (wx1 - wx0 + 1)) as f64;
            // Two passes per window: exact mean first, then centered
            // variance, so near-constant patches don't lose precision to
            // cancellation.
            let mut sum = 0.0;
            for wy in wy0..=wy1 {
                for wx in wx0..=wx1 {
                    sum += values[wy * width + wx];
                }
            }
            let mean = sum / n;
            let mut sq = 0.0;
            for wy in wy0..=wy1 {
                for wx in wx0..=wx1 {
                    let d = values[wy * width + wx] - mean;
                    sq += d * d;
                }
            }
            let sigma = (sq / n).sqrt();
            if sigma < SIGMA_EPSILON {
                out.push(0.0);
            } else {
                out.push((values[y * width + x] - mean) / sigma);
            }
        }
    }
    out
}

/// Patch normalization of an 8-bit grayscale image.
pub fn patch_normalize(img: &RawImage, patch_radius: usize) -> Result<ProcessedImage> {
    if img.channels != 1 {
        return Err(Error::UnsupportedChannels(img.channels));
    }
    let values: Vec<f64> = img.pixels.iter().map(|&v| f64::from(v)).collect();
    let normalized = patch_normalize_values(&values, img.width, img.height, patch_radius);
    ProcessedImage::new(img.width, img.height, normalized)
}

/// Full chain: grayscale, equalize, optional crop, downsample, patch
/// normalize.
pub fn preprocess(raw: &RawImage, cfg: &PreprocessConfig) -> Result<ProcessedImage> {
    cfg.validate()?;
    let gray = to_grayscale(raw)?;
    let equalized = equalize_histogram(&gray)?;
    let cropped = match cfg.crop_rect {
        Some(rect) => crop(&equalized, rect)?,
        None => equalized,
    };
    let small = downsample(&cropped, cfg.match_width, cfg.match_height)?;
    patch_normalize(&small, cfg.patch_radius)
}
