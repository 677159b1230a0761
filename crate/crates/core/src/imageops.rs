//! Image resampling (bicubic, Haar low-pass) and gradient fields.

use crate::distmat::GrayImage;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImageError {
    #[error("Haar downsampling needs even dimensions, got {height}x{width}")]
    OddDimension { height: usize, width: usize },
    #[error("expected a square image, got {height}x{width}")]
    NotSquare { height: usize, width: usize },
    #[error("image too small: {height}x{width}, need at least 2x2")]
    TooSmall { height: usize, width: usize },
    #[error("target size {0} must be a power of two")]
    TargetNotPowerOfTwo(usize),
    #[error("{height}x{width} image does not split into {cells}x{cells} equal cells")]
    CellGrid { height: usize, width: usize, cells: usize },
}

/// Catmull-Rom parameter of the cubic convolution kernel.
pub const CUBIC_A: f64 = -0.5;

/// Cubic convolution kernel with parameter `a`, support `(-2, 2)`.
#[inline]
pub fn cubic_kernel(x: f64, a: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Four source taps (edge-clamped indices and weights) per output index.
fn taps(src_len: usize, dst_len: usize) -> Vec<([usize; 4], [f64; 4])> {
    let scale = src_len as f64 / dst_len as f64;
    let last = src_len as isize - 1;
    (0..dst_len)
        .map(|d| {
            let s = (d as f64 + 0.5) * scale - 0.5;
            let base = s.floor();
            let t = s - base;
            let base = base as isize;
            let mut idx = [0usize; 4];
            let mut w = [0.0; 4];
            for k in 0..4 {
                let off = k as isize - 1;
                idx[k] = (base + off).clamp(0, last) as usize;
                w[k] = cubic_kernel(t - off as f64, CUBIC_A);
            }
            (idx, w)
        })
        .collect()
}

/// Separable Catmull-Rom resampling without the final clamp to `[0, 1]`.
///
/// Pixel centres are aligned (`src = (dst + 0.5)·scale − 0.5`) and borders
/// are edge-replicated.
pub fn bicubic_resize_unclamped(img: &GrayImage, out_h: usize, out_w: usize) -> GrayImage {
    assert!(out_h >= 1 && out_w >= 1, "output dimensions must be positive");
    let (h, w) = (img.height(), img.width());
    let col_taps = taps(w, out_w);
    let row_taps = taps(h, out_h);

    let mut horiz = vec![0.0; h * out_w];
    for r in 0..h {
        let row = &img.pixels()[r * w..(r + 1) * w];
        for (c, (idx, wt)) in col_taps.iter().enumerate() {
            horiz[r * out_w + c] = (0..4).map(|k| wt[k] * row[idx[k]]).sum();
        }
    }
    let mut out = vec![0.0; out_h * out_w];
    for (r, (idx, wt)) in row_taps.iter().enumerate() {
        for c in 0..out_w {
            out[r * out_w + c] = (0..4).map(|k| wt[k] * horiz[idx[k] * out_w + c]).sum();
        }
    }
    GrayImage::from_vec(out_h, out_w, out)
}

/// Bicubic resize clamped to `[0, 1]`.
pub fn bicubic_resize(img: &GrayImage, out_h: usize, out_w: usize) -> GrayImage {
    let out = bicubic_resize_unclamped(img, out_h, out_w);
    let (h, w) = (out.height(), out.width());
    let pixels = out.into_pixels().into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    GrayImage::from_vec(h, w, pixels)
}

/// One level of the Haar transform, keeping only the low-low subband.
///
/// Each output pixel is the mean of a 2×2 source block.
pub fn haar_downsample(img: &GrayImage) -> Result<GrayImage, ImageError> {
    let (h, w) = (img.height(), img.width());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(ImageError::OddDimension { height: h, width: w });
    }
    let (oh, ow) = (h / 2, w / 2);
    Ok(GrayImage::from_fn(oh, ow, |r, c| {
        let (r2, c2) = (2 * r, 2 * c);
        ((img.get(r2, c2) + img.get(r2, c2 + 1)) + (img.get(r2 + 1, c2) + img.get(r2 + 1, c2 + 1)))
            * 0.25
    }))
}

/// Brings a square image to `size × size`.
///
/// Smaller images are bicubic-upsampled straight to `size`. Larger ones are
/// upsampled to the next power of two and then halved with Haar levels.
pub fn normalize_size(img: &GrayImage, size: usize) -> Result<GrayImage, ImageError> {
    let (h, w) = (img.height(), img.width());
    if h != w {
        return Err(ImageError::NotSquare { height: h, width: w });
    }
    if h < 2 {
        return Err(ImageError::TooSmall { height: h, width: w });
    }
    if !size.is_power_of_two() {
        return Err(ImageError::TargetNotPowerOfTwo(size));
    }
    let n = h;
    if n < size {
        return Ok(bicubic_resize(img, size, size));
    }
    let p = n.next_power_of_two();
    let mut cur = if p == n { img.clone() } else { bicubic_resize(img, p, p) };
    while cur.height() > size {
        cur = haar_downsample(&cur)?;
    }
    Ok(cur)
}

/// Per-pixel gradient magnitude and orientation (degrees in `[0, 360)`).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    height: usize,
    width: usize,
    magnitude: Vec<f64>,
    orientation: Vec<f64>,
}

impl GradientField {
    /// Builds a field from raw buffers; orientations are wrapped into `[0, 360)`.
    pub fn from_parts(
        height: usize,
        width: usize,
        magnitude: Vec<f64>,
        orientation: Vec<f64>,
    ) -> Self {
        assert_eq!(magnitude.len(), height * width);
        assert_eq!(orientation.len(), height * width);
        let orientation = orientation.into_iter().map(wrap_degrees).collect();
        Self { height, width, magnitude, orientation }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn orientation(&self) -> &[f64] {
        &self.orientation
    }

    pub fn magnitude_at(&self, r: usize, c: usize) -> f64 {
        self.magnitude[r * self.width + c]
    }

    pub fn orientation_at(&self, r: usize, c: usize) -> f64 {
        self.orientation[r * self.width + c]
    }
}

fn wrap_degrees(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

/// Central-difference gradient with replicated borders.
///
/// `gx` runs along columns, `gy` along rows (downwards), so a ramp that
/// grows with the row index points at 90°.
pub fn gradient_field(img: &GrayImage) -> Result<GradientField, ImageError> {
    let (h, w) = (img.height(), img.width());
    if h < 2 || w < 2 {
        return Err(ImageError::TooSmall { height: h, width: w });
    }
    let mut magnitude = Vec::with_capacity(h * w);
    let mut orientation = Vec::with_capacity(h * w);
    for r in 0..h {
        let (up, down) = (r.saturating_sub(1), (r + 1).min(h - 1));
        for c in 0..w {
            let (left, right) = (c.saturating_sub(1), (c + 1).min(w - 1));
            let gx = (img.get(r, right) - img.get(r, left)) * 0.5;
            let gy = (img.get(down, c) - img.get(up, c)) * 0.5;
            magnitude.push(gx.hypot(gy));
            orientation.push(wrap_degrees(gy.atan2(gx).to_degrees()));
        }
    }
    Ok(GradientField { height: h, width: w, magnitude, orientation })
}
