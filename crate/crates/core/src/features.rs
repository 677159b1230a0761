//! CoMOGrad and PHOG descriptors.
//!
//! Both descriptors work on a quantized gradient-orientation image. CoMOGrad
//! counts how orientation bins co-occur between horizontally and vertically
//! adjacent pixels; PHOG builds magnitude-weighted orientation histograms
//! over a quad-tree of image cells. With the default [`Config`] they give
//! 16·16 = 256 and 85·9 = 765 values. The PHOG block is stored in 768
//! slots; the last three are always zero, so a record is 1024 wide and
//! distances are the same as without the padding.

use crate::config::Config;
use crate::distmat::{distance_matrix, to_gray, GrayImage};
use crate::imageops::{gradient_field, normalize_size, GradientField, ImageError};
use crate::structure::CaTrace;
use crate::Result;

/// Length of a feature vector under the default configuration.
pub const FEATURE_LEN: usize = 1024;
/// Length of the CoMOGrad block under the default configuration.
pub const COMOGRAD_LEN: usize = 256;
/// Slots of the PHOG block under the default configuration.
pub const PHOG_LEN: usize = 768;
/// Populated PHOG values under the default configuration (85 cells × 9 bins).
pub const PHOG_VALUES: usize = 765;

/// Gradient magnitudes at or below this are treated as "no gradient".
pub const MAGNITUDE_EPS: f64 = 1e-12;

/// Orientations this close (in degrees) to a sector edge count as on it.
///
/// Distance images are full of exact 45° and 135° gradients, which sit on
/// 16-bin edges; without the snap, floating-point noise alone picks the bin.
pub const BIN_EDGE_TOL: f64 = 1e-9;

/// Descriptor of one structure: CoMOGrad values followed by PHOG values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Self {
        Self { id: id.into(), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CoMOGrad block of a default-length vector.
    pub fn comograd(&self) -> &[f64] {
        &self.values[..COMOGRAD_LEN]
    }

    /// PHOG block of a default-length vector.
    pub fn phog(&self) -> &[f64] {
        &self.values[COMOGRAD_LEN..]
    }
}

/// Orientation bin per pixel, plus whether the pixel carries any gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedOrientations {
    height: usize,
    width: usize,
    bins: usize,
    bin: Vec<u16>,
    valid: Vec<bool>,
}

impl QuantizedOrientations {
    /// Builds a grid directly; panics on out-of-range bins or size mismatch.
    pub fn from_parts(
        height: usize,
        width: usize,
        bins: usize,
        bin: Vec<u16>,
        valid: Vec<bool>,
    ) -> Self {
        assert_eq!(bin.len(), height * width);
        assert_eq!(valid.len(), height * width);
        assert!(bin.iter().all(|&b| (b as usize) < bins), "bin out of range");
        Self { height, width, bins, bin, valid }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn bin(&self) -> &[u16] {
        &self.bin
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }
}

/// Maps an orientation in `[0, 360)` to one of `bins` right-open sectors.
///
/// Values within [`BIN_EDGE_TOL`] of an edge go to the sector that starts
/// there (360° wraps to sector 0).
#[inline]
pub fn orientation_bin(degrees: f64, bins: usize) -> usize {
    let width = 360.0 / bins as f64;
    let x = degrees / width;
    let edge = x.round();
    let x = if (x - edge).abs() * width <= BIN_EDGE_TOL { edge } else { x.floor() };
    x as usize % bins
}

pub fn quantize_orientations(g: &GradientField, bins: usize) -> QuantizedOrientations {
    assert!(bins > 0 && bins <= u16::MAX as usize, "unsupported bin count");
    let bin = g
        .orientation()
        .iter()
        .map(|&o| orientation_bin(o, bins) as u16)
        .collect();
    let valid = g.magnitude().iter().map(|&m| m > MAGNITUDE_EPS).collect();
    QuantizedOrientations {
        height: g.height(),
        width: g.width(),
        bins,
        bin,
        valid,
    }
}

/// Co-occurrence matrix of orientation bins, flattened row-major and
/// normalized to sum 1.
///
/// Entry `[a][b]` counts ordered pairs `(p, p + offset)` of valid pixels
/// with bins `a` and `b`, for the right `(0, +1)` and down `(+1, 0)`
/// offsets. No valid pair gives an all-zero vector.
pub fn comograd(q: &QuantizedOrientations) -> Vec<f64> {
    let (h, w, bins) = (q.height, q.width, q.bins);
    let mut counts = vec![0u64; bins * bins];
    let at = |r: usize, c: usize| r * w + c;
    for r in 0..h {
        for c in 0..w {
            let p = at(r, c);
            if !q.valid[p] {
                continue;
            }
            let a = q.bin[p] as usize * bins;
            if c + 1 < w && q.valid[p + 1] {
                counts[a + q.bin[p + 1] as usize] += 1;
            }
            if r + 1 < h && q.valid[p + w] {
                counts[a + q.bin[p + w] as usize] += 1;
            }
        }
    }
    normalize_counts(&counts)
}

fn normalize_counts(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    let total = total as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

/// Unnormalized PHOG histograms, one `bins`-long block per quad-tree cell.
///
/// Cells are ordered level by level (level 0 first), row-major within a
/// level; level `l` splits the image into `2^l × 2^l` equal rectangles.
pub fn phog_histograms(
    g: &GradientField,
    bins: usize,
    levels: usize,
) -> std::result::Result<Vec<f64>, ImageError> {
    let (h, w) = (g.height(), g.width());
    let finest = 1usize << levels;
    if h % finest != 0 || w % finest != 0 {
        return Err(ImageError::CellGrid { height: h, width: w, cells: finest });
    }
    // Accumulate the finest level directly, then sum children upwards.
    let (ch, cw) = (h / finest, w / finest);
    let mut finest_hist = vec![0.0; finest * finest * bins];
    for r in 0..h {
        let cell_row = r / ch;
        for c in 0..w {
            let m = g.magnitude_at(r, c);
            if m <= MAGNITUDE_EPS {
                continue;
            }
            let cell = cell_row * finest + c / cw;
            finest_hist[cell * bins + orientation_bin(g.orientation_at(r, c), bins)] += m;
        }
    }

    let mut per_level = vec![finest_hist];
    for level in (0..levels).rev() {
        let side = 1usize << level;
        let child = per_level.last().unwrap();
        let mut hist = vec![0.0; side * side * bins];
        for cr in 0..side {
            for cc in 0..side {
                let dst = (cr * side + cc) * bins;
                for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let src = ((2 * cr + dr) * 2 * side + 2 * cc + dc) * bins;
                    for b in 0..bins {
                        hist[dst + b] += child[src + b];
                    }
                }
            }
        }
        per_level.push(hist);
    }
    Ok(per_level.into_iter().rev().flatten().collect())
}

/// PHOG descriptor: all cell histograms concatenated and L1-normalized.
pub fn phog(
    g: &GradientField,
    bins: usize,
    levels: usize,
) -> std::result::Result<Vec<f64>, ImageError> {
    let mut hist = phog_histograms(g, bins, levels)?;
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        hist.iter_mut().for_each(|v| *v /= total);
    } else {
        hist.iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(hist)
}

/// Normalized `size × size` distance image of a trace.
pub fn structure_image(trace: &CaTrace, config: &Config) -> Result<GrayImage> {
    let gray = to_gray(&distance_matrix(trace));
    let mut img = normalize_size(&gray, config.image_size)?;
    img.mirror_upper();
    Ok(img)
}

/// Descriptor of a gradient field under `config`.
pub fn describe_gradients(g: &GradientField, config: &Config) -> Result<Vec<f64>> {
    let mut values = comograd(&quantize_orientations(g, config.bins_comograd));
    values.extend(phog(g, config.bins_phog, config.phog_levels)?);
    values.resize(config.feature_len(), 0.0);
    Ok(values)
}

/// Full pipeline with the default configuration.
pub fn extract_features(trace: &CaTrace) -> Result<FeatureVector> {
    extract_features_with(trace, &Config::default())
}

/// distance matrix → gray image → resize → gradients → CoMOGrad ‖ PHOG.
pub fn extract_features_with(trace: &CaTrace, config: &Config) -> Result<FeatureVector> {
    config.validate()?;
    let img = structure_image(trace, config)?;
    let g = gradient_field(&img)?;
    Ok(FeatureVector::new(trace.id(), describe_gradients(&g, config)?))
}
