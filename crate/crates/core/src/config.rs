//! Pipeline parameters.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{name} = {value} must be between 1 and 360")]
    BadBinCount { name: &'static str, value: usize },
    #[error("image_size {0} must be a power of two")]
    ImageSizeNotPowerOfTwo(usize),
    #[error("image_size {size} is not divisible by 2^phog_levels = {cells}")]
    ImageSizeVsLevels { size: usize, cells: usize },
    #[error("eval_bins must be at least 2, got {0}")]
    TooFewEvalBins(usize),
}

/// Feature-extraction and evaluation parameters.
///
/// The defaults give 16 co-occurrence bins (256 values), 9 PHOG bins over a
/// level-3 quad tree (85 cells, 765 values in 768 slots) and a 128×128
/// working image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bins_comograd: usize,
    pub bins_phog: usize,
    pub phog_levels: usize,
    pub image_size: usize,
    pub eval_bins: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bins_comograd: 16,
            bins_phog: 9,
            phog_levels: 3,
            image_size: 128,
            eval_bins: 200,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("bins_comograd", self.bins_comograd),
            ("bins_phog", self.bins_phog),
        ] {
            if value == 0 || value > 360 {
                return Err(ConfigError::BadBinCount { name, value });
            }
        }
        if !self.image_size.is_power_of_two() || self.image_size < 2 {
            return Err(ConfigError::ImageSizeNotPowerOfTwo(self.image_size));
        }
        let cells = 1usize
            .checked_shl(self.phog_levels as u32)
            .unwrap_or(usize::MAX);
        if cells > self.image_size || !self.image_size.is_multiple_of(cells) {
            return Err(ConfigError::ImageSizeVsLevels {
                size: self.image_size,
                cells,
            });
        }
        if self.eval_bins < 2 {
            return Err(ConfigError::TooFewEvalBins(self.eval_bins));
        }
        Ok(())
    }

    pub fn comograd_len(&self) -> usize {
        self.bins_comograd * self.bins_comograd
    }

    /// Number of quad-tree cells over levels `0..=phog_levels`.
    pub fn phog_cells(&self) -> usize {
        (0..=self.phog_levels).map(|l| 1usize << (2 * l)).sum()
    }

    pub fn phog_len(&self) -> usize {
        self.phog_cells() * self.bins_phog
    }

    /// Slots reserved for the PHOG block: its length rounded up to a
    /// multiple of 8, the extra slots always zero.
    pub fn phog_slots(&self) -> usize {
        self.phog_len().next_multiple_of(8)
    }

    /// Width of a feature record.
    pub fn feature_len(&self) -> usize {
        self.comograd_len() + self.phog_slots()
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bins_comograd={} bins_phog={} phog_levels={} image_size={} eval_bins={}",
            self.bins_comograd, self.bins_phog, self.phog_levels, self.image_size, self.eval_bins
        )
    }
}
