//! CA distance matrices and their grayscale image form.

use std::io::{self, Write};

use crate::structure::CaTrace;

/// Square matrix of pairwise CA distances, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Pairwise Euclidean distances between CA atoms.
///
/// Only the upper triangle is computed and mirrored, so the result is
/// bit-exactly symmetric with a zero diagonal.
pub fn distance_matrix(trace: &CaTrace) -> DistanceMatrix {
    let coords = trace.coords();
    let n = coords.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let [dx, dy, dz] = [
                coords[i][0] - coords[j][0],
                coords[i][1] - coords[j][1],
                coords[i][2] - coords[j][2],
            ];
            let d = (dx * dx + dy * dy + dz * dz).sqrt();
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DistanceMatrix { n, values }
}

/// Grayscale image with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Panics if `pixels.len() != height * width` or a dimension is zero.
    pub fn from_vec(height: usize, width: usize, pixels: Vec<f64>) -> Self {
        assert!(height >= 1 && width >= 1, "image dimensions must be positive");
        assert_eq!(pixels.len(), height * width, "pixel buffer size mismatch");
        Self { height, width, pixels }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::from_vec(height, width, pixels)
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        Self::from_vec(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_square(&self) -> bool {
        self.height == self.width
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * self.width + c]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    /// Copies the upper triangle onto the lower one of a square image.
    ///
    /// Distance images are symmetric, but resampling round-off can leave
    /// the two triangles a few ulps apart; gradients on the diagonal then
    /// fall on arbitrary sides of the 45° orientation bin edge.
    pub fn mirror_upper(&mut self) {
        assert!(self.is_square(), "mirror_upper needs a square image");
        let n = self.width;
        for r in 0..n {
            for c in 0..r {
                self.pixels[r * n + c] = self.pixels[c * n + r];
            }
        }
    }

    /// Binary PGM (`P5`, maxval 255), each pixel rounded from `value·255`.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        out.write_all(&bytes)
    }
}

/// Scales distances into `[0, 1]` by the matrix maximum.
///
/// Distance 0 maps to black; an all-zero matrix maps to an all-zero image.
pub fn to_gray(d: &DistanceMatrix) -> GrayImage {
    let max = d.max();
    let pixels = if max > 0.0 {
        d.values.iter().map(|v| v / max).collect()
    } else {
        vec![0.0; d.values.len()]
    };
    GrayImage::from_vec(d.n, d.n, pixels)
}
