//! Pixel containers, resampling and filters.
//!
//! Every intensity is a normalized `f64` in `[0, 1]`; 8-bit quantization only
//! happens at the I/O boundary (see [`crate::dataio::ppm`]).

mod filter;
mod resize;

pub use filter::{gaussian_blur, gaussian_kernel, morphology, total_variation, unsharp, MorphOp};
pub use resize::{resize, ResizeMethod, ResizeSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `H x W x C` raster stored row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    /// Wraps `data`, checking the length and that every value lies in `[0, 1]`.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected: format!("{expected} values"),
                actual: format!("{} values", data.len()),
            });
        }
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::invalid(format!(
                "intensity {v} at offset {i} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// A constant image. Panics if `value` is outside `[0, 1]` or a dimension is invalid.
    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self::new(height, width, channels, vec![value; height * width * channels])
            .expect("valid constant image")
    }

    /// Builds an image from `f(y, x, c)`; values are clamped into `[0, 1]`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        assert!(channels == 1 || channels == 3, "channel count must be 1 or 3");
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(clamp_unit(f(y, x, c)));
                }
            }
        }
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    /// Internal constructor for buffers whose values are already known to be valid.
    pub(crate) fn from_raw(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * channels);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    /// Sets one intensity, clamped into `[0, 1]`.
    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, value: f64) {
        let i = self.index(y, x, c);
        self.data[i] = clamp_unit(value);
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn check_same_shape(&self, other: &ImageBuffer) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: fmt_shape(self.shape()),
                actual: fmt_shape(other.shape()),
            })
        }
    }

    /// Copies the `w x h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<ImageBuffer> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(format!(
                "window {w}x{h} at ({x0}, {y0}) does not fit in {}x{} image",
                self.width, self.height
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * c);
        for y in y0..y0 + h {
            let start = self.index(y, x0, 0);
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Ok(ImageBuffer::from_raw(h, w, c, data))
    }

    /// Overwrites the region starting at `(x0, y0)` with `patch`.
    pub fn paste(&mut self, patch: &ImageBuffer, x0: usize, y0: usize) -> Result<()> {
        if patch.channels != self.channels
            || x0 + patch.width > self.width
            || y0 + patch.height > self.height
        {
            return Err(Error::invalid(format!(
                "patch {} does not fit at ({x0}, {y0}) in {}",
                fmt_shape(patch.shape()),
                fmt_shape(self.shape())
            )));
        }
        let c = self.channels;
        for py in 0..patch.height {
            let dst = self.index(y0 + py, x0, 0);
            let src = patch.index(py, 0, 0);
            self.data[dst..dst + patch.width * c]
                .copy_from_slice(&patch.data[src..src + patch.width * c]);
        }
        Ok(())
    }

    /// Sets every pixel of the `w x h` window at `(x0, y0)` to `value`.
    pub fn fill_region(&mut self, x0: usize, y0: usize, w: usize, h: usize, value: f64) {
        let value = clamp_unit(value);
        let (xs, xe) = (x0.min(self.width), (x0 + w).min(self.width));
        for y in y0..(y0 + h).min(self.height) {
            let start = self.index(y, xs, 0);
            let end = start + (xe - xs) * self.channels;
            self.data[start..end].fill(value);
        }
    }

    /// Rounds every value to the nearest multiple of 1/255, as written to disk.
    pub fn quantize_8bit(&mut self) {
        for v in &mut self.data {
            *v = f64::from(to_u8(*v)) / 255.0;
        }
    }
}

pub(crate) fn fmt_shape((h, w, c): (usize, usize, usize)) -> String {
    format!("{w}x{h}x{c}")
}

#[inline]
pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// `round(v * 255)` with `v` clamped into `[0, 1]`.
#[inline]
pub fn to_u8(v: f64) -> u8 {
    (clamp_unit(v) * 255.0).round() as u8
}
