use serde::{Deserialize, Serialize};

use super::{clamp_unit, ImageBuffer};
use crate::error::{Error, Result};

/// Normalized 1-D Gaussian taps `exp(-k^2 / 2 sigma^2)` for `k` in `-r..=r`, `r = ceil(3 sigma)`.
///
/// `sigma == 0` yields the single tap `[1.0]`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("blur sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(vec![1.0]);
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(taps)
}

#[derive(Clone, Copy)]
enum Axis {
    Horizontal,
    Vertical,
}

/// One separable pass with edge clamping.
///
/// Accumulates `center + sum w_k (x_k - center)`, which equals the plain weighted
/// sum for normalized taps but reproduces constant runs exactly.
fn convolve_axis(src: &ImageBuffer, taps: &[f64], axis: Axis) -> ImageBuffer {
    let (h, w, c) = src.shape();
    let radius = (taps.len() / 2) as isize;
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let center = src.get(y, x, ch);
                let mut acc = 0.0;
                for (j, &wt) in taps.iter().enumerate() {
                    let k = j as isize - radius;
                    let v = match axis {
                        Axis::Horizontal => {
                            let sx = (x as isize + k).clamp(0, w as isize - 1) as usize;
                            src.get(y, sx, ch)
                        }
                        Axis::Vertical => {
                            let sy = (y as isize + k).clamp(0, h as isize - 1) as usize;
                            src.get(sy, x, ch)
                        }
                    };
                    acc += wt * (v - center);
                }
                out.push(clamp_unit(center + acc));
            }
        }
    }
    ImageBuffer::from_raw(h, w, c, out)
}

/// Separable Gaussian blur with edge-clamped borders. `sigma == 0` returns a copy.
pub fn gaussian_blur(src: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    let taps = gaussian_kernel(sigma)?;
    if taps.len() == 1 {
        return Ok(src.clone());
    }
    let horizontal = convolve_axis(src, &taps, Axis::Horizontal);
    Ok(convolve_axis(&horizontal, &taps, Axis::Vertical))
}

/// `clamp(src + amount * (src - blur(src, sigma)), 0, 1)`.
pub fn unsharp(src: &ImageBuffer, sigma: f64, amount: f64) -> Result<ImageBuffer> {
    if !amount.is_finite() {
        return Err(Error::invalid(format!("unsharp amount must be finite, got {amount}")));
    }
    let blurred = gaussian_blur(src, sigma)?;
    let data = src
        .data()
        .iter()
        .zip(blurred.data())
        .map(|(&s, &b)| clamp_unit(s + amount * (s - b)))
        .collect();
    let (h, w, c) = src.shape();
    Ok(ImageBuffer::from_raw(h, w, c, data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphOp {
    Erode,
    Dilate,
    /// Erode, then dilate.
    Open,
    /// Dilate, then erode.
    Close,
}

fn extremum_axis(src: &ImageBuffer, radius: usize, axis: Axis, take_max: bool) -> ImageBuffer {
    let (h, w, c) = src.shape();
    let r = radius as isize;
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut best = src.get(y, x, ch);
                for k in -r..=r {
                    let v = match axis {
                        Axis::Horizontal => {
                            src.get(y, (x as isize + k).clamp(0, w as isize - 1) as usize, ch)
                        }
                        Axis::Vertical => {
                            src.get((y as isize + k).clamp(0, h as isize - 1) as usize, x, ch)
                        }
                    };
                    best = if take_max { best.max(v) } else { best.min(v) };
                }
                out.push(best);
            }
        }
    }
    ImageBuffer::from_raw(h, w, c, out)
}

fn square_extremum(src: &ImageBuffer, radius: usize, take_max: bool) -> ImageBuffer {
    // min/max over a square window factor into row then column passes
    let rows = extremum_axis(src, radius, Axis::Horizontal, take_max);
    extremum_axis(&rows, radius, Axis::Vertical, take_max)
}

/// Grayscale morphology with a `(2r+1)^2` square structuring element, per channel.
pub fn morphology(src: &ImageBuffer, op: MorphOp, radius: usize) -> Result<ImageBuffer> {
    if radius == 0 {
        return Err(Error::invalid("morphology radius must be >= 1"));
    }
    Ok(match op {
        MorphOp::Erode => square_extremum(src, radius, false),
        MorphOp::Dilate => square_extremum(src, radius, true),
        MorphOp::Open => square_extremum(&square_extremum(src, radius, false), radius, true),
        MorphOp::Close => square_extremum(&square_extremum(src, radius, true), radius, false),
    })
}

/// Anisotropic total variation: sum of absolute horizontal and vertical neighbor differences.
pub fn total_variation(img: &ImageBuffer) -> f64 {
    let (h, w, c) = img.shape();
    let mut tv = 0.0;
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let v = img.get(y, x, ch);
                if x + 1 < w {
                    tv += (img.get(y, x + 1, ch) - v).abs();
                }
                if y + 1 < h {
                    tv += (img.get(y + 1, x, ch) - v).abs();
                }
            }
        }
    }
    tv
}
