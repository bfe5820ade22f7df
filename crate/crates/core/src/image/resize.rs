use serde::{Deserialize, Serialize};

use super::{clamp_unit, ImageBuffer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResizeMethod {
    #[default]
    Bilinear,
    Nearest,
}

/// Target size for [`resize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResizeSpec {
    pub target_width: usize,
    pub target_height: usize,
    pub method: ResizeMethod,
}

impl ResizeSpec {
    pub fn bilinear(target_width: usize, target_height: usize) -> Self {
        Self {
            target_width,
            target_height,
            method: ResizeMethod::Bilinear,
        }
    }

    pub fn nearest(target_width: usize, target_height: usize) -> Self {
        Self {
            target_width,
            target_height,
            method: ResizeMethod::Nearest,
        }
    }
}

/// Source sample positions for one output axis: `(lower index, upper index, fraction)`.
fn axis_taps(src_len: usize, dst_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = src_len as f64 / dst_len as f64;
    let last = (src_len - 1) as f64;
    (0..dst_len)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = pos.floor();
            let lo_idx = lo as usize;
            let hi_idx = (lo_idx + 1).min(src_len - 1);
            (lo_idx, hi_idx, pos - lo)
        })
        .collect()
}

fn nearest_taps(src_len: usize, dst_len: usize) -> Vec<usize> {
    let scale = src_len as f64 / dst_len as f64;
    (0..dst_len)
        .map(|i| (((i as f64 + 0.5) * scale).floor() as usize).min(src_len - 1))
        .collect()
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // Exact when a == b, so constant regions stay constant.
    a + t * (b - a)
}

/// Resamples `src` to the size in `spec`.
///
/// Bilinear sampling maps output pixel centers onto the source grid with the
/// half-pixel convention, `src = (i + 0.5) * H / H' - 0.5`, clamped to the edges.
/// Equal source and target sizes return an exact copy.
pub fn resize(src: &ImageBuffer, spec: ResizeSpec) -> Result<ImageBuffer> {
    let (tw, th) = (spec.target_width, spec.target_height);
    if tw == 0 || th == 0 {
        return Err(Error::invalid(format!(
            "resize target must be at least 1x1, got {tw}x{th}"
        )));
    }
    let (h, w, c) = src.shape();
    if tw == w && th == h {
        return Ok(src.clone());
    }
    let mut out = Vec::with_capacity(tw * th * c);
    match spec.method {
        ResizeMethod::Bilinear => {
            let xs = axis_taps(w, tw);
            let ys = axis_taps(h, th);
            for &(y0, y1, ty) in &ys {
                for &(x0, x1, tx) in &xs {
                    for ch in 0..c {
                        let top = lerp(src.get(y0, x0, ch), src.get(y0, x1, ch), tx);
                        let bottom = lerp(src.get(y1, x0, ch), src.get(y1, x1, ch), tx);
                        out.push(clamp_unit(lerp(top, bottom, ty)));
                    }
                }
            }
        }
        ResizeMethod::Nearest => {
            let xs = nearest_taps(w, tw);
            let ys = nearest_taps(h, th);
            for &sy in &ys {
                for &sx in &xs {
                    for ch in 0..c {
                        out.push(src.get(sy, sx, ch));
                    }
                }
            }
        }
    }
    Ok(ImageBuffer::from_raw(th, tw, c, out))
}
