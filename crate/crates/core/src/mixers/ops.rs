use serde::{Deserialize, Serialize};

use super::label::{mix_labels, LabelVector};
use super::policy::{FilterTarget, PasteFilter};
use crate::error::{Error, Result};
use crate::image::{clamp_unit, resize, ImageBuffer, ResizeMethod, ResizeSpec};
use crate::sampling::CropBox;

/// A mixed sample and how it was made.
///
/// `crop` is `None` for outcomes without a pasted region (no-mix, mixup).
/// The resize ratio of the occluded image is always one and is not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixOutcome {
    pub image: ImageBuffer,
    pub label: LabelVector,
    pub crop: Option<CropBox>,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub epsilon_b: f64,
    pub partner_index: usize,
    pub stream_id: u64,
}

impl MixOutcome {
    /// The unmixed sample.
    pub fn passthrough(image: ImageBuffer, label: LabelVector, self_index: usize) -> Self {
        Self {
            image,
            label,
            crop: None,
            lambda_a: 1.0,
            lambda_b: 0.0,
            epsilon_b: 0.0,
            partner_index: self_index,
            stream_id: 0,
        }
    }

    /// `lambda_a + lambda_b * epsilon_b`, one for every valid outcome.
    pub fn weight_total(&self) -> f64 {
        self.lambda_a + self.lambda_b * self.epsilon_b
    }
}

/// Where in the resized `W' x H'` image the `w x h` patch is cut for a box at `(xs, ys)`.
///
/// The offset slides linearly with the box position, `round(xs (W' - w) / (W - w))`,
/// so a box at the left edge takes the left edge of the resized image and `W' = W`
/// reproduces the same-coordinate patch. Zero when `W = w`.
pub fn patch_offset(pos: usize, box_len: usize, resized_len: usize, full_len: usize) -> usize {
    if full_len == box_len || resized_len == box_len {
        return 0;
    }
    let off = (pos as f64 * (resized_len - box_len) as f64 / (full_len - box_len) as f64).round();
    (off as usize).min(resized_len - box_len)
}

/// Pastes a `w x h` window of `x_b` resized to `resized_w x resized_h` into the box.
///
/// This is the general resize-ratio mixer: the label weights are
/// `lambda_a = 1 - wh/(WH)`, `lambda_b = wh/(W'H')`, `epsilon_b = W'H'/(WH)`.
#[allow(clippy::too_many_arguments)]
pub fn paste_resized(
    x_a: &ImageBuffer,
    x_b: &ImageBuffer,
    y_a: &LabelVector,
    y_b: &LabelVector,
    crop: CropBox,
    resized_w: usize,
    resized_h: usize,
    method: ResizeMethod,
    filter: Option<&PasteFilter>,
) -> Result<MixOutcome> {
    x_a.check_same_shape(x_b)?;
    let (h, w, _) = x_a.shape();
    if !crop.fits(w, h) {
        return Err(Error::invalid(format!("box {crop:?} does not fit in {w}x{h}")));
    }
    let (bw, bh) = (crop.width(), crop.height());
    if resized_w < bw || resized_h < bh {
        return Err(Error::invalid(format!(
            "resized size {resized_w}x{resized_h} is smaller than the {bw}x{bh} box"
        )));
    }
    let mut base = match filter {
        Some(f) if f.target == FilterTarget::Occluded => f.kind.apply(x_a)?,
        _ => x_a.clone(),
    };
    let mut resized = resize(
        x_b,
        ResizeSpec {
            target_width: resized_w,
            target_height: resized_h,
            method,
        },
    )?;
    if let Some(f) = filter.filter(|f| f.target == FilterTarget::Resized) {
        resized = f.kind.apply(&resized)?;
    }
    let ox = patch_offset(crop.xs, bw, resized_w, w);
    let oy = patch_offset(crop.ys, bh, resized_h, h);
    let patch = if (ox, oy, bw, bh) == (0, 0, resized_w, resized_h) {
        resized
    } else {
        resized.crop(ox, oy, bw, bh)?
    };
    base.paste(&patch, crop.xs, crop.ys)?;

    let area = crop.area() as f64;
    let full = (w * h) as f64;
    let resized_area = (resized_w * resized_h) as f64;
    let lambda_a = 1.0 - area / full;
    let lambda_b = area / resized_area;
    let epsilon_b = resized_area / full;
    let label = mix_labels(y_a, y_b, lambda_a, lambda_b, epsilon_b)?;
    Ok(MixOutcome {
        image: base,
        label,
        crop: Some(crop),
        lambda_a,
        lambda_b,
        epsilon_b,
        partner_index: 0,
        stream_id: 0,
    })
}

/// ContextMix: the whole of `x_b`, resized to the box, replaces the box in `x_a`.
pub fn contextmix(
    x_a: &ImageBuffer,
    x_b: &ImageBuffer,
    y_a: &LabelVector,
    y_b: &LabelVector,
    crop: CropBox,
) -> Result<MixOutcome> {
    paste_resized(
        x_a,
        x_b,
        y_a,
        y_b,
        crop,
        crop.width(),
        crop.height(),
        ResizeMethod::Bilinear,
        None,
    )
}

/// Resized size `(round(W sqrt(eps)), round(H sqrt(eps)))` for resize ratio `eps`.
pub fn resized_dims(width: usize, height: usize, epsilon_b: f64) -> (usize, usize) {
    let s = epsilon_b.sqrt();
    (
        (width as f64 * s).round() as usize,
        (height as f64 * s).round() as usize,
    )
}

/// Resize-ratio mixer: `x_b` is resized by `sqrt(epsilon_b)` per axis and a box-sized
/// window is cut from it.
///
/// The fit ratio `wh/(WH)` on a square box gives [`contextmix`]; `epsilon_b = 1` gives
/// [`cutmix`]. Ratios whose resized image is smaller than the box are rejected.
pub fn contextmix_general(
    x_a: &ImageBuffer,
    x_b: &ImageBuffer,
    y_a: &LabelVector,
    y_b: &LabelVector,
    crop: CropBox,
    epsilon_b: f64,
) -> Result<MixOutcome> {
    if !(epsilon_b > 0.0) || !epsilon_b.is_finite() {
        return Err(Error::invalid(format!("resize ratio must be > 0, got {epsilon_b}")));
    }
    let (rw, rh) = resized_dims(x_a.width(), x_a.height(), epsilon_b);
    paste_resized(x_a, x_b, y_a, y_b, crop, rw, rh, ResizeMethod::Bilinear, None)
}

/// CutMix: the same-coordinate patch of `x_b` replaces the box in `x_a`.
pub fn cutmix(
    x_a: &ImageBuffer,
    x_b: &ImageBuffer,
    y_a: &LabelVector,
    y_b: &LabelVector,
    crop: CropBox,
) -> Result<MixOutcome> {
    paste_resized(
        x_a,
        x_b,
        y_a,
        y_b,
        crop,
        x_a.width(),
        x_a.height(),
        ResizeMethod::Bilinear,
        None,
    )
}

/// Mixup: `lambda x_a + (1 - lambda) x_b` for pixels and labels alike.
///
/// Pixels where the inputs agree are copied, so self-mixing is exact.
pub fn mixup(
    x_a: &ImageBuffer,
    x_b: &ImageBuffer,
    y_a: &LabelVector,
    y_b: &LabelVector,
    lambda: f64,
) -> Result<MixOutcome> {
    x_a.check_same_shape(x_b)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("mixup lambda must lie in [0, 1], got {lambda}")));
    }
    let mu = 1.0 - lambda;
    let data = x_a
        .data()
        .iter()
        .zip(x_b.data())
        .map(|(&a, &b)| if a == b { a } else { clamp_unit(lambda * a + mu * b) })
        .collect();
    let (h, w, c) = x_a.shape();
    let label = mix_labels(y_a, y_b, lambda, mu, 1.0)?;
    Ok(MixOutcome {
        image: ImageBuffer::from_raw(h, w, c, data),
        label,
        crop: None,
        lambda_a: lambda,
        lambda_b: mu,
        epsilon_b: 1.0,
        partner_index: 0,
        stream_id: 0,
    })
}

/// Cutout: the box is overwritten with `fill`. Labels are left to the caller.
pub fn cutout(x: &ImageBuffer, crop: Option<CropBox>, fill: f64) -> ImageBuffer {
    let mut out = x.clone();
    if let Some(b) = crop {
        out.fill_region(b.xs, b.ys, b.width(), b.height(), fill);
    }
    out
}
