//! Minibatch mixing.
//!
//! Per batch: pair every image with a partner drawn from a seeded permutation,
//! draw one mixing ratio and one box, then mix each pair. All randomness comes
//! from streams keyed by `(master_seed, epoch, batch_index)`, and the per-image
//! work is pure, so outcomes do not depend on the number of worker threads.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::label::LabelVector;
use super::ops::{cutout, mixup, paste_resized, resized_dims, MixOutcome};
use super::policy::{EpsilonRule, MixKind, MixPolicy, Variant};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::rng::RngStream;
use crate::sampling::{box_from_center, cut_size, sample_cropbox, sample_lambda, CropBox};

/// Identifies one minibatch within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchContext {
    pub epoch: usize,
    pub total_epochs: usize,
    pub batch_index: usize,
    pub master_seed: u64,
    /// Worker threads for the per-image stage; `0` or `1` runs inline.
    pub threads: usize,
}

impl BatchContext {
    pub fn new(master_seed: u64) -> Self {
        Self {
            epoch: 0,
            total_epochs: 1,
            batch_index: 0,
            master_seed,
            threads: 1,
        }
    }

    pub fn at(mut self, epoch: usize, total_epochs: usize, batch_index: usize) -> Self {
        self.epoch = epoch;
        self.total_epochs = total_epochs;
        self.batch_index = batch_index;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    /// Stream for the batch-level draws (permutation, schedule, ratio, box).
    pub fn batch_stream(&self) -> RngStream {
        RngStream::derive(
            self.master_seed,
            &[self.epoch as u64, self.batch_index as u64, u64::MAX],
        )
    }

    /// Stream for per-image draws when boxes are sampled per image.
    pub fn image_stream(&self, image_index: usize) -> RngStream {
        RngStream::derive(
            self.master_seed,
            &[self.epoch as u64, self.batch_index as u64, image_index as u64],
        )
    }
}

/// Probability that a batch is mixed at `epoch` under a scheduled variant.
///
/// The ramp is linear from 0 at the first epoch to 1 at the last; a one-epoch
/// run sits at the top of the ramp.
pub fn schedule_probability(variant: Option<Variant>, epoch: usize, total_epochs: usize) -> f64 {
    let ramp = if total_epochs <= 1 {
        1.0
    } else {
        (epoch as f64 / (total_epochs - 1) as f64).clamp(0.0, 1.0)
    };
    match variant {
        Some(Variant::ScheduledUp) => ramp,
        Some(Variant::ScheduledDown) => 1.0 - ramp,
        _ => 1.0,
    }
}

/// Cell `region` (1-based) of the 3x3 grid over a `width x height` image.
///
/// Regions 1-4 are the corner cells in row-major order, 5 is the center cell.
pub fn grid_region(width: usize, height: usize, region: u8) -> Result<CropBox> {
    let (col, row) = match region {
        1 => (0, 0),
        2 => (2, 0),
        3 => (0, 2),
        4 => (2, 2),
        5 => (1, 1),
        other => return Err(Error::invalid(format!("fixed region id must be 1..=5, got {other}"))),
    };
    let edge = |i: usize, len: usize| (i as f64 * len as f64 / 3.0).round() as usize;
    CropBox::new(
        edge(col, width),
        edge(row, height),
        edge(col + 1, width),
        edge(row + 1, height),
        width,
        height,
    )
}

/// One draw of the random mixing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Draw {
    lambda: f64,
    crop: Option<CropBox>,
}

fn draw_params<R: Rng + ?Sized>(
    policy: &MixPolicy,
    width: usize,
    height: usize,
    rng: &mut R,
) -> Result<Draw> {
    let mut lambda = || -> Result<f64> {
        match policy.fixed_lambda {
            Some(l) => Ok(l),
            None => sample_lambda(policy.alpha, rng),
        }
    };
    if policy.kind == MixKind::Mixup {
        return Ok(Draw {
            lambda: lambda()?,
            crop: None,
        });
    }
    match policy.variant {
        Some(Variant::FixedRegion { region }) => Ok(Draw {
            lambda: 8.0 / 9.0,
            crop: Some(grid_region(width, height, region)?),
        }),
        Some(Variant::FixedSize { fraction }) => {
            let lambda = 1.0 - fraction;
            Ok(Draw {
                lambda,
                crop: sample_cropbox(width, height, lambda, rng)?,
            })
        }
        Some(Variant::SquareRegion) => {
            let lambda = lambda()?;
            let (w0, h0) = cut_size(width, height, lambda);
            let side = ((w0 * h0) as f64).sqrt().round() as usize;
            let cx = rng.random_range(0..width);
            let cy = rng.random_range(0..height);
            Ok(Draw {
                lambda,
                crop: box_from_center(width, height, side, side, cx, cy),
            })
        }
        Some(Variant::CenterGaussian) => {
            let side = |len: usize, rng: &mut R| -> Result<usize> {
                let std = (len as f64 / 4.0).clamp(1.0, len as f64);
                let normal = Normal::new(0.0, std).map_err(|e| Error::invalid(e.to_string()))?;
                let v: f64 = normal.sample(rng);
                Ok((v.abs().round() as usize).clamp(1, len))
            };
            let w = side(width, rng)?;
            let h = side(height, rng)?;
            let crop = box_from_center(width, height, w, h, width / 2, height / 2);
            Ok(Draw {
                lambda: crop.map_or(1.0, |b| 1.0 - b.area_fraction(width, height)),
                crop,
            })
        }
        _ => {
            let lambda = lambda()?;
            Ok(Draw {
                lambda,
                crop: sample_cropbox(width, height, lambda, rng)?,
            })
        }
    }
}

fn resized_size(policy: &MixPolicy, crop: CropBox, width: usize, height: usize) -> (usize, usize) {
    match policy.kind {
        MixKind::CutMix => (width, height),
        _ => match policy.epsilon {
            Some(EpsilonRule::Absolute(eps)) => {
                let (rw, rh) = resized_dims(width, height, eps);
                (rw.max(crop.width()), rh.max(crop.height()))
            }
            Some(EpsilonRule::Fit) | None => (crop.width(), crop.height()),
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn mix_one(
    policy: &MixPolicy,
    draw: Draw,
    images: &[ImageBuffer],
    labels: &[LabelVector],
    index: usize,
    partner: usize,
    stream_id: u64,
) -> Result<MixOutcome> {
    let (x_a, y_a) = (&images[index], &labels[index]);
    let (x_b, y_b) = (&images[partner], &labels[partner]);
    let (h, w, _) = x_a.shape();
    let mut outcome = match (policy.kind, draw.crop) {
        (MixKind::None, _) => MixOutcome::passthrough(x_a.clone(), y_a.clone(), index),
        (MixKind::Mixup, _) => mixup(x_a, x_b, y_a, y_b, draw.lambda)?,
        (MixKind::Cutout, crop) => {
            let mut out = MixOutcome::passthrough(cutout(x_a, crop, policy.cutout_fill), y_a.clone(), index);
            out.crop = crop;
            out
        }
        (MixKind::ContextMix | MixKind::CutMix, None) => {
            MixOutcome::passthrough(x_a.clone(), y_a.clone(), index)
        }
        (MixKind::ContextMix | MixKind::CutMix, Some(crop)) => {
            let (rw, rh) = resized_size(policy, crop, w, h);
            let mut out = paste_resized(
                x_a,
                x_b,
                y_a,
                y_b,
                crop,
                rw,
                rh,
                policy.resize_method,
                policy.filter.as_ref(),
            )?;
            match policy.variant {
                Some(Variant::OneHot) => {
                    out.label = if out.lambda_a >= 0.5 { y_a.clone() } else { y_b.clone() };
                }
                Some(Variant::CompleteLabel) => {
                    out.label = super::label::mix_labels(y_a, y_b, 0.5, 0.5, 1.0)?;
                }
                _ => {}
            }
            out
        }
    };
    if policy.kind != MixKind::None && policy.kind != MixKind::Cutout {
        outcome.partner_index = partner;
    }
    outcome.stream_id = stream_id;
    Ok(outcome)
}

fn check_batch(images: &[ImageBuffer], labels: &[LabelVector]) -> Result<()> {
    if images.is_empty() {
        return Err(Error::EmptyInput("cannot mix an empty batch".into()));
    }
    if images.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", images.len()),
            actual: format!("{} labels", labels.len()),
        });
    }
    let first = &images[0];
    for img in &images[1..] {
        first.check_same_shape(img)?;
    }
    let k = labels[0].n_classes();
    if labels.iter().any(|l| l.n_classes() != k) {
        return Err(Error::invalid("labels disagree on the number of classes"));
    }
    Ok(())
}

/// Mixes a minibatch under `policy`.
///
/// Outcome `i` mixes image `i` (the occluded side) with the image at position `i`
/// of a seeded permutation. Unless `policy.per_image_boxes` is set, one ratio and
/// one box are shared by the whole batch. Batches skipped by a schedule, and
/// degenerate boxes, come back unmixed.
pub fn mix_batch(
    images: &[ImageBuffer],
    labels: &[LabelVector],
    policy: &MixPolicy,
    ctx: &BatchContext,
) -> Result<Vec<MixOutcome>> {
    policy.validate()?;
    check_batch(images, labels)?;
    let n = images.len();
    let (h, w, _) = images[0].shape();
    let batch_stream = ctx.batch_stream();
    let mut rng = batch_stream.rng();

    let mut partners: Vec<usize> = (0..n).collect();
    partners.shuffle(&mut rng);

    let p = schedule_probability(policy.variant, ctx.epoch, ctx.total_epochs);
    let apply = if p >= 1.0 {
        true
    } else {
        rng.random::<f64>() < p
    };
    let effective = if apply { policy.clone() } else { MixPolicy::none() };

    let shared = draw_params(&effective, w, h, &mut rng)?;
    let work = |i: usize| -> Result<MixOutcome> {
        let (draw, stream_id) = if effective.per_image_boxes {
            let stream = ctx.image_stream(i);
            (draw_params(&effective, w, h, &mut stream.rng())?, stream.stream_id)
        } else {
            (shared, batch_stream.stream_id)
        };
        mix_one(&effective, draw, images, labels, i, partners[i], stream_id)
    };

    if ctx.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(ctx.threads)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..n).into_par_iter().map(work).collect())
    } else {
        (0..n).map(work).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(n: usize, size: usize, k: usize) -> (Vec<ImageBuffer>, Vec<LabelVector>) {
        let images = (0..n)
            .map(|i| {
                ImageBuffer::from_fn(size, size, 3, |y, x, c| {
                    ((i * 13 + y * 7 + x * 3 + c) % 29) as f64 / 28.0
                })
            })
            .collect();
        let labels = (0..n).map(|i| LabelVector::one_hot(i % k, k)).collect();
        (images, labels)
    }

    #[test]
    fn self_mix_is_identity_for_constant_images() {
        let img = ImageBuffer::filled(8, 8, 3, 0.4);
        let images = vec![img.clone(), img.clone()];
        let labels = vec![LabelVector::one_hot(1, 3); 2];
        let ctx = BatchContext::new(9);
        for policy in [
            MixPolicy::contextmix(),
            MixPolicy::cutmix(),
            MixPolicy::mixup(),
            MixPolicy::contextmix().with_variant(Variant::SquareRegion),
            MixPolicy::contextmix().with_variant(Variant::FixedRegion { region: 5 }),
            MixPolicy::contextmix().with_epsilon(EpsilonRule::Absolute(0.7)),
        ] {
            for out in mix_batch(&images, &labels, &policy, &ctx).unwrap() {
                assert_eq!(out.image, img);
                assert_eq!(out.label, labels[0]);
            }
        }
    }

    #[test]
    fn self_mix_cutmix_and_mixup_any_image() {
        let (imgs, _) = batch(1, 12, 2);
        let images = vec![imgs[0].clone(), imgs[0].clone()];
        let labels = vec![LabelVector::one_hot(0, 2); 2];
        for policy in [MixPolicy::cutmix(), MixPolicy::mixup()] {
            for seed in 0..5 {
                for out in mix_batch(&images, &labels, &policy, &BatchContext::new(seed)).unwrap() {
                    assert_eq!(out.image, images[0]);
                    assert_eq!(out.label, labels[0]);
                }
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_outcomes() {
        let (images, labels) = batch(16, 10, 4);
        for policy in [
            MixPolicy::contextmix(),
            MixPolicy::contextmix().with_per_image_boxes(true),
            MixPolicy::cutmix(),
        ] {
            let one = mix_batch(&images, &labels, &policy, &BatchContext::new(3).at(2, 5, 7)).unwrap();
            let eight = mix_batch(
                &images,
                &labels,
                &policy,
                &BatchContext::new(3).at(2, 5, 7).with_threads(8),
            )
            .unwrap();
            assert_eq!(one, eight);
        }
    }

    #[test]
    fn one_box_per_batch() {
        let (images, labels) = batch(8, 16, 4);
        let outs = mix_batch(&images, &labels, &MixPolicy::contextmix(), &BatchContext::new(1)).unwrap();
        assert!(outs.windows(2).all(|p| p[0].crop == p[1].crop));
        let outs = mix_batch(
            &images,
            &labels,
            &MixPolicy::contextmix().with_per_image_boxes(true),
            &BatchContext::new(1),
        )
        .unwrap();
        assert!(outs.windows(2).any(|p| p[0].crop != p[1].crop));
    }

    #[test]
    fn partners_form_a_permutation() {
        let (images, labels) = batch(10, 8, 5);
        let outs = mix_batch(&images, &labels, &MixPolicy::mixup(), &BatchContext::new(4)).unwrap();
        let mut seen: Vec<usize> = outs.iter().map(|o| o.partner_index).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn fixed_region_cells() {
        assert_eq!(grid_region(9, 9, 1).unwrap(), CropBox { xs: 0, ys: 0, xe: 3, ye: 3 });
        assert_eq!(grid_region(9, 9, 2).unwrap(), CropBox { xs: 6, ys: 0, xe: 9, ye: 3 });
        assert_eq!(grid_region(9, 9, 3).unwrap(), CropBox { xs: 0, ys: 6, xe: 3, ye: 9 });
        assert_eq!(grid_region(9, 9, 4).unwrap(), CropBox { xs: 6, ys: 6, xe: 9, ye: 9 });
        assert_eq!(grid_region(9, 9, 5).unwrap(), CropBox { xs: 3, ys: 3, xe: 6, ye: 6 });
        assert!(grid_region(9, 9, 0).is_err());

        let (images, labels) = batch(4, 9, 2);
        let policy = MixPolicy::contextmix().with_variant(Variant::FixedRegion { region: 4 });
        for out in mix_batch(&images, &labels, &policy, &BatchContext::new(2)).unwrap() {
            assert_eq!(out.crop, Some(CropBox { xs: 6, ys: 6, xe: 9, ye: 9 }));
            assert!((out.epsilon_b - 1.0 / 9.0).abs() < 1e-15);
            assert!((out.lambda_a - 8.0 / 9.0).abs() < 1e-15);
        }
    }

    #[test]
    fn label_variants() {
        let (images, labels) = batch(8, 16, 8);
        for seed in 0..20 {
            let ctx = BatchContext::new(seed);
            let onehot = mix_batch(
                &images,
                &labels,
                &MixPolicy::contextmix().with_variant(Variant::OneHot),
                &ctx,
            )
            .unwrap();
            for (i, out) in onehot.iter().enumerate() {
                let expect = if out.lambda_a >= 0.5 { i } else { out.partner_index };
                assert_eq!(out.label, labels[expect]);
            }
            let complete = mix_batch(
                &images,
                &labels,
                &MixPolicy::contextmix().with_variant(Variant::CompleteLabel),
                &ctx,
            )
            .unwrap();
            for (i, out) in complete.iter().enumerate() {
                if out.crop.is_some() && out.partner_index != i {
                    assert_eq!(out.label.weights()[i % 8], 0.5);
                    assert_eq!(out.label.weights()[out.partner_index % 8], 0.5);
                }
            }
        }
    }

    #[test]
    fn fixed_size_and_square_boxes() {
        let (images, labels) = batch(4, 40, 2);
        for seed in 0..30 {
            let ctx = BatchContext::new(seed);
            let out = mix_batch(
                &images,
                &labels,
                &MixPolicy::contextmix().with_variant(Variant::FixedSize { fraction: 0.75 }),
                &ctx,
            )
            .unwrap();
            let crop = out[0].crop.unwrap();
            // cut side round(40 * sqrt(0.75)) = 35 before clipping
            assert!(crop.width() <= 35 && crop.height() <= 35);
        }
        let images: Vec<ImageBuffer> = (0..4).map(|_| ImageBuffer::filled(20, 60, 1, 0.5)).collect();
        let mut squares = 0;
        for seed in 0..30 {
            let out = mix_batch(
                &images,
                &labels,
                &MixPolicy::contextmix()
                    .with_variant(Variant::SquareRegion)
                    .with_fixed_lambda(0.5),
                &BatchContext::new(seed),
            )
            .unwrap();
            if let Some(c) = out[0].crop {
                // unclipped side round(sqrt(42 * 14)) = 24; clipped only by the image edges
                assert!(c.width() <= 24 && c.height() <= 24);
                squares += usize::from(c.width() == c.height());
            }
        }
        assert!(squares > 0);
    }

    #[test]
    fn center_gaussian_boxes_contain_center() {
        let (images, labels) = batch(4, 32, 2);
        let policy = MixPolicy::contextmix().with_variant(Variant::CenterGaussian);
        for seed in 0..50 {
            let out = mix_batch(&images, &labels, &policy, &BatchContext::new(seed)).unwrap();
            let c = out[0].crop.unwrap();
            assert!(c.xs <= 16 && 16 < c.xe && c.ys <= 16 && 16 < c.ye);
            assert!((out[0].weight_total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_endpoints() {
        assert_eq!(schedule_probability(Some(Variant::ScheduledUp), 0, 10), 0.0);
        assert_eq!(schedule_probability(Some(Variant::ScheduledDown), 0, 10), 1.0);
        assert_eq!(schedule_probability(Some(Variant::ScheduledUp), 5, 11), 0.5);
        assert_eq!(schedule_probability(Some(Variant::ScheduledUp), 9, 10), 1.0);
        assert_eq!(schedule_probability(Some(Variant::ScheduledDown), 9, 10), 0.0);
        assert_eq!(schedule_probability(None, 0, 10), 1.0);
        let (images, labels) = batch(4, 8, 2);
        let policy = MixPolicy::contextmix().with_variant(Variant::ScheduledUp);
        for b in 0..20 {
            let outs = mix_batch(&images, &labels, &policy, &BatchContext::new(0).at(0, 10, b)).unwrap();
            assert!(outs.iter().all(|o| o.crop.is_none()));
        }
    }

    #[test]
    fn batch_errors() {
        let (images, labels) = batch(3, 8, 2);
        let ctx = BatchContext::new(0);
        let p = MixPolicy::contextmix();
        assert!(mix_batch(&[], &[], &p, &ctx).is_err());
        assert!(mix_batch(&images, &labels[..2], &p, &ctx).is_err());
        let mut odd = images.clone();
        odd[1] = ImageBuffer::filled(8, 9, 3, 0.0);
        assert!(mix_batch(&odd, &labels, &p, &ctx).is_err());
    }
}
