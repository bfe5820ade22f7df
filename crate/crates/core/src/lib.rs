//! Deterministic image mixing augmentation.
//!
//! The centerpiece is ContextMix: instead of pasting a same-coordinate patch of a
//! second image (CutMix), the *whole* second image is resized into the cut region,
//! and the label is mixed by area through the resize ratio. Around it sit the
//! comparison policies (CutMix, Mixup, Cutout), the ablation variants, and a small
//! experiment harness: a synthetic long-tailed inspection dataset, a soft-label
//! classifier, evaluation metrics and a per-surface inspection pipeline.
//!
//! ```
//! use contextmix::image::ImageBuffer;
//! use contextmix::mixers::{contextmix, LabelVector};
//! use contextmix::sampling::CropBox;
//!
//! let a = ImageBuffer::filled(224, 224, 3, 0.0);
//! let b = ImageBuffer::filled(224, 224, 3, 1.0);
//! let crop = CropBox::new(56, 56, 168, 168, 224, 224).unwrap();
//! let out = contextmix(&a, &b, &LabelVector::one_hot(0, 2), &LabelVector::one_hot(1, 2), crop).unwrap();
//! assert_eq!(out.label.weights(), &[0.75, 0.25]);
//! ```

pub mod dataio;
pub mod error;
pub mod image;
pub mod inspection;
pub mod metrics;
pub mod mixers;
pub mod rng;
pub mod sampling;
pub mod trainer;

pub use error::{Error, Result};
