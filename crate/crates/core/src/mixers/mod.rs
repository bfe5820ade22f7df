//! Image and label mixing policies.

mod batch;
mod label;
mod ops;
mod policy;

pub use batch::{grid_region, mix_batch, schedule_probability, BatchContext};
pub use label::{argmax, mix_labels, LabelVector, SIMPLEX_TOL};
pub use ops::{
    contextmix, contextmix_general, cutmix, cutout, mixup, paste_resized, patch_offset,
    resized_dims, MixOutcome,
};
pub use policy::{
    EpsilonRule, FilterKind, FilterTarget, MixKind, MixPolicy, PasteFilter, Variant,
};
