//! Manifests, PPM/PGM files, mix records and the synthetic dataset generator.

pub mod manifest;
pub mod ppm;
pub mod records;
pub mod synth;

pub use manifest::{DatasetManifest, ManifestEntry};
pub use ppm::{decode_pnm, encode_pnm, read_ppm, write_ppm};
pub use records::{format_mix_record, write_mix_records};
pub use synth::{
    generate_synthetic, render_sample, synthesize, DefectKind, DefectShape, Placement, SynthSample, SynthSpec,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Images and class indices held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Vec<ImageBuffer>,
    pub classes: Vec<usize>,
    pub n_classes: usize,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(images: Vec<ImageBuffer>, classes: Vec<usize>, n_classes: usize) -> Result<Self> {
        if images.len() != classes.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", images.len()),
                actual: format!("{} labels", classes.len()),
            });
        }
        if let Some(&c) = classes.iter().find(|&&c| c >= n_classes) {
            return Err(Error::invalid(format!("class {c} out of range for {n_classes} classes")));
        }
        if let Some(first) = images.first() {
            if let Some(other) = images.iter().find(|im| !im.same_shape(first)) {
                return Err(Error::DimensionMismatch {
                    expected: crate::image::fmt_shape(first.shape()),
                    actual: crate::image::fmt_shape(other.shape()),
                });
            }
        }
        Ok(Self {
            images,
            classes,
            n_classes,
            class_names: (0..n_classes).map(|c| format!("class{c}")).collect(),
        })
    }

    /// Decodes every image listed in the manifest.
    pub fn from_manifest(manifest: &DatasetManifest) -> Result<Self> {
        let images = (0..manifest.len())
            .into_par_iter()
            .map(|i| manifest.load_image(i))
            .collect::<Result<Vec<_>>>()?;
        let classes = manifest.entries.iter().map(|e| e.class_index).collect();
        let mut data = Self::new(images, classes, manifest.n_classes())?;
        data.class_names = manifest.class_names.clone();
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn class_counts(&self) -> Vec<u64> {
        let mut counts = vec![0; self.n_classes];
        for &c in &self.classes {
            counts[c] += 1;
        }
        counts
    }

    /// Flattened length of one image, 0 for an empty dataset.
    pub fn feature_len(&self) -> usize {
        self.images.first().map_or(0, |im| im.data().len())
    }
}
