//! Synthetic long-tailed inspection images.
//!
//! Each image shows one chip-like component: a textured body with two bright
//! terminals on a dark, evenly lit background. Class 0 is the normal product;
//! every other class adds one small defect drawn from a class-specific shape
//! family. Class sizes follow a configurable long tail. The defect taxonomy is
//! fictional.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ManifestEntry};
use super::ppm::write_ppm;
use super::Dataset;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectShape {
    Scratch,
    Blob,
    CornerChip,
    EdgeNotch,
    Discoloration,
    Crack,
    Pinhole,
    Stain,
    Bridge,
}

impl DefectShape {
    pub const ALL: [DefectShape; 9] = [
        DefectShape::Scratch,
        DefectShape::Blob,
        DefectShape::CornerChip,
        DefectShape::EdgeNotch,
        DefectShape::Discoloration,
        DefectShape::Crack,
        DefectShape::Pinhole,
        DefectShape::Stain,
        DefectShape::Bridge,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DefectShape::Scratch => "scratch",
            DefectShape::Blob => "blob",
            DefectShape::CornerChip => "corner_chip",
            DefectShape::EdgeNotch => "edge_notch",
            DefectShape::Discoloration => "discoloration",
            DefectShape::Crack => "crack",
            DefectShape::Pinhole => "pinhole",
            DefectShape::Stain => "stain",
            DefectShape::Bridge => "bridge",
        }
    }
}

/// Where on the component a defect may appear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Anywhere,
    Edge,
    Corner,
}

/// Generator parameters for one defect class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectKind {
    pub shape: DefectShape,
    /// Defect extent range as a fraction of the image side.
    pub size: (f64, f64),
    /// Intensity change inside the defect (ignored by shapes that expose background).
    pub intensity_delta: f64,
    pub placement: Placement,
}

impl DefectKind {
    pub fn default_for(shape: DefectShape) -> Self {
        let (size, delta, placement) = match shape {
            DefectShape::Scratch => ((0.25, 0.45), 0.45, Placement::Anywhere),
            DefectShape::Blob => ((0.15, 0.25), -0.45, Placement::Anywhere),
            DefectShape::CornerChip => ((0.15, 0.25), 0.0, Placement::Corner),
            DefectShape::EdgeNotch => ((0.15, 0.25), 0.0, Placement::Edge),
            DefectShape::Discoloration => ((0.15, 0.25), 0.35, Placement::Anywhere),
            DefectShape::Crack => ((0.25, 0.45), -0.5, Placement::Anywhere),
            DefectShape::Pinhole => ((0.06, 0.1), -0.6, Placement::Anywhere),
            DefectShape::Stain => ((0.2, 0.3), -0.25, Placement::Anywhere),
            DefectShape::Bridge => ((0.3, 0.45), 0.4, Placement::Anywhere),
        };
        Self {
            shape,
            size,
            intensity_delta: delta,
            placement,
        }
    }
}

/// Configuration of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_classes: usize,
    /// Images per class; index 0 is the normal (majority) class.
    pub class_counts: Vec<u64>,
    pub image_size: usize,
    pub channels: usize,
    /// One entry per defect class (`n_classes - 1`).
    pub defect_kinds: Vec<DefectKind>,
    pub noise_std: f64,
    /// Upper bound on defect pixels as a fraction of the image area.
    pub max_defect_fraction: f64,
    pub seed: u64,
}

/// Class sizes of the 5k-image desk preset (Mean IR about 16.5).
pub const DESK_COUNTS: [u64; 10] = [1853, 1174, 743, 470, 298, 189, 119, 76, 48, 30];

/// Industrial-scale class sizes: 52,304 images, Mean IR about 16.51.
pub const INDUSTRIAL_COUNTS: [u64; 10] = [19394, 12276, 7772, 4921, 3115, 1972, 1249, 791, 495, 319];

impl SynthSpec {
    /// `class_counts.len()` classes with the default defect family per class.
    pub fn with_counts(class_counts: Vec<u64>, image_size: usize, channels: usize, seed: u64) -> Self {
        let n_classes = class_counts.len();
        let defect_kinds = (1..n_classes)
            .map(|c| {
                let mut kind = DefectKind::default_for(DefectShape::ALL[(c - 1) % DefectShape::ALL.len()]);
                // later cycles through the shape list get a stronger contrast
                let cycle = (c - 1) / DefectShape::ALL.len();
                kind.intensity_delta *= 1.0 + 0.5 * cycle as f64;
                kind
            })
            .collect();
        Self {
            n_classes,
            class_counts,
            image_size,
            channels,
            defect_kinds,
            noise_std: 0.02,
            max_defect_fraction: 0.1,
            seed,
        }
    }

    /// Ten classes, 5,000 grayscale 16x16 images.
    pub fn desk(seed: u64) -> Self {
        Self::with_counts(DESK_COUNTS.to_vec(), 16, 1, seed)
    }

    /// Ten classes, 52,304 RGB 32x32 images.
    pub fn industrial(seed: u64) -> Self {
        Self::with_counts(INDUSTRIAL_COUNTS.to_vec(), 32, 3, seed)
    }

    /// A held-out split with the same generator: counts scaled by `fraction`,
    /// at least `min_per_class` per class, drawn from a different seed.
    pub fn validation_split(&self, fraction: f64, min_per_class: u64, seed: u64) -> Self {
        let mut spec = self.clone();
        spec.class_counts = self
            .class_counts
            .iter()
            .map(|&c| ((c as f64 * fraction).round() as u64).max(min_per_class))
            .collect();
        spec.seed = seed;
        spec
    }

    pub fn total(&self) -> u64 {
        self.class_counts.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.class_counts.len() != self.n_classes {
            return Err(Error::invalid(format!(
                "{} class counts for {} classes",
                self.class_counts.len(),
                self.n_classes
            )));
        }
        if self.class_counts.contains(&0) {
            return Err(Error::invalid("every class needs at least one image"));
        }
        if self.class_counts[0] < *self.class_counts.iter().max().expect("non-empty") {
            return Err(Error::invalid("class 0 (normal) must be the majority class"));
        }
        if self.defect_kinds.len() + 1 != self.n_classes {
            return Err(Error::invalid(format!(
                "{} defect kinds for {} defect classes",
                self.defect_kinds.len(),
                self.n_classes - 1
            )));
        }
        if self.image_size < 8 {
            return Err(Error::invalid("image size must be at least 8"));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::invalid("channels must be 1 or 3"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::invalid("noise std must be >= 0"));
        }
        if !(self.max_defect_fraction > 0.0 && self.max_defect_fraction <= 1.0) {
            return Err(Error::invalid("max defect fraction must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        std::iter::once("normal".to_owned())
            .chain(self.defect_kinds.iter().enumerate().map(|(i, k)| {
                let cycle = i / DefectShape::ALL.len();
                if cycle == 0 {
                    k.shape.name().to_owned()
                } else {
                    format!("{}_{}", k.shape.name(), cycle + 1)
                }
            }))
            .collect()
    }

    /// Maximum number of defect pixels allowed per image.
    pub fn defect_pixel_limit(&self) -> usize {
        ((self.max_defect_fraction * (self.image_size * self.image_size) as f64).floor() as usize).max(1)
    }
}

/// One rendered image with its defect mask (`None` for the normal class).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub image: ImageBuffer,
    pub class_index: usize,
    pub defect_mask: Option<Vec<bool>>,
}

impl SynthSample {
    pub fn defect_pixels(&self) -> usize {
        self.defect_mask.as_ref().map_or(0, |m| m.iter().filter(|&&b| b).count())
    }
}

#[derive(Clone, Copy)]
struct Component {
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
}

impl Component {
    fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.w && y >= self.y0 && y < self.y0 + self.h
    }
}

const BACKGROUND: [f64; 3] = [0.08, 0.08, 0.10];
const BODY: [f64; 3] = [0.62, 0.52, 0.36];
const TERMINAL: [f64; 3] = [0.82, 0.82, 0.85];

fn gray(rgb: [f64; 3]) -> f64 {
    (rgb[0] + rgb[1] + rgb[2]) / 3.0
}

fn defect_mask<R: Rng + ?Sized>(
    kind: &DefectKind,
    comp: Component,
    size: usize,
    rng: &mut R,
) -> Vec<bool> {
    let s = size as f64;
    let extent = ((s * rng.random_range(kind.size.0..=kind.size.1)).round() as usize).max(1);
    let mut mask = vec![false; size * size];
    let mark = |x: i64, y: i64, mask: &mut Vec<bool>| {
        if x >= 0 && y >= 0 && (x as usize) < size && (y as usize) < size {
            mask[y as usize * size + x as usize] = true;
        }
    };
    let (cx0, cy0) = (comp.x0 as i64, comp.y0 as i64);
    let (cx1, cy1) = ((comp.x0 + comp.w) as i64 - 1, (comp.y0 + comp.h) as i64 - 1);
    let inside = |rng: &mut R| -> (i64, i64) {
        let x = rng.random_range(cx0..=cx1);
        let y = rng.random_range(cy0..=cy1);
        match kind.placement {
            Placement::Anywhere => (x, y),
            Placement::Edge => {
                if rng.random::<bool>() {
                    (x, if rng.random::<bool>() { cy0 } else { cy1 })
                } else {
                    (if rng.random::<bool>() { cx0 } else { cx1 }, y)
                }
            }
            Placement::Corner => (
                if rng.random::<bool>() { cx0 } else { cx1 },
                if rng.random::<bool>() { cy0 } else { cy1 },
            ),
        }
    };
    let e = extent as i64;
    match kind.shape {
        DefectShape::Scratch | DefectShape::Bridge => {
            let (x, y) = inside(rng);
            let angle: f64 = if kind.shape == DefectShape::Bridge {
                std::f64::consts::FRAC_PI_2
            } else {
                rng.random_range(0.0..std::f64::consts::PI)
            };
            let (dx, dy) = (angle.cos(), angle.sin());
            for t in 0..extent {
                let t = t as f64 - extent as f64 / 2.0;
                mark(x + (t * dx).round() as i64, y + (t * dy).round() as i64, &mut mask);
            }
        }
        DefectShape::Crack => {
            let (mut x, mut y) = inside(rng);
            for _ in 0..extent {
                mark(x, y, &mut mask);
                x += rng.random_range(-1..=1);
                y += rng.random_range(0..=1);
            }
        }
        DefectShape::Blob | DefectShape::Stain | DefectShape::Pinhole => {
            let (x, y) = inside(rng);
            let r = e as f64 / 2.0;
            let ri = r.ceil() as i64;
            for oy in -ri..=ri {
                for ox in -ri..=ri {
                    if ((ox * ox + oy * oy) as f64) <= r * r + 0.25 {
                        mark(x + ox, y + oy, &mut mask);
                    }
                }
            }
        }
        DefectShape::Discoloration => {
            let (x, y) = inside(rng);
            for oy in 0..e {
                for ox in 0..e {
                    mark(x + ox - e / 2, y + oy - e / 2, &mut mask);
                }
            }
        }
        DefectShape::CornerChip => {
            let corner = rng.random_range(0..4);
            let (ax, sx) = if corner % 2 == 0 { (cx0, 1) } else { (cx1, -1) };
            let (ay, sy) = if corner < 2 { (cy0, 1) } else { (cy1, -1) };
            for i in 0..e {
                for j in 0..e - i {
                    mark(ax + sx * i, ay + sy * j, &mut mask);
                }
            }
        }
        DefectShape::EdgeNotch => {
            let (x, _) = inside(rng);
            let top = rng.random::<bool>();
            let depth = (e / 2).max(1);
            for oy in 0..depth {
                for ox in 0..e {
                    let yy = if top { cy0 + oy } else { cy1 - oy };
                    mark(x + ox - e / 2, yy, &mut mask);
                }
            }
        }
    }
    mask
}

/// Renders image `index` of class `class_index`. Deterministic in `(spec.seed, class, index)`.
pub fn render_sample(spec: &SynthSpec, class_index: usize, index: u64) -> SynthSample {
    let size = spec.image_size;
    let mut rng = RngStream::derive(spec.seed, &[class_index as u64, index]).rng();

    let cw = ((size as f64 * rng.random_range(0.66..0.70)).round() as usize).max(4);
    let ch = ((size as f64 * rng.random_range(0.46..0.50)).round() as usize).max(3);
    let max_shift = (size / 32) as i64;
    let jitter = |rng: &mut rand_chacha::ChaCha8Rng, slack: usize| -> usize {
        let base = slack / 2;
        let j = rng.random_range(-max_shift..=max_shift);
        (base as i64 + j).clamp(0, slack as i64) as usize
    };
    let comp = Component {
        x0: jitter(&mut rng, size - cw),
        y0: jitter(&mut rng, size - ch),
        w: cw,
        h: ch,
    };
    let terminal_w = ((cw as f64 * 0.18).round() as usize).max(1);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let shade: f64 = rng.random_range(-0.04..0.04);

    let mut mask = None;
    if class_index > 0 {
        let kind = &spec.defect_kinds[class_index - 1];
        let mut m = defect_mask(kind, comp, size, &mut rng);
        let limit = spec.defect_pixel_limit();
        let mut kept = 0;
        for px in m.iter_mut() {
            if *px {
                kept += 1;
                if kept > limit {
                    *px = false;
                }
            }
        }
        if kept == 0 {
            m[(comp.y0 + comp.h / 2) * size + comp.x0 + comp.w / 2] = true;
        }
        mask = Some(m);
    }

    let kind = (class_index > 0).then(|| spec.defect_kinds[class_index - 1]);
    let noise = (spec.noise_std > 0.0).then(|| Normal::new(0.0, spec.noise_std).expect("finite std"));
    let channels = spec.channels;
    let mut data = Vec::with_capacity(size * size * channels);
    for y in 0..size {
        for x in 0..size {
            let on_component = comp.contains(x, y);
            let mut rgb = if !on_component {
                BACKGROUND
            } else if x < comp.x0 + terminal_w || x >= comp.x0 + comp.w - terminal_w {
                TERMINAL
            } else {
                let t = 0.03 * (x as f64 * 0.9 + phase).sin() + shade;
                [BODY[0] + t, BODY[1] + t, BODY[2] + t]
            };
            if let (Some(m), Some(k)) = (&mask, kind) {
                if m[y * size + x] {
                    match k.shape {
                        DefectShape::CornerChip | DefectShape::EdgeNotch => rgb = BACKGROUND,
                        DefectShape::Discoloration => {
                            rgb = [rgb[0] + k.intensity_delta, rgb[1], rgb[2] - 0.5 * k.intensity_delta];
                        }
                        _ => rgb = rgb.map(|v| v + k.intensity_delta),
                    }
                }
            }
            let values = if channels == 3 { rgb.to_vec() } else { vec![gray(rgb)] };
            for v in values {
                data.push(v + noise.map_or(0.0, |n| n.sample(&mut rng)));
            }
        }
    }
    let mut image = ImageBuffer::from_fn(size, size, channels, |y, x, c| data[(y * size + x) * channels + c]);
    image.quantize_8bit();
    SynthSample {
        image,
        class_index,
        defect_mask: mask,
    }
}

/// `(class, index within class)` for every image, class-major.
fn sample_ids(spec: &SynthSpec) -> Vec<(usize, u64)> {
    spec.class_counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| (0..n).map(move |i| (c, i)))
        .collect()
}

/// Renders the whole dataset in memory, class-major order.
pub fn synthesize(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let samples: Vec<SynthSample> = sample_ids(spec)
        .into_par_iter()
        .map(|(c, i)| render_sample(spec, c, i))
        .collect();
    let (images, classes) = samples.into_iter().map(|s| (s.image, s.class_index)).unzip();
    Ok(Dataset {
        images,
        classes,
        n_classes: spec.n_classes,
        class_names: spec.class_names(),
    })
}

/// Relative file name for image `index` of class `class_index`.
pub fn sample_path(class_index: usize, index: u64, channels: usize) -> PathBuf {
    let ext = if channels == 3 { "ppm" } else { "pgm" };
    PathBuf::from(format!("class{class_index}")).join(format!("{index:06}.{ext}"))
}

/// Writes every image plus `manifest.tsv` under `out_dir` and returns the manifest.
pub fn generate_synthetic(spec: &SynthSpec, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    for c in 0..spec.n_classes {
        let dir = out_dir.join(format!("class{c}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let ids = sample_ids(spec);
    ids.par_iter().try_for_each(|&(c, i)| {
        let sample = render_sample(spec, c, i);
        write_ppm(&sample.image, out_dir.join(sample_path(c, i, spec.channels)))
    })?;
    let entries = ids
        .iter()
        .map(|&(c, i)| ManifestEntry {
            path: sample_path(c, i, spec.channels),
            class_index: c,
        })
        .collect();
    let manifest = DatasetManifest::new(out_dir.to_path_buf(), entries, spec.class_names())?;
    manifest.save(out_dir.join("manifest.tsv"))?;
    Ok(manifest)
}
