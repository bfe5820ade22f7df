//! Crop-box sampling with beta-distributed areas and clipping.
//!
//! A box is drawn the CutMix way: a mixing ratio `lambda ~ Beta(alpha, alpha)`
//! sets the cut size `round(W * sqrt(1 - lambda)) x round(H * sqrt(1 - lambda))`,
//! a center is drawn uniformly over the pixel grid, and the box is clipped to
//! the image. Clipping shrinks boxes near the border, so realized areas are
//! skewed toward small and medium sizes even though `1 - lambda` is uniform
//! for `alpha = 1`.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangle `[xs, xe) x [ys, ye)` in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropBox {
    pub xs: usize,
    pub ys: usize,
    pub xe: usize,
    pub ye: usize,
}

impl CropBox {
    /// Checks `xs < xe <= width` and `ys < ye <= height`.
    pub fn new(xs: usize, ys: usize, xe: usize, ye: usize, width: usize, height: usize) -> Result<Self> {
        if xs >= xe || ys >= ye || xe > width || ye > height {
            return Err(Error::invalid(format!(
                "box ({xs}, {ys})-({xe}, {ye}) is empty or outside {width}x{height}"
            )));
        }
        Ok(Self { xs, ys, xe, ye })
    }

    /// The whole `width x height` image.
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            xs: 0,
            ys: 0,
            xe: width,
            ye: height,
        }
    }

    pub fn width(&self) -> usize {
        self.xe - self.xs
    }

    pub fn height(&self) -> usize {
        self.ye - self.ys
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    /// `w * h / (W * H)`.
    pub fn area_fraction(&self, width: usize, height: usize) -> f64 {
        self.area() as f64 / (width * height) as f64
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.xs < self.xe && self.ys < self.ye && self.xe <= width && self.ye <= height
    }
}

/// Draws the mixing ratio from `Beta(alpha, alpha)`; `alpha = 1` is `Uniform(0, 1)`.
///
/// The result lies strictly inside `(0, 1)`.
pub fn sample_lambda<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("beta alpha must be > 0, got {alpha}")));
    }
    if alpha == 1.0 {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return Ok(u);
            }
        }
    }
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::invalid(e.to_string()))?;
    loop {
        let v = beta.sample(rng);
        if v > 0.0 && v < 1.0 {
            return Ok(v);
        }
    }
}

/// Unclipped cut size `(round(W * sqrt(1 - lambda)), round(H * sqrt(1 - lambda)))`.
pub fn cut_size(width: usize, height: usize, lambda: f64) -> (usize, usize) {
    let ratio = (1.0 - lambda).max(0.0).sqrt();
    (
        (width as f64 * ratio).round() as usize,
        (height as f64 * ratio).round() as usize,
    )
}

fn clip_span(center: usize, len: usize, limit: usize) -> (usize, usize) {
    let start = center as i64 - (len / 2) as i64;
    let end = start + len as i64;
    (
        start.clamp(0, limit as i64) as usize,
        end.clamp(0, limit as i64) as usize,
    )
}

/// Places a `cut_w x cut_h` box centered at `(cx, cy)` and clips it to the image.
///
/// The unclipped box spans `[cx - floor(cut_w / 2), cx - floor(cut_w / 2) + cut_w)`.
/// Returns `None` (no mix) when clipping leaves zero area.
pub fn box_from_center(
    width: usize,
    height: usize,
    cut_w: usize,
    cut_h: usize,
    cx: usize,
    cy: usize,
) -> Option<CropBox> {
    let (xs, xe) = clip_span(cx, cut_w, width);
    let (ys, ye) = clip_span(cy, cut_h, height);
    (xs < xe && ys < ye).then_some(CropBox { xs, ys, xe, ye })
}

/// Draws a uniform center and returns the clipped box for mixing ratio `lambda`.
///
/// `None` signals a degenerate (zero-area) box: the sample passes through unmixed.
pub fn sample_cropbox<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<Option<CropBox>> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::invalid(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    let (cut_w, cut_h) = cut_size(width, height, lambda);
    let cx = rng.random_range(0..width);
    let cy = rng.random_range(0..height);
    Ok(box_from_center(width, height, cut_w, cut_h, cx, cy))
}

/// Pre- and post-clipping distribution of cut areas, as fractions of the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaHistogram {
    /// `bins + 1` equally spaced edges over `[0, 1]`.
    pub bin_edges: Vec<f64>,
    pub pre_clip_counts: Vec<u64>,
    pub post_clip_counts: Vec<u64>,
    pub pre_clip_mean: f64,
    pub post_clip_mean: f64,
    pub samples: u64,
}

impl AreaHistogram {
    fn empty(bins: usize) -> Self {
        Self {
            bin_edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            pre_clip_counts: vec![0; bins],
            post_clip_counts: vec![0; bins],
            pre_clip_mean: 0.0,
            post_clip_mean: 0.0,
            samples: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.pre_clip_counts.len()
    }

    /// Bin holding `fraction`; `1.0` lands in the last bin.
    pub fn bin_of(&self, fraction: f64) -> usize {
        let bins = self.bins();
        ((fraction * bins as f64).floor() as usize).min(bins - 1)
    }

    /// Post-clip samples with area fraction below / at-or-above one half.
    ///
    /// Only meaningful for an even bin count, where 0.5 is a bin edge.
    pub fn post_clip_mass_split(&self) -> (u64, u64) {
        let half = self.bins() / 2;
        let below = self.post_clip_counts[..half].iter().sum();
        let above = self.post_clip_counts[half..].iter().sum();
        (below, above)
    }

    /// Tab-separated `bin_lo bin_hi pre_count post_count`, one bin per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bin_lo\tbin_hi\tpre_count\tpost_count\n");
        for i in 0..self.bins() {
            let _ = writeln!(
                out,
                "{:.4}\t{:.4}\t{}\t{}",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                self.pre_clip_counts[i],
                self.post_clip_counts[i]
            );
        }
        out
    }
}

/// Draws `n_samples` `(lambda, box)` pairs and histograms `1 - lambda` against the
/// realized `w * h / (W * H)`. Degenerate boxes count as area 0.
pub fn simulate_area_distribution<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    alpha: f64,
    n_samples: u64,
    bins: usize,
    rng: &mut R,
) -> Result<AreaHistogram> {
    if n_samples == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    if bins == 0 {
        return Err(Error::invalid("bin count must be >= 1"));
    }
    let mut hist = AreaHistogram::empty(bins);
    let (mut pre_sum, mut post_sum) = (0.0, 0.0);
    for _ in 0..n_samples {
        let lambda = sample_lambda(alpha, rng)?;
        let pre = 1.0 - lambda;
        let post = sample_cropbox(width, height, lambda, rng)?
            .map_or(0.0, |b| b.area_fraction(width, height));
        let (pb, qb) = (hist.bin_of(pre), hist.bin_of(post));
        hist.pre_clip_counts[pb] += 1;
        hist.post_clip_counts[qb] += 1;
        pre_sum += pre;
        post_sum += post;
    }
    hist.samples = n_samples;
    hist.pre_clip_mean = pre_sum / n_samples as f64;
    hist.post_clip_mean = post_sum / n_samples as f64;
    Ok(hist)
}
