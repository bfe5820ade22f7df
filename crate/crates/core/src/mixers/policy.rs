use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{gaussian_blur, morphology, unsharp, ImageBuffer, MorphOp, ResizeMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixKind {
    /// Pass every sample through unchanged.
    None,
    ContextMix,
    CutMix,
    Mixup,
    Cutout,
}

/// Ablation variants of ContextMix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Box centered on the image, side lengths drawn from a folded Gaussian.
    CenterGaussian,
    /// Box area fixed at `fraction` of the image before clipping.
    FixedSize { fraction: f64 },
    /// Label of whichever source covers more of the output (ties go to the occluded image).
    OneHot,
    /// Label split 5:5 regardless of area.
    CompleteLabel,
    /// Mix with probability `epoch / total_epochs`.
    ScheduledUp,
    /// Mix with probability `1 - epoch / total_epochs`.
    ScheduledDown,
    /// Box forced square with side `round(sqrt(w0 * h0))` before clipping.
    SquareRegion,
    /// Paste into one cell of a 3x3 grid: 1-4 are the corners in row-major
    /// order (top-left, top-right, bottom-left, bottom-right) and 5 is the center.
    FixedRegion { region: u8 },
}

/// How the resized size `W' x H'` of the pasted image is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonRule {
    /// `W' = w`, `H' = h`: the whole image is squeezed into the box.
    Fit,
    /// `W' = round(W sqrt(eps))`, `H' = round(H sqrt(eps))`, raised per axis to the
    /// box size when the box is larger. `eps = 1` reproduces CutMix.
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Blur { sigma: f64 },
    Unsharp { sigma: f64, amount: f64 },
    Morphology { op: MorphOp, radius: usize },
}

impl FilterKind {
    pub fn apply(&self, img: &ImageBuffer) -> Result<ImageBuffer> {
        match *self {
            FilterKind::Blur { sigma } => gaussian_blur(img, sigma),
            FilterKind::Unsharp { sigma, amount } => unsharp(img, sigma, amount),
            FilterKind::Morphology { op, radius } => morphology(img, op, radius),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterTarget {
    /// The image that receives the patch, filtered before pasting.
    Occluded,
    /// The resized partner image, filtered before the patch is cut from it.
    Resized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PasteFilter {
    pub kind: FilterKind,
    pub target: FilterTarget,
}

/// Complete configuration of a mixing policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixPolicy {
    pub kind: MixKind,
    pub alpha: f64,
    pub variant: Option<Variant>,
    pub epsilon: Option<EpsilonRule>,
    pub filter: Option<PasteFilter>,
    /// Use this mixing ratio instead of sampling one.
    pub fixed_lambda: Option<f64>,
    /// Draw a box per image instead of one per batch.
    pub per_image_boxes: bool,
    /// Fill value for cutout.
    pub cutout_fill: f64,
    pub resize_method: ResizeMethod,
}

impl MixPolicy {
    pub fn new(kind: MixKind) -> Self {
        Self {
            kind,
            alpha: 1.0,
            variant: None,
            epsilon: None,
            filter: None,
            fixed_lambda: None,
            per_image_boxes: false,
            cutout_fill: 0.0,
            resize_method: ResizeMethod::Bilinear,
        }
    }

    pub fn none() -> Self {
        Self::new(MixKind::None)
    }

    pub fn contextmix() -> Self {
        Self::new(MixKind::ContextMix)
    }

    pub fn cutmix() -> Self {
        Self::new(MixKind::CutMix)
    }

    pub fn mixup() -> Self {
        Self::new(MixKind::Mixup)
    }

    pub fn cutout() -> Self {
        Self::new(MixKind::Cutout)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = Some(variant);
        self
    }

    pub fn with_epsilon(mut self, rule: EpsilonRule) -> Self {
        self.epsilon = Some(rule);
        self
    }

    pub fn with_filter(mut self, kind: FilterKind, target: FilterTarget) -> Self {
        self.filter = Some(PasteFilter { kind, target });
        self
    }

    pub fn with_fixed_lambda(mut self, lambda: f64) -> Self {
        self.fixed_lambda = Some(lambda);
        self
    }

    pub fn with_per_image_boxes(mut self, on: bool) -> Self {
        self.per_image_boxes = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be > 0, got {}", self.alpha)));
        }
        let box_based = matches!(self.kind, MixKind::ContextMix | MixKind::CutMix | MixKind::Cutout);
        if self.variant.is_some() && self.kind != MixKind::ContextMix {
            return Err(Error::invalid("variants apply only to contextmix"));
        }
        if self.epsilon.is_some() && self.kind != MixKind::ContextMix {
            return Err(Error::invalid("a resize ratio applies only to contextmix"));
        }
        if self.filter.is_some() && !matches!(self.kind, MixKind::ContextMix | MixKind::CutMix) {
            return Err(Error::invalid("paste filters apply only to contextmix and cutmix"));
        }
        if let Some(EpsilonRule::Absolute(eps)) = self.epsilon {
            if !(eps > 0.0 && eps <= 4.0) {
                return Err(Error::invalid(format!("resize ratio must lie in (0, 4], got {eps}")));
            }
        }
        match self.variant {
            Some(Variant::FixedSize { fraction }) if !(fraction > 0.0 && fraction < 1.0) => {
                return Err(Error::invalid(format!(
                    "fixed size fraction must lie in (0, 1), got {fraction}"
                )));
            }
            Some(Variant::FixedRegion { region }) if !(1..=5).contains(&region) => {
                return Err(Error::invalid(format!("fixed region id must be 1..=5, got {region}")));
            }
            _ => {}
        }
        if let Some(l) = self.fixed_lambda {
            let ok = if box_based { l > 0.0 && l < 1.0 } else { (0.0..=1.0).contains(&l) };
            if !ok {
                return Err(Error::invalid(format!("fixed lambda {l} out of range")));
            }
        }
        if !(0.0..=1.0).contains(&self.cutout_fill) {
            return Err(Error::invalid("cutout fill must lie in [0, 1]"));
        }
        Ok(())
    }
}

impl fmt::Display for MixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixKind::None => "none",
            MixKind::ContextMix => "contextmix",
            MixKind::CutMix => "cutmix",
            MixKind::Mixup => "mixup",
            MixKind::Cutout => "cutout",
        })
    }
}

impl FromStr for MixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" | "baseline" => MixKind::None,
            "contextmix" => MixKind::ContextMix,
            "cutmix" => MixKind::CutMix,
            "mixup" => MixKind::Mixup,
            "cutout" => MixKind::Cutout,
            other => return Err(Error::invalid(format!("unknown policy `{other}`"))),
        })
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::invalid(format!("cannot parse {what} from `{s}`")))
}

/// Accepts `center_gaussian`, `fixed_size[:fraction]`, `one_hot`, `complete_label`,
/// `scheduled_up`, `scheduled_down`, `square_region` and `fixed_region:<1-5>`.
impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        Ok(match (name, arg) {
            ("center_gaussian", None) => Variant::CenterGaussian,
            ("fixed_size", None) => Variant::FixedSize { fraction: 0.75 },
            ("fixed_size", Some(a)) => Variant::FixedSize {
                fraction: parse_num(a, "fixed size fraction")?,
            },
            ("one_hot", None) => Variant::OneHot,
            ("complete_label", None) => Variant::CompleteLabel,
            ("scheduled_up", None) => Variant::ScheduledUp,
            ("scheduled_down", None) => Variant::ScheduledDown,
            ("square_region", None) => Variant::SquareRegion,
            ("fixed_region", Some(a)) => Variant::FixedRegion {
                region: parse_num(a, "region id")?,
            },
            _ => return Err(Error::invalid(format!("unknown variant `{s}`"))),
        })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::CenterGaussian => write!(f, "center_gaussian"),
            Variant::FixedSize { fraction } => write!(f, "fixed_size:{fraction}"),
            Variant::OneHot => write!(f, "one_hot"),
            Variant::CompleteLabel => write!(f, "complete_label"),
            Variant::ScheduledUp => write!(f, "scheduled_up"),
            Variant::ScheduledDown => write!(f, "scheduled_down"),
            Variant::SquareRegion => write!(f, "square_region"),
            Variant::FixedRegion { region } => write!(f, "fixed_region:{region}"),
        }
    }
}

/// `fit` or a number.
impl FromStr for EpsilonRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "fit" {
            Ok(EpsilonRule::Fit)
        } else {
            Ok(EpsilonRule::Absolute(parse_num(s, "resize ratio")?))
        }
    }
}

impl fmt::Display for EpsilonRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonRule::Fit => write!(f, "fit"),
            EpsilonRule::Absolute(e) => write!(f, "{e}"),
        }
    }
}

/// `<filter>@<target>` where filter is `blur:<sigma>`, `unsharp:<sigma>:<amount>`,
/// or `erode|dilate|open|close:<radius>`, and target is `occluded` or `resized`.
impl FromStr for PasteFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (spec, target) = s
            .split_once('@')
            .ok_or_else(|| Error::invalid(format!("filter `{s}` lacks an @occluded or @resized target")))?;
        let target = match target {
            "occluded" => FilterTarget::Occluded,
            "resized" => FilterTarget::Resized,
            other => return Err(Error::invalid(format!("unknown filter target `{other}`"))),
        };
        let parts: Vec<&str> = spec.split(':').collect();
        let morph = |op| -> Result<FilterKind> {
            let radius = parts.get(1).map_or(Ok(1), |r| parse_num(r, "radius"))?;
            Ok(FilterKind::Morphology { op, radius })
        };
        let kind = match parts[0] {
            "blur" => FilterKind::Blur {
                sigma: parse_num(parts.get(1).copied().unwrap_or("1"), "sigma")?,
            },
            "unsharp" => FilterKind::Unsharp {
                sigma: parse_num(parts.get(1).copied().unwrap_or("1"), "sigma")?,
                amount: parse_num(parts.get(2).copied().unwrap_or("1"), "amount")?,
            },
            "erode" => morph(MorphOp::Erode)?,
            "dilate" => morph(MorphOp::Dilate)?,
            "open" => morph(MorphOp::Open)?,
            "close" => morph(MorphOp::Close)?,
            other => return Err(Error::invalid(format!("unknown filter `{other}`"))),
        };
        Ok(PasteFilter { kind, target })
    }
}
