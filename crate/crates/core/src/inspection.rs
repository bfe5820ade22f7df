//! Per-component inspection: crop each surface, classify it, merge the verdicts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::mixers::argmax;
use crate::sampling::CropBox;
use crate::trainer::ModelParams;

/// One captured surface: the raw frame and the region holding the component.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub raw: ImageBuffer,
    pub roi: CropBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRecord {
    pub component_id: String,
    pub surfaces: Vec<Surface>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceVerdict {
    pub predicted_class: usize,
    pub scores: Vec<f64>,
    pub is_defective: bool,
}

impl SurfaceVerdict {
    /// Arg-max verdict; ties go to the lower class index.
    pub fn from_scores(scores: Vec<f64>, normal_class: usize) -> Self {
        let predicted_class = argmax(&scores);
        Self {
            predicted_class,
            is_defective: predicted_class != normal_class,
            scores,
        }
    }

    pub fn max_score(&self) -> f64 {
        self.scores[self.predicted_class]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Normal,
    Defective,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Normal => "normal",
            Decision::Defective => "defective",
        })
    }
}

/// Exact copy of the region `roi` of `raw`.
pub fn crop_roi(raw: &ImageBuffer, roi: CropBox) -> Result<ImageBuffer> {
    raw.crop(roi.xs, roi.ys, roi.width(), roi.height())
}

/// Defective as soon as any surface is defective.
pub fn final_decision(verdicts: &[SurfaceVerdict]) -> Result<Decision> {
    if verdicts.is_empty() {
        return Err(Error::EmptyInput("no surface verdicts".into()));
    }
    Ok(if verdicts.iter().any(|v| v.is_defective) {
        Decision::Defective
    } else {
        Decision::Normal
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InspectionReport {
    pub component_id: String,
    pub verdicts: Vec<SurfaceVerdict>,
    pub decision: Decision,
}

impl InspectionReport {
    /// `id decision class:score ...`, one entry per surface.
    pub fn audit_line(&self) -> String {
        let mut line = format!("{} {}", self.component_id, self.decision);
        for v in &self.verdicts {
            line.push_str(&format!(" {}:{:.6}", v.predicted_class, v.max_score()));
        }
        line
    }
}

/// Crops, classifies and merges every surface of one component.
pub fn inspect_component(
    record: &ComponentRecord,
    params: &ModelParams,
    normal_class: usize,
) -> Result<InspectionReport> {
    if record.surfaces.is_empty() {
        return Err(Error::EmptyInput(format!("component {} has no surfaces", record.component_id)));
    }
    if normal_class >= params.n_classes {
        return Err(Error::invalid(format!(
            "normal class {normal_class} out of range for {} classes",
            params.n_classes
        )));
    }
    let verdicts = record
        .surfaces
        .iter()
        .map(|s| {
            let roi = crop_roi(&s.raw, s.roi)?;
            Ok(SurfaceVerdict::from_scores(params.forward(&roi)?, normal_class))
        })
        .collect::<Result<Vec<_>>>()?;
    let decision = final_decision(&verdicts)?;
    Ok(InspectionReport {
        component_id: record.component_id.clone(),
        verdicts,
        decision,
    })
}
