//! Evaluation metrics: top-k error, confusion matrices, macro F1, Mean IR and ECE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// True class and raw scores (logits) for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub true_class: usize,
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn new(true_class: usize, scores: Vec<f64>) -> Self {
        Self { true_class, scores }
    }

    /// Arg-max of the scores, lowest index on ties.
    pub fn predicted(&self) -> usize {
        crate::mixers::argmax(&self.scores)
    }
}

fn check_predictions(preds: &[Prediction]) -> Result<usize> {
    let first = preds
        .first()
        .ok_or_else(|| Error::EmptyInput("no predictions".into()))?;
    let k = first.scores.len();
    for p in preds {
        if p.scores.len() != k {
            return Err(Error::invalid("predictions disagree on the number of classes"));
        }
        if p.true_class >= k {
            return Err(Error::invalid(format!(
                "true class {} out of range for {k} classes",
                p.true_class
            )));
        }
        if p.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("scores must be finite"));
        }
    }
    Ok(k)
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Fraction of samples whose true class is not among the `k` highest scores.
///
/// Ranking is by descending score with ties broken toward the lower class index.
pub fn topk_error(preds: &[Prediction], k: usize) -> Result<f64> {
    let n_classes = check_predictions(preds)?;
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if k >= n_classes {
        return Ok(0.0);
    }
    let misses = preds
        .iter()
        .filter(|p| {
            let t = p.true_class;
            let st = p.scores[t];
            // classes ranked ahead of the true class
            let ahead = p
                .scores
                .iter()
                .enumerate()
                .filter(|&(j, &s)| s > st || (s == st && j < t))
                .count();
            ahead >= k
        })
        .count();
    Ok(misses as f64 / preds.len() as f64)
}

/// `K x K` counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("confusion matrix must be square"));
        }
        Ok(Self {
            n_classes: k,
            counts: rows.concat(),
        })
    }

    pub fn from_predictions(preds: &[Prediction]) -> Result<Self> {
        let k = check_predictions(preds)?;
        let mut cm = Self::new(k);
        for p in preds {
            cm.record(p.true_class, p.predicted());
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n_classes + predicted] += 1;
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Per-class `(precision, recall, f1)`; an undefined ratio counts as 0.
    pub fn per_class(&self) -> Vec<(f64, f64, f64)> {
        let k = self.n_classes;
        (0..k)
            .map(|c| {
                let tp = self.get(c, c) as f64;
                let predicted: u64 = (0..k).map(|t| self.get(t, c)).sum();
                let actual: u64 = (0..k).map(|p| self.get(c, p)).sum();
                let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
                let recall = if actual == 0 { 0.0 } else { tp / actual as f64 };
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                (precision, recall, f1)
            })
            .collect()
    }
}

/// Unweighted mean over all `K` classes of `2PR / (P + R)`.
///
/// Classes with `P + R = 0`, including classes absent from both truth and
/// predictions, contribute 0.
pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.n_classes == 0 {
        return Err(Error::EmptyInput("empty confusion matrix".into()));
    }
    let per = cm.per_class();
    Ok(per.iter().map(|&(_, _, f1)| f1).sum::<f64>() / per.len() as f64)
}

/// Mean imbalance ratio: the average over classes of `max_count / class_count`.
///
/// One means perfectly balanced.
pub fn mean_ir(class_counts: &[u64]) -> Result<f64> {
    if class_counts.is_empty() {
        return Err(Error::EmptyInput("no class counts".into()));
    }
    if let Some(i) = class_counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("class {i} has zero samples")));
    }
    let max = *class_counts.iter().max().expect("non-empty") as f64;
    Ok(class_counts.iter().map(|&c| max / c as f64).sum::<f64>() / class_counts.len() as f64)
}

/// Default number of confidence bins for [`ece`].
pub const DEFAULT_ECE_BINS: usize = 15;

/// Expected calibration error over `n_bins` equal-width confidence bins.
///
/// Scores are softmaxed; a sample with confidence `c` falls in bin
/// `ceil(c * n_bins) - 1` (bins are `(lo, hi]`, the first one also takes 0).
pub fn ece(preds: &[Prediction], n_bins: usize) -> Result<f64> {
    check_predictions(preds)?;
    if n_bins == 0 {
        return Err(Error::invalid("bin count must be >= 1"));
    }
    let confidences: Vec<(f64, bool)> = preds
        .iter()
        .map(|p| {
            let probs = softmax(&p.scores);
            let pred = crate::mixers::argmax(&probs);
            (probs[pred], pred == p.true_class)
        })
        .collect();
    Ok(ece_from_confidences(&confidences, n_bins))
}

/// [`ece`] for precomputed `(confidence, correct)` pairs.
pub fn ece_from_confidences(samples: &[(f64, bool)], n_bins: usize) -> f64 {
    let mut count = vec![0usize; n_bins];
    let mut conf_sum = vec![0.0; n_bins];
    let mut correct = vec![0usize; n_bins];
    for &(c, ok) in samples {
        let b = ((c * n_bins as f64).ceil() as usize).clamp(1, n_bins) - 1;
        count[b] += 1;
        conf_sum[b] += c;
        correct[b] += usize::from(ok);
    }
    let n = samples.len() as f64;
    (0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let m = count[b] as f64;
            (m / n) * (correct[b] as f64 / m - conf_sum[b] / m).abs()
        })
        .sum()
}

/// Headline metrics for one evaluation pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub top1_error: f64,
    pub top5_error: f64,
    pub macro_f1: f64,
    pub ece: f64,
    pub samples: usize,
}

impl EvalSummary {
    pub fn from_predictions(preds: &[Prediction]) -> Result<Self> {
        Ok(Self {
            top1_error: topk_error(preds, 1)?,
            top5_error: topk_error(preds, 5)?,
            macro_f1: macro_f1(&ConfusionMatrix::from_predictions(preds)?)?,
            ece: ece(preds, DEFAULT_ECE_BINS)?,
            samples: preds.len(),
        })
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "samples={}\ntop1_error={:.6}\ntop5_error={:.6}\nmacro_f1={:.6}\nece={:.6}\n",
            self.samples, self.top1_error, self.top5_error, self.macro_f1, self.ece
        )
    }
}
