use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the simplex constraint.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A soft label over `K >= 2` classes: non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    weights: Vec<f64>,
}

impl LabelVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::invalid(format!(
                "a label needs at least 2 classes, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("label weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("label weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Panics if `class >= n_classes` or `n_classes < 2`.
    pub fn one_hot(class: usize, n_classes: usize) -> Self {
        assert!(n_classes >= 2 && class < n_classes, "class {class} of {n_classes}");
        let mut weights = vec![0.0; n_classes];
        weights[class] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    /// Index of the largest weight; ties go to the lower index.
    pub fn argmax(&self) -> usize {
        argmax(&self.weights)
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// First index of the maximum value.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `lambda_a * y_a + lambda_b * epsilon_b * y_b`, the resize-ratio label rule.
///
/// The weight on `y_a` carries the implicit unit resize ratio of the occluded
/// image. Requires `lambda_a + lambda_b * epsilon_b = 1` within [`SIMPLEX_TOL`].
/// Classes where both inputs agree keep their weight unchanged, so mixing a label
/// with itself is the identity.
pub fn mix_labels(
    y_a: &LabelVector,
    y_b: &LabelVector,
    lambda_a: f64,
    lambda_b: f64,
    epsilon_b: f64,
) -> Result<LabelVector> {
    if y_a.n_classes() != y_b.n_classes() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} classes", y_a.n_classes()),
            actual: format!("{} classes", y_b.n_classes()),
        });
    }
    if [lambda_a, lambda_b, epsilon_b]
        .iter()
        .any(|v| !(v.is_finite() && *v >= 0.0))
    {
        return Err(Error::invalid(format!(
            "mixing factors must be finite and non-negative: lambda_a={lambda_a} lambda_b={lambda_b} epsilon_b={epsilon_b}"
        )));
    }
    let weight_b = lambda_b * epsilon_b;
    if (lambda_a + weight_b - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::invalid(format!(
            "lambda_a + lambda_b * epsilon_b = {} must equal 1",
            lambda_a + weight_b
        )));
    }
    let weights = y_a
        .weights
        .iter()
        .zip(&y_b.weights)
        .map(|(&a, &b)| if a == b { a } else { lambda_a * a + weight_b * b })
        .collect();
    Ok(LabelVector { weights })
}
