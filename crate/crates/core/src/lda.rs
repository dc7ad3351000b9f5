//! Two-class linear discriminant with equal priors and optional shrinkage.

use nalgebra::{DMatrix, DVector};

use crate::signal::ClassLabel;
use crate::{Error, Result};

/// Decision rule `score = wᵀx - c`, class 2 iff `score > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub weights: DVector<f64>,
    pub threshold: f64,
    pub class_means: [DVector<f64>; 2],
    pub pooled_covariance: DMatrix<f64>,
    pub shrinkage: f64,
}

impl LdaModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                context: "lda_predict",
                expected: self.dim(),
                found: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() - self.threshold)
    }

    pub fn to_json(&self) -> Result<String> {
        let v = serde_json::json!({
            "w": self.weights.as_slice(),
            "c": self.threshold,
            "p": self.dim(),
        });
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

/// Fit class means and the pooled within-class covariance (denominator
/// `n - 2`), shrink it toward `trace/p * I`, and set
/// `w = Σ⁻¹(μ₂ - μ₁)`, `c = wᵀ(μ₁ + μ₂)/2`.
pub fn lda_fit(samples: &[(Vec<f64>, ClassLabel)], shrinkage: f64) -> Result<LdaModel> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::Spec(format!("shrinkage must be in [0, 1], got {shrinkage}")));
    }
    let Some((first, _)) = samples.first() else {
        return Err(Error::InsufficientData("no training samples".into()));
    };
    let p = first.len();
    if p == 0 {
        return Err(Error::Spec("feature dimension must be at least 1".into()));
    }

    let mut sums = [DVector::zeros(p), DVector::zeros(p)];
    let mut counts = [0usize; 2];
    for (row, (x, label)) in samples.iter().enumerate() {
        if x.len() != p {
            return Err(Error::Dimension {
                context: "lda_fit",
                expected: p,
                found: x.len(),
            });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        sums[label.index()] += DVector::from_column_slice(x);
        counts[label.index()] += 1;
    }
    for label in ClassLabel::BOTH {
        if counts[label.index()] < 2 {
            return Err(Error::InsufficientData(format!(
                "class {label} has {} samples, need at least 2",
                counts[label.index()]
            )));
        }
    }
    let means = [
        &sums[0] / counts[0] as f64,
        &sums[1] / counts[1] as f64,
    ];

    let mut scatter = DMatrix::zeros(p, p);
    for (x, label) in samples {
        let diff = DVector::from_column_slice(x) - &means[label.index()];
        scatter.ger(1.0, &diff, &diff, 1.0);
    }
    let mut sigma = scatter / (counts[0] + counts[1] - 2) as f64;
    crate::linalg::symmetrize(&mut sigma);
    if shrinkage > 0.0 {
        let target = sigma.trace() / p as f64;
        sigma *= 1.0 - shrinkage;
        for i in 0..p {
            sigma[(i, i)] += shrinkage * target;
        }
    }

    let gap = &means[1] - &means[0];
    let chol = sigma.clone().cholesky().ok_or_else(|| {
        Error::SingularCovariance(format!(
            "pooled feature covariance is singular with shrinkage {shrinkage}; try a positive shrinkage"
        ))
    })?;
    let weights = chol.solve(&gap);
    let threshold = weights.dot(&(&means[0] + &means[1])) / 2.0;
    Ok(LdaModel {
        weights,
        threshold,
        class_means: means,
        pooled_covariance: sigma,
        shrinkage,
    })
}

/// Returns the predicted class and the score; ties go to class 1.
pub fn lda_predict(model: &LdaModel, x: &[f64]) -> Result<(ClassLabel, f64)> {
    let score = model.score(x)?;
    let label = if score > 0.0 { ClassLabel::Two } else { ClassLabel::One };
    Ok((label, score))
}
