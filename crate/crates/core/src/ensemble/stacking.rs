use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::predictions::PredictionSet;
use crate::{Error, Result};

/// Linear blend `ŷ_f = Σ_a γ_a ŷ_a + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingModel {
    pub model_tags: Vec<String>,
    pub gamma: Vec<f64>,
    pub b: f64,
}

impl StackingModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| Error::Malformed(format!("stacking model: {e}")))?;
        if m.gamma.len() != m.model_tags.len() || !m.b.is_finite() || m.gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::Malformed(
                "stacking model has inconsistent or non-finite coefficients".into(),
            ));
        }
        Ok(m)
    }
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> f64 {
    let ss: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / y.len() as f64).sqrt()
}

/// Ordinary least squares of `y` on the prediction columns plus an intercept.
/// A rank-deficient design gets the minimum-norm solution and a warning
/// naming the columns involved.
pub fn fit_stacking(p: &PredictionSet, y: &[f64]) -> Result<StackingModel> {
    let n = p.n_samples();
    let a = p.n_models();
    if y.len() != n {
        return Err(Error::Shape(format!("{} responses for {n} predictions", y.len())));
    }
    if n <= a {
        return Err(Error::Shape(format!(
            "stacking {a} models needs more than {a} samples, got {n}"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite response".into()));
    }
    let x = DMatrix::from_fn(n, a + 1, |i, j| if j < a { p.yhat()[(i, j)] } else { 1.0 });
    let svd = x.svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = s_max * (n.max(a + 1) as f64) * f64::EPSILON;

    let vt = svd.v_t.as_ref().expect("requested V");
    let mut involved = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            for j in 0..=a {
                if vt[(k, j)].abs() > 1e-8 && !involved.contains(&j) {
                    involved.push(j);
                }
            }
        }
    }
    if !involved.is_empty() {
        involved.sort_unstable();
        let names: Vec<&str> = involved
            .iter()
            .map(|&j| if j < a { p.model_tags()[j].as_str() } else { "intercept" })
            .collect();
        log::warn!(
            "collinear stacking inputs ({}); using the minimum-norm solution",
            names.join(", ")
        );
    }

    let coef = svd
        .solve(&DVector::from_column_slice(y), tol)
        .map_err(|e| Error::Numerical(format!("least squares: {e}")))?;
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical("non-finite stacking coefficients".into()));
    }
    Ok(StackingModel {
        model_tags: p.model_tags().to_vec(),
        gamma: coef.iter().take(a).copied().collect(),
        b: coef[a],
    })
}

pub fn predict_stacked(m: &StackingModel, p: &PredictionSet) -> Result<Vec<f64>> {
    if p.model_tags() != m.model_tags.as_slice() {
        return Err(Error::LabelMismatch(format!(
            "stacking model expects tags {:?}, predictions have {:?}",
            m.model_tags,
            p.model_tags()
        )));
    }
    Ok((0..p.n_samples())
        .map(|i| {
            m.b + m
                .gamma
                .iter()
                .enumerate()
                .map(|(a, g)| g * p.yhat()[(i, a)])
                .sum::<f64>()
        })
        .collect())
}
