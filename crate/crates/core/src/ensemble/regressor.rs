use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::tensor::ImageTensorSet;
use crate::instrument::Counters;
use crate::refined::RefinedImageSet;
use crate::{Error, Result};

/// Images the reference regressor can consume: `n` samples of `g × g`
/// cells with `channels` values each, flattened as `(r·g + c)·channels + a`.
pub trait PixelSource {
    fn grid_size(&self) -> usize;
    fn channels(&self) -> usize;
    fn n_samples(&self) -> usize;
    fn pixels(&self, i: usize) -> Vec<f64>;
}

impl PixelSource for RefinedImageSet {
    fn grid_size(&self) -> usize {
        RefinedImageSet::grid_size(self)
    }
    fn channels(&self) -> usize {
        1
    }
    fn n_samples(&self) -> usize {
        self.len()
    }
    fn pixels(&self, i: usize) -> Vec<f64> {
        self.image(i).to_vec()
    }
}

impl PixelSource for ImageTensorSet {
    fn grid_size(&self) -> usize {
        ImageTensorSet::grid_size(self)
    }
    fn channels(&self) -> usize {
        ImageTensorSet::channels(self)
    }
    fn n_samples(&self) -> usize {
        self.len()
    }
    fn pixels(&self, i: usize) -> Vec<f64> {
        self.tensor(i).to_vec()
    }
}

/// Fixed transform from pixels to regression inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PixelFeatureMap {
    /// Flattened intensities. Ridge on raw pixels ignores the layout: any
    /// permutation of cells gives the same predictions.
    #[default]
    Raw,
    /// Per-channel means over non-overlapping `size × size` windows (stride
    /// `size`; windows at the far edges may be smaller).
    AvgPool { size: usize },
}

impl PixelFeatureMap {
    pub fn output_len(&self, g: usize, channels: usize) -> usize {
        match *self {
            PixelFeatureMap::Raw => g * g * channels,
            PixelFeatureMap::AvgPool { size } => g.div_ceil(size).pow(2) * channels,
        }
    }

    pub fn apply(&self, pixels: &[f64], g: usize, channels: usize) -> Vec<f64> {
        match *self {
            PixelFeatureMap::Raw => pixels.to_vec(),
            PixelFeatureMap::AvgPool { size } => {
                let nb = g.div_ceil(size);
                let mut out = vec![0.0; nb * nb * channels];
                for br in 0..nb {
                    for bc in 0..nb {
                        let rows = br * size..((br + 1) * size).min(g);
                        let cols = bc * size..((bc + 1) * size).min(g);
                        let count = (rows.len() * cols.len()) as f64;
                        for a in 0..channels {
                            let mut s = 0.0;
                            for r in rows.clone() {
                                for c in cols.clone() {
                                    s += pixels[(r * g + c) * channels + a];
                                }
                            }
                            out[(br * nb + bc) * channels + a] = s / count;
                        }
                    }
                }
                out
            }
        }
    }
}

/// Closed-form ridge regression on mapped pixel features. The intercept is
/// not penalized: inputs and response are centred before solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorModel {
    pub feature_map: PixelFeatureMap,
    pub grid_size: usize,
    pub channels: usize,
    pub lambda: f64,
    pub x_mean: Vec<f64>,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl RegressorModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| Error::Malformed(format!("regressor model: {e}")))?;
        let d = m.feature_map.output_len(m.grid_size, m.channels);
        if m.weights.len() != d || m.x_mean.len() != d {
            return Err(Error::Malformed(format!("regressor model expects {d} inputs")));
        }
        Ok(m)
    }
}

fn design<X: PixelSource + ?Sized>(x: &X, map: PixelFeatureMap) -> DMatrix<f64> {
    let (g, ch, n) = (x.grid_size(), x.channels(), x.n_samples());
    let d = map.output_len(g, ch);
    let mut m = DMatrix::zeros(n, d);
    for i in 0..n {
        for (j, v) in map.apply(&x.pixels(i), g, ch).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Fits the ridge regressor and bumps the `regressors_trained` counter.
pub fn fit_reference_regressor<X: PixelSource + ?Sized>(
    x: &X,
    y: &[f64],
    lambda: f64,
    feature_map: PixelFeatureMap,
    counters: &Counters,
) -> Result<RegressorModel> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ridge strength must be finite and ≥ 0, got {lambda}"
        )));
    }
    if let PixelFeatureMap::AvgPool { size: 0 } = feature_map {
        return Err(Error::InvalidArgument("pooling window must be at least 1".into()));
    }
    let n = x.n_samples();
    if y.len() != n {
        return Err(Error::Shape(format!("{} responses for {n} samples", y.len())));
    }
    if n < 2 {
        return Err(Error::Shape("need at least 2 training samples".into()));
    }
    let mut xm = design(x, feature_map);
    let x_mean: Vec<f64> = xm.column_iter().map(|c| c.mean()).collect();
    for (j, mut col) in xm.column_iter_mut().enumerate() {
        col.add_scalar_mut(-x_mean[j]);
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let d = xm.ncols();
    let svd = xm.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V");
    let tol = svd.singular_values.max() * (n.max(d) as f64) * f64::EPSILON;
    let uty = u.transpose() * &yc;
    let mut scaled = DVector::zeros(svd.singular_values.len());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            scaled[k] = s / (s * s + lambda) * uty[k];
        }
    }
    let w = vt.transpose() * scaled;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite ridge weights".into()));
    }
    let intercept = y_mean - w.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>();
    counters.add_regressor();
    Ok(RegressorModel {
        feature_map,
        grid_size: x.grid_size(),
        channels: x.channels(),
        lambda,
        x_mean,
        weights: w.iter().copied().collect(),
        intercept,
    })
}

pub fn predict_reference<X: PixelSource + ?Sized>(m: &RegressorModel, x: &X) -> Result<Vec<f64>> {
    if x.grid_size() != m.grid_size || x.channels() != m.channels {
        return Err(Error::Shape(format!(
            "model expects {}×{}×{} inputs, got {}×{}×{}",
            m.grid_size,
            m.grid_size,
            m.channels,
            x.grid_size(),
            x.grid_size(),
            x.channels()
        )));
    }
    Ok((0..x.n_samples())
        .map(|i| {
            let f = m.feature_map.apply(&x.pixels(i), m.grid_size, m.channels);
            m.intercept + f.iter().zip(&m.weights).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect())
}
