use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scores of one prediction vector against held-out responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nrmse: f64,
    pub nmae: f64,
    pub pcc: f64,
    /// `atan(|slope|)` in radians of the residual-on-prediction OLS line.
    pub bias: f64,
    pub n_test: usize,
    /// Mean response of the non-test samples, the reference predictor.
    pub ybar_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nrmse,
    Nmae,
    Pcc,
    Bias,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Nrmse, Metric::Nmae, Metric::Pcc, Metric::Bias];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Nrmse => "nrmse",
            Metric::Nmae => "nmae",
            Metric::Pcc => "pcc",
            Metric::Bias => "bias",
        }
    }

    pub fn higher_is_better(self) -> bool {
        self == Metric::Pcc
    }

    /// Strict improvement of `a` over `b`.
    pub fn beats(self, a: f64, b: f64) -> bool {
        if self.higher_is_better() {
            a > b
        } else {
            a < b
        }
    }

    pub fn of(self, r: &MetricReport) -> f64 {
        match self {
            Metric::Nrmse => r.nrmse,
            Metric::Nmae => r.nmae,
            Metric::Pcc => r.pcc,
            Metric::Bias => r.bias,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{s}`")))
    }
}

/// One value per metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PerMetric<T> {
    pub nrmse: T,
    pub nmae: T,
    pub pcc: T,
    pub bias: T,
}

impl<T> PerMetric<T> {
    pub fn get(&self, m: Metric) -> &T {
        match m {
            Metric::Nrmse => &self.nrmse,
            Metric::Nmae => &self.nmae,
            Metric::Pcc => &self.pcc,
            Metric::Bias => &self.bias,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Metric) -> T) -> Self {
        Self {
            nrmse: f(Metric::Nrmse),
            nmae: f(Metric::Nmae),
            pcc: f(Metric::Pcc),
            bias: f(Metric::Bias),
        }
    }
}

/// Scores without logging; the flag reports a constant `y` or `ŷ`, for which
/// the correlation is reported as 0.
pub(crate) fn score_quiet(y: &[f64], yhat: &[f64], ybar_ref: f64) -> Result<(MetricReport, bool)> {
    let n = y.len();
    if yhat.len() != n {
        return Err(Error::Shape(format!("{n} responses but {} predictions", yhat.len())));
    }
    if n < 2 {
        return Err(Error::Shape(format!("scoring needs at least 2 samples, got {n}")));
    }
    if y.iter().chain(yhat).any(|v| !v.is_finite()) || !ybar_ref.is_finite() {
        return Err(Error::Numerical("non-finite response or prediction".into()));
    }
    let mut sse = 0.0;
    let mut sst = 0.0;
    let mut sae = 0.0;
    let mut sat = 0.0;
    for (&yi, &pi) in y.iter().zip(yhat) {
        sse += (yi - pi).powi(2);
        sst += (yi - ybar_ref).powi(2);
        sae += (yi - pi).abs();
        sat += (yi - ybar_ref).abs();
    }
    if sst == 0.0 || sat == 0.0 {
        return Err(Error::Numerical("responses all equal the reference mean".into()));
    }

    let nf = n as f64;
    let my = y.iter().sum::<f64>() / nf;
    let mp = yhat.iter().sum::<f64>() / nf;
    let mut syy = 0.0;
    let mut spp = 0.0;
    let mut syp = 0.0;
    for (&yi, &pi) in y.iter().zip(yhat) {
        syy += (yi - my) * (yi - my);
        spp += (pi - mp) * (pi - mp);
        syp += (yi - my) * (pi - mp);
    }
    let degenerate = syy == 0.0 || spp == 0.0;
    let pcc = if degenerate {
        0.0
    } else {
        (syp / (syy * spp).sqrt()).clamp(-1.0, 1.0)
    };
    // Residual r = y − ŷ regressed on ŷ: slope = Σ(ŷ−m_ŷ)(r−m_r) / Σ(ŷ−m_ŷ)².
    let slope = if spp == 0.0 { 0.0 } else { (syp - spp) / spp };

    Ok((
        MetricReport {
            nrmse: (sse / sst).sqrt(),
            nmae: sae / sat,
            pcc,
            bias: slope.abs().atan(),
            n_test: n,
            ybar_ref,
        },
        degenerate,
    ))
}

/// NRMSE and NMAE normalized by the error of the constant predictor
/// `ybar_ref`, Pearson correlation, and the bias angle.
pub fn score(y: &[f64], yhat: &[f64], ybar_ref: f64) -> Result<MetricReport> {
    let (report, degenerate) = score_quiet(y, yhat, ybar_ref)?;
    if degenerate {
        log::warn!("constant responses or predictions: correlation reported as 0");
    }
    Ok(report)
}
