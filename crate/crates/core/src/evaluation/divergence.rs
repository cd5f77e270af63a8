use crate::distances::DistanceMatrix;
use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 50;

/// Histogram counts of `v` over `[lo, hi]` with `bins` equal-width bins,
/// the top edge falling into the last bin.
fn histogram(v: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    let width = hi - lo;
    for &x in v {
        let b = if width > 0.0 {
            (((x - lo) / width) * bins as f64).floor() as usize
        } else {
            0
        };
        counts[b.min(bins - 1)] += 1.0;
    }
    counts
}

/// `D_KL(p1 ∥ p2)` between histograms of the upper-triangle distances of `d1`
/// and `d2` (of their logarithms when `log_scale`), both binned on the shared
/// range, with one pseudo-count added to every bin.
pub fn kl_divergence_distances(d1: &DistanceMatrix, d2: &DistanceMatrix, log_scale: bool, bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be positive".into()));
    }
    let prep = |d: &DistanceMatrix| -> Result<Vec<f64>> {
        let v = d.upper_triangle();
        if v.is_empty() {
            return Err(Error::Shape("distance matrix has no off-diagonal entries".into()));
        }
        if !log_scale {
            return Ok(v);
        }
        if v.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidArgument(
                "log-scale divergence needs positive distances".into(),
            ));
        }
        Ok(v.iter().map(|x| x.ln()).collect())
    };
    let a = prep(d1)?;
    let b = prep(d2)?;
    let lo = a.iter().chain(&b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(&b).copied().fold(f64::NEG_INFINITY, f64::max);
    let ha = histogram(&a, lo, hi, bins);
    let hb = histogram(&b, lo, hi, bins);
    let ta = a.len() as f64 + bins as f64;
    let tb = b.len() as f64 + bins as f64;
    Ok(ha
        .iter()
        .zip(&hb)
        .map(|(ca, cb)| {
            let p = (ca + 1.0) / ta;
            let q = (cb + 1.0) / tb;
            p * (p / q).ln()
        })
        .sum::<f64>())
}
