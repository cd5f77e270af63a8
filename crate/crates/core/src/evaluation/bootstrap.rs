use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{score, score_quiet, Metric, MetricReport, PerMetric};
use crate::ensemble::PredictionSet;
use crate::{Error, Result};

/// Redraws allowed for a replicate whose resampled responses are constant.
pub const MAX_REDRAWS: usize = 10;

/// Streams at or above this offset feed null-model draws, below it index resampling.
const NULL_STREAM: u64 = 1 << 63;

/// Bootstrap distribution of the four metrics for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub model_tag: String,
    pub seed: u64,
    pub replicates: usize,
    /// Scores on the full, unresampled test set.
    pub point: MetricReport,
    pub values: PerMetric<Vec<f64>>,
    pub ci95: PerMetric<[f64; 2]>,
    /// FNV-1a hash of each replicate's resample indices, for checking pairing.
    pub index_hashes: Vec<u64>,
}

impl BootstrapSummary {
    fn from_reports(
        model_tag: &str,
        seed: u64,
        point: MetricReport,
        reports: &[MetricReport],
        index_hashes: Vec<u64>,
    ) -> Result<Self> {
        let values = PerMetric::from_fn(|m| reports.iter().map(|r| m.of(r)).collect::<Vec<f64>>());
        let mut ci = PerMetric::<[f64; 2]>::default();
        for m in Metric::ALL {
            let (lo, hi) = jackknife_bootstrap_ci(values.get(m), 0.95)?;
            match m {
                Metric::Nrmse => ci.nrmse = [lo, hi],
                Metric::Nmae => ci.nmae = [lo, hi],
                Metric::Pcc => ci.pcc = [lo, hi],
                Metric::Bias => ci.bias = [lo, hi],
            }
        }
        Ok(Self {
            model_tag: model_tag.to_string(),
            seed,
            replicates: reports.len(),
            point,
            values,
            ci95: ci,
            index_hashes,
        })
    }

    /// Replicate values of one metric.
    pub fn metric(&self, m: Metric) -> &[f64] {
        self.values.get(m)
    }
}

fn fnv1a(idx: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &i in idx {
        for b in (i as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Resample indices of replicate `r`, drawn from its own stream so that the
/// result does not depend on scheduling.
fn replicate_indices(y: &[f64], seed: u64, r: usize) -> Result<Vec<usize>> {
    let n = y.len();
    let mut rng = stream_rng(seed, r as u64);
    for _ in 0..=MAX_REDRAWS {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let first = y[idx[0]];
        if idx.iter().any(|&i| y[i] != first) {
            return Ok(idx);
        }
    }
    Err(Error::Numerical(format!(
        "bootstrap replicate {r} had constant responses after {MAX_REDRAWS} redraws"
    )))
}

fn check_replicates(b: usize) -> Result<()> {
    if b < 100 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least 100 replicates, got {b}"
        )));
    }
    Ok(())
}

fn all_indices(y: &[f64], b: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    (0..b).into_par_iter().map(|r| replicate_indices(y, seed, r)).collect()
}

/// Paired bootstrap of every model in `preds`: replicate `r` resamples the
/// same `(y, ŷ)` index pairs for all models.
pub fn bootstrap_metrics(
    y: &[f64],
    preds: &PredictionSet,
    ybar_ref: f64,
    b: usize,
    seed: u64,
) -> Result<Vec<BootstrapSummary>> {
    check_replicates(b)?;
    if preds.n_samples() != y.len() {
        return Err(Error::Shape(format!(
            "{} responses but {} predicted samples",
            y.len(),
            preds.n_samples()
        )));
    }
    let indices = all_indices(y, b, seed)?;
    let hashes: Vec<u64> = indices.iter().map(|i| fnv1a(i)).collect();
    preds
        .model_tags()
        .iter()
        .enumerate()
        .map(|(a, tag)| {
            let yhat = preds.column(a);
            let point = score(y, &yhat, ybar_ref)?;
            let reports: Vec<MetricReport> = indices
                .par_iter()
                .map(|idx| {
                    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
                    let ps: Vec<f64> = idx.iter().map(|&i| yhat[i]).collect();
                    score_quiet(&ys, &ps, ybar_ref).map(|r| r.0)
                })
                .collect::<Result<_>>()?;
            BootstrapSummary::from_reports(tag, seed, point, &reports, hashes.clone())
        })
        .collect()
}

fn draw_from(y_train: &[f64], size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..size).map(|_| y_train[rng.random_range(0..y_train.len())]).collect()
}

/// Null-model predictions: each drawn uniformly with replacement from the
/// training responses.
pub fn null_model_predictions(y_train: &[f64], size: usize, seed: u64) -> Result<Vec<f64>> {
    if y_train.is_empty() {
        return Err(Error::InvalidArgument("null model needs training responses".into()));
    }
    Ok(draw_from(y_train, size, &mut stream_rng(seed, NULL_STREAM)))
}

/// Bootstrap of the null model paired with [`bootstrap_metrics`] under the
/// same seed: replicate `r` resamples the same test indices and draws fresh
/// null predictions for them.
pub fn null_bootstrap(y: &[f64], y_train: &[f64], ybar_ref: f64, b: usize, seed: u64) -> Result<BootstrapSummary> {
    check_replicates(b)?;
    let point_preds = null_model_predictions(y_train, y.len(), seed)?;
    let (point, _) = score_quiet(y, &point_preds, ybar_ref)?;
    let indices = all_indices(y, b, seed)?;
    let hashes: Vec<u64> = indices.iter().map(|i| fnv1a(i)).collect();
    let reports: Vec<MetricReport> = indices
        .par_iter()
        .enumerate()
        .map(|(r, idx)| {
            let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let mut rng = stream_rng(seed, NULL_STREAM + 1 + r as u64);
            let ps = draw_from(y_train, ys.len(), &mut rng);
            score_quiet(&ys, &ps, ybar_ref).map(|r| r.0)
        })
        .collect::<Result<_>>()?;
    BootstrapSummary::from_reports("null", seed, point, &reports, hashes)
}

/// Fraction of paired replicates in which `a` strictly beats `b` on `metric`.
pub fn robustness_wins(a: &BootstrapSummary, b: &BootstrapSummary, metric: Metric) -> Result<f64> {
    if a.replicates != b.replicates {
        return Err(Error::Shape(format!(
            "replicate counts differ: {} vs {}",
            a.replicates, b.replicates
        )));
    }
    if a.index_hashes != b.index_hashes {
        return Err(Error::InvalidArgument("bootstrap summaries are not paired".into()));
    }
    let wins = a
        .metric(metric)
        .iter()
        .zip(b.metric(metric))
        .filter(|(x, y)| metric.beats(**x, **y))
        .count();
    Ok(wins as f64 / a.replicates as f64)
}

/// Percentile interval of the replicate distribution.
///
/// The quantile at probability `q` of the sorted values `x[0..n]` is
/// `x[l] + (h − l)(x[l+1] − x[l])` with `h = (n − 1)q` and `l = ⌊h⌋`
/// (linear interpolation between order statistics, Hyndman–Fan type 7).
/// The interval uses `q = (1 − level)/2` and `1 − (1 − level)/2`.
pub fn jackknife_bootstrap_ci(replicates: &[f64], level: f64) -> Result<(f64, f64)> {
    if replicates.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "interval needs at least 100 replicates, got {}",
            replicates.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must be in (0, 1), got {level}")));
    }
    if replicates.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical("NaN replicate".into()));
    }
    let mut x = replicates.to_vec();
    x.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&x, alpha), quantile_sorted(&x, 1.0 - alpha)))
}

fn quantile_sorted(x: &[f64], q: f64) -> f64 {
    let h = (x.len() - 1) as f64 * q;
    let l = h.floor() as usize;
    if l + 1 >= x.len() {
        return x[x.len() - 1];
    }
    let frac = h - l as f64;
    if frac == 0.0 {
        x[l]
    } else {
        x[l] + frac * (x[l + 1] - x[l])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand_distr::{Distribution, Normal};

    fn preds(cols: &[Vec<f64>]) -> PredictionSet {
        let n = cols[0].len();
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        let tags = (0..cols.len()).map(|a| format!("m{a}")).collect();
        PredictionSet::new(ids, tags, DMatrix::from_fn(n, cols.len(), |i, a| cols[a][i])).unwrap()
    }

    fn synthetic(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        let p: Vec<f64> = y.iter().map(|v| v + noise.sample(&mut rng)).collect();
        (y, p)
    }

    #[test]
    fn perfect_predictions_have_zero_nrmse() {
        let (y, _) = synthetic(30, 1);
        let s = &bootstrap_metrics(&y, &preds(std::slice::from_ref(&y)), 0.1, 200, 3).unwrap()[0];
        assert!(s.metric(Metric::Nrmse).iter().all(|&v| v == 0.0));
        assert_eq!(s.ci95.nrmse, [0.0, 0.0]);
        assert_eq!(s.replicates, 200);
    }

    #[test]
    fn deterministic_and_paired() {
        let (y, p) = synthetic(40, 2);
        let q: Vec<f64> = p.iter().map(|v| v * 0.9).collect();
        let set = preds(&[p, q]);
        let a = bootstrap_metrics(&y, &set, 0.0, 150, 9).unwrap();
        let b = bootstrap_metrics(&y, &set, 0.0, 150, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].index_hashes, a[1].index_hashes);
        let null = null_bootstrap(&y, &y, 0.0, 150, 9).unwrap();
        assert_eq!(null.index_hashes, a[0].index_hashes);
        let other = bootstrap_metrics(&y, &set, 0.0, 150, 10).unwrap();
        assert!(robustness_wins(&a[0], &other[0], Metric::Nrmse).is_err());
    }

    #[test]
    fn independent_of_thread_count() {
        let (y, p) = synthetic(50, 4);
        let set = preds(&[p]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| bootstrap_metrics(&y, &set, 0.0, 120, 5).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn replicate_mean_near_point_estimate() {
        let (y, p) = synthetic(80, 5);
        let s = &bootstrap_metrics(&y, &preds(&[p]), 0.0, 1000, 17).unwrap()[0];
        let v = s.metric(Metric::Nrmse);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
        assert!((mean - s.point.nrmse).abs() < 3.0 * sd, "{mean} vs {}", s.point.nrmse);
    }

    #[test]
    fn redraw_limit() {
        // Constant responses still score against a different reference mean,
        // but every resample is constant.
        let y = vec![1.0; 20];
        let p: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(matches!(
            bootstrap_metrics(&y, &preds(&[p]), 0.0, 100, 1),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn null_predictions() {
        assert_eq!(null_model_predictions(&[2.5; 4], 6, 1).unwrap(), vec![2.5; 6]);
        assert_eq!(
            null_model_predictions(&[1.0, 2.0, 3.0], 20, 8).unwrap(),
            null_model_predictions(&[1.0, 2.0, 3.0], 20, 8).unwrap()
        );
        assert!(null_model_predictions(&[], 3, 0).is_err());
    }

    #[test]
    fn null_draws_match_training_histogram() {
        // Training responses with unequal category frequencies 1:2:3:4.
        let train: Vec<f64> = (0..10)
            .map(|i| match i {
                0 => 0.0,
                1 | 2 => 1.0,
                3..=5 => 2.0,
                _ => 3.0,
            })
            .collect();
        let draws = null_model_predictions(&train, 10_000, 42).unwrap();
        let mut counts = [0.0f64; 4];
        for d in draws {
            counts[d as usize] += 1.0;
        }
        let chi2: f64 = (0..4)
            .map(|c| {
                let e = 10_000.0 * (c + 1) as f64 / 10.0;
                (counts[c] - e).powi(2) / e
            })
            .sum();
        let p =
            1.0 - statrs::distribution::ContinuousCDF::cdf(&statrs::distribution::ChiSquared::new(3.0).unwrap(), chi2);
        assert!(p > 0.01, "chi2 = {chi2}, p = {p}");
    }

    #[test]
    fn robustness_counts() {
        let mk = |vals: Vec<f64>| {
            let reports: Vec<MetricReport> = vals
                .iter()
                .map(|&v| MetricReport {
                    nrmse: v,
                    nmae: v,
                    pcc: v,
                    bias: v,
                    n_test: 3,
                    ybar_ref: 0.0,
                })
                .collect();
            let hashes = vec![0; vals.len()];
            BootstrapSummary::from_reports("m", 0, reports[0], &reports, hashes).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let va: Vec<f64> = (0..150).map(|_| rng.random()).collect();
        let vb: Vec<f64> = (0..150).map(|_| rng.random()).collect();
        let a = mk(va.clone());
        let b = mk(vb.clone());
        let mut lower = 0;
        let mut higher = 0;
        for i in 0..150 {
            if va[i] < vb[i] {
                lower += 1;
            }
            if va[i] > vb[i] {
                higher += 1;
            }
        }
        assert_eq!(robustness_wins(&a, &b, Metric::Nrmse).unwrap(), lower as f64 / 150.0);
        assert_eq!(robustness_wins(&a, &b, Metric::Pcc).unwrap(), higher as f64 / 150.0);
        assert_eq!(robustness_wins(&a, &a, Metric::Bias).unwrap(), 0.0);
        let better = mk(va.iter().map(|v| v - 2.0).collect());
        assert_eq!(robustness_wins(&better, &a, Metric::Nmae).unwrap(), 1.0);
        let short = mk(va[..120].to_vec());
        assert!(robustness_wins(&short, &a, Metric::Nmae).is_err());
    }

    #[test]
    fn percentile_interval() {
        assert_eq!(jackknife_bootstrap_ci(&[0.4; 100], 0.95).unwrap(), (0.4, 0.4));
        let v: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        let (lo, hi) = jackknife_bootstrap_ci(&v, 0.95).unwrap();
        // Sorted values 1..=100; h = 99·0.025 = 2.475 → 3 + 0.475·1.
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let oracle = |q: f64| {
            let h = 99.0 * q;
            let l = h.floor() as usize;
            sorted[l] + (h - l as f64) * (sorted[l + 1] - sorted[l])
        };
        assert!((lo - oracle(0.025)).abs() < 1e-12 && (lo - 3.475).abs() < 1e-12);
        assert!((hi - oracle(0.975)).abs() < 1e-12 && (hi - 97.525).abs() < 1e-12);
        let (lo99, hi99) = jackknife_bootstrap_ci(&v, 0.99).unwrap();
        assert!(lo99 <= lo && hi99 >= hi);
        assert!(jackknife_bootstrap_ci(&v[..99], 0.95).is_err());
    }
}
