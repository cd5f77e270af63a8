use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const LLOYD_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances to the centroids.
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = points.iter().map(|p| p.iter().map(|v| v.to_bits()).collect()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map(Vec::len).unwrap_or(0);
    if dim == 0 {
        return Err(Error::Shape("clustering needs non-empty points".into()));
    }
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape("points have different dimensions".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite point coordinate".into()));
    }
    Ok(dim)
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, ctr) in centroids.iter().enumerate() {
        let d = sq_dist(p, ctr);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seeds(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansResult {
    let n = points.len();
    let k = centroids.len();
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..LLOYD_MAX_ITER {
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            dist[i] = d;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster at the point farthest from its centroid.
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    counts[labels[i]] -= 1;
                    for (s, v) in sums[labels[i]].iter_mut().zip(&points[i]) {
                        *s -= v;
                    }
                    labels[i] = c;
                    dist[i] = 0.0;
                    counts[c] = 1;
                    sums[c] = points[i].clone();
                    changed = true;
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum();
    KMeansResult {
        labels,
        centroids,
        inertia,
    }
}

/// Lloyd's algorithm from k-means++ seeds; the best of `restarts` runs by
/// inertia, each restart on its own random stream.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    check_points(points)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds {distinct} distinct points"
        )));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let run = lloyd(points, plus_plus_seeds(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOptions {
    pub kmax: usize,
    /// Number of uniform reference sets.
    pub b_ref: usize,
    pub seed: u64,
    /// k-means restarts per fit.
    pub restarts: usize,
}

impl GapOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            kmax: 4,
            b_ref: 10,
            seed,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    /// Cluster counts 1..=k evaluated.
    pub ks: Vec<usize>,
    pub gap: Vec<f64>,
    pub sk: Vec<f64>,
    pub log_w: Vec<f64>,
    pub chosen_k: usize,
    /// Share of points whose 2-means label disagrees with their source,
    /// minimized over label permutations; present when sources are given and
    /// `chosen_k ≥ 2`.
    pub cluster_overlap: Option<f64>,
}

fn log_dispersion(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<f64> {
    let w = kmeans(points, k, seed, restarts)?.inertia;
    Ok(w.max(f64::MIN_POSITIVE).ln())
}

/// Gap statistic with a uniform reference over the bounding box of the data.
///
/// `Gap(k) = mean_b log W_k(ref_b) − log W_k(data)`,
/// `s_k = sd_b(log W_k(ref_b)) · √(1 + 1/B_ref)`, and the chosen k is the
/// smallest k with `Gap(k) ≥ Gap(k+1) − s_{k+1}` (the largest evaluated k if
/// none qualifies). `sources` (e.g. candidate = 0, null = 1) enables the
/// two-cluster overlap report.
pub fn gap_statistic(points: &[Vec<f64>], sources: Option<&[usize]>, opts: &GapOptions) -> Result<GapResult> {
    let dim = check_points(points)?;
    if opts.kmax < 2 {
        return Err(Error::InvalidArgument(format!(
            "kmax must be at least 2, got {}",
            opts.kmax
        )));
    }
    if opts.b_ref < 10 {
        return Err(Error::InvalidArgument(format!(
            "gap statistic needs at least 10 reference sets, got {}",
            opts.b_ref
        )));
    }
    if let Some(s) = sources {
        if s.len() != points.len() {
            return Err(Error::Shape(format!("{} sources for {} points", s.len(), points.len())));
        }
    }
    let distinct = distinct_count(points);
    if distinct < 2 {
        return Err(Error::InvalidArgument(
            "gap statistic needs at least 2 distinct points".into(),
        ));
    }
    let kmax = opts.kmax.min(distinct);
    let ks: Vec<usize> = (1..=kmax).collect();

    let lo: Vec<f64> = (0..dim)
        .map(|c| points.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..dim)
        .map(|c| points.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max))
        .collect();

    let log_w: Vec<f64> = ks
        .iter()
        .map(|&k| log_dispersion(points, k, opts.seed, opts.restarts))
        .collect::<Result<_>>()?;

    // ref_logs[b][k-1]; reference set b uses its own stream.
    let ref_logs: Vec<Vec<f64>> = (0..opts.b_ref)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(1 + b as u64);
            let reference: Vec<Vec<f64>> = (0..points.len())
                .map(|_| {
                    (0..dim)
                        .map(|c| lo[c] + (hi[c] - lo[c]) * rng.random::<f64>())
                        .collect()
                })
                .collect();
            let fit_seed = opts.seed.wrapping_add(1 + b as u64);
            ks.iter()
                .map(|&k| log_dispersion(&reference, k, fit_seed, opts.restarts))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let bf = opts.b_ref as f64;
    let mut gap = Vec::with_capacity(kmax);
    let mut sk = Vec::with_capacity(kmax);
    for (i, lw) in log_w.iter().enumerate() {
        let vals: Vec<f64> = ref_logs.iter().map(|r| r[i]).collect();
        let mean = vals.iter().sum::<f64>() / bf;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / bf).sqrt();
        gap.push(mean - lw);
        sk.push(sd * (1.0 + 1.0 / bf).sqrt());
    }
    let chosen_k = (0..kmax - 1)
        .find(|&i| gap[i] >= gap[i + 1] - sk[i + 1])
        .map(|i| ks[i])
        .unwrap_or(kmax);

    let cluster_overlap = match sources {
        Some(src) if chosen_k >= 2 => {
            let fit = kmeans(points, 2, opts.seed, opts.restarts)?;
            let n = points.len() as f64;
            let mismatch = fit.labels.iter().zip(src).filter(|(l, s)| **l != **s).count() as f64;
            Some((mismatch / n).min(1.0 - mismatch / n))
        }
        _ => None,
    };
    Ok(GapResult {
        ks,
        gap,
        sk,
        log_w,
        chosen_k,
        cluster_overlap,
    })
}
