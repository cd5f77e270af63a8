//! Feature dissimilarity matrices and precision-weighted fusion.
//!
//! Several candidate dissimilarity matrices `d_a` over the same features are
//! combined into one matrix whose entries are weighted means of the inputs,
//! with weights `W_a = 1/σ_a²`:
//!
//! * arithmetic (truncated-normal data model): `Σ W_a d_a / Σ W_a`
//! * geometric (log-normal data model): `exp(Σ W_a log d_a / Σ W_a)`
//!
//! The variances are estimated by alternating between the fused matrix and
//! the per-metric mean squared residual around it ([`estimate_precisions`]).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataio::FeatureTable;
use crate::projections::Embedding;
use crate::{Error, Result};

/// Variances below this are clamped during precision estimation.
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// Symmetric `p × p` matrix of non-negative dissimilarities with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    d: DMatrix<f64>,
}

impl DistanceMatrix {
    /// Validates the invariants. Asymmetry up to `1e-9` relative is averaged away.
    pub fn new(labels: Vec<String>, mut d: DMatrix<f64>) -> Result<Self> {
        let p = labels.len();
        if d.nrows() != p || d.ncols() != p {
            return Err(Error::Shape(format!(
                "{}×{} matrix for {p} labels",
                d.nrows(),
                d.ncols()
            )));
        }
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for j in 0..p {
            if d[(j, j)] != 0.0 {
                return Err(Error::Malformed(format!("non-zero diagonal at `{}`", labels[j])));
            }
            for k in (j + 1)..p {
                let (a, b) = (d[(j, k)], d[(k, j)]);
                if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < 0.0 {
                    return Err(Error::Malformed(format!(
                        "entry ({}, {}) must be finite and non-negative",
                        labels[j], labels[k]
                    )));
                }
                if a != b {
                    if (a - b).abs() > 1e-9 * scale {
                        return Err(Error::Malformed(format!(
                            "asymmetric entry ({}, {}): {a} vs {b}",
                            labels[j], labels[k]
                        )));
                    }
                    let m = 0.5 * (a + b);
                    d[(j, k)] = m;
                    d[(k, j)] = m;
                }
            }
        }
        Ok(Self { labels, d })
    }

    /// Builds a matrix from an upper-triangle generator; the result is exactly symmetric.
    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let p = labels.len();
        let mut d = DMatrix::zeros(p, p);
        for j in 0..p {
            for k in (j + 1)..p {
                let v = f(j, k);
                d[(j, k)] = v;
                d[(k, j)] = v;
            }
        }
        Self::new(labels, d)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.d[(j, k)]
    }

    /// Entries with `j < k`, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let p = self.len();
        let mut out = Vec::with_capacity(p * p.saturating_sub(1) / 2);
        for j in 0..p {
            for k in (j + 1)..p {
                out.push(self.d[(j, k)]);
            }
        }
        out
    }

    pub fn mean_off_diagonal(&self) -> f64 {
        let tri = self.upper_triangle();
        if tri.is_empty() {
            0.0
        } else {
            tri.iter().sum::<f64>() / tri.len() as f64
        }
    }

    /// Multiplies every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            labels: self.labels.clone(),
            d: &self.d * c,
        }
    }

    /// Rescales so that the mean off-diagonal entry is one (no-op on an all-zero matrix).
    pub fn rescaled_unit_mean(&self) -> Self {
        let m = self.mean_off_diagonal();
        if m > 0.0 {
            self.scaled(1.0 / m)
        } else {
            self.clone()
        }
    }

    /// Smallest off-diagonal entry (∞ when `p < 2`).
    pub fn min_off_diagonal(&self) -> f64 {
        self.upper_triangle().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// CSV: a header row of labels followed by `p` rows of values.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.labels)?;
        for row in self.d.row_iter() {
            wtr.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let labels: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        let p = labels.len();
        let mut flat = Vec::with_capacity(p * p);
        for rec in rdr.records() {
            let rec = rec?;
            for cell in rec.iter() {
                flat.push(
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Malformed(format!("bad distance value `{cell}`")))?,
                );
            }
        }
        if flat.len() != p * p {
            return Err(Error::Shape(format!("expected {} values, read {}", p * p, flat.len())));
        }
        Self::new(labels, DMatrix::from_row_slice(p, p, &flat))
    }

    /// Binary layout (all little-endian): `u64 p`, then per label `u32` byte
    /// length and UTF-8 bytes, then `p²` `f64` values row-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for label in &self.labels {
            w.write_all(&(label.len() as u32).to_le_bytes())?;
            w.write_all(label.as_bytes())?;
        }
        for row in self.d.row_iter() {
            for v in row.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e| Error::io("<binary distance matrix>", e);
        let mut b8 = [0u8; 8];
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b8).map_err(io)?;
        let p = u64::from_le_bytes(b8) as usize;
        let mut labels = Vec::with_capacity(p);
        for _ in 0..p {
            r.read_exact(&mut b4).map_err(io)?;
            let mut buf = vec![0u8; u32::from_le_bytes(b4) as usize];
            r.read_exact(&mut buf).map_err(io)?;
            labels.push(String::from_utf8(buf).map_err(|e| Error::Malformed(e.to_string()))?);
        }
        let mut flat = Vec::with_capacity(p * p);
        for _ in 0..p * p {
            r.read_exact(&mut b8).map_err(io)?;
            flat.push(f64::from_le_bytes(b8));
        }
        Self::new(labels, DMatrix::from_row_slice(p, p, &flat))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f)
    }
}

/// Euclidean distances between feature columns (each a length-`n` vector).
pub fn pairwise_euclidean(t: &FeatureTable) -> Result<DistanceMatrix> {
    if t.n_features() < 2 {
        return Err(Error::Shape("need at least two features".into()));
    }
    if t.has_missing() {
        return Err(Error::Malformed("table has missing values".into()));
    }
    let x = t.values();
    DistanceMatrix::from_fn(t.feature_names().to_vec(), |j, k| {
        x.column(j)
            .iter()
            .zip(x.column(k).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    })
}

/// Pairwise Euclidean distances of embedding coordinates.
pub fn embedding_distances(e: &Embedding) -> Result<DistanceMatrix> {
    let c = e.coords();
    DistanceMatrix::from_fn(e.labels().to_vec(), |j, k| {
        ((c[j][0] - c[k][0]).powi(2) + (c[j][1] - c[k][1]).powi(2)).sqrt()
    })
}

/// Symmetrized (union) k-nearest-neighbor adjacency lists. Neighbor ties are
/// broken by index.
pub fn knn_graph(d: &DistanceMatrix, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let p = d.len();
    if k == 0 || k >= p {
        return Err(Error::InvalidArgument(format!("k = {k} must satisfy 1 ≤ k < p = {p}")));
    }
    let mut adj = vec![Vec::<(usize, f64)>::new(); p];
    for j in 0..p {
        let mut others: Vec<usize> = (0..p).filter(|&o| o != j).collect();
        others.sort_by(|&a, &b| d.get(j, a).total_cmp(&d.get(j, b)).then(a.cmp(&b)));
        for &o in &others[..k] {
            let w = d.get(j, o);
            if !adj[j].iter().any(|&(n, _)| n == o) {
                adj[j].push((o, w));
            }
            if !adj[o].iter().any(|&(n, _)| n == j) {
                adj[o].push((j, w));
            }
        }
    }
    for list in &mut adj {
        list.sort_by_key(|&(n, _)| n);
    }
    Ok(adj)
}

/// Sizes of the connected components, largest first.
pub fn component_sizes(adj: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let mut seen = vec![false; adj.len()];
    let mut sizes = Vec::new();
    for start in 0..adj.len() {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &(n, _) in &adj[v] {
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // min-heap on distance
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(du, u)) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = du + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    dist
}

/// Shortest-path lengths over the symmetrized k-nearest-neighbor graph.
pub fn geodesic_distances(d: &DistanceMatrix, k: usize) -> Result<DistanceMatrix> {
    let adj = knn_graph(d, k)?;
    let sizes = component_sizes(&adj);
    if sizes.len() > 1 {
        return Err(Error::Disconnected { sizes });
    }
    let p = d.len();
    let rows: Vec<Vec<f64>> = (0..p).map(|s| dijkstra(&adj, s)).collect();
    // Symmetrize on the upper triangle so both halves are bit-identical.
    DistanceMatrix::from_fn(d.labels().to_vec(), |j, k| rows[j][k].min(rows[k][j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// Weighted arithmetic mean (truncated-normal distance model).
    #[default]
    Arithmetic,
    /// Weighted geometric mean (log-normal distance model).
    Geometric,
}

impl FusionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FusionMode::Arithmetic => "arithmetic",
            FusionMode::Geometric => "geometric",
        }
    }
}

/// Per-metric variances `σ_a²`; the fusion weights are their reciprocals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionWeights {
    sigma2: Vec<f64>,
}

impl PrecisionWeights {
    pub fn new(sigma2: Vec<f64>) -> Result<Self> {
        if sigma2.is_empty() || sigma2.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "variances must be positive and finite, got {sigma2:?}"
            )));
        }
        Ok(Self { sigma2 })
    }

    pub fn equal(a: usize) -> Self {
        Self { sigma2: vec![1.0; a] }
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn weights(&self) -> Vec<f64> {
        self.sigma2.iter().map(|s| 1.0 / s).collect()
    }

    /// `V = Σ_a 1/σ_a²`.
    pub fn total(&self) -> f64 {
        self.weights().iter().sum()
    }

    pub fn len(&self) -> usize {
        self.sigma2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedDistance {
    pub d_bar: DistanceMatrix,
    pub weights: PrecisionWeights,
    pub mode: FusionMode,
}

fn check_labels(ds: &[DistanceMatrix]) -> Result<()> {
    let first = ds
        .first()
        .ok_or_else(|| Error::InvalidArgument("no distance matrices to fuse".into()))?;
    for (a, d) in ds.iter().enumerate().skip(1) {
        if d.labels() != first.labels() {
            return Err(Error::LabelMismatch(format!(
                "matrix {a} has different labels than matrix 0"
            )));
        }
    }
    Ok(())
}

fn check_positive(ds: &[DistanceMatrix]) -> Result<()> {
    for d in ds {
        let p = d.len();
        for j in 0..p {
            for k in (j + 1)..p {
                if d.get(j, k) <= 0.0 {
                    return Err(Error::ZeroDistance(d.labels()[j].clone(), d.labels()[k].clone()));
                }
            }
        }
    }
    Ok(())
}

/// Entrywise weighted mean of the inputs. Each fused entry is clamped into the
/// entrywise `[min, max]` of the inputs so that rounding never leaves that
/// range (identical inputs therefore fuse to themselves exactly).
pub fn fuse_distances(ds: &[DistanceMatrix], w: &PrecisionWeights, mode: FusionMode) -> Result<FusedDistance> {
    check_labels(ds)?;
    if w.len() != ds.len() {
        return Err(Error::Shape(format!("{} weights for {} matrices", w.len(), ds.len())));
    }
    if mode == FusionMode::Geometric {
        check_positive(ds)?;
    }
    let weights = w.weights();
    let total: f64 = weights.iter().sum();
    let d_bar = DistanceMatrix::from_fn(ds[0].labels().to_vec(), |j, k| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut acc = 0.0;
        for (d, wa) in ds.iter().zip(&weights) {
            let v = d.get(j, k);
            lo = lo.min(v);
            hi = hi.max(v);
            acc += wa
                * match mode {
                    FusionMode::Arithmetic => v,
                    FusionMode::Geometric => v.ln(),
                };
        }
        let mean = acc / total;
        let fused = match mode {
            FusionMode::Arithmetic => mean,
            FusionMode::Geometric => mean.exp(),
        };
        fused.clamp(lo, hi)
    })?;
    Ok(FusedDistance {
        d_bar,
        weights: w.clone(),
        mode,
    })
}

/// Settings for [`estimate_precisions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrecisionOptions {
    pub max_iter: usize,
    /// Stop once every `|Δσ_a²| / σ_a²` falls below this.
    pub tol: f64,
}

impl Default for PrecisionOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrecisionEstimate {
    pub weights: PrecisionWeights,
    pub fused: FusedDistance,
    pub iterations: usize,
    pub converged: bool,
    /// Metrics whose variance hit [`SIGMA2_FLOOR`].
    pub clamped: Vec<usize>,
    /// Weighted least-squares objective after each variance update.
    pub objective: Vec<f64>,
}

fn residual_means(ds: &[DistanceMatrix], fused: &DistanceMatrix, mode: FusionMode) -> Vec<f64> {
    let p = fused.len();
    let m = (p * (p - 1) / 2) as f64;
    ds.iter()
        .map(|d| {
            let mut ss = 0.0;
            for j in 0..p {
                for k in (j + 1)..p {
                    let r = match mode {
                        FusionMode::Arithmetic => d.get(j, k) - fused.get(j, k),
                        FusionMode::Geometric => d.get(j, k).ln() - fused.get(j, k).ln(),
                    };
                    ss += r * r;
                }
            }
            ss / m
        })
        .collect()
}

/// `Σ_a Σ_{j>k} r²/σ_a² + m Σ_a log σ_a²` for the given fused matrix, where
/// `r` is the residual on the original (arithmetic) or log (geometric) scale.
pub fn precision_objective(ds: &[DistanceMatrix], fused: &DistanceMatrix, sigma2: &[f64], mode: FusionMode) -> f64 {
    let p = fused.len();
    let m = (p * (p - 1) / 2) as f64;
    residual_means(ds, fused, mode)
        .iter()
        .zip(sigma2)
        .map(|(mse, s)| m * mse / s + m * s.ln())
        .sum()
}

/// Fixed-point estimate of the per-metric variances: start from `σ² = 1`,
/// alternate between fusing with the current weights and setting each
/// `σ_a²` to the mean squared residual around the fused matrix.
pub fn estimate_precisions(
    ds: &[DistanceMatrix],
    mode: FusionMode,
    opts: PrecisionOptions,
) -> Result<PrecisionEstimate> {
    if ds.len() < 2 {
        return Err(Error::InvalidArgument(
            "precision estimation needs at least two matrices".into(),
        ));
    }
    check_labels(ds)?;
    if ds[0].len() < 2 {
        return Err(Error::Shape("need at least two features".into()));
    }
    if mode == FusionMode::Geometric {
        check_positive(ds)?;
    }
    let mut sigma2 = vec![1.0; ds.len()];
    let mut objective = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut clamped = Vec::new();
    while iterations < opts.max_iter {
        iterations += 1;
        let fused = fuse_distances(ds, &PrecisionWeights::new(sigma2.clone())?, mode)?;
        let mut next = residual_means(ds, &fused.d_bar, mode);
        clamped.clear();
        for (a, s) in next.iter_mut().enumerate() {
            if *s < SIGMA2_FLOOR {
                *s = SIGMA2_FLOOR;
                clamped.push(a);
            }
        }
        objective.push(precision_objective(ds, &fused.d_bar, &next, mode));
        let change = next
            .iter()
            .zip(&sigma2)
            .map(|(n, o)| (n - o).abs() / o)
            .fold(0.0, f64::max);
        sigma2 = next;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    if !clamped.is_empty() {
        log::warn!("variance of metrics {clamped:?} clamped to {SIGMA2_FLOOR:e} (duplicate of the fused matrix)");
    }
    let weights = PrecisionWeights::new(sigma2)?;
    let fused = fuse_distances(ds, &weights, mode)?;
    Ok(PrecisionEstimate {
        weights,
        fused,
        iterations,
        converged,
        clamped,
        objective,
    })
}
