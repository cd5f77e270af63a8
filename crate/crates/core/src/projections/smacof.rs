use serde::{Deserialize, Serialize};

use super::Embedding;
use crate::distances::DistanceMatrix;
use crate::{Error, Result};

/// Raw stress `Σ_{j<k} (d_jk − ‖x_j − x_k‖)²`.
pub fn raw_stress(d: &DistanceMatrix, coords: &[[f64; 2]]) -> f64 {
    let p = d.len();
    let mut s = 0.0;
    for j in 0..p {
        for k in (j + 1)..p {
            let r = d.get(j, k) - dist(coords[j], coords[k]);
            s += r * r;
        }
    }
    s
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmacofOptions {
    pub max_iter: usize,
    /// Stop once `(old − new) / old` falls below this.
    pub tol: f64,
}

impl Default for SmacofOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmacofResult {
    pub embedding: Embedding,
    /// Stress of the initial configuration followed by one entry per accepted update.
    pub stress_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Separates coincident points by a deterministic offset of 1e-9.
fn jitter_coincident(x: &mut [[f64; 2]]) {
    let p = x.len();
    for j in 0..p {
        for k in (j + 1)..p {
            if x[j] == x[k] {
                let angle = k as f64;
                x[k][0] += 1e-9 * angle.cos();
                x[k][1] += 1e-9 * angle.sin();
            }
        }
    }
}

fn guttman(d: &DistanceMatrix, x: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let p = x.len();
    let mut out = vec![[0.0; 2]; p];
    for j in 0..p {
        let mut acc = [0.0; 2];
        for k in 0..p {
            if k == j {
                continue;
            }
            let delta = dist(x[j], x[k]);
            if delta > 0.0 {
                let b = d.get(j, k) / delta;
                acc[0] += b * (x[j][0] - x[k][0]);
                acc[1] += b * (x[j][1] - x[k][1]);
            }
        }
        out[j] = [acc[0] / p as f64, acc[1] / p as f64];
    }
    // B(X)·X is centred at the origin; keep the centroid of the input instead.
    for axis in 0..2 {
        let mean = out.iter().map(|c| c[axis]).sum::<f64>() / p as f64;
        let xmean = x.iter().map(|c| c[axis]).sum::<f64>() / p as f64;
        for c in out.iter_mut() {
            c[axis] += xmean - mean;
        }
    }
    out
}

/// Metric SMACOF: iterates the Guttman transform from `init` while stress
/// decreases. An update that would raise stress (rounding near convergence)
/// is discarded and the iteration stops, so the trace never increases.
pub fn smacof_refine(d: &DistanceMatrix, init: &Embedding, opts: SmacofOptions) -> Result<SmacofResult> {
    if init.labels() != d.labels() {
        return Err(Error::LabelMismatch(
            "SMACOF initial embedding and distances differ".into(),
        ));
    }
    if !(opts.tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be non-negative, got {}",
            opts.tol
        )));
    }
    let mut x = init.coords().to_vec();
    jitter_coincident(&mut x);
    let mut stress = raw_stress(d, &x);
    let mut trace = vec![stress];
    let mut converged = stress == 0.0;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iter {
        let next = guttman(d, &x);
        let s = raw_stress(d, &next);
        iterations += 1;
        if !s.is_finite() {
            return Err(Error::Numerical("SMACOF produced non-finite stress".into()));
        }
        if s > stress {
            converged = true;
            break;
        }
        let drop = stress - s;
        x = next;
        trace.push(s);
        converged = s == 0.0 || drop <= opts.tol * stress;
        stress = s;
    }
    let embedding = Embedding::new(d.labels().to_vec(), x, init.method_tag())?;
    Ok(SmacofResult {
        embedding,
        stress_trace: trace,
        iterations,
        converged,
    })
}
