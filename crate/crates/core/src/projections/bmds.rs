use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::Embedding;
use crate::distances::{DistanceMatrix, PrecisionWeights, SIGMA2_FLOOR};
use crate::linalg::procrustes;
use crate::{Error, Result};

/// Observation model for each distance matrix given the latent locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BmdsModel {
    /// `d ~ N(δ, σ²)` truncated to `d > 0`.
    TruncatedNormal,
    /// `log d ~ N(log δ, σ²)`.
    LogNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmdsOptions {
    pub model: BmdsModel,
    /// Inverse-gamma prior shape on each σ², must exceed 2.
    pub alpha: f64,
    /// Inverse-gamma prior scale on each σ².
    pub beta: f64,
    pub iters: usize,
    pub burn_in: usize,
    /// Initial random-walk standard deviation for location moves.
    pub step: f64,
    /// Tune `step` towards 30% acceptance during burn-in.
    pub adapt_step: bool,
    pub seed: u64,
}

impl BmdsOptions {
    pub fn new(model: BmdsModel, seed: u64) -> Self {
        Self {
            model,
            alpha: 3.0,
            beta: 1e-3,
            iters: 5000,
            burn_in: 2000,
            step: 0.02,
            adapt_step: true,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerState {
    pub coords: Vec<[f64; 2]>,
    pub sigma2: Vec<f64>,
    pub iteration: usize,
    /// Unnormalized log-posterior.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub log_posterior: f64,
    pub sigma2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BmdsResult {
    /// Posterior-mean locations, each retained draw aligned to the state at
    /// the end of burn-in.
    pub embedding: Embedding,
    /// Posterior-mean σ² per input matrix.
    pub weights: PrecisionWeights,
    pub trace: Vec<TraceRecord>,
    /// Location-move acceptance rate after burn-in.
    pub acceptance_rate: f64,
    /// Step in use after burn-in.
    pub step: f64,
    pub final_state: SamplerState,
}

impl BmdsResult {
    /// Writes the trace as JSON lines.
    pub fn write_trace<W: Write>(&self, mut w: W) -> Result<()> {
        for rec in &self.trace {
            serde_json::to_writer(&mut w, rec)?;
            writeln!(w).map_err(|e| Error::io("<trace>", e))?;
        }
        Ok(())
    }
}

fn log_phi(x: f64) -> f64 {
    (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Folds a coordinate back into `[0, 1]` by mirror reflection.
fn reflect(mut v: f64) -> f64 {
    v = v.rem_euclid(2.0);
    if v > 1.0 {
        2.0 - v
    } else {
        v
    }
}

struct Chain<'a> {
    ds: &'a [DistanceMatrix],
    model: BmdsModel,
    /// Per matrix, the observations in the space the residual is taken in.
    obs: Vec<Vec<f64>>,
    p: usize,
}

impl Chain<'_> {
    fn idx(&self, j: usize, k: usize) -> usize {
        j * self.p + k
    }

    /// Log-likelihood terms of pair (j, k) given latent distance `delta`.
    fn pair_loglik(&self, j: usize, k: usize, delta: f64, sigma2: &[f64]) -> f64 {
        let i = self.idx(j, k);
        let mut ll = 0.0;
        match self.model {
            BmdsModel::TruncatedNormal => {
                for (a, s2) in sigma2.iter().enumerate() {
                    let r = self.obs[a][i] - delta;
                    ll += -0.5 * r * r / s2 - log_phi(delta / s2.sqrt());
                }
            }
            BmdsModel::LogNormal => {
                if delta <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let ld = delta.ln();
                for (a, s2) in sigma2.iter().enumerate() {
                    let r = self.obs[a][i] - ld;
                    ll += -0.5 * r * r / s2;
                }
            }
        }
        ll
    }

    fn point_loglik(&self, j: usize, at: [f64; 2], coords: &[[f64; 2]], sigma2: &[f64]) -> f64 {
        (0..self.p)
            .filter(|&k| k != j)
            .map(|k| self.pair_loglik(j, k, dist(at, coords[k]), sigma2))
            .sum()
    }

    /// Sum of squared residuals per matrix and the truncation term Σ log Φ(δ/σ_a).
    fn residuals(&self, coords: &[[f64; 2]]) -> Vec<f64> {
        let mut ss = vec![0.0; self.ds.len()];
        for j in 0..self.p {
            for k in (j + 1)..self.p {
                let delta = dist(coords[j], coords[k]);
                let latent = match self.model {
                    BmdsModel::TruncatedNormal => delta,
                    BmdsModel::LogNormal => delta.max(f64::MIN_POSITIVE).ln(),
                };
                for (a, s) in ss.iter_mut().enumerate() {
                    let r = self.obs[a][self.idx(j, k)] - latent;
                    *s += r * r;
                }
            }
        }
        ss
    }

    fn log_phi_sum(&self, coords: &[[f64; 2]], s2: f64) -> f64 {
        let sd = s2.sqrt();
        let mut t = 0.0;
        for j in 0..self.p {
            for k in (j + 1)..self.p {
                t += log_phi(dist(coords[j], coords[k]) / sd);
            }
        }
        t
    }

    fn log_posterior(&self, coords: &[[f64; 2]], sigma2: &[f64], alpha: f64, beta: f64) -> f64 {
        let m = (self.p * (self.p - 1) / 2) as f64;
        let ss = self.residuals(coords);
        let mut lp = 0.0;
        for (a, &s2) in sigma2.iter().enumerate() {
            lp += -0.5 * m * s2.ln() - 0.5 * ss[a] / s2;
            if self.model == BmdsModel::TruncatedNormal {
                lp -= self.log_phi_sum(coords, s2);
            }
            lp += -(alpha + 1.0) * s2.ln() - beta / s2;
        }
        lp
    }
}

/// Metropolis-within-Gibbs sampler for Bayesian MDS with one latent planar
/// configuration shared by `A` observed distance matrices.
///
/// Locations have a uniform prior on the unit square; each sweep proposes a
/// Gaussian random-walk move for every location (reflected at the square's
/// edges) and then updates every σ². Under the log-normal model σ² is drawn
/// exactly from its inverse-gamma conditional; under the truncated-normal
/// model the Φ terms make it non-conjugate and σ² gets a random-walk
/// Metropolis step on `log σ²`.
pub fn bmds_sample(ds: &[DistanceMatrix], init: &Embedding, opts: &BmdsOptions) -> Result<BmdsResult> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("BMDS needs at least one distance matrix".into()));
    }
    if !(opts.alpha > 2.0) || !(opts.beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "prior needs alpha > 2 and beta > 0, got ({}, {})",
            opts.alpha, opts.beta
        )));
    }
    if !(opts.step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {}",
            opts.step
        )));
    }
    if opts.iters <= opts.burn_in {
        return Err(Error::InvalidArgument(format!(
            "iters ({}) must exceed burn_in ({})",
            opts.iters, opts.burn_in
        )));
    }
    let p = init.len();
    if p < 2 {
        return Err(Error::Shape("BMDS needs at least 2 locations".into()));
    }
    for d in ds {
        if d.labels() != init.labels() {
            return Err(Error::LabelMismatch("BMDS inputs have different labels".into()));
        }
    }
    if !init.in_unit_square() {
        return Err(Error::InvalidArgument(
            "BMDS initial embedding must lie in the unit square".into(),
        ));
    }
    if opts.model == BmdsModel::LogNormal {
        for d in ds {
            if d.min_off_diagonal() <= 0.0 {
                return Err(Error::InvalidArgument(
                    "log-normal model needs positive distances".into(),
                ));
            }
        }
    }

    let obs: Vec<Vec<f64>> = ds
        .iter()
        .map(|d| {
            d.matrix()
                .transpose()
                .iter()
                .map(|&v| match opts.model {
                    BmdsModel::TruncatedNormal => v,
                    BmdsModel::LogNormal => v.ln(),
                })
                .collect()
        })
        .collect();
    let chain = Chain {
        ds,
        model: opts.model,
        obs,
        p,
    };
    let m = (p * (p - 1) / 2) as f64;
    let a_count = ds.len();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut coords = init.coords().to_vec();
    let mut sigma2: Vec<f64> = chain
        .residuals(&coords)
        .iter()
        .map(|s| (s / m).max(SIGMA2_FLOOR))
        .collect();
    let mut step = opts.step;

    let mut trace = Vec::with_capacity(opts.iters);
    let mut reference: Option<Vec<[f64; 2]>> = None;
    let mut coord_sum = vec![[0.0; 2]; p];
    let mut sigma_sum = vec![0.0; a_count];
    let mut kept = 0usize;
    let mut accepted_window = 0usize;
    let mut accepted_after = 0usize;

    for it in 0..opts.iters {
        let mut accepted = 0usize;
        for j in 0..p {
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            let prop = [reflect(coords[j][0] + step * z0), reflect(coords[j][1] + step * z1)];
            let old = chain.point_loglik(j, coords[j], &coords, &sigma2);
            let new = chain.point_loglik(j, prop, &coords, &sigma2);
            let u: f64 = rng.random();
            if new.is_finite() && u.ln() < new - old {
                coords[j] = prop;
                accepted += 1;
            }
        }

        let ss = chain.residuals(&coords);
        for a in 0..a_count {
            match opts.model {
                BmdsModel::LogNormal => {
                    let shape = opts.alpha + 0.5 * m;
                    let rate = opts.beta + 0.5 * ss[a];
                    let g = Gamma::new(shape, 1.0 / rate)
                        .map_err(|e| Error::Numerical(format!("inverse-gamma draw: {e}")))?;
                    sigma2[a] = (1.0 / g.sample(&mut rng)).max(SIGMA2_FLOOR);
                }
                BmdsModel::TruncatedNormal => {
                    let cond = |s2: f64| {
                        -(0.5 * m + opts.alpha + 1.0) * s2.ln()
                            - (opts.beta + 0.5 * ss[a]) / s2
                            - chain.log_phi_sum(&coords, s2)
                    };
                    let z: f64 = rng.sample(StandardNormal);
                    let cand = (sigma2[a].ln() + 0.2 * z).exp().max(SIGMA2_FLOOR);
                    // Jacobian of the log-scale proposal.
                    let log_ratio = cond(cand) - cond(sigma2[a]) + cand.ln() - sigma2[a].ln();
                    let u: f64 = rng.random();
                    if u.ln() < log_ratio {
                        sigma2[a] = cand;
                    }
                }
            }
        }

        if it < opts.burn_in {
            accepted_window += accepted;
            if opts.adapt_step && (it + 1) % 50 == 0 {
                let rate = accepted_window as f64 / (50 * p) as f64;
                step = (step * ((rate - 0.3) * 2.0).exp()).clamp(1e-6, 0.5);
                accepted_window = 0;
            }
        } else {
            accepted_after += accepted;
            let r = reference.get_or_insert_with(|| coords.clone());
            let aligned = procrustes(&coords, r)?.aligned;
            for (acc, c) in coord_sum.iter_mut().zip(&aligned) {
                acc[0] += c[0];
                acc[1] += c[1];
            }
            for (acc, s) in sigma_sum.iter_mut().zip(&sigma2) {
                *acc += s;
            }
            kept += 1;
        }

        let lp = chain.log_posterior(&coords, &sigma2, opts.alpha, opts.beta);
        trace.push(TraceRecord {
            iteration: it,
            log_posterior: lp,
            sigma2: sigma2.clone(),
        });
    }

    let mean_coords: Vec<[f64; 2]> = coord_sum
        .iter()
        .map(|c| {
            [
                (c[0] / kept as f64).clamp(0.0, 1.0),
                (c[1] / kept as f64).clamp(0.0, 1.0),
            ]
        })
        .collect();
    let mean_sigma: Vec<f64> = sigma_sum.iter().map(|s| s / kept as f64).collect();
    let tag = match opts.model {
        BmdsModel::TruncatedNormal => "bmds_truncated_normal",
        BmdsModel::LogNormal => "bmds_log_normal",
    };
    let objective = trace.last().map(|t| t.log_posterior).unwrap_or(f64::NAN);
    Ok(BmdsResult {
        embedding: Embedding::new(init.labels().to_vec(), mean_coords, tag)?,
        weights: PrecisionWeights::new(mean_sigma)?,
        trace,
        acceptance_rate: accepted_after as f64 / (kept * p) as f64,
        step,
        final_state: SamplerState {
            coords,
            sigma2,
            iteration: opts.iters,
            objective,
        },
    })
}
