use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Embedding;
use crate::distances::{component_sizes, knn_graph, DistanceMatrix};
use crate::linalg::{complement_basis, fix_column_signs, symmetric_eigen_ascending};
use crate::{Error, Result};

/// Edge weights of the neighbor graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HeatKernel {
    /// `exp(-d²/σ²)` with σ the median off-diagonal distance.
    #[default]
    Median,
    /// `exp(-d²/σ²)` with the given σ.
    Sigma(f64),
    /// Unit weight on every edge.
    Binary,
}

fn median_off_diagonal(d: &DistanceMatrix) -> f64 {
    let mut tri = d.upper_triangle();
    tri.sort_by(f64::total_cmp);
    let n = tri.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        tri[n / 2]
    } else {
        0.5 * (tri[n / 2 - 1] + tri[n / 2])
    }
}

/// Laplacian eigenmaps: solves `L v = λ D v` on the symmetrized k-NN graph
/// and returns the eigenvectors of the 2nd and 3rd smallest eigenvalues,
/// each with unit `D`-norm and `D`-orthogonal to the constant vector.
pub fn laplacian_eigenmaps(d: &DistanceMatrix, k: usize, heat: HeatKernel) -> Result<Embedding> {
    let p = d.len();
    if p < 3 {
        return Err(Error::Shape(format!("Laplacian eigenmaps needs p ≥ 3, got {p}")));
    }
    let adj = knn_graph(d, k)?;
    let sizes = component_sizes(&adj);
    if sizes.len() > 1 {
        return Err(Error::Disconnected { sizes });
    }
    let sigma = match heat {
        HeatKernel::Binary => None,
        HeatKernel::Sigma(s) if s > 0.0 && s.is_finite() => Some(s),
        HeatKernel::Sigma(s) => {
            return Err(Error::InvalidArgument(format!(
                "heat kernel width must be positive, got {s}"
            )))
        }
        HeatKernel::Median => {
            let m = median_off_diagonal(d);
            if m > 0.0 {
                Some(m)
            } else {
                log::warn!("median distance is zero; using binary weights");
                None
            }
        }
    };
    let mut w = DMatrix::zeros(p, p);
    for (j, list) in adj.iter().enumerate() {
        for &(n, dist) in list {
            w[(j, n)] = match sigma {
                Some(s) => (-(dist * dist) / (s * s)).exp(),
                None => 1.0,
            };
        }
    }
    let deg: Vec<f64> = (0..p).map(|j| w.row(j).sum()).collect();
    if deg.iter().any(|&g| g <= 0.0) {
        return Err(Error::Numerical("vertex with zero weighted degree".into()));
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|g| 1.0 / g.sqrt()).collect();
    let l_sym = DMatrix::from_fn(p, p, |j, n| {
        let id = if j == n { 1.0 } else { 0.0 };
        id - inv_sqrt[j] * w[(j, n)] * inv_sqrt[n]
    });
    let trivial = DVector::from_iterator(p, deg.iter().map(|g| g.sqrt()));
    let q = complement_basis(&trivial);
    let eig = symmetric_eigen_ascending(q.transpose() * &l_sym * &q)?;
    let u = &q * eig.vectors.columns(0, 2);
    let mut v = DMatrix::from_fn(p, 2, |j, a| u[(j, a)] * inv_sqrt[j]);
    fix_column_signs(&mut v);
    Embedding::new(
        d.labels().to_vec(),
        (0..p).map(|j| [v[(j, 0)], v[(j, 1)]]).collect(),
        "le",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::embedding_distances;
    use crate::evaluation::kendall_tau_distances;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("f{j}")).collect()
    }

    /// Smallest non-trivial generalized eigenvector of a graph Laplacian by
    /// deflated power iteration on `2I - D^{-1/2} L D^{-1/2}`.
    fn fiedler_oracle(w: &[[f64; 5]; 5]) -> Vec<f64> {
        let deg: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
        let s = |j: usize, k: usize| {
            let l = if j == k { deg[j] } else { 0.0 } - w[j][k];
            l / (deg[j] * deg[k]).sqrt()
        };
        let u0: Vec<f64> = {
            let v: Vec<f64> = deg.iter().map(|g| g.sqrt()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n).collect()
        };
        let mut u: Vec<f64> = (0..5).map(|i| (i as f64) - 1.7).collect();
        for _ in 0..5000 {
            let dot: f64 = u.iter().zip(&u0).map(|(a, b)| a * b).sum();
            for (a, b) in u.iter_mut().zip(&u0) {
                *a -= dot * b;
            }
            let next: Vec<f64> = (0..5)
                .map(|j| 2.0 * u[j] - (0..5).map(|k| s(j, k) * u[k]).sum::<f64>())
                .collect();
            let n = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            u = next.iter().map(|x| x / n).collect();
        }
        (0..5).map(|j| u[j] / deg[j].sqrt()).collect()
    }

    #[test]
    fn path_graph_fiedler_vector() {
        let d = DistanceMatrix::from_fn(labels(5), |j, k| (j as f64 - k as f64).abs()).unwrap();
        let e = laplacian_eigenmaps(&d, 1, HeatKernel::Binary).unwrap();
        let first: Vec<f64> = e.coords().iter().map(|c| c[0]).collect();
        let inc = first.windows(2).all(|w| w[1] > w[0]);
        let dec = first.windows(2).all(|w| w[1] < w[0]);
        assert!(inc || dec, "{first:?}");

        let mut w = [[0.0; 5]; 5];
        for i in 0..4 {
            w[i][i + 1] = 1.0;
            w[i + 1][i] = 1.0;
        }
        let oracle = fiedler_oracle(&w);
        let sign = if oracle[0] * first[0] > 0.0 { 1.0 } else { -1.0 };
        for (a, b) in first.iter().zip(&oracle) {
            assert!((a - sign * b).abs() < 1e-6, "{first:?} vs {oracle:?}");
        }
    }

    #[test]
    fn complete_graph_invariants() {
        let p = 6;
        let d = DistanceMatrix::from_fn(labels(p), |_, _| 1.0).unwrap();
        let e = laplacian_eigenmaps(&d, p - 1, HeatKernel::Binary).unwrap();
        let deg = (p - 1) as f64;
        for axis in 0..2 {
            let col: Vec<f64> = e.coords().iter().map(|c| c[axis]).collect();
            assert!(col.iter().sum::<f64>().abs() < 1e-10);
            let dnorm: f64 = col.iter().map(|v| deg * v * v).sum();
            assert!((dnorm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn wide_heat_kernel_converges_to_binary() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<[f64; 2]> = (0..25).map(|_| [rng.random(), rng.random()]).collect();
        let d = DistanceMatrix::from_fn(labels(25), |j, k| {
            ((pts[j][0] - pts[k][0]).powi(2) + (pts[j][1] - pts[k][1]).powi(2)).sqrt()
        })
        .unwrap();
        let max = d.matrix().max();
        let wide = laplacian_eigenmaps(&d, 6, HeatKernel::Sigma(1e6 * max)).unwrap();
        let binary = laplacian_eigenmaps(&d, 6, HeatKernel::Binary).unwrap();
        let tau = kendall_tau_distances(
            &embedding_distances(&wide).unwrap(),
            &embedding_distances(&binary).unwrap(),
        )
        .unwrap();
        assert!(tau >= 0.99, "tau = {tau}");
    }

    #[test]
    fn disconnected_graph_is_an_error() {
        let xs: [f64; 6] = [0.0, 0.1, 0.2, 5.0, 5.1, 5.2];
        let d = DistanceMatrix::from_fn(labels(6), |j, k| (xs[j] - xs[k]).abs()).unwrap();
        assert!(matches!(
            laplacian_eigenmaps(&d, 2, HeatKernel::Median),
            Err(Error::Disconnected { .. })
        ));
    }
}
