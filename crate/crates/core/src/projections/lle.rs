use nalgebra::{DMatrix, DVector};

use super::Embedding;
use crate::dataio::FeatureTable;
use crate::linalg::{complement_basis, fix_column_signs, symmetric_eigen_ascending};
use crate::{Error, Result};

/// Relative ridge added to each local Gram matrix (times its trace).
pub const LLE_RIDGE: f64 = 1e-3;

/// Locally linear embedding of the feature columns of `t`.
pub fn lle(t: &FeatureTable, k: usize) -> Result<Embedding> {
    if t.has_missing() {
        return Err(Error::Malformed("table has missing values".into()));
    }
    lle_points(&t.values().transpose(), t.feature_names().to_vec(), k)
}

/// Locally linear embedding of the rows of `points`.
///
/// Exact duplicate points are collapsed before solving and receive the
/// coordinates of their representative. The two output axes are the
/// eigenvectors of `(I - W)ᵀ(I - W)` with the smallest eigenvalues in the
/// complement of the constant vector, then centred.
pub fn lle_points(points: &DMatrix<f64>, labels: Vec<String>, k: usize) -> Result<Embedding> {
    let p = points.nrows();
    if labels.len() != p {
        return Err(Error::Shape(format!("{} labels for {p} points", labels.len())));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("LLE needs k ≥ 2, got {k}")));
    }
    if k >= p {
        return Err(Error::InvalidArgument(format!("LLE needs k < p, got k = {k}, p = {p}")));
    }

    let mut reps: Vec<usize> = Vec::new();
    let mut owner = vec![0usize; p];
    for i in 0..p {
        match reps.iter().position(|&r| points.row(r) == points.row(i)) {
            Some(u) => owner[i] = u,
            None => {
                owner[i] = reps.len();
                reps.push(i);
            }
        }
    }
    let pu = reps.len();
    if pu < 3 {
        return Err(Error::Shape(format!("LLE needs at least 3 distinct points, got {pu}")));
    }
    let k_eff = k.min(pu - 1);
    if k_eff < k {
        log::warn!("LLE: only {pu} distinct points, using k = {k_eff}");
    }
    let x = points.select_rows(&reps);

    let mut w = DMatrix::zeros(pu, pu);
    for i in 0..pu {
        let xi = x.row(i);
        let mut others: Vec<(usize, f64)> = (0..pu)
            .filter(|&o| o != i)
            .map(|o| (o, (x.row(o) - xi).norm_squared()))
            .collect();
        others.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let nbrs: Vec<usize> = others[..k_eff].iter().map(|&(o, _)| o).collect();
        let z = DMatrix::from_fn(k_eff, x.ncols(), |a, c| x[(nbrs[a], c)] - xi[c]);
        let mut gram = &z * z.transpose();
        let trace = gram.trace();
        let reg = if trace > 0.0 { LLE_RIDGE * trace } else { LLE_RIDGE };
        for a in 0..k_eff {
            gram[(a, a)] += reg;
        }
        let ones = DVector::from_element(k_eff, 1.0);
        let sol = gram
            .cholesky()
            .map(|c| c.solve(&ones))
            .ok_or_else(|| Error::Numerical("LLE local Gram matrix is not positive definite".into()))?;
        let total = sol.sum();
        for (a, &n) in nbrs.iter().enumerate() {
            w[(i, n)] = sol[a] / total;
        }
    }

    let iw = DMatrix::identity(pu, pu) - w;
    let m = iw.transpose() * &iw;
    let q = complement_basis(&DVector::from_element(pu, 1.0));
    let reduced = q.transpose() * &m * &q;
    let eig = symmetric_eigen_ascending(reduced)?;
    let mut y = &q * eig.vectors.columns(0, 2) * (pu as f64).sqrt();
    fix_column_signs(&mut y);

    let mut coords: Vec<[f64; 2]> = owner.iter().map(|&u| [y[(u, 0)], y[(u, 1)]]).collect();
    for axis in 0..2 {
        let mean = coords.iter().map(|c| c[axis]).sum::<f64>() / p as f64;
        for c in coords.iter_mut() {
            c[axis] -= mean;
        }
    }
    Embedding::new(labels, coords, "lle")
}
