//! Small dense linear-algebra helpers shared by the spectral methods.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};

use crate::{Error, Result};

/// Eigenpairs of a symmetric matrix sorted by ascending eigenvalue.
pub struct SortedEigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: DMatrix<f64>,
}

pub fn symmetric_eigen_ascending(m: DMatrix<f64>) -> Result<SortedEigen> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in eigenproblem".into()));
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let n = eig.eigenvectors.nrows();
    let mut vectors = DMatrix::zeros(n, order.len());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SortedEigen {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors,
    })
}

/// Orthonormal basis (as columns, `n × (n-1)`) of the complement of the unit
/// vector `u`, taken from the Householder reflector that maps `u` onto `±e₁`.
pub fn complement_basis(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    let norm = u.norm();
    let u = u / norm;
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u.clone();
    w[0] += sign;
    let ww = w.dot(&w);
    let mut h = DMatrix::identity(n, n);
    if ww > 0.0 {
        h -= (&w * w.transpose()) * (2.0 / ww);
    }
    h.columns(1, n - 1).into_owned()
}

/// Flips the sign of each column so that its largest-magnitude entry is
/// positive (first index wins ties).
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Result of aligning one planar configuration onto another.
#[derive(Debug, Clone)]
pub struct Procrustes {
    /// The moving configuration after centering, rotation/reflection and
    /// translation onto the reference centroid.
    pub aligned: Vec<[f64; 2]>,
    /// Frobenius norm of `aligned - reference`.
    pub residual: f64,
}

/// Orthogonal Procrustes alignment (translation plus rotation/reflection, no
/// scaling) of `moving` onto `reference`.
pub fn procrustes(moving: &[[f64; 2]], reference: &[[f64; 2]]) -> Result<Procrustes> {
    if moving.len() != reference.len() || moving.is_empty() {
        return Err(Error::Shape(format!(
            "procrustes needs equal non-empty configurations, got {} and {}",
            moving.len(),
            reference.len()
        )));
    }
    let centroid = |pts: &[[f64; 2]]| {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p[0]).sum();
        let sy: f64 = pts.iter().map(|p| p[1]).sum();
        [sx / n, sy / n]
    };
    let cm = centroid(moving);
    let cr = centroid(reference);
    let mut cross = Matrix2::<f64>::zeros();
    for (a, b) in moving.iter().zip(reference) {
        let a = [a[0] - cm[0], a[1] - cm[1]];
        let b = [b[0] - cr[0], b[1] - cr[1]];
        for i in 0..2 {
            for j in 0..2 {
                cross[(i, j)] += a[i] * b[j];
            }
        }
    }
    let svd = cross.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("procrustes svd failed".into())),
    };
    let rot: Matrix2<f64> = u * vt;
    let mut residual = 0.0;
    let aligned = moving
        .iter()
        .zip(reference)
        .map(|(a, b)| {
            let x = a[0] - cm[0];
            let y = a[1] - cm[1];
            let out = [
                x * rot[(0, 0)] + y * rot[(1, 0)] + cr[0],
                x * rot[(0, 1)] + y * rot[(1, 1)] + cr[1],
            ];
            residual += (out[0] - b[0]).powi(2) + (out[1] - b[1]).powi(2);
            out
        })
        .collect();
    Ok(Procrustes {
        aligned,
        residual: residual.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_basis_is_orthonormal_and_orthogonal_to_u() {
        let u = DVector::from_vec(vec![1.0, 2.0, -0.5, 3.0]);
        let q = complement_basis(&u);
        let qtq = q.transpose() * &q;
        assert!((qtq - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-12);
        assert!((q.transpose() * &u).abs().max() < 1e-12);
    }

    #[test]
    fn procrustes_recovers_rotation_and_reflection() {
        let base = [[0.0, 0.0], [1.0, 0.0], [0.3, 0.8], [-0.4, 0.2]];
        let (s, c) = 0.7f64.sin_cos();
        let moved: Vec<[f64; 2]> = base
            .iter()
            .map(|p| [c * p[0] - s * p[1] + 2.0, -(s * p[0] + c * p[1]) - 1.0])
            .collect();
        let fit = procrustes(&moved, &base).unwrap();
        assert!(fit.residual < 1e-12, "{}", fit.residual);
    }

    #[test]
    fn eigen_sorted_ascending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 5.0]);
        let e = symmetric_eigen_ascending(m).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 5.0]);
        assert!((e.vectors[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }
}
