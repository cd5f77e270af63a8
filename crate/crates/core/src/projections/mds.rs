use nalgebra::DMatrix;

use super::Embedding;
use crate::distances::{geodesic_distances, DistanceMatrix};
use crate::linalg::{fix_column_signs, symmetric_eigen_ascending};
use crate::{Error, Result};

/// Classical (Torgerson) MDS onto two axes.
///
/// The squared distances are double-centred, `B = -½ J D² J`, and the
/// coordinates are the two leading eigenvectors scaled by the square roots of
/// their eigenvalues. Each axis is flipped so that its largest-magnitude
/// coordinate is positive. An axis without a positive eigenvalue is zero.
pub fn classical_mds(d: &DistanceMatrix) -> Result<Embedding> {
    let p = d.len();
    if p < 3 {
        return Err(Error::Shape(format!("classical MDS needs p ≥ 3, got {p}")));
    }
    let sq = d.matrix().map(|v| v * v);
    let row_means: Vec<f64> = (0..p).map(|j| sq.row(j).sum() / p as f64).collect();
    let grand = row_means.iter().sum::<f64>() / p as f64;
    let b = DMatrix::from_fn(p, p, |j, k| -0.5 * (sq[(j, k)] - row_means[j] - row_means[k] + grand));
    let eig = symmetric_eigen_ascending(b)?;
    let top = eig.values[p - 1].abs().max(f64::MIN_POSITIVE);
    let mut coords = DMatrix::zeros(p, 2);
    let mut padded = 0;
    for axis in 0..2 {
        let idx = p - 1 - axis;
        let lambda = eig.values[idx];
        if lambda > 1e-12 * top {
            coords.set_column(axis, &(eig.vectors.column(idx) * lambda.sqrt()));
        } else {
            padded += 1;
        }
    }
    if padded > 0 {
        log::warn!("classical MDS: {padded} axis(es) without a positive eigenvalue padded with zeros");
    }
    fix_column_signs(&mut coords);
    Embedding::new(
        d.labels().to_vec(),
        (0..p).map(|j| [coords[(j, 0)], coords[(j, 1)]]).collect(),
        "mds",
    )
}

/// Classical MDS of the k-nearest-neighbor geodesic distances.
pub fn isomap(d: &DistanceMatrix, k: usize) -> Result<Embedding> {
    let g = geodesic_distances(d, k)?;
    Ok(classical_mds(&g)?.with_tag("isomap"))
}
