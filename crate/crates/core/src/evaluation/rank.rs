use crate::distances::DistanceMatrix;
use crate::{Error, Result};

/// Σ t(t−1)/2 over runs of equal values in an already sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for v in sorted {
        if prev.as_ref() == Some(&v) {
            run += 1;
        } else {
            total += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(v);
    }
    total + run * (run + 1) / 2
}

/// Merge sort of `v` that returns the number of strictly inverted pairs.
fn sort_count_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = sort_count_inversions(&mut v[..mid], &mut buf[..mid]);
    count += sort_count_inversions(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}

/// Kendall's tau-b in O(n log n) (Knight's algorithm).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::Shape(format!("{n} vs {} values", y.len())));
    }
    if n < 2 {
        return Err(Error::Shape(format!("Kendall tau needs at least 2 values, got {n}")));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::Numerical("NaN in rank correlation input".into()));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let tx = tied_pairs(pairs.iter().map(|p| p.0));
    let txy = tied_pairs(pairs.iter().map(|p| (p.0, p.1)));
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = sort_count_inversions(&mut ys, &mut buf);
    let ty = tied_pairs(ys.iter().copied());

    let denom = ((n0 - tx) as f64 * (n0 - ty) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::Numerical("Kendall tau undefined for constant input".into()));
    }
    let num = n0 as i128 - tx as i128 - ty as i128 + txy as i128 - 2 * swaps as i128;
    Ok(num as f64 / denom)
}

/// Kendall's tau-b between the upper triangles of two distance matrices.
pub fn kendall_tau_distances(d1: &DistanceMatrix, d2: &DistanceMatrix) -> Result<f64> {
    if d1.labels() != d2.labels() {
        return Err(Error::LabelMismatch("distance matrices have different labels".into()));
    }
    let a = d1.upper_triangle();
    if a.len() < 2 {
        return Err(Error::Shape("need at least 2 distance pairs".into()));
    }
    kendall_tau_b(&a, &d2.upper_triangle())
}
