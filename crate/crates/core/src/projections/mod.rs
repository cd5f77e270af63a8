//! Planar embeddings of features computed from dissimilarities.

mod bmds;
mod laplacian;
mod lle;
mod mds;
mod smacof;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bmds::{bmds_sample, BmdsModel, BmdsOptions, BmdsResult, SamplerState, TraceRecord};
pub use laplacian::{laplacian_eigenmaps, HeatKernel};
pub use lle::{lle, lle_points, LLE_RIDGE};
pub use mds::{classical_mds, isomap};
pub use smacof::{raw_stress, smacof_refine, SmacofOptions, SmacofResult};

use crate::{Error, Result};

/// Feature coordinates in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    labels: Vec<String>,
    coords: Vec<[f64; 2]>,
    method_tag: String,
}

impl Embedding {
    pub fn new(labels: Vec<String>, coords: Vec<[f64; 2]>, method_tag: impl Into<String>) -> Result<Self> {
        if labels.len() != coords.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} points",
                labels.len(),
                coords.len()
            )));
        }
        if coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("embedding has non-finite coordinates".into()));
        }
        Ok(Self {
            labels,
            coords,
            method_tag: method_tag.into(),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn method_tag(&self) -> &str {
        &self.method_tag
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.method_tag = tag.into();
        self
    }

    pub fn in_unit_square(&self) -> bool {
        self.coords.iter().flatten().all(|v| (0.0..=1.0).contains(v))
    }

    /// CSV rows `feature_label,x,y,method_tag`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["feature_label", "x", "y", "method_tag"])?;
        for (label, c) in self.labels.iter().zip(&self.coords) {
            wtr.write_record([
                label.as_str(),
                &format!("{:?}", c[0]),
                &format!("{:?}", c[1]),
                &self.method_tag,
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut labels = Vec::new();
        let mut coords = Vec::new();
        let mut tag = String::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(Error::Malformed("embedding rows need 4 fields".into()));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Malformed(format!("bad coordinate `{s}`")))
            };
            labels.push(rec[0].to_string());
            coords.push([parse(&rec[1])?, parse(&rec[2])?]);
            tag = rec[3].to_string();
        }
        Self::new(labels, coords, tag)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Per-axis min-max map onto `[0, 1]`; an axis with zero range maps to 0.5.
pub fn normalize_to_unit_square(e: &Embedding) -> Embedding {
    let mut coords = e.coords.clone();
    for axis in 0..2 {
        let lo = coords.iter().map(|c| c[axis]).fold(f64::INFINITY, f64::min);
        let hi = coords.iter().map(|c| c[axis]).fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        for c in coords.iter_mut() {
            c[axis] = if range > 0.0 {
                ((c[axis] - lo) / range).clamp(0.0, 1.0)
            } else {
                0.5
            };
        }
    }
    Embedding {
        labels: e.labels.clone(),
        coords,
        method_tag: e.method_tag.clone(),
    }
}

/// Uniformly scales (preserving aspect ratio) and translates the embedding so
/// that it fits in `[margin, 1 - margin]²`.
pub fn fit_into_unit_square(e: &Embedding, margin: f64) -> Embedding {
    let lo = [0, 1].map(|a| e.coords.iter().map(|c| c[a]).fold(f64::INFINITY, f64::min));
    let hi = [0, 1].map(|a| e.coords.iter().map(|c| c[a]).fold(f64::NEG_INFINITY, f64::max));
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let span = 1.0 - 2.0 * margin;
    let s = if extent > 0.0 { span / extent } else { 1.0 };
    let coords = e
        .coords
        .iter()
        .map(|c| {
            [0, 1].map(|a| {
                let centered = (c[a] - 0.5 * (lo[a] + hi[a])) * s;
                (0.5 + centered).clamp(0.0, 1.0)
            })
        })
        .collect();
    Embedding {
        labels: e.labels.clone(),
        coords,
        method_tag: e.method_tag.clone(),
    }
}
