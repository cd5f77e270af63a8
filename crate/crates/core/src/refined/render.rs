use rayon::prelude::*;

use super::raster::PixelAssignment;
use crate::dataio::FeatureTable;
use crate::{Error, Result};

/// One `g × g` image per sample, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedImageSet {
    assignment: PixelAssignment,
    sample_ids: Vec<String>,
    images: Vec<Vec<f64>>,
    fill: f64,
    method_tag: String,
}

impl RefinedImageSet {
    pub fn new(
        assignment: PixelAssignment,
        sample_ids: Vec<String>,
        images: Vec<Vec<f64>>,
        fill: f64,
        method_tag: impl Into<String>,
    ) -> Result<Self> {
        let g = assignment.grid_size();
        if images.len() != sample_ids.len() {
            return Err(Error::Shape(format!(
                "{} images for {} samples",
                images.len(),
                sample_ids.len()
            )));
        }
        if let Some(bad) = images.iter().position(|im| im.len() != g * g) {
            return Err(Error::Shape(format!("image {bad} is not {g}×{g}")));
        }
        if images.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite pixel".into()));
        }
        Ok(Self {
            assignment,
            sample_ids,
            images,
            fill,
            method_tag: method_tag.into(),
        })
    }

    pub fn assignment(&self) -> &PixelAssignment {
        &self.assignment
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn images(&self) -> &[Vec<f64>] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i]
    }

    pub fn grid_size(&self) -> usize {
        self.assignment.grid_size()
    }

    pub fn fill(&self) -> f64 {
        self.fill
    }

    pub fn method_tag(&self) -> &str {
        &self.method_tag
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.method_tag = tag.into();
        self
    }

    pub fn pixel(&self, i: usize, row: usize, col: usize) -> f64 {
        self.images[i][row * self.grid_size() + col]
    }

    /// Intensities of sample `i` at the assigned cells, in assignment label order.
    pub fn read_back(&self, i: usize) -> Vec<f64> {
        self.assignment
            .cells()
            .iter()
            .map(|&(r, c)| self.pixel(i, r, c))
            .collect()
    }

    /// Images of the given samples, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Shape(format!("sample index {bad} out of range")));
        }
        Ok(Self {
            assignment: self.assignment.clone(),
            sample_ids: rows.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            images: rows.iter().map(|&i| self.images[i].clone()).collect(),
            fill: self.fill,
            method_tag: self.method_tag.clone(),
        })
    }
}

/// Paints each sample's feature values into the cells of the assignment;
/// unassigned cells take `fill`. Features are matched by name. Values
/// outside `[0, 1]` (test samples normalized with training parameters) are
/// clamped.
pub fn render_images(a: &PixelAssignment, t: &FeatureTable, fill: f64, method_tag: &str) -> Result<RefinedImageSet> {
    let names = t.feature_names();
    if names.len() != a.len() {
        return Err(Error::LabelMismatch(format!(
            "table has {} features, assignment has {}",
            names.len(),
            a.len()
        )));
    }
    let column: Vec<usize> = a
        .labels()
        .iter()
        .map(|l| {
            names
                .iter()
                .position(|n| n == l)
                .ok_or_else(|| Error::LabelMismatch(format!("feature `{l}` missing from table")))
        })
        .collect::<Result<_>>()?;
    if t.has_missing() {
        return Err(Error::Malformed("cannot render a table with missing values".into()));
    }
    let g = a.grid_size();
    let values = t.values();
    let mut clamped = 0usize;
    for v in values.iter() {
        if !(0.0..=1.0).contains(v) {
            clamped += 1;
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} feature values outside [0, 1] clamped while rendering");
    }
    let images: Vec<Vec<f64>> = (0..t.n_samples())
        .into_par_iter()
        .map(|i| {
            let mut im = vec![fill; g * g];
            for (j, &(r, c)) in a.cells().iter().enumerate() {
                im[r * g + c] = values[(i, column[j])].clamp(0.0, 1.0);
            }
            im
        })
        .collect();
    RefinedImageSet::new(a.clone(), t.sample_ids().to_vec(), images, fill, method_tag)
}
