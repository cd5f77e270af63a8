use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::distances::DistanceMatrix;
use crate::projections::Embedding;
use crate::{Error, Result};

/// Injective placement of features on a `g × g` pixel grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "AssignmentFile", try_from = "AssignmentFile")]
pub struct PixelAssignment {
    grid_size: usize,
    labels: Vec<String>,
    cells: Vec<(usize, usize)>,
}

/// On-disk form: `{"grid_size": g, "cells": {"label": [row, col], ...}}`.
#[derive(Serialize, Deserialize)]
struct AssignmentFile {
    grid_size: usize,
    cells: IndexMap<String, [usize; 2]>,
}

impl From<PixelAssignment> for AssignmentFile {
    fn from(a: PixelAssignment) -> Self {
        Self {
            grid_size: a.grid_size,
            cells: a
                .labels
                .into_iter()
                .zip(a.cells.into_iter().map(|(r, c)| [r, c]))
                .collect(),
        }
    }
}

impl TryFrom<AssignmentFile> for PixelAssignment {
    type Error = Error;

    fn try_from(f: AssignmentFile) -> Result<Self> {
        let (labels, cells) = f.cells.into_iter().map(|(l, [r, c])| (l, (r, c))).unzip();
        PixelAssignment::new(f.grid_size, labels, cells)
    }
}

impl PixelAssignment {
    pub fn new(grid_size: usize, labels: Vec<String>, cells: Vec<(usize, usize)>) -> Result<Self> {
        let p = labels.len();
        if cells.len() != p {
            return Err(Error::Shape(format!("{} cells for {p} features", cells.len())));
        }
        if grid_size * grid_size < p {
            return Err(Error::Shape(format!(
                "{p} features do not fit a {grid_size}×{grid_size} grid"
            )));
        }
        let mut seen = vec![false; grid_size * grid_size];
        for (label, &(r, c)) in labels.iter().zip(&cells) {
            if r >= grid_size || c >= grid_size {
                return Err(Error::Shape(format!("cell ({r}, {c}) of `{label}` is off the grid")));
            }
            let idx = r * grid_size + c;
            if seen[idx] {
                return Err(Error::Malformed(format!("cell ({r}, {c}) assigned twice")));
            }
            seen[idx] = true;
        }
        let mut sorted: Vec<&String> = labels.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateFeature(w[0].clone()));
        }
        Ok(Self {
            grid_size,
            labels,
            cells,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cell_of(&self, label: &str) -> Option<(usize, usize)> {
        self.labels.iter().position(|l| l == label).map(|j| self.cells[j])
    }

    pub(crate) fn set_cells(&mut self, cells: Vec<(usize, usize)>) {
        debug_assert_eq!(cells.len(), self.cells.len());
        self.cells = cells;
    }

    /// Euclidean distance between the centres of the cells of features `j`
    /// and `k`, in units of the image side (cell pitch `1/g`).
    pub fn cell_distance(&self, j: usize, k: usize) -> f64 {
        cell_distance(self.cells[j], self.cells[k], self.grid_size)
    }

    /// All pairwise cell distances as a distance matrix over the labels.
    pub fn cell_distances(&self) -> Result<DistanceMatrix> {
        DistanceMatrix::from_fn(self.labels.clone(), |j, k| self.cell_distance(j, k))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(format!("assignment JSON: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

pub(crate) fn cell_distance(a: (usize, usize), b: (usize, usize), g: usize) -> f64 {
    let dr = a.0 as f64 - b.0 as f64;
    let dc = a.1 as f64 - b.1 as f64;
    (dr * dr + dc * dc).sqrt() / g as f64
}

/// `⌈√p⌉`, the smallest square grid holding `p` features.
pub fn auto_grid_size(p: usize) -> usize {
    let mut g = (p as f64).sqrt().ceil() as usize;
    while g * g < p {
        g += 1;
    }
    while g > 0 && (g - 1) * (g - 1) >= p {
        g -= 1;
    }
    g
}

/// Snaps a unit-square embedding onto the grid.
///
/// Features are placed farthest-from-centre first (ties by feature index);
/// each takes the free cell whose centre is nearest its scaled position
/// (`x` selects the column, `y` the row), ties going to the first cell in
/// row-major order. `grid_size = None` uses [`auto_grid_size`].
pub fn rasterize(e: &Embedding, grid_size: Option<usize>) -> Result<PixelAssignment> {
    let p = e.len();
    if p == 0 {
        return Err(Error::Shape("empty embedding".into()));
    }
    if !e.in_unit_square() {
        return Err(Error::InvalidArgument(
            "rasterize expects coordinates in the unit square".into(),
        ));
    }
    let g = grid_size.unwrap_or_else(|| auto_grid_size(p));
    if g * g < p {
        return Err(Error::Shape(format!("{p} features do not fit a {g}×{g} grid")));
    }
    let coords = e.coords();
    let centre_dist = |c: [f64; 2]| (c[0] - 0.5).powi(2) + (c[1] - 0.5).powi(2);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        centre_dist(coords[b])
            .total_cmp(&centre_dist(coords[a]))
            .then(a.cmp(&b))
    });

    let gf = g as f64;
    let mut free = vec![true; g * g];
    let mut cells = vec![(0, 0); p];
    for j in order {
        let x = coords[j][0] * gf;
        let y = coords[j][1] * gf;
        let mut best: Option<(usize, f64)> = None;
        for (idx, _) in free.iter().enumerate().filter(|(_, f)| **f) {
            let r = (idx / g) as f64 + 0.5;
            let c = (idx % g) as f64 + 0.5;
            let d = (r - y).powi(2) + (c - x).powi(2);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((idx, d));
            }
        }
        let (idx, _) = best.expect("grid has a free cell");
        free[idx] = false;
        cells[j] = (idx / g, idx % g);
    }
    PixelAssignment::new(g, e.labels().to_vec(), cells)
}
