//! Tabular feature vectors rendered as compact 2D images.
//!
//! The crate covers the whole path from a feature table to images and model
//! comparisons:
//!
//! * [`dataio`] loads, cleans, normalizes and splits feature tables.
//! * [`distances`] builds feature dissimilarity matrices and fuses several of
//!   them with precision weights (weighted arithmetic or geometric means).
//! * [`projections`] embeds features in the plane (classical MDS, Isomap, LLE,
//!   Laplacian eigenmaps, SMACOF refinement and a Bayesian MDS sampler).
//! * [`refined`] snaps an embedding onto a pixel grid, improves it with swap
//!   hill climbing and renders one image per sample.
//! * [`ensemble`] stacks per-projection predictions and images and provides a
//!   small closed-form reference regressor.
//! * [`evaluation`] scores predictions and runs the bootstrap, gap statistic
//!   and robustness comparisons.

pub mod dataio;
pub mod distances;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod instrument;
pub mod linalg;
pub mod projections;
pub mod refined;

pub use error::{Error, Result};
