//! Pixel assignment of features, hill climbing, and per-sample images.

mod climb;
mod io;
mod pipeline;
mod raster;
mod render;

pub use climb::{
    assignment_cost, hill_climb, HillClimbOptions, HillClimbResult, Neighborhood, ADJACENT_RADIUS, ALL_PAIRS_LIMIT,
};
pub use io::{load_images, save_images, ImageFormat, ASSIGNMENT_FILE, CSV_FILE, METADATA_FILE};
pub use pipeline::{
    assignment_tau, irefined_pipeline, refined_pipeline, BmdsLayout, DistanceSource, Layout, PipelineOptions,
    PipelineReport, ProjectionSpec, RefinedOutput,
};
pub use raster::{auto_grid_size, rasterize, PixelAssignment};
pub use render::{render_images, RefinedImageSet};
