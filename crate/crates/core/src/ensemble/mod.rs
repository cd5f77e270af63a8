//! Combining per-projection predictors: linear stacking, multi-channel image
//! tensors, and a ridge regressor on pixel intensities.

mod predictions;
mod regressor;
mod stacking;
mod tensor;

pub use predictions::PredictionSet;
pub use regressor::{fit_reference_regressor, predict_reference, PixelFeatureMap, PixelSource, RegressorModel};
pub use stacking::{fit_stacking, predict_stacked, rmse, StackingModel};
pub use tensor::{stack_images, ImageTensorSet};
