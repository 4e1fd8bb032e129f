//! Raster-based site suitability engine.
//!
//! The crate evaluates candidate facility sites over a stack of criterion
//! rasters. Raw layers (land cover, elevation, transport masks, zones) are
//! turned into scoreable criteria, reclassified to a common 0..10 scale, and
//! combined into a weighted-sum suitability map. Points sampled from that map
//! train a family of binary classifiers; the best model's feature importances
//! replace the criterion weights, the overlay is rerun, and candidate sites
//! are ranked by the retrained model's suitability likelihood.
//!
//! Modules follow the processing chain:
//!
//! - [`raster`]: grid type, ESRI ASCII I/O, alignment, reclassification
//! - [`terrain`]: DEM slope and exact Euclidean distance rasters
//! - [`overlay`]: weighted sum, labeling rules, candidate extraction
//! - [`dataset`]: point sampling, train/test split, synthetic landscapes
//! - [`learners`]: decision tree, random forest, logistic regression
//! - [`pipeline`]: the iterative reweighting loop and candidate ranking
//! - [`config`], [`render`]: JSON configuration and PNG map rendering

pub mod config;
pub mod dataset;
mod error;
mod fs_util;
pub mod learners;
pub mod overlay;
pub mod pipeline;
pub mod raster;
pub mod render;
pub mod rng;
pub mod terrain;

pub use error::{Error, Result};
pub use raster::{RasterGrid, ReclassTable};
