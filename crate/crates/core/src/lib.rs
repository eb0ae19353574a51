//! Post-capture refocusing for camera arrays.
//!
//! A disparity map is estimated for the reference view, its out-of-focus region is
//! rendered with a depth-dependent disk filter, and the final image is
//! reconstructed at higher resolution from all views with the rendered bokeh
//! acting as a regularizer. Focus disparity and bokeh intensity can be changed
//! after capture.

pub mod bokeh;
pub mod disparity;
pub mod error;
pub mod image;
pub mod lf_data;
pub mod optics;
pub mod pipeline;
pub mod sr;

pub use error::{Error, Result};
pub use image::ImageGrid;
pub use lf_data::{DisparityMap, LightField};
