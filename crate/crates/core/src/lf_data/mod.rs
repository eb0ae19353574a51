//! Light-field containers, dataset/disparity file formats and the synthetic scene generator.

mod io;
mod synth;

pub use io::{
    delinearize, encode_png, linearize, load_disparity, load_light_field, load_light_field_with, load_png, read_meta, read_pfm, save_png,
    save_png_16, write_disparity, write_light_field, write_pfm, LoadOptions, Meta,
};
pub use synth::{synthesize_light_field, Layer, Region, SyntheticScene, SyntheticSceneSpec, Texture};

use crate::error::{Error, Result};
use crate::image::ImageGrid;

/// Index of the centre view for a `rows × cols` grid (floor on even sizes).
pub fn reference_index(rows: usize, cols: usize) -> usize {
    (rows / 2) * cols + cols / 2
}

/// Regular grid offsets in baseline units, row-major, reference at (0, 0).
/// Each entry is `(u, v)`: `u` grows with the column, `v` with the row.
pub fn grid_offsets(rows: usize, cols: usize, step: f64) -> Vec<(f64, f64)> {
    let (r0, c0) = ((rows / 2) as f64, (cols / 2) as f64);
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out.push(((c as f64 - c0) * step, (r as f64 - r0) * step));
        }
    }
    out
}

/// The N views of a camera array together with their positions.
#[derive(Clone, Debug)]
pub struct LightField {
    views: Vec<ImageGrid>,
    offsets: Vec<(f64, f64)>,
    rows: usize,
    cols: usize,
    reference_index: usize,
}

impl LightField {
    pub fn new(
        views: Vec<ImageGrid>,
        offsets: Vec<(f64, f64)>,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        let n = rows * cols;
        if n == 0 {
            return Err(Error::param("rows/cols", "grid must contain at least one view"));
        }
        if views.len() != n || offsets.len() != n {
            return Err(Error::contract(format!(
                "{}x{} grid needs {n} views and offsets, got {} and {}",
                rows,
                cols,
                views.len(),
                offsets.len()
            )));
        }
        if views.iter().any(|v| !v.same_shape(&views[0])) {
            return Err(Error::contract("all views must share dimensions"));
        }
        let reference_index = reference_index(rows, cols);
        if offsets[reference_index] != (0.0, 0.0) {
            return Err(Error::contract("reference view offset must be (0, 0)"));
        }
        for i in 0..n {
            for j in i + 1..n {
                if offsets[i] == offsets[j] {
                    return Err(Error::contract(format!("views {i} and {j} share an offset")));
                }
            }
        }
        Ok(Self {
            views,
            offsets,
            rows,
            cols,
            reference_index,
        })
    }

    /// Regular grid with `offset_step` spacing.
    pub fn from_grid(views: Vec<ImageGrid>, rows: usize, cols: usize, offset_step: f64) -> Result<Self> {
        if rows * cols > 1 && !(offset_step > 0.0) {
            return Err(Error::param("offset_step", "must be > 0"));
        }
        Self::new(views, grid_offsets(rows, cols, offset_step), rows, cols)
    }

    pub fn views(&self) -> &[ImageGrid] {
        &self.views
    }

    pub fn view(&self, k: usize) -> &ImageGrid {
        &self.views[k]
    }

    pub fn offsets(&self) -> &[(f64, f64)] {
        &self.offsets
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    pub fn reference(&self) -> &ImageGrid {
        &self.views[self.reference_index]
    }

    pub fn height(&self) -> usize {
        self.views[0].height()
    }

    pub fn width(&self) -> usize {
        self.views[0].width()
    }

    pub fn channels(&self) -> usize {
        self.views[0].channels()
    }
}

/// Per-pixel disparity of the reference view, in pixels per unit baseline offset.
#[derive(Clone, Debug, PartialEq)]
pub struct DisparityMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
    d_min: f64,
    d_max: f64,
}

impl DisparityMap {
    /// Builds a map whose range is the extent of `values`.
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::contract(format!(
                "{} disparity values do not match {height}x{width}",
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::contract("disparity map is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("disparity values must be finite"));
        }
        let d_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let d_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            height,
            width,
            values,
            d_min,
            d_max,
        })
    }

    /// Builds a map with an explicit range that must enclose every value.
    pub fn with_range(height: usize, width: usize, values: Vec<f64>, d_min: f64, d_max: f64) -> Result<Self> {
        let map = Self::new(height, width, values)?;
        if !(d_min <= map.d_min && map.d_max <= d_max) {
            return Err(Error::contract(format!(
                "range [{d_min}, {d_max}] does not enclose values in [{}, {}]",
                map.d_min, map.d_max
            )));
        }
        Ok(Self { d_min, d_max, ..map })
    }

    pub fn constant(height: usize, width: usize, d: f64) -> Self {
        Self {
            height,
            width,
            values: vec![d; height * width],
            d_min: d,
            d_max: d,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Same map with each value passed through `f`; the range is recomputed.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(self.height, self.width, self.values.iter().map(|&v| f(v)).collect())
    }
}
