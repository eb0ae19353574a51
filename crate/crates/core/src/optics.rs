//! Circle-of-confusion radii and the focus/bokeh weight map.

use crate::error::{Error, Result};
use crate::lf_data::DisparityMap;

/// Thin-lens parameters. Lengths share one arbitrary unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpticsParams {
    pub focal_length: f64,
    pub f_number: f64,
    pub baseline: f64,
    /// Depth of the focused plane.
    pub focus_depth: f64,
}

impl OpticsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length > 0.0) {
            return Err(Error::param("focal_length", "must be > 0"));
        }
        if !(self.f_number > 0.0) {
            return Err(Error::param("f_number", "must be > 0"));
        }
        if !(self.baseline > 0.0) {
            return Err(Error::param("baseline", "must be > 0"));
        }
        if !(self.focus_depth > self.focal_length) {
            return Err(Error::param("focus_depth", "must exceed the focal length"));
        }
        Ok(())
    }
}

/// CoC radius of a point at `depth` for a thin lens focused at `optics.focus_depth`.
pub fn coc_radius_thin_lens(optics: &OpticsParams, depth: f64) -> Result<f64> {
    optics.validate()?;
    if !(depth > 0.0) {
        return Err(Error::Domain(format!("point depth must be > 0, got {depth}")));
    }
    let OpticsParams {
        focal_length: f,
        f_number,
        focus_depth,
        ..
    } = *optics;
    Ok((f * f * (focus_depth - depth) / (2.0 * f_number * depth * (focus_depth - f))).abs())
}

/// Bokeh intensity `K = f / (2F(B − d_f))` implied by a lens focused at disparity `d_f`.
///
/// The refocusing pipeline takes `K` directly; this is a helper for relating it to a lens.
pub fn bokeh_intensity_from_optics(optics: &OpticsParams, focus_disparity: f64) -> Result<f64> {
    optics.validate()?;
    let denom = 2.0 * optics.f_number * (optics.baseline - focus_disparity);
    if denom == 0.0 {
        return Err(Error::Singularity(format!(
            "baseline equals focus disparity ({focus_disparity})"
        )));
    }
    Ok(optics.focal_length / denom)
}

/// Focus plane and depth-of-field controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefocusParams {
    /// Disparity brought into focus, pixels per unit baseline.
    pub focus_disparity: f64,
    /// CoC radius in pixels per pixel of disparity difference.
    pub bokeh_intensity: f64,
    pub sigmoid_decay: f64,
    pub sigmoid_threshold: f64,
}

impl RefocusParams {
    pub const DEFAULT_DECAY: f64 = 15.0;
    pub const DEFAULT_THRESHOLD: f64 = 0.3;

    pub fn new(focus_disparity: f64, bokeh_intensity: f64) -> Self {
        Self {
            focus_disparity,
            bokeh_intensity,
            sigmoid_decay: Self::DEFAULT_DECAY,
            sigmoid_threshold: Self::DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.focus_disparity.is_finite() {
            return Err(Error::param("df", "must be finite"));
        }
        if !(self.bokeh_intensity >= 0.0) || !self.bokeh_intensity.is_finite() {
            return Err(Error::param("k", "must be finite and >= 0"));
        }
        if !(self.sigmoid_decay > 0.0) || !self.sigmoid_decay.is_finite() {
            return Err(Error::param("a", "must be finite and > 0"));
        }
        if !(0.0..=1.0).contains(&self.sigmoid_threshold) {
            return Err(Error::param("b", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// The same settings expressed on a grid `s` times finer (disparities scale with resolution).
    pub fn scaled(&self, s: usize) -> Self {
        Self {
            focus_disparity: self.focus_disparity * s as f64,
            ..*self
        }
    }
}

/// Per-pixel CoC radius in pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct CocRadiusMap {
    height: usize,
    width: usize,
    radii: Vec<f64>,
    r_min: f64,
    r_max: f64,
}

impl CocRadiusMap {
    pub fn new(height: usize, width: usize, radii: Vec<f64>) -> Result<Self> {
        if radii.len() != height * width || radii.is_empty() {
            return Err(Error::contract("radius buffer does not match dimensions"));
        }
        if radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::contract("radii must be finite and >= 0"));
        }
        let r_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
        let r_max = radii.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            height,
            width,
            radii,
            r_min,
            r_max,
        })
    }

    pub fn uniform(height: usize, width: usize, r: f64) -> Result<Self> {
        Self::new(height, width, vec![r; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.radii[y * self.width + x]
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }
}

/// `r_p = K·|d_p − d_f|` for every pixel.
pub fn coc_radius_map(dmap: &DisparityMap, params: &RefocusParams) -> Result<CocRadiusMap> {
    params.validate()?;
    let k = params.bokeh_intensity;
    let df = params.focus_disparity;
    let radii = dmap.values().iter().map(|&d| k * (d - df).abs()).collect();
    CocRadiusMap::new(dmap.height(), dmap.width(), radii)
}

/// Per-pixel blend weight: 0 is fully in focus, 1 fully bokeh.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    height: usize,
    width: usize,
    weights: Vec<f64>,
}

impl WeightMap {
    pub fn new(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != height * width {
            return Err(Error::contract("weight buffer does not match dimensions"));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::contract("weights must lie in [0, 1]"));
        }
        Ok(Self {
            height,
            width,
            weights,
        })
    }

    pub fn constant(height: usize, width: usize, w: f64) -> Result<Self> {
        Self::new(height, width, vec![w; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.weights[y * self.width + x]
    }
}

#[inline]
pub fn sigmoid(eta: f64, decay: f64, threshold: f64) -> f64 {
    1.0 / (1.0 + (-decay * (eta - threshold)).exp())
}

/// Normalizes radii to `[0, 1]` over the map and passes them through the sigmoid.
/// A map with a single radius normalizes to zero everywhere.
pub fn weight_map(rmap: &CocRadiusMap, params: &RefocusParams) -> Result<WeightMap> {
    params.validate()?;
    let span = rmap.r_max() - rmap.r_min();
    let weights = rmap
        .radii()
        .iter()
        .map(|&r| {
            let eta = if span > 0.0 { (r - rmap.r_min()) / span } else { 0.0 };
            sigmoid(eta, params.sigmoid_decay, params.sigmoid_threshold)
        })
        .collect();
    WeightMap::new(rmap.height(), rmap.width(), weights)
}
