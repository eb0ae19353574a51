//! Multi-frame super-resolution of the in-focus region.
//!
//! The refocused image minimizes a masked multi-view data term, a pull towards
//! the rendered bokeh image weighted by the bokeh map, and a bilateral total
//! variation prior, by projected gradient descent.

pub mod objective;
pub mod operators;
mod solver;

pub use objective::{btv_coefficients, Problem};
pub use operators::Degradation;
pub use solver::{super_resolve, SrOutput};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub lambda_b: f64,
    pub lambda_btv: f64,
    pub step_size: f64,
    pub noi: usize,
    /// Largest shift `P` of the BTV neighbourhood.
    pub btv_window: usize,
    /// Geometric decay `α` of BTV terms with shift distance.
    pub btv_alpha: f64,
    /// Smoothing of `|t|` as `sqrt(t² + ε²)`.
    pub sign_epsilon: f64,
    pub backtracking: bool,
    /// Samples are multiplied by this before solving, so the objective is measured in
    /// 8-bit intensity units by default; the regularization weights are tuned for that range.
    pub intensity_scale: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda_b: 5.0,
            lambda_btv: 0.2,
            step_size: 0.1,
            noi: 10,
            btv_window: 2,
            btv_alpha: 0.6,
            sign_epsilon: 1e-3,
            backtracking: false,
            intensity_scale: 255.0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_b >= 0.0) || !self.lambda_b.is_finite() {
            return Err(Error::param("lambda_b", "must be finite and >= 0"));
        }
        if !(self.lambda_btv >= 0.0) || !self.lambda_btv.is_finite() {
            return Err(Error::param("lambda_btv", "must be finite and >= 0"));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::param("step", "must be finite and > 0"));
        }
        if self.noi == 0 {
            return Err(Error::param("noi", "must be >= 1"));
        }
        if self.btv_window == 0 {
            return Err(Error::param("btv_window", "must be >= 1"));
        }
        if !(self.btv_alpha > 0.0 && self.btv_alpha < 1.0) {
            return Err(Error::param("btv_alpha", "must lie in (0, 1)"));
        }
        if !(self.sign_epsilon > 0.0) {
            return Err(Error::param("sign_epsilon", "must be > 0"));
        }
        if !(self.intensity_scale > 0.0) || !self.intensity_scale.is_finite() {
            return Err(Error::param("intensity_scale", "must be finite and > 0"));
        }
        Ok(())
    }
}
