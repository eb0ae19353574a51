//! Request bodies and their validation.

use lfr_core::optics::RefocusParams;
use lfr_core::pipeline::PipelineConfig;
use lfr_core::sr::SolverParams;
use lfr_core::{DisparityMap, Error};
use serde::{Deserialize, Serialize};

/// How far outside the dataset's disparity range a focus disparity may lie, in pixels.
pub const DF_SLACK: f64 = 1.0;

const MAX_SCALE: usize = 8;

/// Rejected request field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<Error> for FieldError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParam { field, reason } => FieldError::new(field, reason),
            other => FieldError::new("", other.to_string()),
        }
    }
}

fn default_a() -> f64 {
    RefocusParams::DEFAULT_DECAY
}

fn default_b() -> f64 {
    RefocusParams::DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreviewRequest {
    pub df: f64,
    pub k: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderRequest {
    pub df: f64,
    pub k: f64,
    #[serde(default = "RenderRequest::default_scale")]
    pub scale: usize,
    #[serde(default = "RenderRequest::default_noi")]
    pub noi: usize,
    #[serde(default = "RenderRequest::default_lambda_b")]
    pub lambda_b: f64,
    #[serde(default = "RenderRequest::default_lambda_btv")]
    pub lambda_btv: f64,
    #[serde(default = "RenderRequest::default_step")]
    pub step: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
}

impl RenderRequest {
    fn default_scale() -> usize {
        2
    }
    fn default_noi() -> usize {
        SolverParams::default().noi
    }
    fn default_lambda_b() -> f64 {
        SolverParams::default().lambda_b
    }
    fn default_lambda_btv() -> f64 {
        SolverParams::default().lambda_btv
    }
    fn default_step() -> f64 {
        SolverParams::default().step_size
    }
}

fn check_df(df: f64, disparity: &DisparityMap) -> Result<(), FieldError> {
    let (lo, hi) = (disparity.d_min() - DF_SLACK, disparity.d_max() + DF_SLACK);
    if !(lo..=hi).contains(&df) {
        return Err(FieldError::new("df", format!("must lie in [{lo}, {hi}]")));
    }
    Ok(())
}

fn refocus_params(df: f64, k: f64, a: f64, b: f64) -> Result<RefocusParams, FieldError> {
    let params = RefocusParams {
        focus_disparity: df,
        bokeh_intensity: k,
        sigmoid_decay: a,
        sigmoid_threshold: b,
    };
    params.validate()?;
    Ok(params)
}

impl PreviewRequest {
    pub fn refocus_params(&self, disparity: &DisparityMap) -> Result<RefocusParams, FieldError> {
        let params = refocus_params(self.df, self.k, self.a, self.b)?;
        check_df(self.df, disparity)?;
        Ok(params)
    }
}

impl RenderRequest {
    pub fn pipeline_config(&self, disparity: &DisparityMap) -> Result<PipelineConfig, FieldError> {
        let refocus = refocus_params(self.df, self.k, self.a, self.b)?;
        check_df(self.df, disparity)?;
        if !(1..=MAX_SCALE).contains(&self.scale) {
            return Err(FieldError::new("scale", format!("must lie in [1, {MAX_SCALE}]")));
        }
        let mut cfg = PipelineConfig::new(refocus, self.scale);
        cfg.solver = SolverParams {
            lambda_b: self.lambda_b,
            lambda_btv: self.lambda_btv,
            step_size: self.step,
            noi: self.noi,
            ..SolverParams::default()
        };
        cfg.solver.validate()?;
        Ok(cfg)
    }
}
