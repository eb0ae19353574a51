//! End-to-end refocusing: disparity, bokeh rendering, weight map, super-resolution.

use std::fmt::Write as _;
use std::time::Instant;

use crate::bokeh::{render_bokeh, upsample_bokeh, BokehRenderConfig};
use crate::disparity::{plane_sweep_disparity, upsample_disparity, DisparityEstimationParams};
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::lf_data::{DisparityMap, LightField};
use crate::optics::{coc_radius_map, weight_map, CocRadiusMap, RefocusParams, WeightMap};
use crate::sr::{super_resolve, Degradation, Problem, SolverParams};

/// Degradation settings of the capture: decimation factor and optional blur override.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegradationSpec {
    pub sr_factor: usize,
    /// HR-pixel Gaussian sigma; `None` means `0.5·sr_factor`.
    pub blur_sigma: Option<f64>,
}

impl DegradationSpec {
    pub fn new(sr_factor: usize) -> Self {
        Self {
            sr_factor,
            blur_sigma: None,
        }
    }

    pub fn for_light_field(&self, lf: &LightField) -> Result<Degradation> {
        Degradation::new(self.sr_factor, self.blur_sigma, lf.offsets().to_vec())
    }
}

#[derive(Clone, Debug)]
pub enum DisparitySource {
    Estimate(DisparityEstimationParams),
    /// Externally supplied map at the LR reference resolution.
    Provided(DisparityMap),
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub refocus: RefocusParams,
    pub solver: SolverParams,
    pub degradation: DegradationSpec,
    pub bokeh: BokehRenderConfig,
}

impl PipelineConfig {
    pub fn new(refocus: RefocusParams, sr_factor: usize) -> Self {
        Self {
            refocus,
            solver: SolverParams::default(),
            degradation: DegradationSpec::new(sr_factor),
            bokeh: BokehRenderConfig {
                upsample_factor: sr_factor,
                ..BokehRenderConfig::default()
            },
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub disparity: f64,
    pub bokeh: f64,
    pub sr: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct RefocusResult {
    pub output: ImageGrid,
    pub bokeh_image: ImageGrid,
    pub weight_map: WeightMap,
    /// Disparity at the LR reference resolution.
    pub disparity: DisparityMap,
    pub disparity_hr: DisparityMap,
    pub radius_map: CocRadiusMap,
    pub objective_trace: Vec<f64>,
    pub timings: Timings,
}

pub fn estimate_disparity(lf: &LightField, source: &DisparitySource) -> Result<DisparityMap> {
    match source {
        DisparitySource::Estimate(params) => plane_sweep_disparity(lf, params),
        DisparitySource::Provided(map) => {
            if (map.height(), map.width()) != (lf.height(), lf.width()) {
                return Err(Error::contract(format!(
                    "disparity map {}x{} does not match views {}x{}",
                    map.height(),
                    map.width(),
                    lf.height(),
                    lf.width()
                )));
            }
            Ok(map.clone())
        }
    }
}

/// Bokeh-rendered reference view at its native resolution.
pub fn preview(
    reference: &ImageGrid,
    disparity: &DisparityMap,
    params: &RefocusParams,
    cfg: &BokehRenderConfig,
) -> Result<ImageGrid> {
    let rmap = coc_radius_map(disparity, params)?;
    render_bokeh(reference, &rmap, cfg)
}

pub fn refocus(lf: &LightField, cfg: &PipelineConfig, source: &DisparitySource) -> Result<RefocusResult> {
    refocus_with_progress(lf, cfg, source, |_| {})
}

/// [`refocus`] with a callback after each solver iteration.
pub fn refocus_with_progress(
    lf: &LightField,
    cfg: &PipelineConfig,
    source: &DisparitySource,
    on_iteration: impl FnMut(usize),
) -> Result<RefocusResult> {
    cfg.refocus.validate()?;
    cfg.solver.validate()?;
    let s = cfg.degradation.sr_factor;
    let start = Instant::now();

    let disparity = estimate_disparity(lf, source)?;
    let t_disparity = start.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let rendered = preview(lf.reference(), &disparity, &cfg.refocus, &cfg.bokeh)?;
    let bokeh_image = upsample_bokeh(&rendered, s)?;
    let t_bokeh = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let disparity_hr = upsample_disparity(&disparity, s)?;
    let radius_map = coc_radius_map(&disparity_hr, &cfg.refocus.scaled(s))?;
    let weights = weight_map(&radius_map, &cfg.refocus)?;
    let degradation = cfg.degradation.for_light_field(lf)?;
    let problem = Problem::new(lf, &disparity_hr, &bokeh_image, &weights, &degradation, cfg.solver)?;
    let solved = super_resolve(&problem, on_iteration)?;
    let t_sr = t0.elapsed().as_secs_f64();

    Ok(RefocusResult {
        output: solved.image,
        bokeh_image,
        weight_map: weights,
        disparity,
        disparity_hr,
        radius_map,
        objective_trace: solved.objective_trace,
        timings: Timings {
            disparity: t_disparity,
            bokeh: t_bokeh,
            sr: t_sr,
            total: start.elapsed().as_secs_f64(),
        },
    })
}

/// PSNR (peak 1.0) over pixels whose weight is below `threshold`, all channels.
/// Identical selections give `f64::INFINITY`.
pub fn psnr_masked(a: &ImageGrid, b: &ImageGrid, mask: &WeightMap, threshold: f64) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::contract(format!("images differ in shape: {:?} vs {:?}", a.dims(), b.dims())));
    }
    if (mask.height(), mask.width()) != (a.height(), a.width()) {
        return Err(Error::contract("mask does not match image size"));
    }
    let ch = a.channels();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, &w) in mask.weights().iter().enumerate() {
        if w < threshold {
            for c in 0..ch {
                let d = a.data()[p * ch + c] - b.data()[p * ch + c];
                sum += d * d;
            }
            count += ch;
        }
    }
    if count == 0 {
        return Err(Error::Evaluation(format!("no pixel has weight below {threshold}")));
    }
    let mse = sum / count as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingRow {
    pub k: f64,
    pub noi: usize,
    pub timings: Timings,
}

/// Runs the full pipeline for every `(K, NoI)` pair, K-major.
pub fn run_timing_profile(
    lf: &LightField,
    base: &PipelineConfig,
    source: &DisparitySource,
    k_values: &[f64],
    noi_values: &[usize],
) -> Result<Vec<TimingRow>> {
    let mut rows = Vec::with_capacity(k_values.len() * noi_values.len());
    for &k in k_values {
        for &noi in noi_values {
            let mut cfg = base.clone();
            cfg.refocus.bokeh_intensity = k;
            cfg.solver.noi = noi;
            let result = refocus(lf, &cfg, source)?;
            rows.push(TimingRow {
                k,
                noi,
                timings: result.timings,
            });
        }
    }
    Ok(rows)
}

pub fn timings_csv(rows: &[TimingRow]) -> String {
    let mut out = String::from("k,noi,disparity_s,bokeh_s,sr_s,total_s\n");
    for r in rows {
        let t = r.timings;
        let _ = writeln!(
            out,
            "{},{},{:.3},{:.3},{:.3},{:.3}",
            r.k, r.noi, t.disparity, t.bokeh, t.sr, t.total
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_identical_is_infinite() {
        let a = ImageGrid::filled(4, 4, 3, 0.2);
        let m = WeightMap::constant(4, 4, 0.1).unwrap();
        assert_eq!(psnr_masked(&a, &a, &m, 0.5).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_constant_offset() {
        let a = ImageGrid::filled(4, 4, 1, 0.5);
        let b = ImageGrid::filled(4, 4, 1, 0.5 + 16.0 / 255.0);
        let m = WeightMap::constant(4, 4, 0.0).unwrap();
        // direct MSE: (16/255)² → PSNR = 20·log10(255/16)
        let psnr = psnr_masked(&a, &b, &m, 0.5).unwrap();
        assert!((psnr - 20.0 * (255.0f64 / 16.0).log10()).abs() < 1e-9);
        assert!((psnr - 24.05).abs() < 0.01);
    }

    #[test]
    fn psnr_ignores_unselected_pixels_and_is_symmetric() {
        let a = ImageGrid::from_fn(2, 2, 1, |y, x, _| (y * 2 + x) as f64 / 4.0);
        let mut b = a.clone();
        b.set(0, 0, 0, 0.9);
        b.set(1, 1, 0, 0.1);
        let m = WeightMap::new(2, 2, vec![0.9, 0.0, 0.0, 0.2]).unwrap();
        let ab = psnr_masked(&a, &b, &m, 0.5).unwrap();
        assert_eq!(ab, psnr_masked(&b, &a, &m, 0.5).unwrap());
        b.set(0, 0, 0, 0.0);
        assert_eq!(ab, psnr_masked(&a, &b, &m, 0.5).unwrap());
    }

    #[test]
    fn psnr_empty_mask_is_an_error() {
        let a = ImageGrid::zeros(3, 3, 1);
        let m = WeightMap::constant(3, 3, 0.01).unwrap();
        assert!(matches!(psnr_masked(&a, &a, &m, 0.0), Err(Error::Evaluation(_))));
    }

    #[test]
    fn csv_has_header_and_one_row_per_cell() {
        let rows = vec![TimingRow {
            k: 2.0,
            noi: 10,
            timings: Timings {
                disparity: 0.1234,
                bokeh: 0.01,
                sr: 1.5,
                total: 1.6334,
            },
        }];
        let csv = timings_csv(&rows);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 6);
        assert_eq!(lines[1], "2,10,0.123,0.010,1.500,1.633");
    }
}
