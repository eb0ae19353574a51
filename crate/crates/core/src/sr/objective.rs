//! Refocusing objective and its analytic gradient.
//!
//! ```text
//! E(x) = Σ_k ‖(1 − ω_k) ⊙ (y_k − D H F_k x)‖²
//!      + λ_b ‖ω_b ⊙ (x − x_b)‖²
//!      + λ_btv Σ_{(l,m) ≠ 0} α^{|l|+|m|} Σ_p sqrt((x_p − x_{p+(l,m)})² + ε²)
//! ```
//!
//! `ω_k` is the HR bokeh weight carried into view `k` through the warp and decimation.
//! Neighbour lookups in the BTV term clamp to the image border.
//!
//! Observations and `x_b` are held in working units (samples × `intensity_scale`);
//! `objective` and `gradient` take and return estimates in those units.

use super::operators::Degradation;
use super::SolverParams;
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::lf_data::{DisparityMap, LightField};
use crate::optics::WeightMap;

/// `(dx, dy, α^{|dx|+|dy|})` for every non-zero shift within `±window`.
pub fn btv_coefficients(window: usize, alpha: f64) -> Vec<(isize, isize, f64)> {
    let p = window as isize;
    let mut out = Vec::with_capacity((2 * window + 1).pow(2) - 1);
    for m in -p..=p {
        for l in -p..=p {
            if l == 0 && m == 0 {
                continue;
            }
            out.push((l, m, alpha.powi((l.abs() + m.abs()) as i32)));
        }
    }
    out
}

/// Everything the objective needs, with per-view masks precomputed.
pub struct Problem<'a> {
    observations: Vec<ImageGrid>,
    dmap_hr: &'a DisparityMap,
    bokeh_image: ImageGrid,
    bokeh_weights: &'a WeightMap,
    degradation: &'a Degradation,
    params: SolverParams,
    /// `1 − ω_k` at LR resolution, one per view.
    data_masks: Vec<Vec<f64>>,
    btv: Vec<(isize, isize, f64)>,
}

impl<'a> Problem<'a> {
    pub fn new(
        lf: &'a LightField,
        dmap_hr: &'a DisparityMap,
        bokeh_image: &'a ImageGrid,
        bokeh_weights: &'a WeightMap,
        degradation: &'a Degradation,
        params: SolverParams,
    ) -> Result<Self> {
        Self::from_observations(lf.views(), dmap_hr, bokeh_image, bokeh_weights, degradation, params)
    }

    /// As [`Problem::new`] but with raw observation rasters; view `k` pairs with `degradation` offset `k`.
    pub fn from_observations(
        observations: &'a [ImageGrid],
        dmap_hr: &'a DisparityMap,
        bokeh_image: &'a ImageGrid,
        bokeh_weights: &'a WeightMap,
        degradation: &'a Degradation,
        params: SolverParams,
    ) -> Result<Self> {
        params.validate()?;
        if observations.is_empty() || observations.len() != degradation.num_views() {
            return Err(Error::contract(format!(
                "{} observations for {} view offsets",
                observations.len(),
                degradation.num_views()
            )));
        }
        let s = degradation.sr_factor();
        let (h, w, ch) = observations[0].dims();
        if observations.iter().any(|o| o.dims() != (h, w, ch)) {
            return Err(Error::contract("observations differ in size"));
        }
        if bokeh_image.dims() != (h * s, w * s, ch) {
            return Err(Error::contract(format!(
                "bokeh image {:?} is not {s}x the {h}x{w}x{ch} observations",
                bokeh_image.dims()
            )));
        }
        if (dmap_hr.height(), dmap_hr.width()) != (h * s, w * s) {
            return Err(Error::contract("disparity map is not at the HR resolution"));
        }
        if (bokeh_weights.height(), bokeh_weights.width()) != (h * s, w * s) {
            return Err(Error::contract("weight map is not at the HR resolution"));
        }
        let data_masks = (0..observations.len())
            .map(|k| {
                degradation
                    .lr_weights(bokeh_weights.weights(), dmap_hr, k)
                    .into_iter()
                    .map(|wgt| 1.0 - wgt)
                    .collect()
            })
            .collect();
        let scale = params.intensity_scale;
        Ok(Self {
            observations: observations.iter().map(|o| o.map(|v| v * scale)).collect(),
            dmap_hr,
            bokeh_image: bokeh_image.map(|v| v * scale),
            bokeh_weights,
            degradation,
            params,
            data_masks,
            btv: btv_coefficients(params.btv_window, params.btv_alpha),
        })
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// `x_b` in working units.
    pub fn bokeh_image(&self) -> &ImageGrid {
        &self.bokeh_image
    }

    pub fn intensity_scale(&self) -> f64 {
        self.params.intensity_scale
    }

    /// Mask `1 − ω_k` applied to the residuals of view `k`.
    pub fn data_mask(&self, k: usize) -> &[f64] {
        &self.data_masks[k]
    }

    fn check(&self, x: &ImageGrid) -> Result<()> {
        if x.dims() != self.bokeh_image.dims() {
            return Err(Error::contract(format!(
                "estimate {:?} does not match HR shape {:?}",
                x.dims(),
                self.bokeh_image.dims()
            )));
        }
        Ok(())
    }

    /// Residual `D H F_k x − y_k` of one view.
    fn residual(&self, x: &ImageGrid, k: usize) -> Result<ImageGrid> {
        let mut r = self.degradation.apply(x, self.dmap_hr, k)?;
        for (a, b) in r.data_mut().iter_mut().zip(self.observations[k].data()) {
            *a -= b;
        }
        Ok(r)
    }

    pub fn data_term(&self, x: &ImageGrid) -> Result<f64> {
        self.check(x)?;
        let mut total = 0.0;
        for k in 0..self.observations.len() {
            let r = self.residual(x, k)?;
            let ch = r.channels();
            let mask = &self.data_masks[k];
            total += r
                .data()
                .iter()
                .enumerate()
                .map(|(i, v)| (mask[i / ch] * v).powi(2))
                .sum::<f64>();
        }
        Ok(total)
    }

    pub fn bokeh_term(&self, x: &ImageGrid) -> Result<f64> {
        self.check(x)?;
        let ch = x.channels();
        let w = self.bokeh_weights.weights();
        Ok(x.data()
            .iter()
            .zip(self.bokeh_image.data())
            .enumerate()
            .map(|(i, (a, b))| (w[i / ch] * (a - b)).powi(2))
            .sum())
    }

    /// Smoothed BTV value (without `λ_btv`).
    pub fn btv_term(&self, x: &ImageGrid) -> Result<f64> {
        self.check(x)?;
        let eps2 = self.params.sign_epsilon.powi(2);
        let (h, w, ch) = x.dims();
        let mut total = 0.0;
        for &(l, m, coef) in &self.btv {
            let mut sum = 0.0;
            for y in 0..h {
                let sy = (y as isize + m).clamp(0, h as isize - 1) as usize;
                for xx in 0..w {
                    let sx = (xx as isize + l).clamp(0, w as isize - 1) as usize;
                    for c in 0..ch {
                        let t = x.get(y, xx, c) - x.get(sy, sx, c);
                        sum += (t * t + eps2).sqrt();
                    }
                }
            }
            total += coef * sum;
        }
        Ok(total)
    }

    pub fn objective(&self, x: &ImageGrid) -> Result<f64> {
        let mut e = self.data_term(x)?;
        if self.params.lambda_b != 0.0 {
            e += self.params.lambda_b * self.bokeh_term(x)?;
        }
        if self.params.lambda_btv != 0.0 {
            e += self.params.lambda_btv * self.btv_term(x)?;
        }
        Ok(e)
    }

    pub fn gradient(&self, x: &ImageGrid) -> Result<ImageGrid> {
        self.check(x)?;
        let (h, w, ch) = x.dims();
        let mut g = ImageGrid::zeros(h, w, ch);

        // data term, accumulated in view order
        for k in 0..self.observations.len() {
            let mut r = self.residual(x, k)?;
            let mask = &self.data_masks[k];
            for (i, v) in r.data_mut().iter_mut().enumerate() {
                let m = mask[i / ch];
                *v *= 2.0 * m * m;
            }
            let back = self.degradation.apply_adjoint(&r, self.dmap_hr, k)?;
            for (a, b) in g.data_mut().iter_mut().zip(back.data()) {
                *a += b;
            }
        }

        let lambda_b = self.params.lambda_b;
        if lambda_b != 0.0 {
            let wts = self.bokeh_weights.weights();
            for (i, (gv, (a, b))) in g
                .data_mut()
                .iter_mut()
                .zip(x.data().iter().zip(self.bokeh_image.data()))
                .enumerate()
            {
                let wgt = wts[i / ch];
                *gv += 2.0 * lambda_b * wgt * wgt * (a - b);
            }
        }

        let lambda_btv = self.params.lambda_btv;
        if lambda_btv != 0.0 {
            let eps2 = self.params.sign_epsilon.powi(2);
            let gd = g.data_mut();
            for &(l, m, coef) in &self.btv {
                let scale = lambda_btv * coef;
                for y in 0..h {
                    let sy = (y as isize + m).clamp(0, h as isize - 1) as usize;
                    for xx in 0..w {
                        let sx = (xx as isize + l).clamp(0, w as isize - 1) as usize;
                        for c in 0..ch {
                            let here = (y * w + xx) * ch + c;
                            let there = (sy * w + sx) * ch + c;
                            let t = x.data()[here] - x.data()[there];
                            let sgn = scale * t / (t * t + eps2).sqrt();
                            gd[here] += sgn;
                            gd[there] -= sgn;
                        }
                    }
                }
            }
        }
        Ok(g)
    }
}
