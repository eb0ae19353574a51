//! Browser demo: click a pixel to focus on its depth, drag a slider to change the
//! bokeh intensity, and optionally look at the bokeh weight map instead of the image.
//!
//! Everything runs on a synthetic two-plane light field generated in the page, so
//! no server is needed. Images are handed to JavaScript as RGBA bytes ready for
//! `ImageData`.

use lfr_core::disparity::{plane_sweep_disparity, DisparityEstimationParams};
use lfr_core::lf_data::{synthesize_light_field, Layer, Region, SyntheticSceneSpec, Texture};
use lfr_core::optics::{coc_radius_map, weight_map, RefocusParams};
use lfr_core::pipeline::preview;
use lfr_core::{bokeh::BokehRenderConfig, DisparityMap, ImageGrid};
use wasm_bindgen::prelude::*;

const NEAR: f64 = 3.0;
const FAR: f64 = 1.0;

fn to_js(e: lfr_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Interleaved 8-bit RGBA, gray images replicated into all three colour channels.
pub fn rgba(img: &ImageGrid) -> Vec<u8> {
    let quantize = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut out = Vec::with_capacity(img.height() * img.width() * 4);
    for y in 0..img.height() {
        for x in 0..img.width() {
            for c in 0..3 {
                out.push(quantize(img.get(y, x, c.min(img.channels() - 1))));
            }
            out.push(255);
        }
    }
    out
}

#[wasm_bindgen]
pub struct Explorer {
    reference: ImageGrid,
    disparity: DisparityMap,
}

#[wasm_bindgen]
impl Explorer {
    /// Builds a 3×3 view scene of `size`×`size` pixels (a textured square in front of a
    /// textured backdrop) and estimates its disparity.
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, seed: u32) -> Result<Explorer, JsError> {
        let back = Layer::full(Texture::Procedural { seed: u64::from(seed) * 2 + 1 }, FAR);
        let front = Layer {
            texture: Texture::Procedural { seed: u64::from(seed) * 2 + 2 },
            disparity: NEAR,
            region: Region { x0: 0.3, y0: 0.25, x1: 0.7, y1: 0.75 },
        };
        let mut spec = SyntheticSceneSpec::new(size * 2, 3, 3, 2, vec![back, front]);
        spec.channels = 3;
        spec.noise_sigma = 0.003;
        spec.seed = u64::from(seed);
        let scene = synthesize_light_field(&spec).map_err(to_js)?;
        let sweep = DisparityEstimationParams::for_range(Some([FAR - 1.0, NEAR + 1.0]));
        let disparity = plane_sweep_disparity(&scene.lf, &sweep).map_err(to_js)?;
        Ok(Explorer {
            reference: scene.lf.reference().clone(),
            disparity,
        })
    }

    pub fn width(&self) -> usize {
        self.reference.width()
    }

    pub fn height(&self) -> usize {
        self.reference.height()
    }

    /// Estimated disparity under a clicked pixel; NaN outside the image.
    pub fn disparity_at(&self, x: i32, y: i32) -> f64 {
        if x < 0 || y < 0 || x as usize >= self.width() || y as usize >= self.height() {
            return f64::NAN;
        }
        self.disparity.get(y as usize, x as usize)
    }

    pub fn reference_rgba(&self) -> Vec<u8> {
        rgba(&self.reference)
    }

    /// The reference view with synthetic bokeh for focus disparity `df` and intensity `k`.
    pub fn preview_rgba(&self, df: f64, k: f64) -> Result<Vec<u8>, JsError> {
        let params = RefocusParams::new(df, k);
        params.validate().map_err(to_js)?;
        let out = preview(&self.reference, &self.disparity, &params, &BokehRenderConfig::default()).map_err(to_js)?;
        Ok(rgba(&out))
    }

    /// The bokeh weight map as a gray image: white where the bokeh image is trusted.
    pub fn weights_rgba(&self, df: f64, k: f64) -> Result<Vec<u8>, JsError> {
        let params = RefocusParams::new(df, k);
        params.validate().map_err(to_js)?;
        let radii = coc_radius_map(&self.disparity, &params).map_err(to_js)?;
        let weights = weight_map(&radii, &params).map_err(to_js)?;
        let img = ImageGrid::from_vec(self.height(), self.width(), 1, weights.weights().to_vec()).map_err(to_js)?;
        Ok(rgba(&img))
    }
}
