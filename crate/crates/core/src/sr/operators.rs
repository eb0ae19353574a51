//! Linear operators of the camera-array degradation chain and their exact transposes.
//!
//! `warp` is the per-view parallax shift, `blur` the optical point-spread and
//! `downsample` the sensor decimation. Every adjoint is the literal transpose of
//! the forward map as implemented, boundary handling included, so that
//! `<A x, y> == <x, Aᵀ y>` holds to rounding.

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::lf_data::DisparityMap;

/// Normalized 1-D Gaussian taps for the given sigma, radius `ceil(2σ)`.
/// A zero sigma yields the single tap `[1.0]`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (2.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

#[derive(Clone, Copy)]
enum Axis {
    Rows,
    Cols,
}

fn convolve_axis(x: &ImageGrid, taps: &[f64], axis: Axis, transpose: bool) -> ImageGrid {
    let (h, w, ch) = x.dims();
    let radius = (taps.len() / 2) as isize;
    let len = match axis {
        Axis::Rows => h,
        Axis::Cols => w,
    } as isize;
    let mut out = ImageGrid::zeros(h, w, ch);
    let src = x.data();
    let dst = out.data_mut();
    for y in 0..h {
        for xx in 0..w {
            let pos = match axis {
                Axis::Rows => y,
                Axis::Cols => xx,
            } as isize;
            for (j, &k) in taps.iter().enumerate() {
                let q = (pos + j as isize - radius).clamp(0, len - 1) as usize;
                let (qy, qx) = match axis {
                    Axis::Rows => (q, xx),
                    Axis::Cols => (y, q),
                };
                let here = (y * w + xx) * ch;
                let there = (qy * w + qx) * ch;
                for c in 0..ch {
                    if transpose {
                        dst[there + c] += k * src[here + c];
                    } else {
                        dst[here + c] += k * src[there + c];
                    }
                }
            }
        }
    }
    out
}

/// Separable Gaussian blur with clamp-to-edge boundaries.
pub fn blur(x: &ImageGrid, taps: &[f64]) -> ImageGrid {
    if taps.len() == 1 {
        return x.clone();
    }
    let tmp = convolve_axis(x, taps, Axis::Cols, false);
    convolve_axis(&tmp, taps, Axis::Rows, false)
}

/// Exact transpose of [`blur`], including the clamped boundary taps.
pub fn blur_adjoint(y: &ImageGrid, taps: &[f64]) -> ImageGrid {
    if taps.len() == 1 {
        return y.clone();
    }
    let tmp = convolve_axis(y, taps, Axis::Rows, true);
    convolve_axis(&tmp, taps, Axis::Cols, true)
}

/// Point sampling at stride `s` with origin (0, 0).
pub fn downsample(x: &ImageGrid, s: usize) -> Result<ImageGrid> {
    if s == 0 {
        return Err(Error::param("sr_factor", "must be >= 1"));
    }
    let (h, w, ch) = x.dims();
    if h % s != 0 || w % s != 0 {
        return Err(Error::contract(format!(
            "{h}x{w} image is not divisible by decimation factor {s}"
        )));
    }
    if s == 1 {
        return Ok(x.clone());
    }
    Ok(ImageGrid::from_fn(h / s, w / s, ch, |y, xx, c| {
        x.get(y * s, xx * s, c)
    }))
}

/// Zero-insertion upsampling, the transpose of [`downsample`].
pub fn downsample_adjoint(y: &ImageGrid, s: usize) -> ImageGrid {
    if s == 1 {
        return y.clone();
    }
    let (h, w, ch) = y.dims();
    let mut out = ImageGrid::zeros(h * s, w * s, ch);
    for yy in 0..h {
        for x in 0..w {
            for c in 0..ch {
                out.set(yy * s, x * s, c, y.get(yy, x, c));
            }
        }
    }
    out
}

/// Bilinear stencil of a clamped sample position: four (index, weight) pairs in pixel units.
#[inline]
fn bilinear_stencil(h: usize, w: usize, fy: f64, fx: f64) -> [(usize, f64); 4] {
    let y0 = fy.floor();
    let x0 = fx.floor();
    let ty = fy - y0;
    let tx = fx - x0;
    let clamp_y = |v: f64| (v as isize).clamp(0, h as isize - 1) as usize;
    let clamp_x = |v: f64| (v as isize).clamp(0, w as isize - 1) as usize;
    let (ya, yb) = (clamp_y(y0), clamp_y(y0 + 1.0));
    let (xa, xb) = (clamp_x(x0), clamp_x(x0 + 1.0));
    [
        (ya * w + xa, (1.0 - ty) * (1.0 - tx)),
        (ya * w + xb, (1.0 - ty) * tx),
        (yb * w + xa, ty * (1.0 - tx)),
        (yb * w + xb, ty * tx),
    ]
}

/// Samples `img` bilinearly at fractional `(fy, fx)` with clamp-to-edge.
pub fn sample_bilinear(img: &ImageGrid, fy: f64, fx: f64, c: usize) -> f64 {
    let ch = img.channels();
    bilinear_stencil(img.height(), img.width(), fy, fx)
        .iter()
        .map(|&(i, wgt)| wgt * img.data()[i * ch + c])
        .sum()
}

fn check_warp_dims(x: &ImageGrid, dmap: &DisparityMap) -> Result<()> {
    if x.height() != dmap.height() || x.width() != dmap.width() {
        return Err(Error::contract(format!(
            "disparity map {}x{} does not match image {}x{}",
            dmap.height(),
            dmap.width(),
            x.height(),
            x.width()
        )));
    }
    Ok(())
}

/// Parallax shift of one view: `out(p) = x(p + (u·d_p, v·d_p))`, bilinear, clamp-to-edge.
///
/// `offset` is `(u, v)` = (horizontal, vertical) view position in baseline units and
/// `dmap` carries disparity in pixels (of `x`'s grid) per unit baseline.
pub fn warp_forward(x: &ImageGrid, dmap: &DisparityMap, offset: (f64, f64)) -> Result<ImageGrid> {
    check_warp_dims(x, dmap)?;
    let (u, v) = offset;
    if u == 0.0 && v == 0.0 {
        return Ok(x.clone());
    }
    let (h, w, ch) = x.dims();
    let mut out = ImageGrid::zeros(h, w, ch);
    let src = x.data();
    let dst = out.data_mut();
    for y in 0..h {
        for xx in 0..w {
            let d = dmap.get(y, xx);
            let stencil = bilinear_stencil(h, w, y as f64 + v * d, xx as f64 + u * d);
            let here = (y * w + xx) * ch;
            for &(i, wgt) in &stencil {
                for c in 0..ch {
                    dst[here + c] += wgt * src[i * ch + c];
                }
            }
        }
    }
    Ok(out)
}

/// Transpose of [`warp_forward`]: splats each sample back onto its bilinear stencil.
pub fn warp_adjoint(y: &ImageGrid, dmap: &DisparityMap, offset: (f64, f64)) -> Result<ImageGrid> {
    check_warp_dims(y, dmap)?;
    let (u, v) = offset;
    if u == 0.0 && v == 0.0 {
        return Ok(y.clone());
    }
    let (h, w, ch) = y.dims();
    let mut out = ImageGrid::zeros(h, w, ch);
    let src = y.data();
    let dst = out.data_mut();
    for yy in 0..h {
        for xx in 0..w {
            let d = dmap.get(yy, xx);
            let stencil = bilinear_stencil(h, w, yy as f64 + v * d, xx as f64 + u * d);
            let here = (yy * w + xx) * ch;
            for &(i, wgt) in &stencil {
                for c in 0..ch {
                    dst[i * ch + c] += wgt * src[here + c];
                }
            }
        }
    }
    Ok(out)
}

/// Nearest-neighbour variant of [`warp_forward`] for single-channel maps that must stay in range.
pub fn warp_nearest(map: &[f64], dmap: &DisparityMap, offset: (f64, f64)) -> Vec<f64> {
    let (h, w) = (dmap.height(), dmap.width());
    let (u, v) = offset;
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let d = dmap.get(y, x);
            let sy = ((y as f64 + v * d).round() as isize).clamp(0, h as isize - 1) as usize;
            let sx = ((x as f64 + u * d).round() as isize).clamp(0, w as isize - 1) as usize;
            out.push(map[sy * w + sx]);
        }
    }
    out
}

/// Degradation chain `D H F_k` for all views of a light field.
#[derive(Clone, Debug)]
pub struct Degradation {
    sr_factor: usize,
    blur_sigma: f64,
    taps: Vec<f64>,
    view_offsets: Vec<(f64, f64)>,
}

impl Degradation {
    /// Gaussian sigma defaults to `0.5·s` when `blur_sigma` is `None`.
    pub fn new(
        sr_factor: usize,
        blur_sigma: Option<f64>,
        view_offsets: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if sr_factor == 0 {
            return Err(Error::param("sr_factor", "must be >= 1"));
        }
        let blur_sigma = blur_sigma.unwrap_or(0.5 * sr_factor as f64);
        if !(blur_sigma >= 0.0) || !blur_sigma.is_finite() {
            return Err(Error::param("blur_sigma", "must be finite and >= 0"));
        }
        Ok(Self {
            sr_factor,
            blur_sigma,
            taps: gaussian_kernel(blur_sigma),
            view_offsets,
        })
    }

    pub fn sr_factor(&self) -> usize {
        self.sr_factor
    }

    pub fn blur_sigma(&self) -> f64 {
        self.blur_sigma
    }

    pub fn kernel_radius(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn view_offsets(&self) -> &[(f64, f64)] {
        &self.view_offsets
    }

    pub fn num_views(&self) -> usize {
        self.view_offsets.len()
    }

    /// `D H F_k x`.
    pub fn apply(&self, x: &ImageGrid, dmap_hr: &DisparityMap, view: usize) -> Result<ImageGrid> {
        let warped = warp_forward(x, dmap_hr, self.view_offsets[view])?;
        downsample(&blur(&warped, &self.taps), self.sr_factor)
    }

    /// `F_kᵀ Hᵀ Dᵀ r`.
    pub fn apply_adjoint(
        &self,
        r: &ImageGrid,
        dmap_hr: &DisparityMap,
        view: usize,
    ) -> Result<ImageGrid> {
        let up = downsample_adjoint(r, self.sr_factor);
        warp_adjoint(&blur_adjoint(&up, &self.taps), dmap_hr, self.view_offsets[view])
    }

    /// LR data-term mask weights `ω_k` for view `k`: nearest-warped HR weights, decimated.
    pub fn lr_weights(&self, weights_hr: &[f64], dmap_hr: &DisparityMap, view: usize) -> Vec<f64> {
        let warped = warp_nearest(weights_hr, dmap_hr, self.view_offsets[view]);
        let s = self.sr_factor;
        let w = dmap_hr.width();
        let (lh, lw) = (dmap_hr.height() / s, w / s);
        let mut out = Vec::with_capacity(lh * lw);
        for y in 0..lh {
            for x in 0..lw {
                out.push(warped[y * s * w + x * s]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, c: usize, seed: u64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::from_fn(h, w, c, |_, _, _| rng.random::<f64>())
    }

    fn rel_gap(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn gaussian_taps_are_normalized() {
        for sigma in [0.3, 0.5, 1.0, 1.7] {
            let k = gaussian_kernel(sigma);
            assert_eq!(k.len(), 2 * (2.0 * sigma).ceil() as usize + 1);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert_eq!(gaussian_kernel(0.0), vec![1.0]);
    }

    #[test]
    fn zero_sigma_blur_and_unit_stride_are_identity() {
        let x = random_image(9, 7, 3, 1);
        assert_eq!(blur(&x, &gaussian_kernel(0.0)), x);
        assert_eq!(downsample(&x, 1).unwrap(), x);
    }

    #[test]
    fn downsample_rejects_indivisible() {
        let x = random_image(9, 8, 1, 2);
        assert!(matches!(downsample(&x, 2), Err(Error::Contract(_))));
    }

    #[test]
    fn blur_and_decimation_adjoints() {
        let taps = gaussian_kernel(1.0);
        let x = random_image(16, 16, 1, 3);
        let y = random_image(16, 16, 1, 4);
        let lhs = blur(&x, &taps).dot(&y);
        let rhs = x.dot(&blur_adjoint(&y, &taps));
        assert!(rel_gap(lhs, rhs) < 1e-12);

        let yl = random_image(8, 8, 1, 5);
        let lhs = downsample(&x, 2).unwrap().dot(&yl);
        let rhs = x.dot(&downsample_adjoint(&yl, 2));
        assert!(rel_gap(lhs, rhs) < 1e-12);
    }

    #[test]
    fn warp_identity_at_reference_offset() {
        let x = random_image(8, 8, 3, 6);
        let d = DisparityMap::constant(8, 8, 2.5);
        assert_eq!(warp_forward(&x, &d, (0.0, 0.0)).unwrap(), x);
        assert_eq!(warp_adjoint(&x, &d, (0.0, 0.0)).unwrap(), x);
    }

    #[test]
    fn integer_disparity_is_translation() {
        let x = random_image(12, 12, 1, 7);
        let d = DisparityMap::constant(12, 12, 3.0);
        let out = warp_forward(&x, &d, (1.0, 0.0)).unwrap();
        for y in 0..12 {
            for xx in 0..9 {
                assert_eq!(out.get(y, xx, 0), x.get(y, xx + 3, 0));
            }
        }
        let back = warp_adjoint(&x, &d, (1.0, 0.0)).unwrap();
        for y in 0..12 {
            for xx in 3..11 {
                assert_eq!(back.get(y, xx, 0), x.get(y, xx - 3, 0));
            }
        }
    }

    #[test]
    fn half_pixel_warp_matches_scalar_oracle() {
        let x = random_image(10, 10, 1, 8);
        let d = DisparityMap::constant(10, 10, 1.5);
        let out = warp_forward(&x, &d, (0.0, 1.0)).unwrap();
        for y in 0..8 {
            for xx in 0..10 {
                // sample row y + 1.5 lies halfway between rows y+1 and y+2
                let expect = 0.5 * x.get(y + 1, xx, 0) + 0.5 * x.get(y + 2, xx, 0);
                assert!((out.get(y, xx, 0) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn warp_adjoint_inner_product() {
        let x = random_image(16, 16, 1, 9);
        let y = random_image(16, 16, 1, 10);
        let d = DisparityMap::constant(16, 16, 1.5);
        for offset in [(1.0, 0.0), (-1.0, 1.0), (0.5, -0.75)] {
            let lhs = warp_forward(&x, &d, offset).unwrap().dot(&y);
            let rhs = x.dot(&warp_adjoint(&y, &d, offset).unwrap());
            assert!(rel_gap(lhs, rhs) < 1e-12);
        }
    }

    #[test]
    fn lr_weights_follow_the_operator_chain() {
        let d = DisparityMap::constant(4, 4, 1.0);
        let weights: Vec<f64> = (0..16).map(|i| i as f64 / 15.0).collect();
        let deg = Degradation::new(2, None, vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(deg.lr_weights(&weights, &d, 0), vec![0.0, 2.0 / 15.0, 8.0 / 15.0, 10.0 / 15.0]);
        // shifted by one HR column
        assert_eq!(deg.lr_weights(&weights, &d, 1), vec![1.0 / 15.0, 3.0 / 15.0, 9.0 / 15.0, 11.0 / 15.0]);
    }
}
