//! Depth-dependent bokeh by gathering uniform-disk contributions, and bicubic upsampling.
//!
//! Each source pixel `P` spreads its intensity uniformly over a disk of radius `r_P`
//! (weight `1/(π r_P²)`). An output pixel `Q` gathers from every `P` within the
//! map's largest radius, keeping only those whose disk actually covers `Q`.

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::optics::CocRadiusMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BokehRenderConfig {
    /// Smallest effective disk radius in pixels; keeps `1/(π r²)` finite in focus.
    pub radius_floor: f64,
    /// Divide each gathered sum by its total weight.
    pub normalize: bool,
    pub upsample_factor: usize,
}

impl Default for BokehRenderConfig {
    fn default() -> Self {
        Self {
            radius_floor: 0.5,
            normalize: true,
            upsample_factor: 1,
        }
    }
}

impl BokehRenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_floor > 0.0) {
            return Err(Error::param("radius_floor", "must be > 0"));
        }
        if self.upsample_factor == 0 {
            return Err(Error::param("upsample_factor", "must be >= 1"));
        }
        Ok(())
    }
}

/// Integer offsets inside the closed disk of `radius`, in row-major scan order.
fn disk_offsets(radius: f64) -> Vec<(isize, isize, f64)> {
    let reach = radius.floor() as isize;
    let r2 = radius * radius;
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let d2 = (dy * dy + dx * dx) as f64;
            if d2 <= r2 {
                out.push((dy, dx, d2));
            }
        }
    }
    out
}

pub fn render_bokeh(reference: &ImageGrid, rmap: &CocRadiusMap, cfg: &BokehRenderConfig) -> Result<ImageGrid> {
    cfg.validate()?;
    let (h, w, ch) = reference.dims();
    if rmap.height() != h || rmap.width() != w {
        return Err(Error::contract(format!(
            "radius map {}x{} does not match image {h}x{w}",
            rmap.height(),
            rmap.width()
        )));
    }
    let floor = cfg.radius_floor;
    let eff: Vec<f64> = rmap.radii().iter().map(|&r| r.max(floor)).collect();
    let r2: Vec<f64> = eff.iter().map(|r| r * r).collect();
    let weight: Vec<f64> = eff.iter().map(|r| 1.0 / (std::f64::consts::PI * r * r)).collect();
    let window = disk_offsets(rmap.r_max().max(floor));

    let src = reference.data();
    let mut out = ImageGrid::zeros(h, w, ch);
    let dst = out.data_mut();
    let mut acc = vec![0.0; ch];
    for qy in 0..h as isize {
        for qx in 0..w as isize {
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut total = 0.0;
            for &(dy, dx, d2) in &window {
                let (py, px) = (qy + dy, qx + dx);
                if py < 0 || px < 0 || py >= h as isize || px >= w as isize {
                    continue;
                }
                let p = py as usize * w + px as usize;
                if d2 > r2[p] {
                    continue;
                }
                let wp = weight[p];
                total += wp;
                for c in 0..ch {
                    acc[c] += wp * src[p * ch + c];
                }
            }
            let q = (qy as usize * w + qx as usize) * ch;
            for c in 0..ch {
                // Q always covers itself, so total > 0.
                dst[q + c] = if cfg.normalize { acc[c] / total } else { acc[c] };
            }
        }
    }
    Ok(out)
}

/// Catmull-Rom cubic (`a = −0.5`).
pub fn catmull_rom(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

/// Taps for output positions `0..len*s`, sampling source coordinate `X / s`.
fn cubic_taps(len: usize, s: usize) -> Vec<[(usize, f64); 4]> {
    (0..len * s)
        .map(|o| {
            let pos = o as f64 / s as f64;
            let base = pos.floor();
            let frac = pos - base;
            let mut taps = [(0usize, 0.0); 4];
            for (j, tap) in taps.iter_mut().enumerate() {
                let offset = j as isize - 1;
                let idx = (base as isize + offset).clamp(0, len as isize - 1) as usize;
                *tap = (idx, catmull_rom(frac - offset as f64));
            }
            taps
        })
        .collect()
}

/// Separable bicubic enlargement by `s`; output pixel `X` samples input coordinate `X/s`,
/// matching the decimation grid of the solver. Results are clamped to `[0, 1]`.
pub fn upsample_bokeh(rendered: &ImageGrid, s: usize) -> Result<ImageGrid> {
    if s == 0 {
        return Err(Error::param("upsample_factor", "must be >= 1"));
    }
    if s == 1 {
        return Ok(rendered.clone());
    }
    let (h, w, ch) = rendered.dims();
    let xt = cubic_taps(w, s);
    let yt = cubic_taps(h, s);
    let horiz = ImageGrid::from_fn(h, w * s, ch, |y, x, c| {
        xt[x].iter().map(|&(i, k)| k * rendered.get(y, i, c)).sum()
    });
    let mut out = ImageGrid::from_fn(h * s, w * s, ch, |y, x, c| {
        yt[y].iter().map(|&(i, k)| k * horiz.get(i, x, c)).sum()
    });
    out.clamp01();
    Ok(out)
}
