//! Synthetic camera-array captures built from fronto-parallel textured planes.
//!
//! Each view is rendered at high resolution by shifting every plane by its own
//! parallax, compositing nearest-first, and then passing the result through the
//! same blur and decimation the solver inverts, plus Gaussian sensor noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{grid_offsets, DisparityMap, LightField};
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::sr::operators::{blur, downsample, gaussian_kernel, sample_bilinear};

/// Surface pattern painted on a plane. Coordinates are HR reference pixels.
#[derive(Clone, Debug)]
pub enum Texture {
    /// Checkerboard plus a handful of seeded sinusoids per channel.
    Procedural { seed: u64 },
    Constant(f64),
    /// Raster sampled bilinearly with clamp-to-edge; must be HR sized.
    Image(ImageGrid),
}

#[derive(Clone, Debug)]
struct Sinusoid {
    amp: f64,
    fx: f64,
    fy: f64,
    phase: f64,
}

#[derive(Clone, Debug)]
enum Pattern {
    Procedural {
        period: f64,
        contrast: [f64; 3],
        waves: Vec<Vec<Sinusoid>>,
    },
    Constant(f64),
    Image(ImageGrid),
}

impl Pattern {
    fn build(texture: &Texture, channels: usize) -> Self {
        match texture {
            Texture::Constant(v) => Pattern::Constant(*v),
            Texture::Image(img) => Pattern::Image(img.clone()),
            Texture::Procedural { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let period = rng.random_range(8..=14) as f64;
                let mut contrast = [0.0; 3];
                for c in contrast.iter_mut() {
                    *c = rng.random_range(0.12..0.2);
                }
                let waves = (0..channels)
                    .map(|_| {
                        (0..6)
                            .map(|_| {
                                let freq = rng.random_range(0.03..0.2);
                                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                                Sinusoid {
                                    amp: rng.random_range(0.02..0.05),
                                    fx: freq * angle.cos(),
                                    fy: freq * angle.sin(),
                                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                                }
                            })
                            .collect()
                    })
                    .collect();
                Pattern::Procedural {
                    period,
                    contrast,
                    waves,
                }
            }
        }
    }

    fn sample(&self, y: f64, x: f64, c: usize) -> f64 {
        match self {
            Pattern::Constant(v) => *v,
            Pattern::Image(img) => sample_bilinear(img, y, x, c.min(img.channels() - 1)),
            Pattern::Procedural {
                period,
                contrast,
                waves,
            } => {
                let cell = (x / period).floor() as i64 + (y / period).floor() as i64;
                let sign = if cell.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let mut v = 0.5 + sign * contrast[c % 3];
                for w in &waves[c] {
                    v += w.amp * (std::f64::consts::TAU * (w.fx * x + w.fy * y) + w.phase).sin();
                }
                v.clamp(0.0, 1.0)
            }
        }
    }
}

/// Axis-aligned support of a plane, as fractions of the HR frame: `[x0, x1) × [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub const FULL: Region = Region {
        x0: f64::NEG_INFINITY,
        y0: f64::NEG_INFINITY,
        x1: f64::INFINITY,
        y1: f64::INFINITY,
    };

    fn contains(&self, y: f64, x: f64, size: f64) -> bool {
        x >= self.x0 * size && x < self.x1 * size && y >= self.y0 * size && y < self.y1 * size
    }
}

/// A fronto-parallel plane with constant disparity in LR pixels per unit baseline.
#[derive(Clone, Debug)]
pub struct Layer {
    pub texture: Texture,
    pub disparity: f64,
    pub region: Region,
}

impl Layer {
    pub fn full(texture: Texture, disparity: f64) -> Self {
        Self {
            texture,
            disparity,
            region: Region::FULL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticSceneSpec {
    /// Side of the square HR frame in pixels; must be a multiple of `sr_factor`.
    pub hr_size: usize,
    pub rows: usize,
    pub cols: usize,
    pub sr_factor: usize,
    pub layers: Vec<Layer>,
    pub noise_sigma: f64,
    pub channels: usize,
    /// Gaussian blur sigma in HR pixels; `None` uses the solver default `0.5·s`.
    pub blur_sigma: Option<f64>,
    pub offset_step: f64,
    pub seed: u64,
}

impl SyntheticSceneSpec {
    /// Scene with the given planes and the defaults used throughout the test-suite.
    pub fn new(hr_size: usize, rows: usize, cols: usize, sr_factor: usize, layers: Vec<Layer>) -> Self {
        Self {
            hr_size,
            rows,
            cols,
            sr_factor,
            layers,
            noise_sigma: 0.0,
            channels: 1,
            blur_sigma: None,
            offset_step: 1.0,
            seed: 0,
        }
    }

    /// Parses plane lists of the form `D[@x0,y0,x1,y1];...` with region fractions of the frame.
    /// Each plane gets a procedural texture seeded from `seed` and its position in the list.
    pub fn parse_planes(spec: &str, seed: u64) -> Result<Vec<Layer>> {
        let bad = |reason: String| Error::param("planes", reason);
        let mut layers = Vec::new();
        for (i, item) in spec.split(';').map(str::trim).filter(|s| !s.is_empty()).enumerate() {
            let (d, region) = match item.split_once('@') {
                Some((d, rect)) => {
                    let nums: Vec<f64> = rect
                        .split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| bad(format!("`{item}`: {e}")))?;
                    if nums.len() != 4 {
                        return Err(bad(format!("`{item}`: region needs x0,y0,x1,y1")));
                    }
                    (
                        d,
                        Region {
                            x0: nums[0],
                            y0: nums[1],
                            x1: nums[2],
                            y1: nums[3],
                        },
                    )
                }
                None => (item, Region::FULL),
            };
            let disparity: f64 = d.trim().parse().map_err(|e| bad(format!("`{item}`: {e}")))?;
            layers.push(Layer {
                texture: Texture::Procedural {
                    seed: seed.wrapping_mul(1000).wrapping_add(i as u64 + 1),
                },
                disparity,
                region,
            });
        }
        if layers.is_empty() {
            return Err(bad("at least one plane is required".into()));
        }
        Ok(layers)
    }

    fn validate(&self) -> Result<()> {
        if self.sr_factor == 0 {
            return Err(Error::param("sr_factor", "must be >= 1"));
        }
        if self.hr_size == 0 || self.hr_size % self.sr_factor != 0 {
            return Err(Error::param("hr_size", "must be a positive multiple of sr_factor"));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::param("grid", "rows and cols must be >= 1"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::param("noise_sigma", "must be >= 0"));
        }
        if self.layers.is_empty() {
            return Err(Error::param("layers", "at least one layer is required"));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::param("channels", "must be 1 or 3"));
        }
        for layer in &self.layers {
            if let Texture::Image(img) = &layer.texture {
                if img.height() != self.hr_size || img.width() != self.hr_size {
                    return Err(Error::param("layers", "image textures must be hr_size square"));
                }
            }
        }
        Ok(())
    }
}

/// Output of [`synthesize_light_field`].
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    /// Undegraded HR reference view (the ground truth for evaluation).
    pub hr_reference: ImageGrid,
    /// Reference disparity at LR resolution, LR pixel units.
    pub gt_disparity: DisparityMap,
    /// Reference disparity at HR resolution, HR pixel units (`s·d`).
    pub gt_disparity_hr: DisparityMap,
    pub lf: LightField,
}

struct Scene<'a> {
    spec: &'a SyntheticSceneSpec,
    patterns: Vec<Pattern>,
    /// Layer indices front to back.
    order: Vec<usize>,
}

impl Scene<'_> {
    /// Frontmost layer visible at HR pixel `(y, x)` of the view at `(u, v)`, with its sample coordinates.
    fn visible(&self, y: usize, x: usize, u: f64, v: f64) -> Option<(usize, f64, f64)> {
        let s = self.spec.sr_factor as f64;
        let size = self.spec.hr_size as f64;
        self.order.iter().find_map(|&i| {
            let d = self.spec.layers[i].disparity * s;
            let (qy, qx) = (y as f64 + v * d, x as f64 + u * d);
            self.spec.layers[i]
                .region
                .contains(qy, qx, size)
                .then_some((i, qy, qx))
        })
    }

    fn render(&self, u: f64, v: f64) -> ImageGrid {
        let n = self.spec.hr_size;
        ImageGrid::from_fn(n, n, self.spec.channels, |y, x, c| match self.visible(y, x, u, v) {
            Some((i, qy, qx)) => self.patterns[i].sample(qy, qx, c),
            None => 0.0,
        })
    }
}

pub fn synthesize_light_field(spec: &SyntheticSceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let mut order: Vec<usize> = (0..spec.layers.len()).collect();
    // nearest (largest disparity) first; later entries win ties
    order.sort_by(|&a, &b| {
        spec.layers[b]
            .disparity
            .total_cmp(&spec.layers[a].disparity)
            .then(b.cmp(&a))
    });
    let scene = Scene {
        spec,
        patterns: spec.layers.iter().map(|l| Pattern::build(&l.texture, spec.channels)).collect(),
        order,
    };

    let s = spec.sr_factor;
    let n = spec.hr_size;
    let hr_reference = scene.render(0.0, 0.0);

    let mut hr_disp = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            hr_disp.push(scene.visible(y, x, 0.0, 0.0).map_or(0.0, |(i, _, _)| spec.layers[i].disparity));
        }
    }
    let lr = n / s;
    let mut lr_disp = Vec::with_capacity(lr * lr);
    for y in 0..lr {
        for x in 0..lr {
            lr_disp.push(hr_disp[y * s * n + x * s]);
        }
    }
    let gt_disparity = DisparityMap::new(lr, lr, lr_disp)?;
    let gt_disparity_hr = DisparityMap::new(n, n, hr_disp.iter().map(|d| d * s as f64).collect())?;

    let taps = gaussian_kernel(spec.blur_sigma.unwrap_or(0.5 * s as f64));
    let offsets = grid_offsets(spec.rows, spec.cols, spec.offset_step);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::param("noise_sigma", e.to_string()))?;
    let mut views = Vec::with_capacity(offsets.len());
    for &(u, v) in &offsets {
        let hr_view = if u == 0.0 && v == 0.0 {
            hr_reference.clone()
        } else {
            scene.render(u, v)
        };
        let mut view = downsample(&blur(&hr_view, &taps), s)?;
        if spec.noise_sigma > 0.0 {
            for px in view.data_mut() {
                *px = (*px + noise.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }
        views.push(view);
    }
    let lf = LightField::new(views, offsets, spec.rows, spec.cols)?;
    Ok(SyntheticScene {
        hr_reference,
        gt_disparity,
        gt_disparity_hr,
        lf,
    })
}
