//! Plane-sweep disparity for the reference view of a light field.

use crate::error::{Error, Result};
use crate::lf_data::{DisparityMap, LightField};
use crate::sr::operators::sample_bilinear;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatchingCost {
    AbsoluteDifference,
    /// `min(|a − b|, tau)`.
    TruncatedAbsoluteDifference { tau: f64 },
}

impl MatchingCost {
    #[inline]
    fn eval(&self, diff: f64) -> f64 {
        match *self {
            MatchingCost::AbsoluteDifference => diff.abs(),
            MatchingCost::TruncatedAbsoluteDifference { tau } => diff.abs().min(tau),
        }
    }
}

pub const DEFAULT_RANGE: [f64; 2] = [0.0, 4.0];
const DEFAULT_SPACING: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisparityEstimationParams {
    pub num_hypotheses: usize,
    pub d_lo: f64,
    pub d_hi: f64,
    /// Odd side length of the cost aggregation window.
    pub window: usize,
    pub cost: MatchingCost,
    /// Odd median window applied to the winning labels; 0 disables it.
    pub smoothing: usize,
}

impl DisparityEstimationParams {
    /// Sweep over `[d_lo, d_hi]` with the default cost (truncated AD, τ = 0.1), window 7, median 3.
    pub fn new(d_lo: f64, d_hi: f64, num_hypotheses: usize) -> Self {
        Self {
            num_hypotheses,
            d_lo,
            d_hi,
            window: 7,
            cost: MatchingCost::TruncatedAbsoluteDifference { tau: 0.1 },
            smoothing: 3,
        }
    }

    /// Sweep used when only a range is known: quarter-pixel spacing over `[d_lo, d_hi]`,
    /// falling back to `[0, 4]` when no range is given.
    pub fn for_range(range: Option<[f64; 2]>) -> Self {
        let [lo, hi] = range.unwrap_or(DEFAULT_RANGE);
        let n = ((hi - lo) / DEFAULT_SPACING).ceil().max(1.0) as usize + 1;
        Self::new(lo, hi, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_hypotheses < 2 {
            return Err(Error::param("num_hypotheses", "must be >= 2"));
        }
        if !(self.d_lo < self.d_hi) || !self.d_lo.is_finite() || !self.d_hi.is_finite() {
            return Err(Error::param("range", "d_lo must be below d_hi"));
        }
        if self.window == 0 || self.window % 2 == 0 {
            return Err(Error::param("window", "must be odd and >= 1"));
        }
        if self.smoothing % 2 == 0 && self.smoothing != 0 {
            return Err(Error::param("smoothing", "must be odd or 0"));
        }
        if let MatchingCost::TruncatedAbsoluteDifference { tau } = self.cost {
            if !(tau > 0.0) {
                return Err(Error::param("tau", "must be > 0"));
            }
        }
        Ok(())
    }

    /// Spacing between consecutive hypotheses; also the worst-case quantization error bound.
    pub fn step(&self) -> f64 {
        (self.d_hi - self.d_lo) / (self.num_hypotheses - 1) as f64
    }

    pub fn hypothesis(&self, i: usize) -> f64 {
        if i + 1 == self.num_hypotheses {
            self.d_hi
        } else {
            self.d_lo + self.step() * i as f64
        }
    }
}

/// Per-pixel matching cost of one disparity hypothesis, summed over non-reference views.
fn hypothesis_cost(lf: &LightField, d: f64, cost: MatchingCost) -> Vec<f64> {
    let reference = lf.reference();
    let (h, w, ch) = reference.dims();
    let mut out = vec![0.0; h * w];
    for (k, &(u, v)) in lf.offsets().iter().enumerate() {
        if k == lf.reference_index() {
            continue;
        }
        let view = lf.view(k);
        for y in 0..h {
            for x in 0..w {
                let (sy, sx) = (y as f64 - v * d, x as f64 - u * d);
                let mut c_sum = 0.0;
                for c in 0..ch {
                    c_sum += cost.eval(sample_bilinear(view, sy, sx, c) - reference.get(y, x, c));
                }
                out[y * w + x] += c_sum / ch as f64;
            }
        }
    }
    out
}

/// Box sum over a `window × window` neighbourhood, truncated at the borders.
fn box_sum(values: &[f64], h: usize, w: usize, window: usize) -> Vec<f64> {
    let r = (window / 2) as isize;
    let mut rows = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let lo = (x as isize - r).max(0) as usize;
            let hi = (x as isize + r).min(w as isize - 1) as usize;
            rows[y * w + x] = values[y * w + lo..=y * w + hi].iter().sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        let lo = (y as isize - r).max(0) as usize;
        let hi = (y as isize + r).min(h as isize - 1) as usize;
        for x in 0..w {
            out[y * w + x] = (lo..=hi).map(|yy| rows[yy * w + x]).sum();
        }
    }
    out
}

fn median_filter(labels: &[usize], h: usize, w: usize, window: usize) -> Vec<usize> {
    let r = (window / 2) as isize;
    let mut buf = Vec::with_capacity(window * window);
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h as isize {
        for x in 0..w as isize {
            buf.clear();
            for dy in -r..=r {
                for dx in -r..=r {
                    let yy = (y + dy).clamp(0, h as isize - 1) as usize;
                    let xx = (x + dx).clamp(0, w as isize - 1) as usize;
                    buf.push(labels[yy * w + xx]);
                }
            }
            buf.sort_unstable();
            out.push(buf[buf.len() / 2]);
        }
    }
    out
}

/// Winning hypothesis index per pixel, before smoothing. Ties go to the smaller disparity.
pub fn sweep_labels(lf: &LightField, params: &DisparityEstimationParams) -> Result<Vec<usize>> {
    params.validate()?;
    if lf.len() < 2 {
        return Err(Error::EstimationImpossible);
    }
    let (h, w) = (lf.height(), lf.width());
    let mut best = vec![f64::INFINITY; h * w];
    let mut labels = vec![0usize; h * w];
    for i in 0..params.num_hypotheses {
        let raw = hypothesis_cost(lf, params.hypothesis(i), params.cost);
        let aggregated = box_sum(&raw, h, w, params.window);
        for (p, &c) in aggregated.iter().enumerate() {
            if c < best[p] {
                best[p] = c;
                labels[p] = i;
            }
        }
    }
    Ok(labels)
}

pub fn plane_sweep_disparity(lf: &LightField, params: &DisparityEstimationParams) -> Result<DisparityMap> {
    let mut labels = sweep_labels(lf, params)?;
    let (h, w) = (lf.height(), lf.width());
    if params.smoothing > 1 {
        labels = median_filter(&labels, h, w, params.smoothing);
    }
    let values = labels.into_iter().map(|i| params.hypothesis(i)).collect();
    DisparityMap::with_range(h, w, values, params.d_lo, params.d_hi)
}

/// Nearest-neighbour enlargement by `s` with values scaled by `s` (disparity in HR pixels).
pub fn upsample_disparity(dmap: &DisparityMap, s: usize) -> Result<DisparityMap> {
    if s == 0 {
        return Err(Error::param("sr_factor", "must be >= 1"));
    }
    if s == 1 {
        return Ok(dmap.clone());
    }
    let (h, w) = (dmap.height(), dmap.width());
    let scale = s as f64;
    let mut values = Vec::with_capacity(h * w * s * s);
    for y in 0..h * s {
        for x in 0..w * s {
            values.push(dmap.get(y / s, x / s) * scale);
        }
    }
    DisparityMap::with_range(h * s, w * s, values, dmap.d_min() * scale, dmap.d_max() * scale)
}
