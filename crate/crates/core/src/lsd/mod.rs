//! A-contrario line segment detection on grayscale rasters.
//!
//! The stages are the classical ones: an optional Gaussian downscale to tame
//! aliasing, a 2x2 finite-difference gradient whose level-line angles are
//! grouped into aligned regions by greedy growth from high-magnitude seeds,
//! a rectangle fit per region, and a binomial number-of-false-alarms test
//! that keeps a rectangle only when its aligned-point count would be
//! improbable in noise (NFA at most epsilon).
//!
//! Output is fully deterministic: segments are sorted by descending length,
//! ties by endpoint coordinates, endpoints are ordered so every angle lands
//! in (-pi/2, pi/2].

mod gradient;
mod nfa;
mod region;

pub use gradient::{image_gradient, GradientField};

use crate::error::{Error, Result};
use crate::raster::ImageBuffer;

/// Detector knobs. The gradient threshold is tied to the angle tolerance:
/// quantization of a step edge can tilt a level line by about
/// 2/magnitude radians, so gradients weaker than 2/sin(tolerance) cannot be
/// trusted to vote on alignment.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LsdParams {
    /// Downscale factor applied before detection, in (0, 1].
    pub scale: f64,
    /// Sigma of the anti-aliasing blur is `sigma_scale / scale`.
    pub sigma_scale: f64,
    /// Region-growing angle tolerance tau, radians.
    pub angle_tolerance: f64,
    /// Minimum usable gradient magnitude rho, on the 0-255 scale.
    pub gradient_threshold: f64,
    /// Keep rectangles with NFA at most this value.
    pub nfa_epsilon: f64,
    /// Support must cover at least this fraction of the fitted rectangle.
    pub density_threshold: f64,
}

impl Default for LsdParams {
    fn default() -> Self {
        let tau = 22.5f64.to_radians();
        LsdParams {
            scale: 0.8,
            sigma_scale: 0.6,
            angle_tolerance: tau,
            gradient_threshold: 2.0 / tau.sin(),
            nfa_epsilon: 1.0,
            density_threshold: 0.7,
        }
    }
}

impl LsdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "lsd scale must be in (0, 1], got {}",
                self.scale
            )));
        }
        if !(self.sigma_scale > 0.0) {
            return Err(Error::InvalidParam("lsd sigma_scale must be positive".into()));
        }
        if !(self.angle_tolerance > 0.0 && self.angle_tolerance < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParam(format!(
                "lsd angle tolerance must be in (0, pi/2), got {}",
                self.angle_tolerance
            )));
        }
        if !(self.gradient_threshold >= 0.0) {
            return Err(Error::InvalidParam("lsd gradient threshold must be >= 0".into()));
        }
        if !(self.nfa_epsilon > 0.0) {
            return Err(Error::InvalidParam("lsd epsilon must be positive".into()));
        }
        if !(self.density_threshold >= 0.0 && self.density_threshold < 1.0) {
            return Err(Error::InvalidParam("lsd density threshold must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One detected segment. Undirected: endpoints are ordered lexicographically
/// and `angle` = atan2(y2-y1, x2-x1) always falls in (-pi/2, pi/2].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineSegment {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    /// Lateral extent of the support rectangle, pixels.
    pub width: f64,
    /// Axis angle in (-pi/2, pi/2], radians.
    pub angle: f64,
    pub length: f64,
    /// -log10(NFA); larger means harder to explain as noise.
    pub significance: f64,
}

impl LineSegment {
    pub fn from_endpoints(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        let (mut x1, mut y1, mut x2, mut y2) = (x1, y1, x2, y2);
        if (x2, y2) < (x1, y1) {
            std::mem::swap(&mut x1, &mut x2);
            std::mem::swap(&mut y1, &mut y2);
        }
        let (dx, dy) = (x2 - x1, y2 - y1);
        LineSegment {
            x1,
            y1,
            x2,
            y2,
            width: 1.0,
            angle: normalize_half_turn(dy.atan2(dx)),
            length: (dx * dx + dy * dy).sqrt(),
            significance: 0.0,
        }
    }

    pub fn midpoint(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }
}

fn normalize_half_turn(a: f64) -> f64 {
    let mut a = a;
    while a > std::f64::consts::FRAC_PI_2 {
        a -= std::f64::consts::PI;
    }
    while a <= -std::f64::consts::FRAC_PI_2 {
        a += std::f64::consts::PI;
    }
    a
}

/// Detect line segments in a 1-channel image of at least 16x16 pixels.
pub fn detect_lines(gray: &ImageBuffer, params: &LsdParams) -> Result<Vec<LineSegment>> {
    params.validate()?;
    if gray.channels() != 1 {
        return Err(Error::InvalidParam(
            "line detection needs a 1-channel image".into(),
        ));
    }
    if gray.width() < 16 || gray.height() < 16 {
        return Err(Error::ImageTooSmall {
            width: gray.width(),
            height: gray.height(),
            min: 16,
        });
    }

    let inv_scale = 1.0 / params.scale;
    let work = if params.scale < 1.0 {
        downscale(gray, params.scale, params.sigma_scale / params.scale)
    } else {
        gray.clone()
    };

    let field = image_gradient(&work, params.gradient_threshold)?;
    let log_nt = nfa::log_num_tests(field.width(), field.height());
    let threshold = -params.nfa_epsilon.log10();
    let p = params.angle_tolerance / std::f64::consts::PI;
    let min_region = (-log_nt / p.log10()) as usize;

    let mut used = vec![false; field.width() * field.height()];
    let mut segments = Vec::new();

    for seed in field.seeds_by_magnitude() {
        if used[seed.1 as usize * field.width() + seed.0 as usize] {
            continue;
        }
        let reg = region::grow_region(&field, seed, params.angle_tolerance, &mut used);
        if reg.pixels.len() < min_region {
            continue;
        }
        let Some((reg, rect)) = region::refine(
            reg,
            &field,
            params.angle_tolerance,
            p,
            params.density_threshold,
            &mut used,
        ) else {
            continue;
        };
        if reg.pixels.len() < min_region {
            continue;
        }
        let (rect, value) = nfa::improve_rect(&rect, &field, log_nt);
        if value < threshold {
            continue;
        }

        // gradient values live at pixel corners: shift back, then undo scaling
        let mut seg = LineSegment::from_endpoints(
            (rect.x1 + 0.5) * inv_scale,
            (rect.y1 + 0.5) * inv_scale,
            (rect.x2 + 0.5) * inv_scale,
            (rect.y2 + 0.5) * inv_scale,
        );
        seg.width = rect.width * inv_scale;
        seg.significance = value;
        segments.push(seg);
    }

    segments.sort_by(|a, b| {
        b.length
            .partial_cmp(&a.length)
            .unwrap()
            .then(a.x1.partial_cmp(&b.x1).unwrap())
            .then(a.y1.partial_cmp(&b.y1).unwrap())
            .then(a.x2.partial_cmp(&b.x2).unwrap())
            .then(a.y2.partial_cmp(&b.y2).unwrap())
    });
    Ok(segments)
}

/// Gaussian subsample to `ceil(dim * scale)` with symmetric borders. The
/// kernel is re-centered on the exact (fractional) source coordinate of
/// every output pixel.
fn downscale(img: &ImageBuffer, scale: f64, sigma: f64) -> ImageBuffer {
    let (w, h) = (img.width(), img.height());
    let nw = (w as f64 * scale).ceil() as usize;
    let nh = (h as f64 * scale).ceil() as usize;
    // kernel reaches until the Gaussian drops below 10^-3
    let radius = (sigma * (2.0 * 3.0 * std::f64::consts::LN_10).sqrt()).ceil() as isize;

    let sample = |data: &dyn Fn(isize) -> f64, len: usize, at: f64| -> f64 {
        let center = (at + 0.5).floor();
        let mut sum = 0.0;
        let mut norm = 0.0;
        for t in -radius..=radius {
            let j = center as isize + t;
            // reflect out-of-range indices back into [0, len)
            let len = len as isize;
            let mut j = j.rem_euclid(2 * len);
            if j >= len {
                j = 2 * len - 1 - j;
            }
            let offset = center + t as f64 - at;
            let k = (-offset * offset / (2.0 * sigma * sigma)).exp();
            sum += k * data(j);
            norm += k;
        }
        sum / norm
    };

    let mut tmp = vec![0.0f64; nw * h];
    for y in 0..h {
        let row = |j: isize| img.get(j as usize, y, 0) as f64;
        for x in 0..nw {
            tmp[y * nw + x] = sample(&row, w, x as f64 / scale);
        }
    }
    let mut out = ImageBuffer::new(nw, nh, 1);
    for x in 0..nw {
        let col = |j: isize| tmp[j as usize * nw + x];
        for y in 0..nh {
            out.set(x, y, 0, sample(&col, h, y as f64 / scale) as f32);
        }
    }
    out
}
