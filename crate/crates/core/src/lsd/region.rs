use crate::lsd::gradient::GradientField;

/// A grown support region: member grid points plus the running mean
/// direction maintained as a vector sum so the update is order-stable.
pub(crate) struct Region {
    pub pixels: Vec<(u32, u32)>,
    pub angle: f64,
}

/// Oriented rectangle fitted to a region. `theta` is the main-axis angle,
/// `prec`/`p` the angle tolerance it was grown with (radians / fraction of
/// a half turn).
#[derive(Clone)]
pub(crate) struct OrientedRect {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub width: f64,
    pub theta: f64,
    pub prec: f64,
    pub p: f64,
}

impl OrientedRect {
    pub fn length(&self) -> f64 {
        ((self.x2 - self.x1).powi(2) + (self.y2 - self.y1).powi(2)).sqrt()
    }

    pub fn density(&self, support: usize) -> f64 {
        support as f64 / (self.length() * self.width)
    }
}

/// Unsigned angle distance that treats a half-turn as opposite, not equal:
/// level lines 180 degrees apart belong to edges of opposite polarity.
pub(crate) fn is_aligned(theta: f64, angle: f64, prec: f64) -> bool {
    let mut d = theta - angle;
    if d < 0.0 {
        d = -d;
    }
    if d > 3.0 * std::f64::consts::FRAC_PI_2 {
        d -= 2.0 * std::f64::consts::PI;
        if d < 0.0 {
            d = -d;
        }
    }
    d <= prec
}

fn angle_diff_abs(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    while d <= -std::f64::consts::PI {
        d += 2.0 * std::f64::consts::PI;
    }
    while d > std::f64::consts::PI {
        d -= 2.0 * std::f64::consts::PI;
    }
    d.abs()
}

fn angle_diff_signed(a: f64, b: f64) -> f64 {
    let mut d = a - b;
    while d <= -std::f64::consts::PI {
        d += 2.0 * std::f64::consts::PI;
    }
    while d > std::f64::consts::PI {
        d -= 2.0 * std::f64::consts::PI;
    }
    d
}

/// Grow an 8-connected region of aligned level lines from `seed`, marking
/// members in `used`. Expansion is breadth-like over the member list, so the
/// result depends only on the seed, the field and the tolerance.
pub(crate) fn grow_region(
    field: &GradientField,
    seed: (u32, u32),
    prec: f64,
    used: &mut [bool],
) -> Region {
    let w = field.width();
    let h = field.height();
    let mut pixels = vec![seed];
    let mut angle = field.level_line_angle(seed.0 as usize, seed.1 as usize);
    let mut sum_dx = angle.cos();
    let mut sum_dy = angle.sin();
    used[seed.1 as usize * w + seed.0 as usize] = true;

    let mut i = 0;
    while i < pixels.len() {
        let (px, py) = pixels[i];
        i += 1;
        let x0 = px.saturating_sub(1) as usize;
        let y0 = py.saturating_sub(1) as usize;
        let x1 = ((px + 1) as usize).min(w - 1);
        let y1 = ((py + 1) as usize).min(h - 1);
        for ny in y0..=y1 {
            for nx in x0..=x1 {
                let idx = ny * w + nx;
                if used[idx] || !field.is_valid(nx, ny) {
                    continue;
                }
                let lla = field.level_line_angle(nx, ny);
                if !is_aligned(lla, angle, prec) {
                    continue;
                }
                used[idx] = true;
                pixels.push((nx as u32, ny as u32));
                sum_dx += lla.cos();
                sum_dy += lla.sin();
                angle = sum_dy.atan2(sum_dx);
            }
        }
    }
    Region { pixels, angle }
}

/// Fit the magnitude-weighted rectangle: centroid, smallest-inertia axis,
/// then extents from member projections.
pub(crate) fn region_to_rect(
    region: &Region,
    field: &GradientField,
    prec: f64,
    p: f64,
) -> OrientedRect {
    let mut sum = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for &(x, y) in &region.pixels {
        let wgt = field.magnitude(x as usize, y as usize);
        cx += x as f64 * wgt;
        cy += y as f64 * wgt;
        sum += wgt;
    }
    debug_assert!(sum > 0.0, "region with zero total gradient");
    cx /= sum;
    cy /= sum;

    let theta = main_axis_angle(region, field, cx, cy, prec);

    let (dx, dy) = (theta.cos(), theta.sin());
    let (mut lmin, mut lmax, mut wmin, mut wmax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &(x, y) in &region.pixels {
        let l = (x as f64 - cx) * dx + (y as f64 - cy) * dy;
        let t = -(x as f64 - cx) * dy + (y as f64 - cy) * dx;
        lmin = lmin.min(l);
        lmax = lmax.max(l);
        wmin = wmin.min(t);
        wmax = wmax.max(t);
    }

    OrientedRect {
        x1: cx + lmin * dx,
        y1: cy + lmin * dy,
        x2: cx + lmax * dx,
        y2: cy + lmax * dy,
        width: (wmax - wmin).max(1.0),
        theta,
        prec,
        p,
    }
}

fn main_axis_angle(region: &Region, field: &GradientField, cx: f64, cy: f64, prec: f64) -> f64 {
    let (mut ixx, mut iyy, mut ixy) = (0.0f64, 0.0f64, 0.0f64);
    for &(x, y) in &region.pixels {
        let wgt = field.magnitude(x as usize, y as usize);
        let rx = x as f64 - cx;
        let ry = y as f64 - cy;
        ixx += ry * ry * wgt;
        iyy += rx * rx * wgt;
        ixy -= rx * ry * wgt;
    }
    let lambda = 0.5 * (ixx + iyy - ((ixx - iyy).powi(2) + 4.0 * ixy * ixy).sqrt());
    let mut theta = if ixx.abs() > iyy.abs() {
        (lambda - ixx).atan2(ixy)
    } else {
        ixy.atan2(lambda - iyy)
    };
    // the axis is defined mod pi; pick the half-turn facing the region angle
    if angle_diff_abs(theta, region.angle) > prec {
        theta += std::f64::consts::PI;
    }
    theta
}

/// Density gate: the support must cover at least `density_th` of the fitted
/// rectangle. When it does not, retry with a tolerance estimated from the
/// angle spread near the seed, then shrink the region radius; pixels dropped
/// along the way are released back to the pool.
pub(crate) fn refine(
    mut region: Region,
    field: &GradientField,
    prec: f64,
    p: f64,
    density_th: f64,
    used: &mut [bool],
) -> Option<(Region, OrientedRect)> {
    let rect = region_to_rect(&region, field, prec, p);
    if rect.density(region.pixels.len()) >= density_th {
        return Some((region, rect));
    }

    // retry with tolerance = 2 * stddev of angles close to the seed
    let seed = region.pixels[0];
    let seed_angle = field.level_line_angle(seed.0 as usize, seed.1 as usize);
    let (mut s, mut s2, mut n) = (0.0f64, 0.0f64, 0usize);
    for &(x, y) in &region.pixels {
        used[y as usize * field.width() + x as usize] = false;
        let d = ((x as f64 - seed.0 as f64).powi(2) + (y as f64 - seed.1 as f64).powi(2)).sqrt();
        if d < rect.width {
            let ad = angle_diff_signed(
                field.level_line_angle(x as usize, y as usize),
                seed_angle,
            );
            s += ad;
            s2 += ad * ad;
            n += 1;
        }
    }
    debug_assert!(n > 0);
    let mean = s / n as f64;
    let tau = 2.0 * ((s2 - 2.0 * mean * s) / n as f64 + mean * mean).sqrt();

    region = grow_region(field, seed, tau, used);
    if region.pixels.len() < 2 {
        return None;
    }
    let mut rect = region_to_rect(&region, field, tau, p);
    if rect.density(region.pixels.len()) >= density_th {
        return Some((region, rect));
    }

    // radius reduction: drop members far from the seed until dense enough
    let (sx, sy) = (seed.0 as f64, seed.1 as f64);
    let mut radius = ((sx - rect.x1).powi(2) + (sy - rect.y1).powi(2))
        .sqrt()
        .max(((sx - rect.x2).powi(2) + (sy - rect.y2).powi(2)).sqrt());
    while rect.density(region.pixels.len()) < density_th {
        radius *= 0.75;
        region.pixels.retain(|&(x, y)| {
            let keep =
                ((x as f64 - sx).powi(2) + (y as f64 - sy).powi(2)).sqrt() <= radius;
            if !keep {
                used[y as usize * field.width() + x as usize] = false;
            }
            keep
        });
        if region.pixels.len() < 2 {
            return None;
        }
        rect = region_to_rect(&region, field, tau, p);
    }
    Some((region, rect))
}
