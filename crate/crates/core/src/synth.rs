//! Deterministic synthetic facade fixtures.
//!
//! [`generate`] renders a grayscale facade with a regular window grid and
//! its ground-truth mask; [`corrupt`] degrades that mask the way an
//! imperfect segmentation model would, with jittered window outlines,
//! interior dropout and spurious blobs. Everything is a pure function of
//! the spec, the parameters and the seed, so fixture sets can be produced
//! in parallel by seed and reproduced byte for byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ImageBuffer, LabelMask, Palette};

/// Geometry and shading of one synthetic facade. Windows are laid out on a
/// regular grid below an optional sky band and roof strip; each window is
/// drawn with a 2 px frame darker than both wall and glass so a line
/// detector sees two parallel step edges per side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacadeSpec {
    pub width: usize,
    pub height: usize,
    pub rows: usize,
    pub cols: usize,
    pub window_width: usize,
    pub window_height: usize,
    /// gap between the grid and the left/right image borders
    pub margin_x: usize,
    /// gap between the roof strip and the first window row
    pub margin_y: usize,
    pub spacing_x: usize,
    pub spacing_y: usize,
    pub sky_height: usize,
    pub roof_height: usize,
    pub wall_intensity: f32,
    pub glass_intensity: f32,
    pub frame_intensity: f32,
    pub sky_intensity: f32,
    pub roof_intensity: f32,
    pub noise_sigma: f32,
    /// horizontal shift of window columns per row of descent; leave at 0
    /// for the axis-aligned fixtures the revision rectangle assumes
    pub shear: f64,
}

pub const FRAME_THICKNESS: usize = 2;

impl Default for FacadeSpec {
    fn default() -> Self {
        Self {
            width: 320,
            height: 256,
            rows: 3,
            cols: 4,
            window_width: 44,
            window_height: 32,
            margin_x: 30,
            margin_y: 24,
            spacing_x: 28,
            spacing_y: 28,
            sky_height: 36,
            roof_height: 16,
            wall_intensity: 180.0,
            glass_intensity: 80.0,
            frame_intensity: 60.0,
            sky_intensity: 230.0,
            roof_intensity: 90.0,
            noise_sigma: 2.0,
            shear: 0.0,
        }
    }
}

impl FacadeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParam("image dimensions must be positive".into()));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidParam("window grid must be at least 1x1".into()));
        }
        if self.window_width < 8 || self.window_height < 8 {
            return Err(Error::InvalidParam(format!(
                "window size {}x{} below the 8x8 minimum",
                self.window_width, self.window_height
            )));
        }
        let grid_w = 2 * self.margin_x
            + self.cols * self.window_width
            + (self.cols - 1) * self.spacing_x;
        let grid_h = self.sky_height
            + self.roof_height
            + self.margin_y
            + self.rows * self.window_height
            + (self.rows - 1) * self.spacing_y;
        if grid_w > self.width || grid_h > self.height {
            return Err(Error::InvalidParam(format!(
                "window grid needs {}x{} but the image is {}x{}",
                grid_w, grid_h, self.width, self.height
            )));
        }
        for v in [
            self.wall_intensity,
            self.glass_intensity,
            self.frame_intensity,
            self.sky_intensity,
            self.roof_intensity,
        ] {
            if !(0.0..=255.0).contains(&v) {
                return Err(Error::InvalidParam(format!("intensity {v} outside [0,255]")));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParam("noise sigma must be finite and >= 0".into()));
        }
        if !self.shear.is_finite() {
            return Err(Error::InvalidParam("shear must be finite".into()));
        }
        Ok(())
    }

    /// Inclusive pixel bounds of one window rectangle before shear.
    fn window_rect(&self, row: usize, col: usize) -> (usize, usize, usize, usize) {
        let x0 = self.margin_x + col * (self.window_width + self.spacing_x);
        let y0 = self.sky_height
            + self.roof_height
            + self.margin_y
            + row * (self.window_height + self.spacing_y);
        (x0, y0, x0 + self.window_width - 1, y0 + self.window_height - 1)
    }

    fn grid_top(&self) -> usize {
        self.sky_height + self.roof_height + self.margin_y
    }
}

/// Mask corruption model: outline jitter, interior dropout, spurious
/// blobs. `window_class`/`building_class` name the two classes the
/// corruption trades between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionParams {
    /// maximum Chebyshev displacement of the window outline, in pixels
    pub jitter_amplitude: u32,
    /// probability that a window pixel belongs to a dropped-out patch
    pub dropout: f64,
    pub blob_count: usize,
    pub blob_radius: u32,
    pub window_class: u8,
    pub building_class: u8,
    pub seed: u64,
}

impl Default for CorruptionParams {
    fn default() -> Self {
        Self {
            jitter_amplitude: 2,
            dropout: 0.02,
            blob_count: 2,
            blob_radius: 3,
            window_class: 1,
            building_class: 0,
            seed: 0,
        }
    }
}

impl CorruptionParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParam(format!(
                "dropout probability {} outside [0,1)",
                self.dropout
            )));
        }
        if self.window_class == self.building_class {
            return Err(Error::InvalidParam(
                "window and building class must differ".into(),
            ));
        }
        Ok(())
    }
}

/// Pseudo-random stream ids; each corruption stage draws from its own
/// stream so changing one stage's parameters cannot shift another's draws.
const STREAM_IMAGE_NOISE: u64 = 0;
const STREAM_JITTER: u64 = 1;
const STREAM_DROPOUT: u64 = 2;
const STREAM_BLOBS: u64 = 3;

const DROPOUT_PATCH_RADIUS: i64 = 2;

/// Fraction of boundary pixels that grow a tooth. Model predictions get
/// the outline wrong in runs, not at every pixel; full density would also
/// amount to a uniform dilate/erode rather than raggedness.
const JITTER_DENSITY: f64 = 0.5;

fn disk_area(r: i64) -> usize {
    let mut n = 0;
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                n += 1;
            }
        }
    }
    n
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Render one facade as a grayscale image plus its ground-truth mask over
/// the standard facade palette.
pub fn generate(spec: &FacadeSpec, seed: u64) -> Result<(ImageBuffer, LabelMask)> {
    spec.validate()?;
    let palette = Palette::facade();
    let building = palette.index_of("building").unwrap();
    let window = palette.index_of("window").unwrap();
    let roof = palette.index_of("roof").unwrap();
    let sky = palette.index_of("sky").unwrap();

    let (w, h) = (spec.width, spec.height);
    let mut mask = LabelMask::new(w, h, palette.len());
    let mut image = ImageBuffer::new(w, h, 1);

    for y in 0..h {
        let (class, shade) = if y < spec.sky_height {
            (sky, spec.sky_intensity)
        } else if y < spec.sky_height + spec.roof_height {
            (roof, spec.roof_intensity)
        } else {
            (building, spec.wall_intensity)
        };
        for x in 0..w {
            mask.set(x, y, class);
            image.set(x, y, 0, shade);
        }
    }

    let grid_top = spec.grid_top() as f64;
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            let (x0, y0, x1, y1) = spec.window_rect(row, col);
            for y in y0..=y1 {
                let shift = (spec.shear * (y as f64 - grid_top)).round() as isize;
                for x in x0..=x1 {
                    let sx = x as isize + shift;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let in_frame = x - x0 < FRAME_THICKNESS
                        || x1 - x < FRAME_THICKNESS
                        || y - y0 < FRAME_THICKNESS
                        || y1 - y < FRAME_THICKNESS;
                    mask.set(sx as usize, y, window);
                    image.set(
                        sx as usize,
                        y,
                        0,
                        if in_frame { spec.frame_intensity } else { spec.glass_intensity },
                    );
                }
            }
        }
    }

    if spec.noise_sigma > 0.0 {
        let mut rng = stream(seed, STREAM_IMAGE_NOISE);
        let normal = Normal::new(0.0f64, spec.noise_sigma as f64)
            .map_err(|e| Error::InvalidParam(e.to_string()))?;
        for v in image.data_mut() {
            *v = (*v as f64 + normal.sample(&mut rng)).clamp(0.0, 255.0) as f32;
        }
    }

    Ok((image, mask))
}

/// Degrade a ground-truth mask into a plausible model prediction. Stages
/// run in a fixed order (jitter, dropout, blobs) on an evolving copy; all
/// class tests read the pristine input, so every stage is local to the
/// original geometry and later writes win conflicts.
pub fn corrupt(gt: &LabelMask, params: &CorruptionParams) -> Result<LabelMask> {
    params.validate()?;
    for class in [params.window_class, params.building_class] {
        if class as usize >= gt.classes() {
            return Err(Error::ClassOutOfRange { value: class, classes: gt.classes() });
        }
    }

    let (w, h) = (gt.width(), gt.height());
    let mut out = gt.clone();
    let win = params.window_class;
    let bld = params.building_class;

    if params.jitter_amplitude > 0 {
        let mut rng = stream(params.seed, STREAM_JITTER);
        let a = params.jitter_amplitude as i64;
        for y in 0..h {
            for x in 0..w {
                if gt.get(x, y) != win || !is_boundary(gt, x, y, win) {
                    continue;
                }
                if !rng.gen_bool(JITTER_DENSITY) {
                    continue;
                }
                let mag = rng.gen_range(1..=a);
                let d = if rng.gen_bool(0.5) { mag } else { -mag };
                let Some((sx, sy)) = outward_normal(gt, x, y, win) else {
                    continue;
                };
                // walk a one-pixel tooth along the normal: outward teeth
                // claim building pixels, inward teeth bite into the window
                for k in 0..d.abs() {
                    let step = if d > 0 { k + 1 } else { -k };
                    let px = x as i64 + sx * step;
                    let py = y as i64 + sy * step;
                    if px < 0 || py < 0 || px >= w as i64 || py >= h as i64 {
                        break;
                    }
                    let (px, py) = (px as usize, py as usize);
                    if d > 0 && gt.get(px, py) == bld {
                        out.set(px, py, win);
                    } else if d < 0 && gt.get(px, py) == win {
                        out.set(px, py, bld);
                    }
                }
            }
        }
    }

    if params.dropout > 0.0 {
        // segmentation errors are locally correlated, so dropout removes
        // small patches instead of independent pixels; the per-center
        // probability is scaled so each window pixel still drops out with
        // marginal probability close to `dropout`
        let mut rng = stream(params.seed, STREAM_DROPOUT);
        let r = DROPOUT_PATCH_RADIUS;
        let patch_area = disk_area(r);
        let center_p = (params.dropout / patch_area as f64).min(1.0);
        for y in 0..h {
            for x in 0..w {
                if gt.get(x, y) != win || !rng.gen_bool(center_p) {
                    continue;
                }
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx * dx + dy * dy > r * r {
                            continue;
                        }
                        let (px, py) = (x as i64 + dx, y as i64 + dy);
                        if px < 0 || py < 0 || px >= w as i64 || py >= h as i64 {
                            continue;
                        }
                        let (px, py) = (px as usize, py as usize);
                        if gt.get(px, py) == win {
                            out.set(px, py, bld);
                        }
                    }
                }
            }
        }
    }

    if params.blob_count > 0 && params.blob_radius > 0 {
        let mut rng = stream(params.seed, STREAM_BLOBS);
        let r = params.blob_radius as i64;
        for _ in 0..params.blob_count {
            let cx = rng.gen_range(0..w) as i64;
            let cy = rng.gen_range(0..h) as i64;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy > r * r {
                        continue;
                    }
                    let (px, py) = (cx + dx, cy + dy);
                    if px < 0 || py < 0 || px >= w as i64 || py >= h as i64 {
                        continue;
                    }
                    let (px, py) = (px as usize, py as usize);
                    if gt.get(px, py) == bld {
                        out.set(px, py, win);
                    }
                }
            }
        }
    }

    Ok(out)
}

/// A window pixel with a non-window 4-neighbor inside the image.
fn is_boundary(mask: &LabelMask, x: usize, y: usize, win: u8) -> bool {
    let (w, h) = (mask.width(), mask.height());
    (x > 0 && mask.get(x - 1, y) != win)
        || (x + 1 < w && mask.get(x + 1, y) != win)
        || (y > 0 && mask.get(x, y - 1) != win)
        || (y + 1 < h && mask.get(x, y + 1) != win)
}

/// Unit step (per axis) toward the non-window side, summed over the
/// non-window 4-neighbors. `None` when the neighbors cancel out.
fn outward_normal(mask: &LabelMask, x: usize, y: usize, win: u8) -> Option<(i64, i64)> {
    let (w, h) = (mask.width(), mask.height());
    let mut nx = 0i64;
    let mut ny = 0i64;
    for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
        let (px, py) = (x as i64 + dx, y as i64 + dy);
        if px < 0 || py < 0 || px >= w as i64 || py >= h as i64 {
            continue;
        }
        if mask.get(px as usize, py as usize) != win {
            nx += dx;
            ny += dy;
        }
    }
    if nx == 0 && ny == 0 {
        None
    } else {
        Some((nx.signum(), ny.signum()))
    }
}
