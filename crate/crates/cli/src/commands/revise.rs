use std::path::PathBuf;

use clap::Parser;

use facade_core::lafr::revise_with_segments;
use facade_core::lsd::detect_lines;
use facade_core::raster::{
    gaussian_blur, load_image_png, load_mask_png, save_image_png, save_mask_png,
};
use facade_core::{Error, LafrParams, LineSegment, LsdParams, Palette};

use crate::files::{read_json, write_json, ReviseReport, SegmentFile};
use crate::render;
use crate::CliError;

#[derive(Parser, Debug)]
pub struct Args {
    /// Input photograph (PNG).
    #[arg(long)]
    pub image: PathBuf,
    /// Preliminary mask to revise (PNG of class indices).
    #[arg(long)]
    pub mask: PathBuf,
    /// Class palette JSON.
    #[arg(long)]
    pub palette: PathBuf,
    /// Output path for the revised mask; the report JSON lands next to
    /// it with a `.report.json` extension.
    #[arg(long)]
    pub out: PathBuf,
    /// Window class name in the palette.
    #[arg(long, default_value = "window")]
    pub window_class: String,
    /// Distance gate in pixels.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Angle gate in radians.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Minimum projected overlap fraction per edge.
    #[arg(long)]
    pub overlap_ratio: Option<f64>,
    /// Smallest component area that becomes an anchor.
    #[arg(long)]
    pub min_component_area: Option<usize>,
    /// Class name painted when a component's surround offers none.
    #[arg(long)]
    pub replacement_class: Option<String>,
    /// Precomputed segment JSON; skips blur and detection.
    #[arg(long)]
    pub lines: Option<PathBuf>,
    /// Directory for intermediate inspection images.
    #[arg(long)]
    pub debug_dir: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let palette = Palette::load(&args.palette)?;
    let window_class = palette
        .index_of(&args.window_class)
        .ok_or_else(|| Error::UnknownWindowClass(args.window_class.clone()))?;

    let mut params = LafrParams {
        window_class,
        ..LafrParams::default()
    };
    if let Some(v) = args.delta {
        params.delta = v;
    }
    if let Some(v) = args.theta {
        params.theta = v;
    }
    if let Some(v) = args.overlap_ratio {
        params.overlap_ratio = v;
    }
    if let Some(v) = args.min_component_area {
        params.min_component_area = v;
    }
    if let Some(name) = &args.replacement_class {
        let idx = palette
            .index_of(name)
            .ok_or_else(|| Error::UnknownWindowClass(name.clone()))?;
        params.replacement_class = Some(idx);
    }
    params.validate()?;

    let image = load_image_png(&args.image)?;
    let mask = load_mask_png(&args.mask, palette.len())?;
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(Error::DimensionMismatch {
            expected_w: image.width(),
            expected_h: image.height(),
            got_w: mask.width(),
            got_h: mask.height(),
        }
        .into());
    }

    let segments: Vec<LineSegment> = match &args.lines {
        Some(path) => read_json::<SegmentFile>(path)?.segments,
        None => {
            let mut gray = image.to_grayscale();
            for &(kernel, sigma) in &params.blur {
                gray = gaussian_blur(&gray, kernel, sigma)?;
            }
            detect_lines(&gray, &LsdParams::default())?
        }
    };

    let result = revise_with_segments(&mask, &segments, &params)?;
    save_mask_png(&args.out, &result.revised)?;
    let report = ReviseReport::new(result.stats, result.assignments.clone());
    write_json(&args.out.with_extension("report.json"), &report)?;

    if let Some(dir) = &args.debug_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_image_png(
            &dir.join("window_mask.png"),
            &render::class_image(&mask, window_class),
        )?;
        save_image_png(
            &dir.join("lines_all.png"),
            &render::draw_segments(&image, &segments),
        )?;
        let rects: Vec<_> = result
            .assignments
            .iter()
            .filter_map(|a| a.integrated)
            .collect();
        save_image_png(&dir.join("lines_integrated.png"), &render::draw_rects(&image, &rects))?;
        save_mask_png(&dir.join("revised_mask.png"), &result.revised)?;
    }
    Ok(())
}
