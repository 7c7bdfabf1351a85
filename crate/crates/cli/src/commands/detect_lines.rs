use std::path::PathBuf;

use clap::Parser;

use facade_core::lsd::detect_lines;
use facade_core::raster::{gaussian_blur, load_image_png};
use facade_core::{LafrParams, LsdParams};

use crate::files::{write_json, SegmentFile};
use crate::CliError;

#[derive(Parser, Debug)]
pub struct Args {
    /// Input photograph (PNG).
    pub image: PathBuf,
    /// Where to write the segment JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Downscale factor before detection.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Region-growing angle tolerance, radians.
    #[arg(long)]
    pub angle_tolerance: Option<f64>,
    /// Minimum usable gradient magnitude.
    #[arg(long)]
    pub gradient_threshold: Option<f64>,
    /// NFA acceptance bound.
    #[arg(long)]
    pub nfa_epsilon: Option<f64>,
    /// Minimum support density of a kept rectangle.
    #[arg(long)]
    pub density_threshold: Option<f64>,
    /// Skip the pre-detection double blur.
    #[arg(long)]
    pub no_blur: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let mut params = LsdParams::default();
    if let Some(v) = args.scale {
        params.scale = v;
    }
    if let Some(v) = args.angle_tolerance {
        params.angle_tolerance = v;
    }
    if let Some(v) = args.gradient_threshold {
        params.gradient_threshold = v;
    }
    if let Some(v) = args.nfa_epsilon {
        params.nfa_epsilon = v;
    }
    if let Some(v) = args.density_threshold {
        params.density_threshold = v;
    }
    params.validate()?;

    let image = load_image_png(&args.image)?;
    let mut gray = image.to_grayscale();
    if !args.no_blur {
        for &(kernel, sigma) in &LafrParams::default().blur {
            gray = gaussian_blur(&gray, kernel, sigma)?;
        }
    }
    let segments = detect_lines(&gray, &params)?;
    write_json(&args.out, &SegmentFile { segments })?;
    Ok(())
}
