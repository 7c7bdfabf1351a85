use std::path::PathBuf;

use clap::Parser;

use facade_core::raster::{save_image_png, save_mask_png};
use facade_core::synth::{corrupt, generate};
use facade_core::{CorruptionParams, Error, FacadeSpec, Palette};

use crate::files::{write_json, SynthEntry, SynthManifest};
use crate::CliError;

#[derive(Parser, Debug)]
pub struct Args {
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of facades to generate.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Base seed; facade i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Window grid rows.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Window grid columns.
    #[arg(long)]
    pub cols: Option<usize>,
    /// Horizontal skew of the window grid, pixels per row of height.
    #[arg(long)]
    pub shear: Option<f64>,
    /// Image noise sigma.
    #[arg(long)]
    pub noise_sigma: Option<f32>,
    /// Corruption: maximum outline jitter in pixels.
    #[arg(long)]
    pub amplitude: Option<u32>,
    /// Corruption: window dropout probability.
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Corruption: spurious window blob count.
    #[arg(long)]
    pub blobs: Option<usize>,
    /// Corruption: blob radius in pixels.
    #[arg(long)]
    pub blob_radius: Option<u32>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(Error::InvalidParam("count must be at least 1".into()).into());
    }
    let mut spec = FacadeSpec::default();
    if let Some(v) = args.width {
        spec.width = v;
    }
    if let Some(v) = args.height {
        spec.height = v;
    }
    if let Some(v) = args.rows {
        spec.rows = v;
    }
    if let Some(v) = args.cols {
        spec.cols = v;
    }
    if let Some(v) = args.shear {
        spec.shear = v;
    }
    if let Some(v) = args.noise_sigma {
        spec.noise_sigma = v;
    }
    spec.validate()?;

    let mut corruption = CorruptionParams::default();
    if let Some(v) = args.amplitude {
        corruption.jitter_amplitude = v;
    }
    if let Some(v) = args.dropout {
        corruption.dropout = v;
    }
    if let Some(v) = args.blobs {
        corruption.blob_count = v;
    }
    if let Some(v) = args.blob_radius {
        corruption.blob_radius = v;
    }
    corruption.validate()?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    Palette::facade().save(&args.out.join("palette.json"))?;

    let mut entries = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let seed = args.seed + i as u64;
        let (image, gt) = generate(&spec, seed)?;
        let pred = corrupt(&gt, &CorruptionParams { seed, ..corruption.clone() })?;
        let names = (
            format!("img_{i:04}.png"),
            format!("gt_{i:04}.png"),
            format!("pred_{i:04}.png"),
        );
        save_image_png(&args.out.join(&names.0), &image)?;
        save_mask_png(&args.out.join(&names.1), &gt)?;
        save_mask_png(&args.out.join(&names.2), &pred)?;
        entries.push(SynthEntry {
            image: names.0,
            gt: names.1,
            pred: names.2,
            seed,
        });
    }
    let manifest = SynthManifest {
        spec,
        corruption,
        count: args.count,
        base_seed: args.seed,
        entries,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    Ok(())
}
