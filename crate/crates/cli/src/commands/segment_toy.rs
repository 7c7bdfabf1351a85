use std::path::PathBuf;

use clap::Parser;

use facade_core::raster::{load_image_png, save_mask_png};
use facade_core::vit::segment_forward;
use facade_core::VitConfig;

use crate::CliError;

#[derive(Parser, Debug)]
pub struct Args {
    /// Input image; both sides must divide by the patch size.
    pub image: PathBuf,
    /// Where to write the mask PNG.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = VitConfig::default().patch)]
    pub patch: usize,
    #[arg(long, default_value_t = VitConfig::default().dim)]
    pub dim: usize,
    #[arg(long, default_value_t = VitConfig::default().layers)]
    pub layers: usize,
    #[arg(long, default_value_t = VitConfig::default().heads)]
    pub heads: usize,
    #[arg(long, default_value_t = VitConfig::default().decoder_layers)]
    pub decoder_layers: usize,
    #[arg(long, default_value_t = VitConfig::default().decoder_heads)]
    pub decoder_heads: usize,
    #[arg(long, default_value_t = VitConfig::default().classes)]
    pub classes: usize,
    #[arg(long, default_value_t = VitConfig::default().seed)]
    pub seed: u64,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let config = VitConfig {
        patch: args.patch,
        dim: args.dim,
        layers: args.layers,
        heads: args.heads,
        decoder_layers: args.decoder_layers,
        decoder_heads: args.decoder_heads,
        classes: args.classes,
        seed: args.seed,
    };
    config.validate()?;
    let image = load_image_png(&args.image)?;
    let mask = segment_forward(&image, &config)?;
    save_mask_png(&args.out, &mask)?;
    Ok(())
}
