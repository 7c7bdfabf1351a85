use std::path::PathBuf;

use clap::Parser;

use facade_core::raster::load_mask_png;
use facade_core::{ConfusionMatrix, Error, MetricsReport, Palette};

use crate::files::{list_role, write_json};
use crate::CliError;

#[derive(Parser, Debug)]
pub struct Args {
    /// Directory of predicted masks.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth masks.
    #[arg(long)]
    pub gt: PathBuf,
    /// Class palette JSON.
    #[arg(long)]
    pub palette: PathBuf,
    /// Where to write the metrics report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let palette = Palette::load(&args.palette)?;
    // role-aware listing lets a synth fixture directory (pred_*/gt_*
    // prefixes) score directly; plain mask directories pair by file name
    let preds = list_role(&args.pred, "pred")?;
    let gts = list_role(&args.gt, "gt")?;
    if preds.is_empty() || gts.is_empty() {
        return Err(Error::malformed("eval input", "no PNG files to score").into());
    }
    if !preds.keys().eq(gts.keys()) {
        let missing: Vec<&str> = preds
            .keys()
            .filter(|k| !gts.contains_key(*k))
            .chain(gts.keys().filter(|k| !preds.contains_key(*k)))
            .map(|k| k.as_str())
            .collect();
        return Err(Error::malformed(
            "eval input",
            format!("unpaired files: {}", missing.join(", ")),
        )
        .into());
    }

    let mut matrix = ConfusionMatrix::new(palette.len())?;
    for (pred_path, gt_path) in preds.values().zip(gts.values()) {
        let pred = load_mask_png(pred_path, palette.len())?;
        let gt = load_mask_png(gt_path, palette.len())?;
        matrix.accumulate(&gt, &pred)?;
    }
    let report = matrix.report()?;
    write_json(&args.out, &report)?;
    print_metrics(&report);
    Ok(())
}

/// Fixed output order; keep in sync with the report JSON field order.
pub fn print_metrics(report: &MetricsReport) {
    println!("Acc       {}", fmt_opt(Some(report.acc)));
    println!("Class_avg {}", fmt_opt(Some(report.class_avg)));
    println!("F1        {}", fmt_opt(report.f1_macro));
    println!("mIoU      {}", fmt_opt(Some(report.miou)));
}

pub fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.6}"),
        None => "n/a".to_string(),
    }
}
