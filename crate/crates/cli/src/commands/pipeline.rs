use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Parser;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use facade_core::lafr::run_lafr;
use facade_core::raster::{load_image_png, load_mask_png, save_image_png, save_mask_png};
use facade_core::vit::segment_forward;
use facade_core::{
    ConfusionMatrix, Error, ImageBuffer, LabelMask, MetricsReport, Palette, RevisionStats,
};

use crate::commands::eval::fmt_opt;
use crate::config::PipelineConfig;
use crate::files::{list_role, write_json};
use crate::render::overlay;
use crate::{CliError, StageExt};

#[derive(Parser, Debug)]
pub struct Args {
    /// Pipeline config JSON.
    pub config: PathBuf,
    /// Override the configured worker count.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Override the configured output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Override the configured overlay alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
}

/// Whole-run summary written to `pipeline_report.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PipelineReport {
    pub images: usize,
    pub anchors_total: usize,
    pub anchors_revised: usize,
    pub anchors_discarded: usize,
    pub overlap_pixels: u64,
    pub before: Option<MetricsReport>,
    pub after: Option<MetricsReport>,
}

struct WorkItem {
    key: String,
    image: PathBuf,
    mask: Option<PathBuf>,
    gt: Option<PathBuf>,
}

struct ItemOutcome {
    stats: RevisionStats,
    scored: Option<(ConfusionMatrix, ConfusionMatrix)>,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let mut config =
        PipelineConfig::load(&args.config).stage(|| "config stage".to_string())?;
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    if let Some(output) = args.output {
        config.output = output;
    }
    if let Some(alpha) = args.alpha {
        config.overlay_alpha = alpha;
    }
    let (palette, lafr) = config.resolve().stage(|| "config stage".to_string())?;

    let items = collect_items(&config).stage(|| "pairing stage".to_string())?;
    std::fs::create_dir_all(&config.output)
        .map_err(|e| Error::io(&config.output, e))
        .stage(|| "output stage".to_string())?;

    let process = |item: &WorkItem| -> Result<ItemOutcome, CliError> {
        process_item(item, &config, &palette, &lafr)
    };
    let outcomes: Vec<ItemOutcome> = if config.jobs == 1 {
        items.iter().map(process).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::InvalidParam(format!("cannot start {} workers: {e}", config.jobs)))
            .stage(|| "worker stage".to_string())?;
        pool.install(|| items.par_iter().map(process).collect::<Result<_, _>>())?
    };

    let mut stats = RevisionStats::default();
    let mut before = ConfusionMatrix::new(palette.len())?;
    let mut after = ConfusionMatrix::new(palette.len())?;
    let mut any_scored = false;
    for outcome in &outcomes {
        stats.anchors_total += outcome.stats.anchors_total;
        stats.anchors_revised += outcome.stats.anchors_revised;
        stats.anchors_discarded += outcome.stats.anchors_discarded;
        stats.overlap_pixels += outcome.stats.overlap_pixels;
        if let Some((b, a)) = &outcome.scored {
            before.merge(b).stage(|| "scoring stage".to_string())?;
            after.merge(a).stage(|| "scoring stage".to_string())?;
            any_scored = true;
        }
    }

    let report = PipelineReport {
        images: items.len(),
        anchors_total: stats.anchors_total,
        anchors_revised: stats.anchors_revised,
        anchors_discarded: stats.anchors_discarded,
        overlap_pixels: stats.overlap_pixels,
        before: if any_scored { Some(before.report().stage(|| "scoring stage".to_string())?) } else { None },
        after: if any_scored { Some(after.report().stage(|| "scoring stage".to_string())?) } else { None },
    };
    write_json(&config.output.join("pipeline_report.json"), &report)
        .stage(|| "report stage".to_string())?;
    print_report(&report, &palette, &config.window_class);
    Ok(())
}

fn collect_items(config: &PipelineConfig) -> Result<Vec<WorkItem>, Error> {
    let images = list_role(&config.images, "img")?;
    if images.is_empty() {
        return Err(Error::malformed(
            "pipeline input",
            format!("no images found in {}", config.images.display()),
        ));
    }
    let masks: BTreeMap<String, PathBuf> = if config.vit.is_some() {
        BTreeMap::new()
    } else {
        list_role(&config.masks, "pred")?
    };
    let gts: Option<BTreeMap<String, PathBuf>> = match &config.gt {
        Some(dir) => Some(list_role(dir, "gt")?),
        None => None,
    };

    let mut items = Vec::with_capacity(images.len());
    for (key, image) in images {
        let mask = if config.vit.is_some() {
            None
        } else {
            Some(masks.get(&key).cloned().ok_or_else(|| {
                Error::malformed("pipeline input", format!("no mask paired with image {key}"))
            })?)
        };
        let gt = match &gts {
            Some(gts) => Some(gts.get(&key).cloned().ok_or_else(|| {
                Error::malformed(
                    "pipeline input",
                    format!("no ground truth paired with image {key}"),
                )
            })?),
            None => None,
        };
        items.push(WorkItem { key, image, mask, gt });
    }
    Ok(items)
}

fn process_item(
    item: &WorkItem,
    config: &PipelineConfig,
    palette: &Palette,
    lafr: &facade_core::LafrParams,
) -> Result<ItemOutcome, CliError> {
    let image = load_image_png(&item.image)
        .stage(|| format!("load stage on {}", item.key))?;
    let preliminary: LabelMask = match (&config.vit, &item.mask) {
        (Some(vit), _) => segment_forward(&image, vit)
            .stage(|| format!("segment stage on {}", item.key))?,
        (None, Some(path)) => load_mask_png(path, palette.len())
            .stage(|| format!("load stage on {}", item.key))?,
        (None, None) => unreachable!("pairing guarantees a mask without a segmenter"),
    };

    let result = run_lafr(&image, &preliminary, lafr, &config.lsd)
        .stage(|| format!("revise stage on {}", item.key))?;

    write_outputs(item, config, &image, &preliminary, &result.revised)
        .stage(|| format!("write stage on {}", item.key))?;

    let scored = match &item.gt {
        Some(gt_path) => {
            let gt = load_mask_png(gt_path, palette.len())
                .stage(|| format!("load stage on {}", item.key))?;
            let mut b = ConfusionMatrix::new(palette.len())
                .stage(|| format!("scoring stage on {}", item.key))?;
            b.accumulate(&gt, &preliminary)
                .stage(|| format!("scoring stage on {}", item.key))?;
            let mut a = ConfusionMatrix::new(palette.len())
                .stage(|| format!("scoring stage on {}", item.key))?;
            a.accumulate(&gt, &result.revised)
                .stage(|| format!("scoring stage on {}", item.key))?;
            Some((b, a))
        }
        None => None,
    };
    Ok(ItemOutcome { stats: result.stats, scored })
}

fn write_outputs(
    item: &WorkItem,
    config: &PipelineConfig,
    image: &ImageBuffer,
    preliminary: &LabelMask,
    revised: &LabelMask,
) -> Result<(), Error> {
    let out = &config.output;
    save_mask_png(&out.join(format!("revised_{}", item.key)), revised)?;
    if config.vit.is_some() {
        save_mask_png(&out.join(format!("preliminary_{}", item.key)), preliminary)?;
    }
    let blend = overlay(image, revised, config.overlay_alpha);
    save_image_png(&out.join(format!("overlay_{}", item.key)), &blend)?;
    Ok(())
}

/// Before/after table in the shape of a per-class IoU comparison; the
/// window and building rows are the ones the revision is meant to move.
fn print_report(report: &PipelineReport, palette: &Palette, window_class: &str) {
    println!(
        "images {}  anchors {}  revised {}  discarded {}",
        report.images, report.anchors_total, report.anchors_revised, report.anchors_discarded
    );
    let (Some(before), Some(after)) = (&report.before, &report.after) else {
        println!("no ground truth provided; skipping metrics");
        return;
    };
    println!();
    println!("  {:<12} {:>10} {:>10} {:>10}", "class", "before", "after", "delta");
    for (b, a) in before.per_class.iter().zip(after.per_class.iter()) {
        if b.iou.is_none() && a.iou.is_none() {
            continue;
        }
        let name = palette
            .name_of(b.class as u8)
            .unwrap_or("?")
            .to_string();
        let delta = match (b.iou, a.iou) {
            (Some(x), Some(y)) => format!("{:+.6}", y - x),
            _ => "n/a".to_string(),
        };
        let mark = if name == window_class || name == "building" { "*" } else { " " };
        println!(
            "{mark} {:<12} {:>10} {:>10} {:>10}",
            name,
            fmt_opt(b.iou),
            fmt_opt(a.iou),
            delta
        );
    }
    println!();
    for (label, get) in [
        ("Acc", &(|r: &MetricsReport| Some(r.acc)) as &dyn Fn(&MetricsReport) -> Option<f64>),
        ("Class_avg", &|r: &MetricsReport| Some(r.class_avg)),
        ("F1", &|r: &MetricsReport| r.f1_macro),
        ("mIoU", &|r: &MetricsReport| Some(r.miou)),
    ] {
        println!(
            "{label:<9} {} -> {}",
            fmt_opt(get(before)),
            fmt_opt(get(after))
        );
    }
}
