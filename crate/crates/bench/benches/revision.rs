//! Revision-stage timings on a 2560x1440 facade, split by stage so a
//! regression names its culprit. The full run is the number the efficiency
//! gate watches; blur, detection and mask revision are its three parts.

use criterion::{criterion_group, criterion_main, Criterion};
use facade_core::lafr::{revise_with_segments, run_lafr, LafrParams};
use facade_core::lsd::{detect_lines, LsdParams};
use facade_core::raster::gaussian_blur;
use facade_core::synth::{corrupt, generate, CorruptionParams, FacadeSpec};

fn revision_2560x1440(c: &mut Criterion) {
    let spec = FacadeSpec {
        width: 2560,
        height: 1440,
        rows: 12,
        cols: 18,
        window_width: 80,
        window_height: 60,
        margin_x: 40,
        margin_y: 40,
        spacing_x: 50,
        spacing_y: 40,
        sky_height: 100,
        roof_height: 40,
        ..FacadeSpec::default()
    };
    let (image, gt) = generate(&spec, 7).unwrap();
    let corruption = CorruptionParams {
        jitter_amplitude: 3,
        dropout: 0.05,
        seed: 7,
        ..CorruptionParams::default()
    };
    let pred = corrupt(&gt, &corruption).unwrap();
    let params = LafrParams::default();
    let lsd = LsdParams::default();

    let mut group = c.benchmark_group("revision_2560x1440");
    group.sample_size(10);

    group.bench_function("full", |b| {
        b.iter(|| run_lafr(&image, &pred, &params, &lsd).unwrap())
    });

    let gray = image.to_grayscale();
    group.bench_function("blur", |b| {
        b.iter(|| {
            let mut g = gaussian_blur(&gray, params.blur[0].0, params.blur[0].1).unwrap();
            g = gaussian_blur(&g, params.blur[1].0, params.blur[1].1).unwrap();
            g
        })
    });

    let mut blurred = gaussian_blur(&gray, params.blur[0].0, params.blur[0].1).unwrap();
    blurred = gaussian_blur(&blurred, params.blur[1].0, params.blur[1].1).unwrap();
    group.bench_function("detect", |b| {
        b.iter(|| detect_lines(&blurred, &lsd).unwrap())
    });

    let segments = detect_lines(&blurred, &lsd).unwrap();
    group.bench_function("revise", |b| {
        b.iter(|| revise_with_segments(&pred, &segments, &params).unwrap())
    });

    group.finish();
}

criterion_group!(benches, revision_2560x1440);
criterion_main!(benches);
