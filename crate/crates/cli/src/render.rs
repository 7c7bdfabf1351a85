//! Qualitative-inspection rendering: mask overlays and line drawings.

use facade_core::lafr::RectF;
use facade_core::{ImageBuffer, LabelMask, LineSegment};

/// Fixed class colors, cycled when a palette is longer. Chosen for
/// contrast on grayscale facades, not for semantics.
const CLASS_COLORS: [[f32; 3]; 12] = [
    [64.0, 64.0, 64.0],
    [66.0, 135.0, 245.0],
    [220.0, 60.0, 60.0],
    [60.0, 200.0, 90.0],
    [240.0, 180.0, 40.0],
    [170.0, 80.0, 220.0],
    [80.0, 220.0, 220.0],
    [240.0, 120.0, 200.0],
    [150.0, 200.0, 60.0],
    [230.0, 140.0, 70.0],
    [90.0, 110.0, 230.0],
    [180.0, 180.0, 180.0],
];

/// Blend the mask's class colors over the image at the given alpha.
pub fn overlay(image: &ImageBuffer, mask: &LabelMask, alpha: f64) -> ImageBuffer {
    let a = alpha.clamp(0.0, 1.0) as f32;
    let mut out = ImageBuffer::new(image.width(), image.height(), 3);
    for y in 0..image.height() {
        for x in 0..image.width() {
            let color = CLASS_COLORS[mask.get(x, y) as usize % CLASS_COLORS.len()];
            for (c, &tint) in color.iter().enumerate() {
                let base = if image.channels() == 3 {
                    image.get(x, y, c)
                } else {
                    image.get(x, y, 0)
                };
                out.set(x, y, c, base * (1.0 - a) + tint * a);
            }
        }
    }
    out
}

/// Grayscale copy of the image, dimmed, with segments drawn bright.
pub fn draw_segments(image: &ImageBuffer, segments: &[LineSegment]) -> ImageBuffer {
    let mut out = image.to_grayscale();
    for v in out.data_mut() {
        *v *= 0.4;
    }
    for seg in segments {
        draw_line(&mut out, seg.x1, seg.y1, seg.x2, seg.y2);
    }
    out
}

/// Like [`draw_segments`] but for integrated revision rectangles.
pub fn draw_rects(image: &ImageBuffer, rects: &[RectF]) -> ImageBuffer {
    let mut out = image.to_grayscale();
    for v in out.data_mut() {
        *v *= 0.4;
    }
    for r in rects {
        draw_line(&mut out, r.left, r.top, r.right, r.top);
        draw_line(&mut out, r.left, r.bottom, r.right, r.bottom);
        draw_line(&mut out, r.left, r.top, r.left, r.bottom);
        draw_line(&mut out, r.right, r.top, r.right, r.bottom);
    }
    out
}

/// Binary class mask rendered as an 8-bit image.
pub fn class_image(mask: &LabelMask, class: u8) -> ImageBuffer {
    let mut out = ImageBuffer::new(mask.width(), mask.height(), 1);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) == class {
                out.set(x, y, 0, 255.0);
            }
        }
    }
    out
}

/// Unit-step sampling is plenty for inspection images.
fn draw_line(img: &mut ImageBuffer, x1: f64, y1: f64, x2: f64, y2: f64) {
    let len = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
    let steps = len.ceil() as usize + 1;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = (x1 + (x2 - x1) * t).round();
        let y = (y1 + (y2 - y1) * t).round();
        if x >= 0.0 && y >= 0.0 && (x as usize) < img.width() && (y as usize) < img.height() {
            img.set(x as usize, y as usize, 0, 255.0);
        }
    }
}
