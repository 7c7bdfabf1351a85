use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::raster::{ImageBuffer, LabelMask};

/// Load an 8-bit grayscale or RGB PNG. Anything else is rejected rather
/// than silently converted.
pub fn load_image_png(path: &Path) -> Result<ImageBuffer> {
    let decoded = decode(path)?;
    match decoded {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            let data = img.into_raw().into_iter().map(|v| v as f32).collect();
            ImageBuffer::from_vec(w, h, 1, data)
        }
        DynamicImage::ImageRgb8(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            let data = img.into_raw().into_iter().map(|v| v as f32).collect();
            ImageBuffer::from_vec(w, h, 3, data)
        }
        other => Err(Error::BadImage {
            path: path.to_path_buf(),
            reason: format!("unsupported pixel format {:?}, need 8-bit gray or RGB", other.color()),
        }),
    }
}

/// Write an image as 8-bit PNG, rounding and clamping each sample.
pub fn save_image_png(path: &Path, img: &ImageBuffer) -> Result<()> {
    let to_u8 = |v: f32| v.round().clamp(0.0, 255.0) as u8;
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let dynimg = match img.channels() {
        1 => DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(w, h, bytes).expect("buffer sized by construction"),
        ),
        _ => DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(w, h, bytes).expect("buffer sized by construction"),
        ),
    };
    dynimg
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| map_image_error(path, e))
}

/// Load a label mask stored as an 8-bit grayscale PNG of class indices.
/// Every value must be below `classes`.
pub fn load_mask_png(path: &Path, classes: usize) -> Result<LabelMask> {
    let decoded = decode(path)?;
    match decoded {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            LabelMask::from_vec(w, h, classes, img.into_raw())
        }
        other => Err(Error::BadImage {
            path: path.to_path_buf(),
            reason: format!("mask must be 8-bit grayscale, got {:?}", other.color()),
        }),
    }
}

/// Write a label mask as an 8-bit grayscale PNG of raw class indices.
pub fn save_mask_png(path: &Path, mask: &LabelMask) -> Result<()> {
    let (w, h) = (mask.width() as u32, mask.height() as u32);
    let img = image::GrayImage::from_raw(w, h, mask.data().to_vec())
        .expect("buffer sized by construction");
    DynamicImage::ImageLuma8(img)
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| map_image_error(path, e))
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    image::load(BufReader::new(file), ImageFormat::Png).map_err(|e| map_image_error(path, e))
}

fn map_image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::BadImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}
