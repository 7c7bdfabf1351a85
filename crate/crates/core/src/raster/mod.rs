//! Image and mask substrate shared by every stage.
//!
//! Images are stored as interleaved `f32` at the 0-255 scale so that blur
//! and gradient stages keep sub-integer precision; masks are dense `u8`
//! class indices. Both are plain row-major buffers, no strides.

mod blur;
mod components;
mod morph;
mod palette;
mod png;

pub use blur::gaussian_blur;
pub use components::{connected_components, Connectivity};
pub use morph::{dilate, erode, opening};
pub use palette::{ClassDef, Palette};
pub use png::{load_image_png, load_mask_png, save_image_png, save_mask_png};

use crate::error::{Error, Result};

/// Interleaved float image, values on the 0-255 scale, 1 or 3 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        assert!(channels == 1 || channels == 3, "1 or 3 channels only");
        ImageBuffer {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParam(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidParam(format!(
                "buffer length {} does not match {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f32) {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    /// Luma conversion with BT.601 weights; 1-channel input is a copy.
    pub fn to_grayscale(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let mut out = ImageBuffer::new(self.width, self.height, 1);
        for i in 0..self.width * self.height {
            let r = self.data[i * 3] as f64;
            let g = self.data[i * 3 + 1] as f64;
            let b = self.data[i * 3 + 2] as f64;
            out.data[i] = (0.299 * r + 0.587 * g + 0.114 * b) as f32;
        }
        out
    }
}

/// Dense semantic mask; every value must stay below `classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    classes: usize,
    data: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, classes: usize) -> Self {
        assert!((1..=256).contains(&classes));
        LabelMask {
            width,
            height,
            classes,
            data: vec![0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, classes: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParam(format!(
                "mask buffer length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if let Some(&v) = data.iter().find(|&&v| (v as usize) >= classes) {
            return Err(Error::ClassOutOfRange { value: v, classes });
        }
        Ok(LabelMask {
            width,
            height,
            classes,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        debug_assert!((value as usize) < self.classes, "class out of range");
        self.data[y * self.width + x] = value;
    }

    /// Binary mask of pixels equal to `class`.
    pub fn class_mask(&self, class: u8) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v == class).collect(),
        }
    }
}

/// Flat boolean raster used by morphology and component labeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height);
        BinaryMask {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }
}

/// Inclusive pixel rectangle, `top <= bottom`, `left <= right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PixelRect {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl PixelRect {
    pub fn width(&self) -> usize {
        self.right - self.left + 1
    }

    pub fn height(&self) -> usize {
        self.bottom - self.top + 1
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.left && x <= self.right && y >= self.top && y <= self.bottom
    }
}

/// One 4- or 8-connected foreground region.
///
/// `id` is the position in the row-major discovery order of first pixels,
/// so labeling the same mask twice gives identical ids.
#[derive(Debug, Clone)]
pub struct ConnectedComponent {
    pub id: usize,
    /// Member coordinates in row-major order.
    pub pixels: Vec<(u32, u32)>,
    pub bounds: PixelRect,
}

impl ConnectedComponent {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}
