//! Pipeline configuration: one JSON document describing a batch run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use facade_core::{Error, LafrParams, LsdParams, Palette, VitConfig};

use crate::files::read_json;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Class palette shared by every mask in the run.
    pub palette: PathBuf,
    /// Directory of input photographs.
    pub images: PathBuf,
    /// Directory of preliminary masks; ignored when `vit` is set.
    pub masks: PathBuf,
    /// Directory of ground-truth masks; enables the before/after table.
    pub gt: Option<PathBuf>,
    /// Output directory, created if missing.
    pub output: PathBuf,
    /// Window class name; resolved against the palette.
    pub window_class: String,
    pub lafr: LafrParams,
    pub lsd: LsdParams,
    /// When set, preliminary masks come from the toy segmenter instead
    /// of the `masks` directory.
    pub vit: Option<VitConfig>,
    /// Worker count for the cross-image map; 1 = serial.
    pub jobs: usize,
    /// Blend factor for the mask-over-image overlays.
    pub overlay_alpha: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            palette: PathBuf::from("palette.json"),
            images: PathBuf::from("."),
            masks: PathBuf::from("."),
            gt: None,
            output: PathBuf::from("out"),
            window_class: "window".to_string(),
            lafr: LafrParams::default(),
            lsd: LsdParams::default(),
            vit: None,
            jobs: 1,
            overlay_alpha: 0.5,
        }
    }
}

impl PipelineConfig {
    /// Read a config and resolve relative paths against the file's parent.
    pub fn load(path: &Path) -> Result<PipelineConfig, Error> {
        let mut config: PipelineConfig = read_json(path)?;
        if let Some(base) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            for p in [
                &mut config.palette,
                &mut config.images,
                &mut config.masks,
                &mut config.output,
            ] {
                if p.is_relative() {
                    *p = base.join(&p);
                }
            }
            if let Some(gt) = &mut config.gt {
                if gt.is_relative() {
                    *gt = base.join(&gt);
                }
            }
        }
        Ok(config)
    }

    /// Check referenced files, resolve the window class, and return the
    /// palette plus LAFR params with the resolved class index.
    pub fn resolve(&self) -> Result<(Palette, LafrParams), Error> {
        for (what, dir, required) in [
            ("images", &self.images, true),
            ("masks", &self.masks, self.vit.is_none()),
        ] {
            if required && !dir.is_dir() {
                return Err(Error::malformed(
                    "pipeline config",
                    format!("{what} directory {} does not exist", dir.display()),
                ));
            }
        }
        if let Some(gt) = &self.gt {
            if !gt.is_dir() {
                return Err(Error::malformed(
                    "pipeline config",
                    format!("gt directory {} does not exist", gt.display()),
                ));
            }
        }
        if self.jobs == 0 {
            return Err(Error::InvalidParam("jobs must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.overlay_alpha) {
            return Err(Error::InvalidParam(format!(
                "overlay_alpha must be in [0, 1], got {}",
                self.overlay_alpha
            )));
        }
        let palette = Palette::load(&self.palette)?;
        let window = palette
            .index_of(&self.window_class)
            .ok_or_else(|| Error::UnknownWindowClass(self.window_class.clone()))?;
        if let Some(vit) = &self.vit {
            vit.validate()?;
            if vit.classes != palette.len() {
                return Err(Error::InvalidParam(format!(
                    "segmenter emits {} classes but the palette has {}",
                    vit.classes,
                    palette.len()
                )));
            }
        }
        let mut lafr = self.lafr.clone();
        lafr.window_class = window;
        lafr.validate()?;
        self.lsd.validate()?;
        Ok((palette, lafr))
    }
}
