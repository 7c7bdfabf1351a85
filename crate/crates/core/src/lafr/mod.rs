//! Line-anchored facade revision.
//!
//! Preliminary semantic masks tend to blur window boundaries while the
//! photograph itself still shows them as crisp straight edges. This module
//! rebuilds each window region from those edges in four stages:
//!
//! 1. line acquisition - blur twice (5x5 then 3x3, sigma 5) and run the
//!    segment detector on the grayscale image
//! 2. instance acquisition - take the window-class mask, open it to drop
//!    speckle and bridges, label 4-connected components, and keep each
//!    component's bounding rectangle as its anchor
//! 3. filtering - for every anchor edge keep the single nearby segment that
//!    is close enough (distance gate `delta`) and parallel enough (angle
//!    gate `theta`); an anchor with any blank edge is discarded
//! 4. revision - for surviving anchors, repaint the old component with the
//!    modal class of its boundary ring, then stamp the rectangle integrated
//!    from the four segments back in as window
//!
//! Anchors are processed in ascending id; later rectangle fills win on
//! overlap, and all overlap is counted in the stats.

mod assign;
mod instances;
mod revise;

pub use assign::{assign_segments, edge_angle_gap, edge_distance, integrate};
pub use instances::acquire_instances;
pub use revise::revise;

use crate::error::{Error, Result};
use crate::lsd::{detect_lines, LineSegment, LsdParams};
use crate::raster::{gaussian_blur, ConnectedComponent, ImageBuffer, LabelMask, PixelRect};

/// The four anchor edges. Order is the slot order used everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Top = 0,
    Bottom = 1,
    Left = 2,
    Right = 3,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Top, Edge::Bottom, Edge::Left, Edge::Right];

    pub fn is_horizontal(self) -> bool {
        matches!(self, Edge::Top | Edge::Bottom)
    }
}

/// Structuring element for the instance-acquisition opening.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MorphologyParams {
    pub radius: usize,
    pub iterations: usize,
}

impl Default for MorphologyParams {
    fn default() -> Self {
        MorphologyParams {
            radius: 1,
            iterations: 2,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LafrParams {
    /// Mask index of the window class.
    pub window_class: u8,
    /// Distance gate in pixels: a segment farther than this from the anchor
    /// edge cannot fill it.
    pub delta: f64,
    /// Angle gate in radians between segment and edge orientation.
    pub theta: f64,
    /// The two pre-detection blurs as (kernel, sigma) pairs.
    pub blur: [(usize, f64); 2],
    pub morphology: MorphologyParams,
    /// Components smaller than this never become anchors.
    pub min_component_area: usize,
    /// A segment must overlap the edge span by this fraction of the edge
    /// length when projected onto the edge axis; 0 disables the gate.
    pub overlap_ratio: f64,
    /// Used when a component's boundary ring offers no non-window class.
    pub replacement_class: Option<u8>,
}

impl Default for LafrParams {
    fn default() -> Self {
        LafrParams {
            window_class: 1,
            delta: 20.0,
            theta: 0.1,
            blur: [(5, 5.0), (3, 5.0)],
            morphology: MorphologyParams::default(),
            min_component_area: 30,
            overlap_ratio: 0.3,
            replacement_class: None,
        }
    }
}

impl LafrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParam(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.theta > 0.0 && self.theta <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParam(format!(
                "theta must be in (0, pi/2] radians, got {}",
                self.theta
            )));
        }
        for &(kernel, sigma) in &self.blur {
            if kernel.is_multiple_of(2) || kernel == 0 || !(sigma > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "blur stage ({kernel}, {sigma}) needs an odd kernel and positive sigma"
                )));
            }
        }
        if self.morphology.radius == 0 || self.morphology.iterations == 0 {
            return Err(Error::InvalidParam(
                "morphology radius and iterations must be at least 1".into(),
            ));
        }
        if self.min_component_area == 0 {
            return Err(Error::InvalidParam(
                "min_component_area must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.overlap_ratio) {
            return Err(Error::InvalidParam(format!(
                "overlap_ratio must be in [0, 1], got {}",
                self.overlap_ratio
            )));
        }
        Ok(())
    }
}

/// One window anchor: the opened component and its bounding rectangle.
#[derive(Debug, Clone)]
pub struct WindowInstance {
    pub anchor_id: usize,
    pub component: ConnectedComponent,
    pub anchor: PixelRect,
}

/// A segment filling one anchor edge.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EdgeFill {
    /// Index into the segment list given to `assign_segments`.
    pub segment: usize,
    /// Midpoint-to-edge-line distance at assignment time.
    pub distance: f64,
}

/// Axis-aligned rectangle in continuous mask coordinates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RectF {
    pub top: f64,
    pub bottom: f64,
    pub left: f64,
    pub right: f64,
}

/// Filtering outcome for one anchor: the winning segment per edge, plus the
/// integrated rectangle once all four edges are filled and non-degenerate.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EdgeAssignment {
    pub anchor_id: usize,
    pub anchor: PixelRect,
    /// Slot order follows [`Edge::ALL`]: top, bottom, left, right.
    pub edges: [Option<EdgeFill>; 4],
    pub integrated: Option<RectF>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct RevisionStats {
    pub anchors_total: usize,
    pub anchors_revised: usize,
    pub anchors_discarded: usize,
    /// Pixels stamped window by more than one integrated rectangle.
    pub overlap_pixels: u64,
}

#[derive(Debug, Clone)]
pub struct RevisionResult {
    pub revised: LabelMask,
    pub assignments: Vec<EdgeAssignment>,
    pub stats: RevisionStats,
}

/// Instance acquisition + filtering + revision on a precomputed segment
/// list. This is the entry point when segments come from a file or from a
/// caller that wants to reuse one detection across parameter sweeps.
pub fn revise_with_segments(
    preliminary: &LabelMask,
    segments: &[LineSegment],
    params: &LafrParams,
) -> Result<RevisionResult> {
    params.validate()?;
    let instances = acquire_instances(preliminary, params)?;
    let assignments: Vec<EdgeAssignment> = instances
        .iter()
        .map(|inst| {
            let mut asg = assign_segments(inst, segments, params);
            asg.integrated = integrate(&asg, segments);
            asg
        })
        .collect();
    revise(preliminary, &instances, &assignments, params)
}

/// The full pipeline: grayscale, dual blur, detection, then revision.
pub fn run_lafr(
    image: &ImageBuffer,
    preliminary: &LabelMask,
    params: &LafrParams,
    lsd: &LsdParams,
) -> Result<RevisionResult> {
    params.validate()?;
    if image.width() != preliminary.width() || image.height() != preliminary.height() {
        return Err(Error::DimensionMismatch {
            expected_w: image.width(),
            expected_h: image.height(),
            got_w: preliminary.width(),
            got_h: preliminary.height(),
        });
    }
    let mut gray = image.to_grayscale();
    for &(kernel, sigma) in &params.blur {
        gray = gaussian_blur(&gray, kernel, sigma)?;
    }
    let segments = detect_lines(&gray, lsd)?;
    revise_with_segments(preliminary, &segments, params)
}
