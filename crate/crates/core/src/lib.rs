//! Facade segmentation revision toolkit.
//!
//! The centerpiece is [`lafr`]: a training-free post-process that snaps the
//! window regions of a preliminary semantic mask onto line segments detected
//! in the photograph. Around it sit the pieces needed to run and evaluate
//! that idea end to end:
//!
//! * [`raster`] - float image buffers, label masks, Gaussian blur,
//!   binary morphology, connected components, PNG and palette I/O
//! * [`lsd`] - a from-scratch a-contrario line segment detector
//! * [`metrics`] - confusion-matrix segmentation metrics
//! * [`synth`] - deterministic synthetic facade fixtures with controllable
//!   mask corruption
//! * [`vit`] - a seeded, untrained transformer segmenter used as a cheap
//!   preliminary-mask source and as a numeric testbed
//!
//! Everything is deterministic given explicit seeds; nothing spawns threads.
//! Callers that want cross-image parallelism can run one image per task.

// Parameter guards are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which the inverted comparison would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lafr;
pub mod lsd;
pub mod metrics;
pub mod raster;
pub mod synth;
pub mod vit;

pub use error::{Error, Result};
pub use lafr::{EdgeAssignment, LafrParams, RevisionResult, RevisionStats, WindowInstance};
pub use lsd::{LineSegment, LsdParams};
pub use metrics::{ClassMetrics, ConfusionMatrix, EvaluatedClasses, MetricsReport};
pub use raster::{
    BinaryMask, ConnectedComponent, Connectivity, ImageBuffer, LabelMask, Palette, PixelRect,
};
pub use synth::{CorruptionParams, FacadeSpec};
pub use vit::{ForwardTrace, VitConfig, WeightSet};
