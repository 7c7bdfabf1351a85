//! Confusion-matrix segmentation metrics.
//!
//! The matrix is oriented rows = ground truth, columns = prediction, which
//! makes the class-average denominator (column sums) a precision-style
//! quantity. Classes that never occur on the relevant side are excluded
//! from macro means instead of being scored 0 or 1; [`EvaluatedClasses`]
//! records exactly which classes entered each mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::LabelMask;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParam("class count must be at least 1".into()));
        }
        Ok(Self { k, counts: vec![0; k * k] })
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    /// Pixel count for (ground truth class, predicted class).
    pub fn count(&self, gt: usize, pred: usize) -> u64 {
        assert!(gt < self.k && pred < self.k);
        self.counts[gt * self.k + pred]
    }

    pub fn add(&mut self, gt: usize, pred: usize, n: u64) -> Result<()> {
        if gt >= self.k {
            return Err(Error::ClassOutOfRange { value: gt as u8, classes: self.k });
        }
        if pred >= self.k {
            return Err(Error::ClassOutOfRange { value: pred as u8, classes: self.k });
        }
        self.counts[gt * self.k + pred] += n;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count every pixel pair into the matrix. Validates before mutating,
    /// so a failed call leaves the matrix unchanged.
    pub fn accumulate(&mut self, gt: &LabelMask, pred: &LabelMask) -> Result<()> {
        if gt.width() != pred.width() || gt.height() != pred.height() {
            return Err(Error::DimensionMismatch {
                expected_w: gt.width(),
                expected_h: gt.height(),
                got_w: pred.width(),
                got_h: pred.height(),
            });
        }
        for mask in [gt, pred] {
            if mask.classes() > self.k {
                if let Some(&v) = mask.data().iter().find(|&&v| v as usize >= self.k) {
                    return Err(Error::ClassOutOfRange { value: v, classes: self.k });
                }
            }
        }
        for (&g, &p) in gt.data().iter().zip(pred.data().iter()) {
            self.counts[g as usize * self.k + p as usize] += 1;
        }
        Ok(())
    }

    /// Elementwise addition; partial matrices from independent workers can
    /// be merged in any order.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.k != self.k {
            return Err(Error::InvalidParam(format!(
                "cannot merge a {}-class matrix into a {}-class one",
                other.k, self.k
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
        Ok(())
    }

    fn row_sum(&self, k: usize) -> u64 {
        self.counts[k * self.k..(k + 1) * self.k].iter().sum()
    }

    fn col_sum(&self, k: usize) -> u64 {
        (0..self.k).map(|r| self.counts[r * self.k + k]).sum()
    }

    fn require_nonempty(&self) -> Result<u64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(total)
    }

    /// Fraction of pixels whose prediction matches the ground truth.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.require_nonempty()?;
        let trace: u64 = (0..self.k).map(|i| self.counts[i * self.k + i]).sum();
        Ok(trace as f64 / total as f64)
    }

    /// One-vs-rest precision, recall and F1 for one class. A 0/0 ratio is
    /// reported as `None`; F1 exists only when both factors do, and is 0
    /// when both exist but vanish.
    pub fn precision_recall_f1(&self, k: usize) -> (Option<f64>, Option<f64>, Option<f64>) {
        assert!(k < self.k);
        let tp = self.counts[k * self.k + k];
        let predicted = self.col_sum(k);
        let actual = self.row_sum(k);
        let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
        let recall = (actual > 0).then(|| tp as f64 / actual as f64);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        (precision, recall, f1)
    }

    /// Intersection over union for one class; `None` when the class occurs
    /// in neither ground truth nor prediction.
    pub fn iou(&self, k: usize) -> Option<f64> {
        assert!(k < self.k);
        let tp = self.counts[k * self.k + k];
        let union = self.row_sum(k) + self.col_sum(k) - tp;
        (union > 0).then(|| tp as f64 / union as f64)
    }

    /// Mean over classes of diag / column sum, skipping classes that were
    /// never predicted.
    pub fn class_average(&self) -> Result<f64> {
        self.require_nonempty()?;
        let mut sum = 0.0;
        let mut n = 0usize;
        for k in 0..self.k {
            let col = self.col_sum(k);
            if col > 0 {
                sum += self.counts[k * self.k + k] as f64 / col as f64;
                n += 1;
            }
        }
        Ok(sum / n as f64)
    }

    /// Mean IoU over classes present in ground truth or prediction.
    pub fn miou(&self) -> Result<f64> {
        self.require_nonempty()?;
        let ious: Vec<f64> = (0..self.k).filter_map(|k| self.iou(k)).collect();
        Ok(ious.iter().sum::<f64>() / ious.len() as f64)
    }

    pub fn report(&self) -> Result<MetricsReport> {
        self.require_nonempty()?;
        let mut per_class = Vec::with_capacity(self.k);
        let mut evaluated = EvaluatedClasses::default();
        let mut f1_sum = 0.0;
        for k in 0..self.k {
            let (precision, recall, f1) = self.precision_recall_f1(k);
            let iou = self.iou(k);
            if precision.is_some() {
                evaluated.class_avg.push(k);
            }
            if let Some(f) = f1 {
                evaluated.f1.push(k);
                f1_sum += f;
            }
            if iou.is_some() {
                evaluated.iou.push(k);
            }
            per_class.push(ClassMetrics {
                class: k,
                precision,
                recall,
                f1,
                iou,
                support: self.row_sum(k),
            });
        }
        let f1_macro = (!evaluated.f1.is_empty()).then(|| f1_sum / evaluated.f1.len() as f64);
        Ok(MetricsReport {
            acc: self.accuracy()?,
            class_avg: self.class_average()?,
            f1_macro,
            miou: self.miou()?,
            per_class,
            evaluated_classes: evaluated,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub iou: Option<f64>,
    /// ground-truth pixel count
    pub support: u64,
}

/// Which classes entered each macro mean.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatedClasses {
    pub class_avg: Vec<usize>,
    pub f1: Vec<usize>,
    pub iou: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub class_avg: f64,
    /// absent when no class has both precision and recall defined
    pub f1_macro: Option<f64>,
    pub miou: f64,
    pub per_class: Vec<ClassMetrics>,
    pub evaluated_classes: EvaluatedClasses,
}
