//! Mask sources that do not need the neural segmenter, and overlap metrics.

use thiserror::Error;

use crate::imaging::{BinaryMask, MaskOrigin, SliceImage};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
}

pub type Result<T> = std::result::Result<T, SegmentError>;

/// Overlap figures for a predicted mask against a reference.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SegmentationMetrics {
    pub dice: f64,
    pub iou: f64,
    /// Only defined when probabilistic predictions were supplied.
    pub bce: Option<f64>,
}

/// Running intersection and cardinality counts, so overlap can be
/// accumulated over a stack of slices.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct OverlapCounts {
    pub intersection: u64,
    pub a: u64,
    pub b: u64,
}

impl OverlapCounts {
    pub fn of(a: &BinaryMask, b: &BinaryMask) -> Result<Self> {
        let mut counts = OverlapCounts::default();
        counts.add(a, b)?;
        Ok(counts)
    }

    pub fn add(&mut self, a: &BinaryMask, b: &BinaryMask) -> Result<()> {
        if a.dims() != b.dims() {
            return Err(SegmentError::DimensionMismatch {
                left: a.dims(),
                right: b.dims(),
            });
        }
        for (&pa, &pb) in a.bits.iter().zip(&b.bits) {
            self.a += pa as u64;
            self.b += pb as u64;
            self.intersection += (pa && pb) as u64;
        }
        Ok(())
    }

    pub fn union(&self) -> u64 {
        self.a + self.b - self.intersection
    }

    /// `2|A∩B| / (|A|+|B|)`, 1.0 when both are empty.
    pub fn dice(&self) -> f64 {
        let total = self.a + self.b;
        if total == 0 {
            1.0
        } else {
            2.0 * self.intersection as f64 / total as f64
        }
    }

    /// `|A∩B| / |A∪B|`, 1.0 when both are empty.
    pub fn iou(&self) -> f64 {
        let union = self.union();
        if union == 0 {
            1.0
        } else {
            self.intersection as f64 / union as f64
        }
    }

    pub fn metrics(&self) -> SegmentationMetrics {
        SegmentationMetrics {
            dice: self.dice(),
            iou: self.iou(),
            bce: None,
        }
    }
}

pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    Ok(OverlapCounts::of(a, b)?.dice())
}

pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    Ok(OverlapCounts::of(a, b)?.iou())
}

/// Mean binary cross-entropy of `logits` against `target`, in the
/// overflow-free form `max(x, 0) - x*y + ln(1 + e^-|x|)`.
pub fn bce_with_logits(logits: &[f64], target: &BinaryMask) -> Result<f64> {
    if logits.len() != target.bits.len() {
        return Err(SegmentError::DimensionMismatch {
            left: (logits.len(), 1),
            right: (target.bits.len(), 1),
        });
    }
    if logits.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = logits
        .iter()
        .zip(&target.bits)
        .map(|(&x, &t)| {
            let y = if t { 1.0 } else { 0.0 };
            x.max(0.0) - x * y + (-x.abs()).exp().ln_1p()
        })
        .sum();
    Ok(total / logits.len() as f64)
}

/// Thresholds `slice` at `threshold` (inclusive) and keeps the largest
/// 4-connected component, provided it has at least `min_component_px`
/// pixels. Ties go to the component found first in raster order.
pub fn baseline_segment(slice: &SliceImage, threshold: u8, min_component_px: usize) -> BinaryMask {
    let (w, h) = slice.dims();
    let fg: Vec<bool> = slice.samples.iter().map(|&v| v >= threshold).collect();
    let mut label = vec![0u32; w * h];
    let mut best: Option<(u32, usize)> = None;
    let mut next = 0u32;
    let mut stack = Vec::new();

    for start in 0..w * h {
        if !fg[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        stack.push(start);
        let mut area = 0usize;
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if fg[j] && label[j] == 0 {
                    label[j] = next;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if best.is_none_or(|(_, a)| area > a) {
            best = Some((next, area));
        }
    }

    let keep = match best {
        Some((id, area)) if area >= min_component_px => id,
        _ => return BinaryMask::empty(w, h, MaskOrigin::Baseline),
    };
    BinaryMask {
        width: w,
        height: h,
        bits: label.iter().map(|&l| l == keep).collect(),
        origin: MaskOrigin::Baseline,
    }
}
