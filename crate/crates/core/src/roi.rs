//! Per-slice ROI geometry: bounding boxes, square placement, and the
//! carve/recompose pair that splits a slice into ROI patch and background.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{BinaryMask, SliceImage};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RoiError {
    #[error("square side {side} does not fit a {width}x{height} image")]
    SquareTooLarge {
        side: usize,
        width: usize,
        height: usize,
    },
    #[error("square side {0} must be even and non-zero")]
    OddSide(usize),
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
}

pub type Result<T> = std::result::Result<T, RoiError>;

/// Inclusive pixel bounds of a mask.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min + 1
    }

    pub fn center(&self) -> (usize, usize) {
        ((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)
    }
}

/// A `side`×`side` square with top-left corner at `(x0, y0)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub x0: usize,
    pub y0: usize,
    pub side: usize,
}

impl Placement {
    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.side && y >= self.y0 && y < self.y0 + self.side
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x0 + self.side <= width && self.y0 + self.side <= height
    }

    pub fn covers(&self, bbox: &BoundingBox) -> bool {
        self.contains(bbox.x_min, bbox.y_min) && self.contains(bbox.x_max, bbox.y_max)
    }

    pub fn area(&self) -> usize {
        self.side * self.side
    }
}

/// Where the ROI square of one slice sits; the recomposition contract.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiRecord {
    pub slice_index: usize,
    pub present: bool,
    pub rect: Placement,
    pub source_bbox: Option<BoundingBox>,
}

impl RoiRecord {
    /// A slice without ROI. The rect keeps the bundle's square size so every
    /// record shares the stream geometry.
    pub fn absent(slice_index: usize, side: usize) -> Self {
        RoiRecord {
            slice_index,
            present: false,
            rect: Placement { x0: 0, y0: 0, side },
            source_bbox: None,
        }
    }

    /// True when the source bbox does not fit inside the square.
    pub fn truncated(&self) -> bool {
        self.source_bbox.is_some_and(|b| !self.rect.covers(&b))
    }
}

/// Tight bounds of the set pixels, `None` for an empty mask.
pub fn mask_bbox(mask: &BinaryMask) -> Option<BoundingBox> {
    let mut bbox: Option<BoundingBox> = None;
    for (x, y) in mask.set_pixels() {
        let b = bbox.get_or_insert(BoundingBox {
            x_min: x,
            y_min: y,
            x_max: x,
            y_max: y,
        });
        b.x_min = b.x_min.min(x);
        b.x_max = b.x_max.max(x);
        // raster order: y is non-decreasing
        b.y_max = y;
    }
    bbox
}

pub fn validate_side(side: usize, width: usize, height: usize) -> Result<()> {
    if side == 0 || !side.is_multiple_of(2) {
        return Err(RoiError::OddSide(side));
    }
    if side > width || side > height {
        return Err(RoiError::SquareTooLarge {
            side,
            width,
            height,
        });
    }
    Ok(())
}

/// Centers a `side` square on the bbox center (floor convention), shifting
/// it back inside the image where it would overhang. The square is never
/// shrunk, so a bbox larger than `side` is only partly covered.
pub fn place_square(bbox: &BoundingBox, side: usize, image: (usize, usize)) -> Result<Placement> {
    let (width, height) = image;
    validate_side(side, width, height)?;
    let (cx, cy) = bbox.center();
    let half = side / 2;
    let x0 = cx.saturating_sub(half).min(width - side);
    let y0 = cy.saturating_sub(half).min(height - side);
    Ok(Placement { x0, y0, side })
}

/// Splits `slice` into the pixel-exact crop under `rect` and a copy of the
/// slice with that square zeroed.
pub fn carve(slice: &SliceImage, rect: &Placement) -> Result<(SliceImage, SliceImage)> {
    if !rect.fits(slice.width, slice.height) {
        return Err(RoiError::GeometryMismatch(format!(
            "{rect:?} outside {}x{}",
            slice.width, slice.height
        )));
    }
    let mut patch = Vec::with_capacity(rect.area());
    let mut background = slice.clone();
    for y in rect.y0..rect.y0 + rect.side {
        let row = y * slice.width;
        let span = row + rect.x0..row + rect.x0 + rect.side;
        patch.extend_from_slice(&slice.samples[span.clone()]);
        background.samples[span].fill(0);
    }
    let patch = SliceImage {
        width: rect.side,
        height: rect.side,
        samples: patch,
    };
    Ok((patch, background))
}

/// Pastes `patch` over `background` at `rect`.
pub fn recompose(patch: &SliceImage, background: &SliceImage, rect: &Placement) -> Result<SliceImage> {
    if patch.width != rect.side || patch.height != rect.side {
        return Err(RoiError::GeometryMismatch(format!(
            "patch {}x{} for square side {}",
            patch.width, patch.height, rect.side
        )));
    }
    if !rect.fits(background.width, background.height) {
        return Err(RoiError::GeometryMismatch(format!(
            "{rect:?} outside {}x{}",
            background.width, background.height
        )));
    }
    let mut out = background.clone();
    for (row, y) in (rect.y0..rect.y0 + rect.side).enumerate() {
        let dst = y * out.width + rect.x0;
        let src = row * rect.side;
        out.samples[dst..dst + rect.side].copy_from_slice(&patch.samples[src..src + rect.side]);
    }
    Ok(out)
}

/// [`recompose`] driven by a record; absent records return the background.
pub fn recompose_record(patch: &SliceImage, background: &SliceImage, record: &RoiRecord) -> Result<SliceImage> {
    if record.present {
        recompose(patch, background, &record.rect)
    } else {
        Ok(background.clone())
    }
}

/// Builds the record for one slice from its mask.
pub fn record_for_mask(slice_index: usize, mask: &BinaryMask, side: usize) -> Result<RoiRecord> {
    validate_side(side, mask.width, mask.height)?;
    Ok(match mask_bbox(mask) {
        Some(bbox) => RoiRecord {
            slice_index,
            present: true,
            rect: place_square(&bbox, side, mask.dims())?,
            source_bbox: Some(bbox),
        },
        None => RoiRecord::absent(slice_index, side),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::MaskOrigin;
    use proptest::prelude::*;

    fn bbox(x_min: usize, y_min: usize, x_max: usize, y_max: usize) -> BoundingBox {
        BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    #[test]
    fn single_pixel_bbox() {
        let mut m = BinaryMask::empty(32, 32, MaskOrigin::External);
        m.set(10, 20, true);
        assert_eq!(mask_bbox(&m), Some(bbox(10, 20, 10, 20)));
        assert_eq!(mask_bbox(&BinaryMask::empty(4, 4, MaskOrigin::External)), None);
    }

    #[test]
    fn placement_worked_examples() {
        let img = (128, 128);
        let p = place_square(&bbox(60, 60, 68, 68), 32, img).unwrap();
        assert_eq!(p, Placement { x0: 48, y0: 48, side: 32 });
        let p = place_square(&bbox(0, 0, 2, 2), 32, img).unwrap();
        assert_eq!(p, Placement { x0: 0, y0: 0, side: 32 });
        let p = place_square(&bbox(120, 120, 127, 127), 32, img).unwrap();
        assert_eq!(p, Placement { x0: 96, y0: 96, side: 32 });
    }

    #[test]
    fn placement_errors() {
        let b = bbox(0, 0, 1, 1);
        assert_eq!(
            place_square(&b, 64, (32, 128)),
            Err(RoiError::SquareTooLarge {
                side: 64,
                width: 32,
                height: 128
            })
        );
        assert_eq!(place_square(&b, 7, (32, 32)), Err(RoiError::OddSide(7)));
        assert_eq!(place_square(&b, 0, (32, 32)), Err(RoiError::OddSide(0)));
    }

    #[test]
    fn oversized_bbox_still_centered() {
        let b = bbox(10, 10, 90, 50);
        let p = place_square(&b, 32, (128, 128)).unwrap();
        assert_eq!(p, Placement { x0: 34, y0: 14, side: 32 });
        assert!(!p.covers(&b));
        let rec = RoiRecord {
            slice_index: 0,
            present: true,
            rect: p,
            source_bbox: Some(b),
        };
        assert!(rec.truncated());
    }

    #[test]
    fn constant_slice_carve() {
        let s = SliceImage::filled(10, 8, 7);
        let rect = Placement { x0: 2, y0: 3, side: 4 };
        let (patch, bg) = carve(&s, &rect).unwrap();
        assert!(patch.samples.iter().all(|&v| v == 7));
        for y in 0..8 {
            for x in 0..10 {
                let want = if rect.contains(x, y) { 0 } else { 7 };
                assert_eq!(bg.get(x, y), want);
            }
        }
        assert_eq!(recompose(&patch, &bg, &rect).unwrap(), s);
    }

    #[test]
    fn absent_record_returns_background() {
        let bg = SliceImage::filled(8, 8, 3);
        let patch = SliceImage::filled(4, 4, 9);
        let rec = RoiRecord::absent(0, 4);
        assert_eq!(recompose_record(&patch, &bg, &rec).unwrap(), bg);
    }

    #[test]
    fn recompose_rejects_wrong_patch() {
        let bg = SliceImage::filled(8, 8, 3);
        let patch = SliceImage::filled(2, 2, 9);
        let rect = Placement { x0: 0, y0: 0, side: 4 };
        assert!(matches!(
            recompose(&patch, &bg, &rect),
            Err(RoiError::GeometryMismatch(_))
        ));
        let rect = Placement { x0: 6, y0: 0, side: 4 };
        assert!(carve(&bg, &rect).is_err());
    }

    #[test]
    fn lossy_patch_membership() {
        let bg = SliceImage::filled(8, 8, 50);
        let patch = SliceImage::filled(4, 4, 200);
        let rect = Placement { x0: 3, y0: 1, side: 4 };
        let out = recompose(&patch, &bg, &rect).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let want = if rect.contains(x, y) { 200 } else { 50 };
                assert_eq!(out.get(x, y), want);
            }
        }
    }

    #[test]
    fn record_for_empty_mask_is_absent() {
        let m = BinaryMask::empty(16, 16, MaskOrigin::Baseline);
        let r = record_for_mask(3, &m, 8).unwrap();
        assert!(!r.present);
        assert_eq!(r.source_bbox, None);
        assert_eq!(r.rect.side, 8);
    }

    fn slice_and_rect() -> impl Strategy<Value = (SliceImage, Placement)> {
        (1usize..20, 1usize..20).prop_flat_map(|(w, h)| {
            let max_side = w.min(h);
            (
                proptest::collection::vec(any::<u8>(), w * h),
                1..=max_side,
            )
                .prop_flat_map(move |(px, side)| {
                    (Just(px), Just(side), 0..=w - side, 0..=h - side)
                })
                .prop_map(move |(px, side, x0, y0)| {
                    (SliceImage::new(w, h, px).unwrap(), Placement { x0, y0, side })
                })
        })
    }

    proptest! {
        #[test]
        fn carve_recompose_identity((slice, rect) in slice_and_rect()) {
            let (patch, bg) = carve(&slice, &rect).unwrap();
            let sum = |s: &SliceImage| s.samples.iter().map(|&v| v as u64).sum::<u64>();
            prop_assert_eq!(sum(&slice), sum(&patch) + sum(&bg));
            prop_assert_eq!(recompose(&patch, &bg, &rect).unwrap(), slice);
        }

        #[test]
        fn bbox_touches_extremes(bits in proptest::collection::vec(any::<bool>(), 48)) {
            let m = BinaryMask::from_bits(8, 6, bits, MaskOrigin::External).unwrap();
            match mask_bbox(&m) {
                None => prop_assert!(m.is_empty()),
                Some(b) => {
                    prop_assert!(m.set_pixels().all(|(x, y)| (b.x_min..=b.x_max).contains(&x) && (b.y_min..=b.y_max).contains(&y)));
                    prop_assert!(m.set_pixels().any(|(x, _)| x == b.x_min));
                    prop_assert!(m.set_pixels().any(|(x, _)| x == b.x_max));
                    prop_assert!(m.set_pixels().any(|(_, y)| y == b.y_min));
                    prop_assert!(m.set_pixels().any(|(_, y)| y == b.y_max));
                }
            }
        }

        #[test]
        fn placement_in_bounds(x0 in 0usize..100, y0 in 0usize..80, bw in 0usize..40, bh in 0usize..40, half in 1usize..40) {
            let (w, h) = (100usize, 80usize);
            let side = 2 * half;
            let b = bbox(x0, y0, (x0 + bw).min(w - 1), (y0 + bh).min(h - 1));
            let p = place_square(&b, side, (w, h)).unwrap();
            prop_assert!(p.fits(w, h));
            let (cx, cy) = b.center();
            if cx >= half && cy >= half && cx + half <= w && cy + half <= h {
                prop_assert_eq!((p.x0 + half, p.y0 + half), (cx, cy));
            }
        }
    }
}
