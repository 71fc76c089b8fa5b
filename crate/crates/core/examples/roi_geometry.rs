//! Square placement, carving and recomposition on a single slice.

use roi::BoundingBox;
use roicomp::imaging::{BinaryMask, MaskOrigin, SliceImage};
use roicomp::roi;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (w, h) = (128, 128);
    for (bbox, side) in [
        (BoundingBox { x_min: 40, y_min: 40, x_max: 56, y_max: 56 }, 32),
        (BoundingBox { x_min: 0, y_min: 0, x_max: 10, y_max: 10 }, 32),
        (BoundingBox { x_min: 90, y_min: 90, x_max: 120, y_max: 120 }, 64),
    ] {
        let rect = roi::place_square(&bbox, side, (w, h))?;
        println!(
            "bbox ({},{})-({},{}) side {side} -> origin ({}, {}) covers bbox: {}",
            bbox.x_min, bbox.y_min, bbox.x_max, bbox.y_max, rect.x0, rect.y0, rect.covers(&bbox)
        );
    }

    let slice = SliceImage::new(w, h, (0..w * h).map(|i| (i % 251) as u8 + 1).collect())?;
    let mut mask = BinaryMask::empty(w, h, MaskOrigin::External);
    for y in 70..90 {
        for x in 20..35 {
            mask.set(x, y, true);
        }
    }
    let record = roi::record_for_mask(0, &mask, 32)?;
    let (patch, background) = roi::carve(&slice, &record.rect)?;
    let zeroed = background.samples.iter().filter(|&&v| v == 0).count();
    println!("record {record:?}");
    println!("patch {}x{}, {zeroed} zeroed background pixels", patch.width, patch.height);
    let rebuilt = roi::recompose_record(&patch, &background, &record)?;
    println!("recomposed identical: {}", rebuilt == slice);

    let empty = roi::record_for_mask(1, &BinaryMask::empty(w, h, MaskOrigin::External), 32)?;
    println!("no tumor: present={} rect={:?}", empty.present, empty.rect);

    let wide = BoundingBox { x_min: 10, y_min: 10, x_max: 80, y_max: 20 };
    let rect = roi::place_square(&wide, 32, (w, h))?;
    println!("oversized bbox is truncated: covers={}", rect.covers(&wide));
    Ok(())
}
