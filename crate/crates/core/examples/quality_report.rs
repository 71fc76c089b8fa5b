//! PSNR over regions and the report formats, on synthetic degradations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roicomp::imaging::SliceImage;
use roicomp::metrics::{self, Region};
use roicomp::report::{self, QualityReport, ReportFormat, SizeFigures};
use roicomp::roi::Placement;
use roicomp::segment::SegmentationMetrics;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (w, h) = (64, 64);
    let reference = SliceImage::new(w, h, (0..w * h).map(|i| ((i * 7) % 200) as u8 + 20).collect())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rect = Placement { x0: 16, y0: 16, side: 32 };

    // Light noise inside the square, heavy noise outside.
    let mut test = reference.clone();
    for y in 0..h {
        for x in 0..w {
            let amp: i32 = if rect.contains(x, y) { 1 } else { 12 };
            let v = reference.get(x, y) as i32 + rng.gen_range(-amp..=amp);
            test.set(x, y, v.clamp(0, 255) as u8);
        }
    }

    let full = metrics::psnr(&reference, &test, Region::All)?;
    let roi = metrics::psnr(&reference, &test, Region::Rect(rect))?;
    let bg = metrics::psnr(&reference, &test, Region::OutsideRect(rect))?;
    println!("identical: {} dB", metrics::psnr(&reference, &reference, Region::All)?);
    println!("mse 1.0:   {:.4} dB", metrics::psnr_from_mse(1.0));

    let report = QualityReport {
        sizes: Some(SizeFigures::new(348_170_000, 60_570_000)?),
        psnr_full: full,
        psnr_roi: Some(roi),
        psnr_bg: Some(bg),
        segmentation: Some(SegmentationMetrics { dice: 0.91, iou: 0.83, bce: Some(0.052) }),
        per_slice: None,
    };
    print!("{}", report::render_report(&report, ReportFormat::TextTable));
    println!();
    print!("{}", report::render_report(&report, ReportFormat::Csv));
    Ok(())
}
