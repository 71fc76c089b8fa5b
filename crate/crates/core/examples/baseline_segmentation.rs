//! Runs the threshold + largest-component segmenter on a phantom and
//! scores it against the ground-truth labels.

use roicomp::imaging::LabelMode;
use roicomp::phantom::{self, PhantomSpec};
use roicomp::pipeline;
use roicomp::segment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = phantom::generate(&PhantomSpec::centered([96, 96, 24], 8.0, 3));
    let slices = pipeline::normalized_slices(&p.image, p.image.range())?;
    let truth = pipeline::label_masks(&p.labels, LabelMode::WholeTumor)?;

    for threshold in [64u8, 128, 200] {
        let masks = pipeline::baseline_masks(&slices, threshold, pipeline::DEFAULT_MIN_COMPONENT);
        let m = pipeline::overlap(&masks, &truth)?.metrics();
        println!("threshold {threshold:3}: dice {:.4} iou {:.4}", m.dice, m.iou);
    }

    // BCE needs logits; use a steep sigmoid around the default threshold.
    let mid = slices.len() / 2;
    let logits: Vec<f64> = slices[mid]
        .samples
        .iter()
        .map(|&v| (v as f64 - pipeline::DEFAULT_THRESHOLD as f64) / 8.0)
        .collect();
    let bce = segment::bce_with_logits(&logits, &truth[mid])?;
    let dice = segment::dice(
        &segment::baseline_segment(&slices[mid], pipeline::DEFAULT_THRESHOLD, pipeline::DEFAULT_MIN_COMPONENT),
        &truth[mid],
    )?;
    println!("slice {mid}: dice {dice:.4}, bce {bce:.5}");
    Ok(())
}
