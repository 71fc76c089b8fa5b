//! Uses masks from an outside segmenter. Masks are 8-bit PGM files named
//! `mask_0000.pgm`, `mask_0001.pgm`, ... with nonzero meaning tumor.
//!
//!     cargo run --example external_masks -- [mask_dir]
//!
//! Without an argument the ground-truth masks of a phantom are exported
//! first, standing in for a network's predictions.

use std::path::PathBuf;

use roicomp::codec::EncoderSpec;
use roicomp::imaging::LabelMode;
use roicomp::phantom::{self, PhantomSpec};
use roicomp::pipeline::{self, CompressOptions, MaskSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = phantom::generate(&PhantomSpec::centered([80, 72, 16], 6.0, 21));
    let nz = p.image.extents[2];
    let tmp = tempfile::tempdir()?;
    let dir = match std::env::args().nth(1) {
        Some(d) => PathBuf::from(d),
        None => {
            let d = tmp.path().join("masks");
            pipeline::write_masks(&d, &pipeline::label_masks(&p.labels, LabelMode::WholeTumor)?)?;
            println!("exported {nz} masks to {}", d.display());
            d
        }
    };

    let masks = pipeline::load_external_masks(&dir, nz)?;
    let nonempty = masks.iter().filter(|m| !m.is_empty()).count();
    println!("loaded {} masks ({nonempty} non-empty), first is {}", masks.len(), pipeline::mask_file_name(0));

    let opts = CompressOptions { square_side: 32, ..Default::default() };
    let out = pipeline::compress(&p.image, &MaskSource::External(masks), &opts, &EncoderSpec::internal_lossless())?;
    for r in out.bundle.manifest.roi_records.iter().filter(|r| r.present) {
        println!("slice {:2}: square at ({}, {})", r.slice_index, r.rect.x0, r.rect.y0);
    }

    // A mask set that does not match the scan is rejected.
    let short = pipeline::load_external_masks(&dir, nz + 1);
    println!("expecting {} masks: {}", nz + 1, if short.is_err() { "rejected" } else { "accepted" });
    Ok(())
}
