//! Compresses a phantom with the built-in lossless codec, writes the bundle
//! to disk, reads it back and checks the reconstruction.
//!
//!     cargo run --example lossless_bundle -- [bundle_dir]

use std::path::PathBuf;
use std::time::Instant;

use roicomp::codec::{EncoderSpec, StreamBundle};
use roicomp::imaging::LabelMode;
use roicomp::phantom::{self, PhantomSpec};
use roicomp::pipeline::{self, CompressOptions, MaskSource};
use roicomp::report::{self, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from);
    let tmp = tempfile::tempdir()?;
    let dir = dir.unwrap_or_else(|| tmp.path().join("bundle"));

    let started = Instant::now();
    let p = phantom::generate(&PhantomSpec::centered([96, 96, 24], 8.0, 11));
    let source = MaskSource::Labels { volume: p.labels.clone(), mode: LabelMode::WholeTumor };
    let opts = CompressOptions { square_side: 32, ..Default::default() };
    let enc = EncoderSpec::internal_lossless();

    let out = pipeline::compress(&p.image, &source, &opts, &enc)?;
    out.bundle.write_to_dir(&dir)?;
    println!("wrote {} ({} bytes)", dir.display(), out.bundle.total_bytes());

    let bundle = StreamBundle::read_from_dir(&dir)?;
    let slices = pipeline::decompress(&bundle, &enc)?;
    println!("identical slices: {}", slices == out.prepared.slices);

    let mut report = pipeline::verify(&out.prepared, &slices, &bundle)?;
    report.per_slice = None;
    print!("{}", report::render_report(&report, ReportFormat::TextTable));
    println!("elapsed {:.2?}", started.elapsed());
    Ok(())
}
