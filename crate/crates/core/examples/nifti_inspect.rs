//! Reads a NIfTI-1 file (plain or gzip) and prints its header and slices.
//!
//!     cargo run --example nifti_inspect -- scan.nii.gz
//!
//! Without an argument a small phantom is built in memory, written both
//! plain and gzipped, and the two are shown to decode identically.

use std::io::Write;

use flate2::write::GzEncoder;
use flate2::Compression;
use roicomp::nifti::{self, Endianness};
use roicomp::phantom::{self, PhantomSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bytes = match std::env::args().nth(1) {
        Some(path) => std::fs::read(path)?,
        None => {
            let p = phantom::generate(&PhantomSpec::centered([64, 64, 12], 6.0, 7));
            p.to_nifti()?.0
        }
    };

    let (h, v) = nifti::parse_nifti(&bytes)?;
    println!("gzip:       {}", nifti::is_gzip(&bytes));
    println!("datatype:   {} (bitpix {})", h.datatype.name(), h.bitpix);
    println!("dims:       {:?} x {} time points", h.extents(), h.time_points());
    println!("spacing:    {:?}", v.spacing);
    println!("byte order: {}", if h.endianness == Endianness::Big { "big" } else { "little" });
    println!("scaling:    slope={} inter={}", h.scl_slope, h.scl_inter);
    println!("descrip:    {:?}", h.descriptor());
    let (lo, hi) = v.range();
    println!("range:      [{lo}, {hi}]");

    let planes = nifti::extract_axial_slices(&v);
    for (z, p) in planes.iter().enumerate().step_by((planes.len() / 4).max(1)) {
        let mean = p.samples.iter().sum::<f64>() / p.samples.len() as f64;
        println!("slice {z:3}: {}x{} mean {mean:.1}", p.width, p.height);
    }

    if !nifti::is_gzip(&bytes) {
        let mut gz = GzEncoder::new(Vec::new(), Compression::default());
        gz.write_all(&bytes)?;
        let gz = gz.finish()?;
        let (_, twin) = nifti::parse_nifti(&gz)?;
        println!("gzip twin ({} -> {} bytes) identical: {}", bytes.len(), gz.len(), twin == v);
    }
    Ok(())
}
