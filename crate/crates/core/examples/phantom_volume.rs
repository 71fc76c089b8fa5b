//! Writes a seeded synthetic scan and its tumor label volume.
//!
//!     cargo run --example phantom_volume -- out_dir [seed]

use std::path::PathBuf;

use roicomp::phantom::{self, PhantomSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "phantom_out".into()));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1u64);

    let spec = PhantomSpec {
        center: [40.0, 52.0, 11.5],
        ..PhantomSpec::centered([96, 96, 24], 9.0, seed)
    };
    let p = phantom::generate(&spec);
    let (image, labels) = p.to_nifti()?;

    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("image.nii"), &image)?;
    std::fs::write(dir.join("labels.nii"), &labels)?;

    let expected = 4.0 / 3.0 * std::f64::consts::PI * spec.radius.powi(3);
    println!("{}: {:?}, seed {seed}", dir.display(), spec.extents);
    println!("tumor voxels {} (sphere volume {expected:.0})", p.tumor_voxels());
    println!("intensity range {:?}", p.image.range());

    // Same seed, same bytes.
    assert_eq!(phantom::generate(&spec).to_nifti()?.0, image);
    Ok(())
}
