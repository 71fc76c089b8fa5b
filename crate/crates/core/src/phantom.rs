//! Seeded synthetic scans: a textured ellipsoidal "head" with a bright
//! spherical tumor, plus the matching label volume.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nifti::{self, Datatype, NiftiHeader, Volume};

const AIR: f64 = 10.0;
const TISSUE: f64 = 300.0;
const TUMOR: f64 = 900.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub extents: [usize; 3],
    pub spacing: [f64; 3],
    /// Tumor center in voxel coordinates.
    pub center: [f64; 3],
    /// Tumor radius in voxels; 0 disables the tumor.
    pub radius: f64,
    pub seed: u64,
}

impl PhantomSpec {
    /// A phantom with the tumor at the volume center.
    pub fn centered(extents: [usize; 3], radius: f64, seed: u64) -> Self {
        let center = extents.map(|n| (n as f64 - 1.0) / 2.0);
        PhantomSpec {
            extents,
            spacing: [1.0; 3],
            center,
            radius,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    pub image: Volume,
    /// 1 inside the tumor sphere, 0 elsewhere.
    pub labels: Volume,
}

struct Wave {
    amplitude: f64,
    k: [f64; 3],
    phase: f64,
}

pub fn generate(spec: &PhantomSpec) -> Phantom {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let [nx, ny, nz] = spec.extents;

    let waves: Vec<Wave> = (0..5)
        .map(|_| {
            let period = rng.gen_range(8.0..32.0);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let tilt = rng.gen_range(-0.5..0.5f64);
            let mag = std::f64::consts::TAU / period;
            Wave {
                amplitude: rng.gen_range(10.0..30.0),
                k: [mag * theta.cos(), mag * theta.sin(), mag * tilt],
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            }
        })
        .collect();

    let mid = spec.extents.map(|n| (n as f64 - 1.0) / 2.0);
    let semi = [0.45 * nx as f64, 0.45 * ny as f64, 0.5 * nz as f64 + 0.5];
    let r2 = spec.radius * spec.radius;

    let n = nx * ny * nz;
    let mut image = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = [x as f64, y as f64, z as f64];
                let head: f64 = (0..3).map(|i| ((p[i] - mid[i]) / semi[i]).powi(2)).sum();
                let d2: f64 = (0..3).map(|i| (p[i] - spec.center[i]).powi(2)).sum();
                let in_tumor = d2 < r2;
                let noise = rng.gen_range(-4.0..=4.0);
                let value = if in_tumor {
                    TUMOR + 2.0 * noise
                } else if head <= 1.0 {
                    let texture: f64 = waves
                        .iter()
                        .map(|w| w.amplitude * (w.k[0] * p[0] + w.k[1] * p[1] + w.k[2] * p[2] + w.phase).sin())
                        .sum();
                    TISSUE + texture + noise
                } else {
                    AIR + noise.abs()
                };
                image.push(value.round());
                labels.push(if in_tumor { 1.0 } else { 0.0 });
            }
        }
    }

    let mut image = Volume::new(spec.extents, spec.spacing, image);
    image.source_descriptor = format!("roicomp phantom seed={} r={}", spec.seed, spec.radius);
    let mut labels = Volume::new(spec.extents, spec.spacing, labels);
    labels.source_descriptor = "roicomp phantom labels".into();
    Phantom { image, labels }
}

impl Phantom {
    pub fn image_header(&self) -> NiftiHeader {
        NiftiHeader::for_volume(&self.image, Datatype::Int16)
    }

    pub fn label_header(&self) -> NiftiHeader {
        NiftiHeader::for_volume(&self.labels, Datatype::Uint8)
    }

    /// `(image.nii, labels.nii)` byte streams.
    pub fn to_nifti(&self) -> nifti::Result<(Vec<u8>, Vec<u8>)> {
        Ok((
            nifti::write_nifti(&self.image_header(), &self.image)?,
            nifti::write_nifti(&self.label_header(), &self.labels)?,
        ))
    }

    pub fn tumor_voxels(&self) -> usize {
        self.labels.samples.iter().filter(|&&v| v != 0.0).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_radius_has_no_tumor() {
        let p = generate(&PhantomSpec::centered([16, 16, 8], 0.0, 1));
        assert_eq!(p.tumor_voxels(), 0);
    }

    #[test]
    fn sphere_volume_within_five_percent() {
        for radius in [5.0, 7.5, 10.0] {
            let spec = PhantomSpec {
                extents: [40, 40, 40],
                spacing: [1.0; 3],
                center: [19.3, 20.1, 18.7],
                radius,
                seed: 3,
            };
            let p = generate(&spec);
            let expected = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
            let got = p.tumor_voxels() as f64;
            assert!((got - expected).abs() / expected < 0.05, "r={radius}: {got} vs {expected}");
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = PhantomSpec::centered([20, 18, 6], 4.0, 42);
        assert_eq!(generate(&spec).to_nifti().unwrap(), generate(&spec).to_nifti().unwrap());
        let other = PhantomSpec { seed: 43, ..spec };
        assert_ne!(generate(&other).image, generate(&PhantomSpec::centered([20, 18, 6], 4.0, 42)).image);
    }

    #[test]
    fn tumor_is_brightest() {
        let p = generate(&PhantomSpec::centered([32, 32, 8], 4.0, 9));
        let (_, max) = p.image.range();
        let tumor_min = p
            .image
            .samples
            .iter()
            .zip(&p.labels.samples)
            .filter(|(_, &l)| l != 0.0)
            .map(|(&v, _)| v)
            .fold(f64::INFINITY, f64::min);
        let tissue_max = p
            .image
            .samples
            .iter()
            .zip(&p.labels.samples)
            .filter(|(_, &l)| l == 0.0)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(tumor_min > tissue_max + 300.0);
        assert!(max <= TUMOR + 8.0);
    }
}
