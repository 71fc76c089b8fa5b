//! Fidelity and size measurement.

use thiserror::Error;

use crate::imaging::{BinaryMask, SliceImage};
use crate::roi::Placement;

/// PSNR reported for an exact match.
pub const PSNR_CAP_DB: f64 = 99.0;
const PEAK: f64 = 255.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("region selects no pixels")]
    EmptyRegion,
    #[error("compressed size is zero")]
    ZeroCompressedSize,
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Pixel subset over which an error figure is computed.
#[derive(Copy, Clone, Debug)]
pub enum Region<'a> {
    All,
    Mask(&'a BinaryMask),
    OutsideMask(&'a BinaryMask),
    Rect(Placement),
    OutsideRect(Placement),
}

impl Region<'_> {
    #[inline]
    fn contains(&self, x: usize, y: usize) -> bool {
        match self {
            Region::All => true,
            Region::Mask(m) => m.get(x, y),
            Region::OutsideMask(m) => !m.get(x, y),
            Region::Rect(r) => r.contains(x, y),
            Region::OutsideRect(r) => !r.contains(x, y),
        }
    }

    fn check(&self, dims: (usize, usize)) -> Result<()> {
        match self {
            Region::Mask(m) | Region::OutsideMask(m) if m.dims() != dims => Err(MetricsError::DimensionMismatch {
                left: dims,
                right: m.dims(),
            }),
            _ => Ok(()),
        }
    }
}

/// Sum of squared 8-bit errors and the pixel count it covers.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct SquaredError {
    pub sum: f64,
    pub count: u64,
}

impl SquaredError {
    pub fn add(&mut self, reference: &SliceImage, test: &SliceImage, region: Region<'_>) -> Result<()> {
        if reference.dims() != test.dims() {
            return Err(MetricsError::DimensionMismatch {
                left: reference.dims(),
                right: test.dims(),
            });
        }
        region.check(reference.dims())?;
        let w = reference.width;
        let mut sum = 0u64;
        let mut count = 0u64;
        for (i, (&a, &b)) in reference.samples.iter().zip(&test.samples).enumerate() {
            if region.contains(i % w, i / w) {
                let d = a as i64 - b as i64;
                sum += (d * d) as u64;
                count += 1;
            }
        }
        self.sum += sum as f64;
        self.count += count;
        Ok(())
    }

    pub fn merge(&mut self, other: SquaredError) {
        self.sum += other.sum;
        self.count += other.count;
    }

    pub fn mse(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(MetricsError::EmptyRegion);
        }
        Ok(self.sum / self.count as f64)
    }

    pub fn psnr(&self) -> Result<f64> {
        Ok(psnr_from_mse(self.mse()?))
    }
}

/// `20·log10(255) − 10·log10(mse)`, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (20.0 * PEAK.log10() - 10.0 * mse.log10()).min(PSNR_CAP_DB)
    }
}

pub fn psnr(reference: &SliceImage, test: &SliceImage, region: Region<'_>) -> Result<f64> {
    let mut acc = SquaredError::default();
    acc.add(reference, test, region)?;
    acc.psnr()
}

/// PSNR over a stack of slices, pooling the squared error before taking
/// the logarithm. `regions`, when given, has one entry per slice.
pub fn psnr_volume(reference: &[SliceImage], test: &[SliceImage], regions: Option<&[Region<'_>]>) -> Result<f64> {
    if reference.len() != test.len() || regions.is_some_and(|r| r.len() != reference.len()) {
        return Err(MetricsError::DimensionMismatch {
            left: (reference.len(), 1),
            right: (test.len(), 1),
        });
    }
    let mut acc = SquaredError::default();
    for (i, (a, b)) in reference.iter().zip(test).enumerate() {
        acc.add(a, b, regions.map_or(Region::All, |r| r[i]))?;
    }
    acc.psnr()
}

pub fn compression_ratio(original_bytes: u64, compressed_bytes: u64) -> Result<f64> {
    if compressed_bytes == 0 {
        return Err(MetricsError::ZeroCompressedSize);
    }
    Ok(original_bytes as f64 / compressed_bytes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::MaskOrigin;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_images_hit_cap() {
        let a = SliceImage::filled(8, 8, 40);
        assert_eq!(psnr(&a, &a, Region::All).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn unit_error_closed_form() {
        let a = SliceImage::filled(16, 16, 100);
        let b = SliceImage::filled(16, 16, 101);
        let p = psnr(&a, &b, Region::All).unwrap();
        assert!((p - 48.1308).abs() < 1e-3, "{p}");
    }

    #[test]
    fn regions_restrict_the_error() {
        let a = SliceImage::filled(8, 8, 0);
        let mut b = a.clone();
        b.set(0, 0, 10);
        let rect = Placement { x0: 4, y0: 4, side: 4 };
        assert_eq!(psnr(&a, &b, Region::Rect(rect)).unwrap(), PSNR_CAP_DB);
        let outside = SquaredError {
            sum: 100.0,
            count: 48,
        };
        assert_eq!(psnr(&a, &b, Region::OutsideRect(rect)).unwrap(), outside.psnr().unwrap());

        let mut m = BinaryMask::empty(8, 8, MaskOrigin::External);
        m.set(0, 0, true);
        assert_eq!(psnr(&a, &b, Region::Mask(&m)).unwrap(), psnr_from_mse(100.0));
        assert_eq!(psnr(&a, &b, Region::OutsideMask(&m)).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn errors() {
        let a = SliceImage::filled(8, 8, 0);
        let b = SliceImage::filled(8, 4, 0);
        assert!(matches!(psnr(&a, &b, Region::All), Err(MetricsError::DimensionMismatch { .. })));
        let m = BinaryMask::empty(8, 8, MaskOrigin::External);
        assert_eq!(psnr(&a, &a, Region::Mask(&m)), Err(MetricsError::EmptyRegion));
        let m4 = BinaryMask::empty(4, 4, MaskOrigin::External);
        assert!(psnr(&a, &a, Region::Mask(&m4)).is_err());
        assert_eq!(compression_ratio(10, 0), Err(MetricsError::ZeroCompressedSize));
    }

    #[test]
    fn ratios() {
        assert_eq!(compression_ratio(1000, 1000).unwrap(), 1.0);
        assert_eq!(compression_ratio(100, 25).unwrap(), 4.0);
        let r = compression_ratio(348_170_000, 60_570_000).unwrap();
        assert!((r - 5.748).abs() < 5e-4, "{r}");
        for k in [1u64, 3, 17, 1000] {
            assert_eq!(compression_ratio(7 * k, 3 * k).unwrap(), compression_ratio(7, 3).unwrap());
        }
    }

    #[test]
    fn psnr_decreases_with_noise_amplitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let reference = SliceImage::new(64, 64, (0..4096).map(|_| rng.gen_range(60..200)).collect()).unwrap();
        let mut last = f64::INFINITY;
        for amplitude in [1i32, 2, 4, 8, 16, 32] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let noisy: Vec<u8> = reference
                .samples
                .iter()
                .map(|&v| (v as i32 + rng.gen_range(-amplitude..=amplitude)).clamp(0, 255) as u8)
                .collect();
            let noisy = SliceImage::new(64, 64, noisy).unwrap();
            let p = psnr(&reference, &noisy, Region::All).unwrap();
            assert!(p < last, "amplitude {amplitude}: {p} !< {last}");
            last = p;
        }
    }

    #[test]
    fn volume_pools_before_log() {
        let a = vec![SliceImage::filled(2, 2, 0), SliceImage::filled(2, 2, 0)];
        let b = vec![SliceImage::filled(2, 2, 0), SliceImage::filled(2, 2, 2)];
        // mse = (0*4 + 4*4) / 8 = 2
        assert_eq!(psnr_volume(&a, &b, None).unwrap(), psnr_from_mse(2.0));
    }
}
