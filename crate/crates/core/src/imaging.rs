//! 2D primitives: real-valued planes, 8-bit slices and binary masks.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("unknown label {label} at pixel {index}; expected one of 0, 1, 2, 4")]
    UnknownLabel { index: usize, label: f64 },
    #[error("expected {expected} samples for {width}x{height}, got {actual}")]
    SizeMismatch {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("bad PGM: {0}")]
    BadPgm(String),
}

pub type Result<T> = std::result::Result<T, ImagingError>;

/// A real-valued 2D plane, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<f64>,
}

/// An 8-bit grayscale image, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct SliceImage {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
}

impl fmt::Debug for SliceImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SliceImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("samples", &format_args!("[{} bytes]", self.samples.len()))
            .finish()
    }
}

impl SliceImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        check_len(width, height, samples.len())?;
        Ok(SliceImage {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        SliceImage {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.samples[y * self.width + x] = value;
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        write_pgm(self.width, self.height, &self.samples)
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let (width, height, samples) = read_pgm(bytes)?;
        Ok(SliceImage {
            width,
            height,
            samples,
        })
    }
}

/// Where a mask came from.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MaskOrigin {
    GroundTruthWholeTumor,
    GroundTruthTumorCore,
    Baseline,
    External,
}

/// Which tumor region a BraTS-style label plane is reduced to.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum LabelMode {
    /// Labels 1, 2 and 4.
    #[default]
    WholeTumor,
    /// Labels 1 (necrotic core) and 4 (enhancing); edema (2) excluded.
    TumorCore,
}

impl LabelMode {
    pub fn origin(self) -> MaskOrigin {
        match self {
            LabelMode::WholeTumor => MaskOrigin::GroundTruthWholeTumor,
            LabelMode::TumorCore => MaskOrigin::GroundTruthTumorCore,
        }
    }
}

/// Per-pixel ROI membership, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
    pub origin: MaskOrigin,
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("set", &self.count())
            .field("origin", &self.origin)
            .finish()
    }
}

impl BinaryMask {
    pub fn empty(width: usize, height: usize, origin: MaskOrigin) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
            origin,
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>, origin: MaskOrigin) -> Result<Self> {
        check_len(width, height, bits.len())?;
        Ok(BinaryMask {
            width,
            height,
            bits,
            origin,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Iterates `(x, y)` of every set pixel in raster order.
    pub fn set_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// PGM P5 with 0 for background and 255 for ROI.
    pub fn to_pgm(&self) -> Vec<u8> {
        let samples: Vec<u8> = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        write_pgm(self.width, self.height, &samples)
    }

    /// Any nonzero PGM sample is treated as ROI.
    pub fn from_pgm(bytes: &[u8], origin: MaskOrigin) -> Result<Self> {
        let (width, height, samples) = read_pgm(bytes)?;
        Ok(BinaryMask {
            width,
            height,
            bits: samples.into_iter().map(|v| v != 0).collect(),
            origin,
        })
    }
}

fn check_len(width: usize, height: usize, actual: usize) -> Result<()> {
    let expected = width * height;
    if actual != expected {
        return Err(ImagingError::SizeMismatch {
            width,
            height,
            expected,
            actual,
        });
    }
    Ok(())
}

/// Maps `plane` into 8 bits using the volume-wide `range` (min, max).
///
/// `round(255 * (v - min) / (max - min))` with halves rounded up and results
/// clamped to `[0, 255]`. A flat range maps everything to 0.
pub fn normalize_to_u8(plane: &[f64], width: usize, height: usize, range: (f64, f64)) -> Result<SliceImage> {
    check_len(width, height, plane.len())?;
    let (lo, hi) = range;
    let span = hi - lo;
    let samples = if span > 0.0 {
        plane
            .iter()
            .map(|&v| ((v - lo) * 255.0 / span + 0.5).floor().clamp(0.0, 255.0) as u8)
            .collect()
    } else {
        vec![0u8; plane.len()]
    };
    Ok(SliceImage {
        width,
        height,
        samples,
    })
}

/// Reduces a BraTS label plane (values 0, 1, 2, 4) to a binary mask.
pub fn binarize_labels(labels: &[f64], width: usize, height: usize, mode: LabelMode) -> Result<BinaryMask> {
    check_len(width, height, labels.len())?;
    let bits = labels
        .iter()
        .enumerate()
        .map(|(index, &label)| {
            let known = [0.0, 1.0, 2.0, 4.0].contains(&label);
            if !known {
                return Err(ImagingError::UnknownLabel { index, label });
            }
            Ok(match mode {
                LabelMode::WholeTumor => label != 0.0,
                LabelMode::TumorCore => label == 1.0 || label == 4.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinaryMask {
        width,
        height,
        bits,
        origin: mode.origin(),
    })
}

fn write_pgm(width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

fn read_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |m: &str| ImagingError::BadPgm(m.to_string());
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("unexpected end of header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(bad("not a binary (P5) PGM"));
    }
    let mut number = |what: &str| -> Result<usize> {
        token()?
            .parse()
            .map_err(|_| ImagingError::BadPgm(format!("bad {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit PGM (maxval <= 255) is supported"));
    }
    // exactly one whitespace byte separates maxval from the raster
    let start = pos + 1;
    let end = start + width * height;
    if bytes.len() < end {
        return Err(bad("truncated raster"));
    }
    Ok((width, height, bytes[start..end].to_vec()))
}
