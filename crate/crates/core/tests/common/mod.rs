#![allow(dead_code)]

use rand::Rng;
use roicomp::codec::{self, CodecError, EncoderSpec, DEFAULT_DECODE_TEMPLATE, DEFAULT_ENCODE_TEMPLATE};
use roicomp::config::ENV_ENCODER_CMD;
use roicomp::imaging::{BinaryMask, MaskOrigin, SliceImage};
use roicomp::roi::{BoundingBox, Placement, RoiRecord};
use roicomp::stream::{Checksums, Manifest, Normalization, PaddedDims, RawStream, MANIFEST_VERSION};

/// Masks of varied density, including all-empty and single-pixel ones.
pub fn random_mask<R: Rng>(rng: &mut R, w: usize, h: usize) -> BinaryMask {
    let mut m = BinaryMask::empty(w, h, MaskOrigin::External);
    match rng.gen_range(0..5) {
        0 => {}
        1 => m.set(rng.gen_range(0..w), rng.gen_range(0..h), true),
        2 => {
            let (x0, y0) = (rng.gen_range(0..w), rng.gen_range(0..h));
            let (x1, y1) = (rng.gen_range(x0..w), rng.gen_range(y0..h));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    m.set(x, y, true);
                }
            }
        }
        _ => {
            let p: f64 = rng.gen_range(0.0..0.3);
            for y in 0..h {
                for x in 0..w {
                    if rng.gen_bool(p) {
                        m.set(x, y, true);
                    }
                }
            }
        }
    }
    m
}

pub fn random_slice<R: Rng>(rng: &mut R, w: usize, h: usize) -> SliceImage {
    SliceImage::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
}

pub fn random_manifest<R: Rng>(rng: &mut R) -> Manifest {
    let half = rng.gen_range(1..=16);
    let s = 2 * half;
    let nx = rng.gen_range(s..s + 200);
    let ny = rng.gen_range(s..s + 200);
    let nz = rng.gen_range(1..40);
    let records = (0..nz)
        .map(|i| {
            if rng.gen_bool(0.5) {
                let x0 = rng.gen_range(0..=nx - s);
                let y0 = rng.gen_range(0..=ny - s);
                let x_min = rng.gen_range(0..nx);
                let y_min = rng.gen_range(0..ny);
                RoiRecord {
                    slice_index: i,
                    present: true,
                    rect: Placement { x0, y0, side: s },
                    source_bbox: Some(BoundingBox {
                        x_min,
                        y_min,
                        x_max: rng.gen_range(x_min..nx),
                        y_max: rng.gen_range(y_min..ny),
                    }),
                }
            } else {
                RoiRecord::absent(i, s)
            }
        })
        .collect();
    let lo: f64 = rng.gen_range(-2000.0..2000.0);
    let hex = |rng: &mut R| (0..32).map(|_| format!("{:02x}", rng.gen::<u8>())).collect::<String>();
    Manifest {
        format_version: MANIFEST_VERSION,
        volume_extents: [nx, ny, nz],
        voxel_spacing: [rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0)],
        square_side: s,
        padded_dims: PaddedDims {
            background: [nx + nx % 2, ny + ny % 2],
            roi: [s, s],
        },
        crf_roi: rng.gen_range(0..=51),
        crf_bg: rng.gen_range(0..=51),
        roi_records: records,
        normalization: Normalization {
            volume_min: lo,
            volume_max: lo + rng.gen_range(1e-3..5000.0),
        },
        encoder_id: format!("enc-{}", rng.gen::<u32>()),
        checksums: Checksums { bg: hex(rng), roi: hex(rng) },
    }
}

/// The configured HEVC encoder if it can encode a tiny stream, otherwise
/// `Err` with the reason to print in the skip notice.
pub fn hevc_encoder() -> Result<EncoderSpec, String> {
    let template = std::env::var(ENV_ENCODER_CMD).unwrap_or_else(|_| DEFAULT_ENCODE_TEMPLATE.into());
    let enc = EncoderSpec::external(&template, DEFAULT_DECODE_TEMPLATE).map_err(|e| e.to_string())?;
    let probe = RawStream {
        width: 16,
        height: 16,
        frames: vec![vec![128; 256]; 2],
    };
    match codec::encode_stream(&probe, 30, &enc) {
        Ok(payload) => match codec::decode_stream(&payload, &enc) {
            Ok(_) => Ok(enc),
            Err(e) => Err(format!("HEVC decoder unusable: {e}")),
        },
        Err(CodecError::EncoderNotFound { argv }) => {
            Err(format!("no HEVC encoder installed (tried `{}`)", argv.join(" ")))
        }
        Err(e) => Err(format!("HEVC encoder unusable: {e}")),
    }
}
