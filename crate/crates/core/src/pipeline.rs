//! The end-to-end flows: volume → masks → ROI split → bundle, and back.

use std::path::Path;

use rayon::prelude::*;

use crate::codec::{self, DecodedBundle, EncoderSpec, StreamBundle};
use crate::imaging::{self, BinaryMask, LabelMode, MaskOrigin, SliceImage};
use crate::metrics::{Region, SquaredError};
use crate::nifti::{self, Datatype, NiftiHeader, Volume};
use crate::report::{QualityReport, SizeFigures, SliceQuality};
use crate::roi::{self, BoundingBox, RoiRecord};
use crate::segment::{self, OverlapCounts};
use crate::stream::{self, Checksums, Manifest, Normalization, PaddedDims, MANIFEST_VERSION};
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: u8 = 128;
pub const DEFAULT_MIN_COMPONENT: usize = 16;

/// File name of the external mask for `slice_index`.
pub fn mask_file_name(slice_index: usize) -> String {
    format!("mask_{slice_index:04}.pgm")
}

/// Where per-slice ROI masks come from.
#[derive(Clone, Debug)]
pub enum MaskSource {
    /// A BraTS-style label volume aligned with the scan.
    Labels { volume: Volume, mode: LabelMode },
    /// The built-in threshold + largest-component segmenter.
    Baseline { threshold: u8, min_component_px: usize },
    /// Precomputed masks, one per slice.
    External(Vec<BinaryMask>),
}

impl MaskSource {
    pub fn baseline() -> Self {
        MaskSource::Baseline {
            threshold: DEFAULT_THRESHOLD,
            min_component_px: DEFAULT_MIN_COMPONENT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressOptions {
    pub square_side: usize,
    pub crf_roi: u8,
    pub crf_bg: u8,
    /// Worker threads for per-slice work; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

impl Default for CompressOptions {
    fn default() -> Self {
        CompressOptions {
            square_side: 128,
            crf_roi: 20,
            crf_bg: 40,
            jobs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Warning {
    /// The mask's bbox is larger than the square; part of it falls to the background stream.
    BboxTruncated {
        slice_index: usize,
        bbox: BoundingBox,
        side: usize,
    },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::BboxTruncated { slice_index, bbox, side } => write!(
                f,
                "slice {slice_index}: ROI bbox {}x{} exceeds the {side}x{side} square",
                bbox.width(),
                bbox.height()
            ),
        }
    }
}

/// Everything computed before encoding.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub slices: Vec<SliceImage>,
    pub masks: Vec<BinaryMask>,
    pub records: Vec<RoiRecord>,
    pub roi_frames: Vec<SliceImage>,
    pub bg_frames: Vec<SliceImage>,
    pub normalization: Normalization,
    pub warnings: Vec<Warning>,
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Cuts a volume into axial slices normalized with the volume-wide range.
pub fn normalized_slices(volume: &Volume, range: (f64, f64)) -> Result<Vec<SliceImage>> {
    nifti::extract_axial_slices(volume)
        .par_iter()
        .map(|p| imaging::normalize_to_u8(&p.samples, p.width, p.height, range).map_err(Error::from))
        .collect()
}

/// Binarizes every plane of a label volume.
pub fn label_masks(labels: &Volume, mode: LabelMode) -> Result<Vec<BinaryMask>> {
    nifti::extract_axial_slices(labels)
        .par_iter()
        .map(|p| imaging::binarize_labels(&p.samples, p.width, p.height, mode).map_err(Error::from))
        .collect()
}

pub fn baseline_masks(slices: &[SliceImage], threshold: u8, min_component_px: usize) -> Vec<BinaryMask> {
    slices
        .par_iter()
        .map(|s| segment::baseline_segment(s, threshold, min_component_px))
        .collect()
}

fn masks_for(volume: &Volume, slices: &[SliceImage], source: &MaskSource) -> Result<Vec<BinaryMask>> {
    let masks = match source {
        MaskSource::Labels { volume: labels, mode } => {
            if labels.extents != volume.extents {
                return Err(Error::Geometry(format!(
                    "label volume {:?} does not match scan {:?}",
                    labels.extents, volume.extents
                )));
            }
            label_masks(labels, *mode)?
        }
        MaskSource::Baseline {
            threshold,
            min_component_px,
        } => baseline_masks(slices, *threshold, *min_component_px),
        MaskSource::External(masks) => masks.clone(),
    };
    let [nx, ny, nz] = volume.extents;
    if masks.len() != nz {
        return Err(Error::Geometry(format!("{} masks for {nz} slices", masks.len())));
    }
    if let Some((i, m)) = masks.iter().enumerate().find(|(_, m)| m.dims() != (nx, ny)) {
        return Err(Error::Geometry(format!(
            "mask {i} is {}x{}, slices are {nx}x{ny}",
            m.width, m.height
        )));
    }
    Ok(masks)
}

/// Normalizes, segments and splits every slice into ROI patch and background.
pub fn prepare(volume: &Volume, source: &MaskSource, opts: &CompressOptions) -> Result<Prepared> {
    let [nx, ny, nz] = volume.extents;
    if nz == 0 {
        return Err(Error::Geometry("volume has no slices".into()));
    }
    roi::validate_side(opts.square_side, nx, ny)?;
    let side = opts.square_side;
    let range = volume.range();

    with_jobs(opts.jobs, || -> Result<Prepared> {
        let slices = normalized_slices(volume, range)?;
        let masks = masks_for(volume, &slices, source)?;
        let split: Vec<(RoiRecord, SliceImage, SliceImage)> = slices
            .par_iter()
            .zip(masks.par_iter())
            .enumerate()
            .map(|(i, (slice, mask))| {
                let record = roi::record_for_mask(i, mask, side)?;
                let (patch, bg) = if record.present {
                    roi::carve(slice, &record.rect)?
                } else {
                    (SliceImage::filled(side, side, 0), slice.clone())
                };
                Ok((record, patch, bg))
            })
            .collect::<Result<_>>()?;

        let mut records = Vec::with_capacity(nz);
        let mut roi_frames = Vec::with_capacity(nz);
        let mut bg_frames = Vec::with_capacity(nz);
        let mut warnings = Vec::new();
        for (record, patch, bg) in split {
            if record.truncated() {
                let w = Warning::BboxTruncated {
                    slice_index: record.slice_index,
                    bbox: record.source_bbox.expect("truncated implies bbox"),
                    side,
                };
                log::warn!("{w}");
                warnings.push(w);
            }
            records.push(record);
            roi_frames.push(patch);
            bg_frames.push(bg);
        }
        Ok(Prepared {
            slices,
            masks,
            records,
            roi_frames,
            bg_frames,
            normalization: Normalization {
                volume_min: range.0,
                volume_max: range.1,
            },
            warnings,
        })
    })?
}

#[derive(Clone, Debug)]
pub struct Compressed {
    pub bundle: StreamBundle,
    pub prepared: Prepared,
}

/// Runs the full compression pipeline.
pub fn compress(volume: &Volume, source: &MaskSource, opts: &CompressOptions, enc: &EncoderSpec) -> Result<Compressed> {
    let prepared = prepare(volume, source, opts)?;
    let (roi_stream, _) = stream::assemble(&prepared.roi_frames)?;
    let (bg_stream, _) = stream::assemble(&prepared.bg_frames)?;
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        volume_extents: volume.extents,
        voxel_spacing: volume.spacing,
        square_side: opts.square_side,
        padded_dims: PaddedDims {
            background: [bg_stream.width, bg_stream.height],
            roi: [roi_stream.width, roi_stream.height],
        },
        crf_roi: opts.crf_roi,
        crf_bg: opts.crf_bg,
        roi_records: prepared.records.clone(),
        normalization: prepared.normalization,
        encoder_id: String::new(),
        checksums: Checksums::default(),
    };
    manifest.validate()?;
    let bundle = codec::encode_bundle(&roi_stream, &bg_stream, manifest, enc)?;
    Ok(Compressed { bundle, prepared })
}

/// Decodes a bundle and pastes each ROI patch back into its background.
pub fn decompress(bundle: &StreamBundle, enc: &EncoderSpec) -> Result<Vec<SliceImage>> {
    let DecodedBundle { roi, background } = codec::decode_bundle(bundle, enc)?;
    bundle
        .manifest
        .roi_records
        .par_iter()
        .zip(roi.par_iter().zip(background.par_iter()))
        .map(|(record, (patch, bg))| Ok(roi::recompose_record(patch, bg, record)?))
        .collect()
}

/// Picks the codec a bundle was written with: the internal codec for
/// internally encoded bundles, else `external`.
pub fn encoder_for_bundle(bundle: &StreamBundle, external: impl FnOnce() -> Result<EncoderSpec>) -> Result<EncoderSpec> {
    if bundle.manifest.encoder_id == codec::INTERNAL_ENCODER_ID {
        Ok(EncoderSpec::internal_lossless())
    } else {
        external()
    }
}

/// Wraps decoded 8-bit slices as a uint8 NIfTI volume whose scaling maps
/// back to the source intensity range.
pub fn reconstructed_volume(manifest: &Manifest, slices: &[SliceImage]) -> (NiftiHeader, Volume) {
    let Normalization { volume_min, volume_max } = manifest.normalization;
    let span = volume_max - volume_min;
    let slope = if span > 0.0 { (span / 255.0) as f32 } else { 1.0 };
    let inter = volume_min as f32;
    let raw: Vec<f64> = slices
        .iter()
        .flat_map(|s| s.samples.iter().map(|&v| v as f64))
        .collect();
    let mut volume = Volume::new(manifest.volume_extents, manifest.voxel_spacing, raw.clone());
    volume.source_descriptor = "roicomp reconstruction".into();
    let mut header = NiftiHeader::for_volume(&volume, Datatype::Uint8);
    header.scl_slope = slope;
    header.scl_inter = inter;
    volume.samples = raw.iter().map(|&r| slope as f64 * r + inter as f64).collect();
    (header, volume)
}

fn region_errors<'r>(
    reference: &[SliceImage],
    test: &[SliceImage],
    roi_of: impl Fn(usize) -> (Option<Region<'r>>, Region<'r>),
) -> Result<(SquaredError, SquaredError, SquaredError, Vec<SliceQuality>)> {
    if reference.len() != test.len() {
        return Err(Error::Geometry(format!(
            "{} reference slices vs {} test slices",
            reference.len(),
            test.len()
        )));
    }
    let mut full = SquaredError::default();
    let mut roi_acc = SquaredError::default();
    let mut bg_acc = SquaredError::default();
    let mut per_slice = Vec::with_capacity(reference.len());
    for (i, (a, b)) in reference.iter().zip(test).enumerate() {
        let mut slice_full = SquaredError::default();
        slice_full.add(a, b, Region::All)?;
        let (roi_region, bg_region) = roi_of(i);
        if let Some(r) = roi_region {
            roi_acc.add(a, b, r)?;
        }
        bg_acc.add(a, b, bg_region)?;
        per_slice.push(SliceQuality {
            slice_index: i,
            psnr: slice_full.psnr()?,
            roi_present: roi_region.is_some(),
        });
        full.merge(slice_full);
    }
    Ok((full, roi_acc, bg_acc, per_slice))
}

fn optional_psnr(acc: &SquaredError) -> Option<f64> {
    acc.psnr().ok()
}

/// Compares the pre-encoding slices with a decoded reconstruction, using the
/// bundle's ROI squares as the ROI region.
pub fn verify(prepared: &Prepared, reconstructed: &[SliceImage], bundle: &StreamBundle) -> Result<QualityReport> {
    let records = &bundle.manifest.roi_records;
    let (full, roi_acc, bg_acc, per_slice) = region_errors(&prepared.slices, reconstructed, |i| {
        let r = &records[i];
        if r.present {
            (Some(Region::Rect(r.rect)), Region::OutsideRect(r.rect))
        } else {
            (None, Region::All)
        }
    })?;
    let [nx, ny, nz] = bundle.manifest.volume_extents;
    Ok(QualityReport {
        sizes: Some(SizeFigures::new((nx * ny * nz) as u64, bundle.total_bytes() as u64)?),
        psnr_full: full.psnr()?,
        psnr_roi: optional_psnr(&roi_acc),
        psnr_bg: optional_psnr(&bg_acc),
        segmentation: None,
        per_slice: Some(per_slice),
    })
}

/// Volume-level Dice/IoU of `predicted` against `truth`.
pub fn overlap(predicted: &[BinaryMask], truth: &[BinaryMask]) -> Result<OverlapCounts> {
    if predicted.len() != truth.len() {
        return Err(Error::Geometry(format!(
            "{} predicted masks vs {} reference masks",
            predicted.len(),
            truth.len()
        )));
    }
    let mut counts = OverlapCounts::default();
    for (p, t) in predicted.iter().zip(truth) {
        counts.add(p, t)?;
    }
    Ok(counts)
}

/// Compares a reconstructed volume against its reference. Both are
/// normalized with the reference's range. With labels, the tumor region
/// gives the ROI/background split and the baseline segmenter run on the
/// reconstruction is scored against them.
pub fn evaluate(reference: &Volume, reconstructed: &Volume, labels: Option<(&Volume, LabelMode)>) -> Result<QualityReport> {
    if reference.extents != reconstructed.extents {
        return Err(Error::Geometry(format!(
            "reference {:?} vs reconstruction {:?}",
            reference.extents, reconstructed.extents
        )));
    }
    let range = reference.range();
    let a = normalized_slices(reference, range)?;
    let b = normalized_slices(reconstructed, range)?;
    let truth = match labels {
        Some((l, mode)) => {
            if l.extents != reference.extents {
                return Err(Error::Geometry(format!(
                    "labels {:?} vs reference {:?}",
                    l.extents, reference.extents
                )));
            }
            Some(label_masks(l, mode)?)
        }
        None => None,
    };
    let (full, roi_acc, bg_acc, per_slice) = region_errors(&a, &b, |i| match &truth {
        Some(t) if !t[i].is_empty() => (Some(Region::Mask(&t[i])), Region::OutsideMask(&t[i])),
        _ => (None, Region::All),
    })?;
    let segmentation = match &truth {
        Some(t) => {
            let predicted = baseline_masks(&b, DEFAULT_THRESHOLD, DEFAULT_MIN_COMPONENT);
            Some(overlap(&predicted, t)?.metrics())
        }
        None => None,
    };
    Ok(QualityReport {
        sizes: None,
        psnr_full: full.psnr()?,
        psnr_roi: if truth.is_some() { optional_psnr(&roi_acc) } else { None },
        psnr_bg: if truth.is_some() { optional_psnr(&bg_acc) } else { None },
        segmentation,
        per_slice: Some(per_slice),
    })
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a `.nii` / `.nii.gz` file. Returns the file size alongside.
pub fn load_volume(path: &Path, time_index: usize) -> Result<(NiftiHeader, Volume, u64)> {
    let bytes = read_file(path)?;
    let (header, volume) = nifti::parse_nifti_at(&bytes, time_index)?;
    Ok((header, volume, bytes.len() as u64))
}

/// Loads `mask_0000.pgm` … for `slices` slices from `dir`.
pub fn load_external_masks(dir: &Path, slices: usize) -> Result<Vec<BinaryMask>> {
    (0..slices)
        .map(|i| {
            let path = dir.join(mask_file_name(i));
            let bytes = read_file(&path)?;
            Ok(BinaryMask::from_pgm(&bytes, MaskOrigin::External)?)
        })
        .collect()
}

pub fn write_masks(dir: &Path, masks: &[BinaryMask]) -> Result<()> {
    for (i, m) in masks.iter().enumerate() {
        write_file(&dir.join(mask_file_name(i)), &m.to_pgm())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{self, PhantomSpec};

    fn phantom(extents: [usize; 3], radius: f64) -> phantom::Phantom {
        phantom::generate(&PhantomSpec::centered(extents, radius, 5))
    }

    #[test]
    fn lossless_pipeline_is_identity() {
        let p = phantom([48, 40, 16], 6.0);
        let source = MaskSource::Labels {
            volume: p.labels.clone(),
            mode: LabelMode::WholeTumor,
        };
        let opts = CompressOptions {
            square_side: 16,
            ..Default::default()
        };
        let enc = EncoderSpec::internal_lossless();
        let out = compress(&p.image, &source, &opts, &enc).unwrap();
        let slices = decompress(&out.bundle, &enc).unwrap();
        assert_eq!(slices, out.prepared.slices);
        assert!(out.bundle.manifest.roi_records.iter().any(|r| r.present));
        assert!(out.bundle.manifest.roi_records.iter().any(|r| !r.present));
        let report = verify(&out.prepared, &slices, &out.bundle).unwrap();
        assert_eq!(report.psnr_full, crate::metrics::PSNR_CAP_DB);
        assert_eq!(report.psnr_roi, Some(crate::metrics::PSNR_CAP_DB));
    }

    #[test]
    fn odd_extents_are_padded_and_restored() {
        let p = phantom([33, 27, 5], 4.0);
        let enc = EncoderSpec::internal_lossless();
        let opts = CompressOptions {
            square_side: 12,
            ..Default::default()
        };
        let out = compress(&p.image, &MaskSource::baseline(), &opts, &enc).unwrap();
        assert_eq!(out.bundle.manifest.padded_dims.background, [34, 28]);
        assert_eq!(decompress(&out.bundle, &enc).unwrap(), out.prepared.slices);
    }

    #[test]
    fn baseline_finds_the_sphere() {
        let p = phantom([64, 64, 16], 7.0);
        let prepared = prepare(&p.image, &MaskSource::baseline(), &CompressOptions {
            square_side: 32,
            ..Default::default()
        })
        .unwrap();
        let truth = label_masks(&p.labels, LabelMode::WholeTumor).unwrap();
        let counts = overlap(&prepared.masks, &truth).unwrap();
        assert!(counts.dice() > 0.95, "dice {}", counts.dice());
    }

    #[test]
    fn streams_stay_frame_aligned() {
        let p = phantom([32, 32, 9], 3.0);
        let prepared = prepare(&p.image, &MaskSource::baseline(), &CompressOptions {
            square_side: 8,
            jobs: Some(2),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(prepared.roi_frames.len(), 9);
        assert_eq!(prepared.bg_frames.len(), 9);
        for (r, f) in prepared.records.iter().zip(&prepared.roi_frames) {
            if !r.present {
                assert!(f.samples.iter().all(|&v| v == 0));
            }
        }
    }

    #[test]
    fn oversized_tumor_warns() {
        let p = phantom([64, 64, 4], 20.0);
        let prepared = prepare(&p.image, &MaskSource::Labels {
            volume: p.labels.clone(),
            mode: LabelMode::WholeTumor,
        }, &CompressOptions {
            square_side: 16,
            ..Default::default()
        })
        .unwrap();
        assert!(!prepared.warnings.is_empty());
    }

    #[test]
    fn misaligned_masks_rejected() {
        let p = phantom([16, 16, 4], 3.0);
        let masks = vec![BinaryMask::empty(16, 16, MaskOrigin::External); 3];
        let err = prepare(&p.image, &MaskSource::External(masks), &CompressOptions {
            square_side: 8,
            ..Default::default()
        })
        .unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
        let err = prepare(&p.image, &MaskSource::baseline(), &CompressOptions {
            square_side: 32,
            ..Default::default()
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), crate::error::exit::GEOMETRY_OR_CONFIG);
    }

    #[test]
    fn reconstruction_scaling_round_trips_through_evaluate() {
        let p = phantom([24, 24, 6], 4.0);
        let enc = EncoderSpec::internal_lossless();
        let out = compress(&p.image, &MaskSource::baseline(), &CompressOptions {
            square_side: 8,
            ..Default::default()
        }, &enc)
        .unwrap();
        let slices = decompress(&out.bundle, &enc).unwrap();
        let (header, volume) = reconstructed_volume(&out.bundle.manifest, &slices);
        let bytes = nifti::write_nifti(&header, &volume).unwrap();
        assert_eq!(&bytes[nifti::DEFAULT_VOX_OFFSET..], out.prepared.slices.iter().flat_map(|s| s.samples.clone()).collect::<Vec<_>>());
        let (_, parsed) = nifti::parse_nifti(&bytes).unwrap();
        let report = evaluate(&p.image, &parsed, Some((&p.labels, LabelMode::WholeTumor))).unwrap();
        assert_eq!(report.psnr_full, crate::metrics::PSNR_CAP_DB);
        assert!(report.segmentation.is_some());
    }
}
