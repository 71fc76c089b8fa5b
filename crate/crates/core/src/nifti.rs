//! NIfTI-1 single-file (`.nii` / `.nii.gz`) reading and writing.
//!
//! Only the fields the compression pipeline needs are decoded. The
//! orientation block (qform/sform) is carried through as opaque bytes so a
//! parse/write roundtrip does not lose it.

use std::io::Read;

use flate2::read::MultiGzDecoder;
use thiserror::Error;

use crate::imaging::Plane;

/// Size of the NIfTI-1 header proper.
pub const HEADER_SIZE: usize = 348;
/// Voxel offset emitted by [`write_nifti`]: header plus the 4-byte extension flag.
pub const DEFAULT_VOX_OFFSET: usize = 352;
/// Magic for single-file NIfTI-1.
pub const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
/// Magic for header/image pairs, which are not supported.
pub const MAGIC_PAIRED: &[u8; 4] = b"ni1\0";

const ORIENTATION_OFFSET: usize = 252;
const ORIENTATION_LEN: usize = 76;
const DESCRIP_OFFSET: usize = 148;
const DESCRIP_LEN: usize = 80;

#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("bad magic {0:?}: only single-file NIfTI-1 (\"n+1\\0\") is supported")]
    BadMagic([u8; 4]),
    #[error("sizeof_hdr is {0} under both byte orders; not a NIfTI-1 stream")]
    NotNifti(i32),
    #[error("unsupported datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("truncated data: need {expected} bytes, have {actual}")]
    TruncatedData { expected: usize, actual: usize },
    #[error("rank {0} unsupported; expected 3 or 4")]
    RankUnsupported(i16),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("time index {index} out of range for {frames} volumes")]
    TimeIndexOutOfRange { index: usize, frames: usize },
    #[error("non-finite voxel value at index {0}")]
    NonFiniteSample(usize),
    #[error("header inconsistent with volume: {0}")]
    InconsistentDims(String),
    #[error("value {value} at index {index} does not fit the {datatype:?} datatype")]
    ValueOutOfRange {
        index: usize,
        value: f64,
        datatype: Datatype,
    },
    #[error("gzip decompression failed: {0}")]
    Gzip(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NiftiError>;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

/// Voxel datatypes accepted by the reader.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Datatype {
    Uint8,
    Int16,
    Int32,
    Float32,
    Float64,
    Uint16,
}

impl Datatype {
    pub const ALL: [Datatype; 6] = [
        Datatype::Uint8,
        Datatype::Int16,
        Datatype::Int32,
        Datatype::Float32,
        Datatype::Float64,
        Datatype::Uint16,
    ];

    pub fn code(self) -> i16 {
        match self {
            Datatype::Uint8 => 2,
            Datatype::Int16 => 4,
            Datatype::Int32 => 8,
            Datatype::Float32 => 16,
            Datatype::Float64 => 64,
            Datatype::Uint16 => 512,
        }
    }

    pub fn from_code(code: i16) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.code() == code)
    }

    pub fn bitpix(self) -> i16 {
        match self {
            Datatype::Uint8 => 8,
            Datatype::Int16 | Datatype::Uint16 => 16,
            Datatype::Int32 | Datatype::Float32 => 32,
            Datatype::Float64 => 64,
        }
    }

    pub fn bytes_per_voxel(self) -> usize {
        self.bitpix() as usize / 8
    }

    pub fn name(self) -> &'static str {
        match self {
            Datatype::Uint8 => "uint8",
            Datatype::Int16 => "int16",
            Datatype::Int32 => "int32",
            Datatype::Float32 => "float32",
            Datatype::Float64 => "float64",
            Datatype::Uint16 => "uint16",
        }
    }

    fn integer_range(self) -> Option<(f64, f64)> {
        match self {
            Datatype::Uint8 => Some((0.0, u8::MAX as f64)),
            Datatype::Int16 => Some((i16::MIN as f64, i16::MAX as f64)),
            Datatype::Uint16 => Some((0.0, u16::MAX as f64)),
            Datatype::Int32 => Some((i32::MIN as f64, i32::MAX as f64)),
            Datatype::Float32 | Datatype::Float64 => None,
        }
    }
}

/// Decoded NIfTI-1 header fields.
#[derive(Clone, Debug, PartialEq)]
pub struct NiftiHeader {
    pub sizeof_hdr: i32,
    pub dim: [i16; 8],
    pub datatype: Datatype,
    pub bitpix: i16,
    pub pixdim: [f32; 8],
    pub vox_offset: f32,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub xyzt_units: u8,
    pub descrip: [u8; DESCRIP_LEN],
    /// qform_code through srow_z, always stored little-endian.
    pub orientation: [u8; ORIENTATION_LEN],
    pub magic: [u8; 4],
    /// Byte order of the stream this header was read from.
    pub endianness: Endianness,
}

impl NiftiHeader {
    /// A fresh rank-3 header describing `volume` with the given storage type.
    pub fn for_volume(volume: &Volume, datatype: Datatype) -> Self {
        let [nx, ny, nz] = volume.extents;
        let [sx, sy, sz] = volume.spacing;
        let mut descrip = [0u8; DESCRIP_LEN];
        let text = volume.source_descriptor.as_bytes();
        let n = text.len().min(DESCRIP_LEN - 1);
        descrip[..n].copy_from_slice(&text[..n]);
        NiftiHeader {
            sizeof_hdr: HEADER_SIZE as i32,
            dim: [3, nx as i16, ny as i16, nz as i16, 1, 1, 1, 1],
            datatype,
            bitpix: datatype.bitpix(),
            pixdim: [1.0, sx as f32, sy as f32, sz as f32, 0.0, 0.0, 0.0, 0.0],
            vox_offset: DEFAULT_VOX_OFFSET as f32,
            scl_slope: 0.0,
            scl_inter: 0.0,
            // mm + seconds
            xyzt_units: 2 | 8,
            descrip,
            orientation: [0u8; ORIENTATION_LEN],
            magic: *MAGIC_SINGLE,
            endianness: Endianness::Little,
        }
    }

    pub fn rank(&self) -> i16 {
        self.dim[0]
    }

    /// Spatial extents `(nx, ny, nz)`.
    pub fn extents(&self) -> [usize; 3] {
        [
            self.dim[1] as usize,
            self.dim[2] as usize,
            self.dim[3] as usize,
        ]
    }

    /// Number of 3D volumes stored (dim[4] for rank-4 files, else 1).
    pub fn time_points(&self) -> usize {
        if self.dim[0] >= 4 {
            self.dim[4] as usize
        } else {
            1
        }
    }

    pub fn descriptor(&self) -> String {
        let end = self
            .descrip
            .iter()
            .position(|&b| b == 0)
            .unwrap_or(DESCRIP_LEN);
        String::from_utf8_lossy(&self.descrip[..end]).into_owned()
    }

    /// The header as [`write_nifti`] emits it: little-endian, data at byte 352.
    pub fn normalized(&self) -> Self {
        NiftiHeader {
            sizeof_hdr: HEADER_SIZE as i32,
            vox_offset: DEFAULT_VOX_OFFSET as f32,
            magic: *MAGIC_SINGLE,
            endianness: Endianness::Little,
            ..self.clone()
        }
    }

    fn scale(&self, raw: f64) -> f64 {
        if self.scl_slope != 0.0 {
            self.scl_slope as f64 * raw + self.scl_inter as f64
        } else {
            raw
        }
    }

    fn unscale(&self, value: f64) -> f64 {
        if self.scl_slope != 0.0 {
            (value - self.scl_inter as f64) / self.scl_slope as f64
        } else {
            value
        }
    }
}

/// A 3D scalar grid, x fastest, then y, then z.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    pub extents: [usize; 3],
    /// Voxel spacing in mm.
    pub spacing: [f64; 3],
    pub samples: Vec<f64>,
    pub source_descriptor: String,
}

impl Volume {
    pub fn new(extents: [usize; 3], spacing: [f64; 3], samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), extents.iter().product::<usize>());
        Volume {
            extents,
            spacing,
            samples,
            source_descriptor: String::new(),
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        let [nx, ny, _] = self.extents;
        (z * ny + y) * nx + x
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.samples[self.index(x, y, z)]
    }

    /// `(min, max)` over all samples; `(0, 0)` for an empty volume.
    pub fn range(&self) -> (f64, f64) {
        if self.samples.is_empty() {
            return (0.0, 0.0);
        }
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Reassembles a volume from equally sized planes, plane k at z = k.
    pub fn from_planes(planes: &[Plane], spacing: [f64; 3]) -> Self {
        let (nx, ny) = planes
            .first()
            .map(|p| (p.width, p.height))
            .unwrap_or((0, 0));
        let samples = planes.iter().flat_map(|p| p.samples.iter().copied()).collect();
        Volume::new([nx, ny, planes.len()], spacing, samples)
    }
}

struct FieldReader<'a> {
    bytes: &'a [u8],
    endianness: Endianness,
}

impl FieldReader<'_> {
    fn take<const N: usize>(&self, offset: usize) -> [u8; N] {
        let mut buf = [0u8; N];
        buf.copy_from_slice(&self.bytes[offset..offset + N]);
        if self.endianness == Endianness::Big {
            buf.reverse();
        }
        buf
    }

    fn i16(&self, offset: usize) -> i16 {
        i16::from_le_bytes(self.take(offset))
    }

    fn i32(&self, offset: usize) -> i32 {
        i32::from_le_bytes(self.take(offset))
    }

    fn f32(&self, offset: usize) -> f32 {
        f32::from_le_bytes(self.take(offset))
    }
}

/// Returns true for a gzip member prefix.
pub fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B
}

fn decompress_if_gzip(bytes: &[u8]) -> Result<std::borrow::Cow<'_, [u8]>> {
    if is_gzip(bytes) {
        let mut out = Vec::new();
        MultiGzDecoder::new(bytes).read_to_end(&mut out)?;
        Ok(out.into())
    } else {
        Ok(bytes.into())
    }
}

/// Decodes only the header of a (possibly gzipped) NIfTI-1 stream.
pub fn parse_header(bytes: &[u8]) -> Result<NiftiHeader> {
    let bytes = decompress_if_gzip(bytes)?;
    decode_header(&bytes)
}

fn decode_header(bytes: &[u8]) -> Result<NiftiHeader> {
    if bytes.len() < HEADER_SIZE {
        return Err(NiftiError::TruncatedData {
            expected: HEADER_SIZE,
            actual: bytes.len(),
        });
    }
    let sizeof_le = i32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let sizeof_be = i32::from_be_bytes(bytes[0..4].try_into().unwrap());
    let endianness = if sizeof_le == HEADER_SIZE as i32 {
        Endianness::Little
    } else if sizeof_be == HEADER_SIZE as i32 {
        Endianness::Big
    } else {
        return Err(NiftiError::NotNifti(sizeof_le));
    };
    let r = FieldReader { bytes, endianness };

    let mut magic = [0u8; 4];
    magic.copy_from_slice(&bytes[344..348]);
    if &magic != MAGIC_SINGLE {
        return Err(NiftiError::BadMagic(magic));
    }

    let mut dim = [0i16; 8];
    for (i, d) in dim.iter_mut().enumerate() {
        *d = r.i16(40 + 2 * i);
    }
    if !(1..=7).contains(&dim[0]) {
        return Err(NiftiError::RankUnsupported(dim[0]));
    }
    if let Some(bad) = (1..=dim[0] as usize).find(|&i| dim[i] < 1) {
        return Err(NiftiError::InvalidHeader(format!(
            "dim[{bad}] = {} must be at least 1",
            dim[bad]
        )));
    }

    let code = r.i16(70);
    let datatype = Datatype::from_code(code).ok_or(NiftiError::UnsupportedDatatype(code))?;
    let bitpix = r.i16(72);
    if bitpix != datatype.bitpix() {
        return Err(NiftiError::InvalidHeader(format!(
            "bitpix {bitpix} inconsistent with {} (expects {})",
            datatype.name(),
            datatype.bitpix()
        )));
    }

    let mut pixdim = [0f32; 8];
    for (i, p) in pixdim.iter_mut().enumerate() {
        *p = r.f32(76 + 4 * i);
    }

    let mut descrip = [0u8; DESCRIP_LEN];
    descrip.copy_from_slice(&bytes[DESCRIP_OFFSET..DESCRIP_OFFSET + DESCRIP_LEN]);

    // qform_code, sform_code (i16) followed by 18 f32 values.
    let mut orientation = [0u8; ORIENTATION_LEN];
    orientation[0..2].copy_from_slice(&r.take::<2>(ORIENTATION_OFFSET));
    orientation[2..4].copy_from_slice(&r.take::<2>(ORIENTATION_OFFSET + 2));
    for k in 0..18 {
        let at = 4 + 4 * k;
        orientation[at..at + 4].copy_from_slice(&r.take::<4>(ORIENTATION_OFFSET + at));
    }

    Ok(NiftiHeader {
        sizeof_hdr: HEADER_SIZE as i32,
        dim,
        datatype,
        bitpix,
        pixdim,
        vox_offset: r.f32(108),
        scl_slope: r.f32(112),
        scl_inter: r.f32(116),
        xyzt_units: bytes[123],
        descrip,
        orientation,
        magic,
        endianness,
    })
}

/// Parses a complete NIfTI-1 stream, selecting time index 0 of 4D data.
pub fn parse_nifti(bytes: &[u8]) -> Result<(NiftiHeader, Volume)> {
    parse_nifti_at(bytes, 0)
}

/// Parses a complete NIfTI-1 stream; for rank-4 files `time_index` picks
/// which 3D volume is returned.
pub fn parse_nifti_at(bytes: &[u8], time_index: usize) -> Result<(NiftiHeader, Volume)> {
    let bytes = decompress_if_gzip(bytes)?;
    let header = decode_header(&bytes)?;
    if !matches!(header.rank(), 3 | 4) {
        return Err(NiftiError::RankUnsupported(header.rank()));
    }
    let frames = header.time_points();
    if time_index >= frames {
        return Err(NiftiError::TimeIndexOutOfRange {
            index: time_index,
            frames,
        });
    }

    let vox_offset = header.vox_offset;
    if !(vox_offset.fract() == 0.0 && vox_offset >= DEFAULT_VOX_OFFSET as f32) {
        return Err(NiftiError::InvalidHeader(format!(
            "vox_offset {vox_offset} must be an integer >= {DEFAULT_VOX_OFFSET}"
        )));
    }
    let vox_offset = vox_offset as usize;

    let extents = header.extents();
    let count: usize = extents.iter().product();
    let bpv = header.datatype.bytes_per_voxel();
    let expected = vox_offset + count * frames * bpv;
    if bytes.len() < expected {
        return Err(NiftiError::TruncatedData {
            expected,
            actual: bytes.len(),
        });
    }

    let start = vox_offset + time_index * count * bpv;
    let data = &bytes[start..start + count * bpv];
    let r = FieldReader {
        bytes: data,
        endianness: header.endianness,
    };
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let at = i * bpv;
        let raw = match header.datatype {
            Datatype::Uint8 => data[at] as f64,
            Datatype::Int16 => r.i16(at) as f64,
            Datatype::Uint16 => u16::from_le_bytes(r.take(at)) as f64,
            Datatype::Int32 => r.i32(at) as f64,
            Datatype::Float32 => r.f32(at) as f64,
            Datatype::Float64 => f64::from_le_bytes(r.take(at)),
        };
        let value = header.scale(raw);
        if !value.is_finite() {
            return Err(NiftiError::NonFiniteSample(i));
        }
        samples.push(value);
    }

    let spacing = [
        header.pixdim[1] as f64,
        header.pixdim[2] as f64,
        header.pixdim[3] as f64,
    ];
    let volume = Volume {
        extents,
        spacing,
        samples,
        source_descriptor: header.descriptor(),
    };
    Ok((header, volume))
}

/// Serializes a single-file, little-endian NIfTI-1 stream with voxel data at
/// byte 352. Samples are mapped back through the header's scaling and
/// rounded for integer datatypes.
pub fn write_nifti(header: &NiftiHeader, volume: &Volume) -> Result<Vec<u8>> {
    let rank = header.rank();
    let single_volume = rank == 3 || (rank == 4 && header.dim[4] == 1);
    if !single_volume {
        return Err(NiftiError::InconsistentDims(format!(
            "rank {rank} header cannot describe a single 3D volume"
        )));
    }
    if header.extents() != volume.extents || header.dim[1..4].iter().any(|&d| d < 1) {
        return Err(NiftiError::InconsistentDims(format!(
            "header extents {:?} vs volume extents {:?}",
            &header.dim[1..4],
            volume.extents
        )));
    }
    if volume.samples.len() != volume.voxel_count() {
        return Err(NiftiError::InconsistentDims(format!(
            "{} samples for {} voxels",
            volume.samples.len(),
            volume.voxel_count()
        )));
    }
    if header.bitpix != header.datatype.bitpix() {
        return Err(NiftiError::InconsistentDims(format!(
            "bitpix {} for {}",
            header.bitpix,
            header.datatype.name()
        )));
    }

    let bpv = header.datatype.bytes_per_voxel();
    let mut out = vec![0u8; DEFAULT_VOX_OFFSET];
    {
        let mut put = |offset: usize, b: &[u8]| out[offset..offset + b.len()].copy_from_slice(b);
        put(0, &(HEADER_SIZE as i32).to_le_bytes());
        // regular = 'r'
        put(38, b"r");
        for (i, d) in header.dim.iter().enumerate() {
            put(40 + 2 * i, &d.to_le_bytes());
        }
        put(70, &header.datatype.code().to_le_bytes());
        put(72, &header.bitpix.to_le_bytes());
        for (i, p) in header.pixdim.iter().enumerate() {
            put(76 + 4 * i, &p.to_le_bytes());
        }
        put(108, &(DEFAULT_VOX_OFFSET as f32).to_le_bytes());
        put(112, &header.scl_slope.to_le_bytes());
        put(116, &header.scl_inter.to_le_bytes());
        put(123, &[header.xyzt_units]);
        put(DESCRIP_OFFSET, &header.descrip);
        put(ORIENTATION_OFFSET, &header.orientation);
        put(344, MAGIC_SINGLE);
    }

    out.reserve(volume.samples.len() * bpv);
    let range = header.datatype.integer_range();
    for (index, &value) in volume.samples.iter().enumerate() {
        let raw = header.unscale(value);
        let raw = match range {
            Some((lo, hi)) => {
                let r = raw.round();
                if !(lo..=hi).contains(&r) {
                    return Err(NiftiError::ValueOutOfRange {
                        index,
                        value,
                        datatype: header.datatype,
                    });
                }
                r
            }
            None => raw,
        };
        match header.datatype {
            Datatype::Uint8 => out.push(raw as u8),
            Datatype::Int16 => out.extend_from_slice(&(raw as i16).to_le_bytes()),
            Datatype::Uint16 => out.extend_from_slice(&(raw as u16).to_le_bytes()),
            Datatype::Int32 => out.extend_from_slice(&(raw as i32).to_le_bytes()),
            Datatype::Float32 => out.extend_from_slice(&(raw as f32).to_le_bytes()),
            Datatype::Float64 => out.extend_from_slice(&raw.to_le_bytes()),
        }
    }
    Ok(out)
}

/// Splits a volume into its nz axial planes, ascending z.
pub fn extract_axial_slices(volume: &Volume) -> Vec<Plane> {
    let [nx, ny, _] = volume.extents;
    let plane_len = nx * ny;
    if plane_len == 0 {
        return Vec::new();
    }
    volume
        .samples
        .chunks_exact(plane_len)
        .map(|chunk| Plane {
            width: nx,
            height: ny,
            samples: chunk.to_vec(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_u8() -> Vec<u8> {
        let volume = Volume::new([2, 2, 2], [1.0, 1.0, 1.0], (0..8).map(f64::from).collect());
        write_nifti(&NiftiHeader::for_volume(&volume, Datatype::Uint8), &volume).unwrap()
    }

    /// Rewrites a little-endian stream produced by `write_nifti` into big-endian.
    fn to_big_endian(le: &[u8], datatype: Datatype) -> Vec<u8> {
        let mut be = le.to_vec();
        let mut swap = |offset: usize, width: usize| be[offset..offset + width].reverse();
        swap(0, 4);
        for i in 0..8 {
            swap(40 + 2 * i, 2);
        }
        swap(70, 2);
        swap(72, 2);
        for i in 0..8 {
            swap(76 + 4 * i, 4);
        }
        for off in [108, 112, 116] {
            swap(off, 4);
        }
        swap(252, 2);
        swap(254, 2);
        for k in 0..18 {
            swap(256 + 4 * k, 4);
        }
        let bpv = datatype.bytes_per_voxel();
        let mut at = DEFAULT_VOX_OFFSET;
        while at + bpv <= be.len() {
            be[at..at + bpv].reverse();
            at += bpv;
        }
        be
    }

    #[test]
    fn minimal_uint8_identity_decode() {
        let (header, volume) = parse_nifti(&fixture_u8()).unwrap();
        assert_eq!(header.dim[..4], [3, 2, 2, 2]);
        assert_eq!(volume.extents, [2, 2, 2]);
        assert_eq!(volume.samples, (0..8).map(f64::from).collect::<Vec<_>>());
        assert_eq!(volume.get(1, 0, 0), 1.0);
        assert_eq!(volume.get(0, 1, 0), 2.0);
        assert_eq!(volume.get(0, 0, 1), 4.0);
    }

    #[test]
    fn slope_and_intercept_applied() {
        let mut bytes = fixture_u8();
        bytes[112..116].copy_from_slice(&2.0f32.to_le_bytes());
        bytes[116..120].copy_from_slice(&1.0f32.to_le_bytes());
        let (_, volume) = parse_nifti(&bytes).unwrap();
        assert_eq!(volume.samples, vec![1., 3., 5., 7., 9., 11., 13., 15.]);
    }

    #[test]
    fn zero_slope_means_no_scaling() {
        let mut bytes = fixture_u8();
        bytes[116..120].copy_from_slice(&5.0f32.to_le_bytes());
        let (_, volume) = parse_nifti(&bytes).unwrap();
        assert_eq!(volume.samples[3], 3.0);
    }

    #[test]
    fn single_voxel_file_size() {
        let volume = Volume::new([1, 1, 1], [1.0; 3], vec![0.0]);
        let bytes = write_nifti(&NiftiHeader::for_volume(&volume, Datatype::Uint8), &volume).unwrap();
        assert_eq!(bytes.len(), 353);
        assert_eq!(&bytes[344..348], MAGIC_SINGLE);
    }

    #[test]
    fn rank_five_header_rejected_by_writer() {
        let volume = Volume::new([1, 1, 1], [1.0; 3], vec![0.0]);
        let mut header = NiftiHeader::for_volume(&volume, Datatype::Uint8);
        header.dim[0] = 5;
        assert!(matches!(
            write_nifti(&header, &volume),
            Err(NiftiError::InconsistentDims(_))
        ));
    }

    #[test]
    fn paired_magic_rejected() {
        let mut bytes = fixture_u8();
        bytes[344..348].copy_from_slice(MAGIC_PAIRED);
        assert!(matches!(parse_nifti(&bytes), Err(NiftiError::BadMagic(_))));
    }

    #[test]
    fn unsupported_datatype_rejected() {
        let mut bytes = fixture_u8();
        // int8
        bytes[70..72].copy_from_slice(&256i16.to_le_bytes());
        assert!(matches!(
            parse_nifti(&bytes),
            Err(NiftiError::UnsupportedDatatype(256))
        ));
    }

    #[test]
    fn truncated_voxels_rejected() {
        let bytes = fixture_u8();
        let err = parse_nifti(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(
            err,
            NiftiError::TruncatedData {
                expected: 360,
                actual: 359
            }
        ));
        assert!(matches!(
            parse_nifti(&bytes[..100]),
            Err(NiftiError::TruncatedData { .. })
        ));
    }

    #[test]
    fn rank_two_rejected() {
        let mut bytes = fixture_u8();
        bytes[40..42].copy_from_slice(&2i16.to_le_bytes());
        assert!(matches!(
            parse_nifti(&bytes),
            Err(NiftiError::RankUnsupported(2))
        ));
    }

    #[test]
    fn bitpix_mismatch_rejected() {
        let mut bytes = fixture_u8();
        bytes[72..74].copy_from_slice(&16i16.to_le_bytes());
        assert!(matches!(
            parse_nifti(&bytes),
            Err(NiftiError::InvalidHeader(_))
        ));
    }

    #[test]
    fn big_endian_twin_parses_identically() {
        for datatype in Datatype::ALL {
            let samples: Vec<f64> = (0..24).map(|v| (v * 3) as f64).collect();
            let volume = Volume::new([4, 3, 2], [0.5, 1.0, 2.0], samples);
            let mut header = NiftiHeader::for_volume(&volume, datatype);
            header.orientation[0..2].copy_from_slice(&1i16.to_le_bytes());
            header.orientation[4..8].copy_from_slice(&0.25f32.to_le_bytes());
            let le = write_nifti(&header, &volume).unwrap();
            let be = to_big_endian(&le, datatype);
            let (h_le, v_le) = parse_nifti(&le).unwrap();
            let (h_be, v_be) = parse_nifti(&be).unwrap();
            assert_eq!(v_le, v_be, "{datatype:?}");
            assert_eq!(h_be.endianness, Endianness::Big);
            assert_eq!(h_le, h_be.normalized());
        }
    }

    #[test]
    fn gzip_twin_parses_identically() {
        use flate2::{write::GzEncoder, Compression};
        use std::io::Write;
        let raw = fixture_u8();
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&raw).unwrap();
        let gz = enc.finish().unwrap();
        assert!(is_gzip(&gz));
        assert_eq!(parse_nifti(&gz).unwrap(), parse_nifti(&raw).unwrap());
    }

    #[test]
    fn four_d_selects_time_index() {
        let mut bytes = fixture_u8();
        bytes[40..42].copy_from_slice(&4i16.to_le_bytes());
        bytes[48..50].copy_from_slice(&2i16.to_le_bytes());
        bytes.extend(100u8..108);
        let (_, first) = parse_nifti(&bytes).unwrap();
        assert_eq!(first.samples[0], 0.0);
        let (_, second) = parse_nifti_at(&bytes, 1).unwrap();
        assert_eq!(second.samples[0], 100.0);
        assert!(matches!(
            parse_nifti_at(&bytes, 2),
            Err(NiftiError::TimeIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn slices_follow_z() {
        let extents = [2, 2, 3];
        let samples = (0..12).map(|i| (i / 4) as f64).collect();
        let volume = Volume::new(extents, [1.0; 3], samples);
        let slices = extract_axial_slices(&volume);
        assert_eq!(slices.len(), 3);
        for (k, s) in slices.iter().enumerate() {
            assert_eq!((s.width, s.height), (2, 2));
            assert!(s.samples.iter().all(|&v| v == k as f64));
        }
    }

    #[test]
    fn slices_cover_every_voxel_once() {
        let volume = Volume::new([3, 4, 5], [1.0; 3], (0..60).map(f64::from).collect());
        let slices = extract_axial_slices(&volume);
        assert_eq!(slices.len(), 5);
        for (z, slice) in slices.iter().enumerate() {
            for y in 0..4 {
                for x in 0..3 {
                    // index-arithmetic oracle: x + 3*y + 12*z
                    let expected = (x + 3 * y + 12 * z) as f64;
                    assert_eq!(slice.samples[y * 3 + x], expected);
                }
            }
        }
        assert_eq!(Volume::from_planes(&slices, [1.0; 3]), volume);
    }

    #[test]
    fn out_of_range_value_rejected_by_writer() {
        let volume = Volume::new([1, 1, 1], [1.0; 3], vec![300.0]);
        let header = NiftiHeader::for_volume(&volume, Datatype::Uint8);
        assert!(matches!(
            write_nifti(&header, &volume),
            Err(NiftiError::ValueOutOfRange { .. })
        ));
    }
}
