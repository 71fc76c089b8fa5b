//! Raw slice streams, their YUV4MPEG2 interchange form, and the bundle
//! manifest that makes a compressed bundle self-describing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::SliceImage;
use crate::roi::RoiRecord;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.rcm";
/// Highest CRF accepted (x265 convention).
pub const MAX_CRF: u8 = 51;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("no frames to assemble")]
    EmptyInput,
    #[error("frame {index} is {got:?}, expected {expected:?}")]
    MixedDimensions {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("bad YUV4MPEG2 header: {0}")]
    BadY4mHeader(String),
    #[error("truncated frame {0}")]
    TruncatedFrame(usize),
    #[error("unsupported colorspace {0:?}; only Cmono is accepted")]
    UnsupportedColorspace(String),
    #[error("manifest format_version {0} unsupported")]
    BadVersion(u64),
    #[error("manifest missing field `{0}`")]
    MissingField(String),
    #[error("manifest has unknown field `{0}`")]
    UnknownField(String),
    #[error("manifest is malformed: {0}")]
    Malformed(String),
    #[error("manifest geometry inconsistent: {0}")]
    GeometryInconsistent(String),
}

pub type Result<T> = std::result::Result<T, StreamError>;

/// An ordered sequence of 8-bit mono frames with even dimensions.
#[derive(Clone, PartialEq, Eq)]
pub struct RawStream {
    pub width: usize,
    pub height: usize,
    pub frames: Vec<Vec<u8>>,
}

impl std::fmt::Debug for RawStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RawStream({}x{}x{})", self.width, self.height, self.frames.len())
    }
}

impl RawStream {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frame_len(&self) -> usize {
        self.width * self.height
    }

    /// Uncompressed luma bytes.
    pub fn raw_bytes(&self) -> usize {
        self.frame_len() * self.frames.len()
    }
}

/// Rows/columns appended by [`assemble`] to make dimensions even.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct Padding {
    pub right: usize,
    pub bottom: usize,
}

/// Stacks equally sized slices into a stream, replicating the last column
/// and/or row when a dimension is odd.
pub fn assemble(frames: &[SliceImage]) -> Result<(RawStream, Padding)> {
    let first = frames.first().ok_or(StreamError::EmptyInput)?;
    let (w, h) = first.dims();
    if let Some((index, f)) = frames.iter().enumerate().find(|(_, f)| f.dims() != (w, h)) {
        return Err(StreamError::MixedDimensions {
            index,
            expected: (w, h),
            got: f.dims(),
        });
    }
    let pad = Padding {
        right: w % 2,
        bottom: h % 2,
    };
    let (pw, ph) = (w + pad.right, h + pad.bottom);
    let frames = frames
        .iter()
        .map(|f| {
            if pad == Padding::default() {
                return f.samples.clone();
            }
            let mut out = Vec::with_capacity(pw * ph);
            for row in f.samples.chunks_exact(w) {
                out.extend_from_slice(row);
                if pad.right == 1 {
                    out.push(row[w - 1]);
                }
            }
            if pad.bottom == 1 {
                let last = out[(ph - 2) * pw..].to_vec();
                out.extend_from_slice(&last);
            }
            out
        })
        .collect();
    Ok((
        RawStream {
            width: pw,
            height: ph,
            frames,
        },
        pad,
    ))
}

/// Inverse of [`assemble`]: crops each frame to `width`×`height`.
pub fn disassemble(stream: &RawStream, width: usize, height: usize) -> Result<Vec<SliceImage>> {
    if width > stream.width || height > stream.height {
        return Err(StreamError::GeometryInconsistent(format!(
            "cannot crop {}x{} stream to {width}x{height}",
            stream.width, stream.height
        )));
    }
    Ok(stream
        .frames
        .iter()
        .map(|frame| {
            let samples = frame
                .chunks_exact(stream.width)
                .take(height)
                .flat_map(|row| &row[..width])
                .copied()
                .collect();
            SliceImage {
                width,
                height,
                samples,
            }
        })
        .collect())
}

pub fn write_y4m(stream: &RawStream) -> Vec<u8> {
    let mut out = format!(
        "YUV4MPEG2 W{} H{} F25:1 Ip A1:1 Cmono\n",
        stream.width, stream.height
    )
    .into_bytes();
    out.reserve(stream.frames.len() * (6 + stream.frame_len()));
    for frame in &stream.frames {
        out.extend_from_slice(b"FRAME\n");
        out.extend_from_slice(frame);
    }
    out
}

pub fn read_y4m(bytes: &[u8]) -> Result<RawStream> {
    let bad = |m: String| StreamError::BadY4mHeader(m);
    let eol = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..eol])
        .ok()
        .filter(|h| h.is_ascii())
        .ok_or_else(|| bad("header is not ASCII".into()))?;
    let mut tokens = header.split(' ').filter(|t| !t.is_empty());
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(bad("missing YUV4MPEG2 signature".into()));
    }
    let (mut width, mut height, mut colorspace) = (None, None, None);
    for token in tokens {
        let (tag, value) = token.split_at(1);
        match tag {
            "W" => width = Some(value.parse::<usize>().map_err(|_| bad(format!("bad width {value:?}")))?),
            "H" => height = Some(value.parse::<usize>().map_err(|_| bad(format!("bad height {value:?}")))?),
            "C" => colorspace = Some(value.to_string()),
            // frame rate, interlacing, aspect ratio and extensions are not used
            "F" | "I" | "A" | "X" => {}
            _ => return Err(bad(format!("unknown tag {token:?}"))),
        }
    }
    let width = width.ok_or_else(|| bad("missing W".into()))?;
    let height = height.ok_or_else(|| bad("missing H".into()))?;
    match colorspace.as_deref() {
        Some("mono") => {}
        // absent C means 4:2:0
        other => return Err(StreamError::UnsupportedColorspace(other.unwrap_or("420jpeg").to_string())),
    }

    let frame_len = width * height;
    let mut frames = Vec::new();
    let mut pos = eol + 1;
    while pos < bytes.len() {
        let index = frames.len();
        let rest = &bytes[pos..];
        let line_end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(StreamError::TruncatedFrame(index))?;
        if !rest[..line_end].starts_with(b"FRAME") {
            return Err(bad(format!("expected FRAME marker for frame {index}")));
        }
        let start = pos + line_end + 1;
        let end = start + frame_len;
        if end > bytes.len() {
            return Err(StreamError::TruncatedFrame(index));
        }
        frames.push(bytes[start..end].to_vec());
        pos = end;
    }
    Ok(RawStream {
        width,
        height,
        frames,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaddedDims {
    pub background: [usize; 2],
    pub roi: [usize; 2],
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub volume_min: f64,
    pub volume_max: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checksums {
    pub bg: String,
    pub roi: String,
}

/// Sidecar describing a compressed bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub volume_extents: [usize; 3],
    pub voxel_spacing: [f64; 3],
    pub square_side: usize,
    pub padded_dims: PaddedDims,
    pub crf_roi: u8,
    pub crf_bg: u8,
    pub roi_records: Vec<RoiRecord>,
    pub normalization: Normalization,
    pub encoder_id: String,
    pub checksums: Checksums,
}

impl Manifest {
    pub fn background_padding(&self) -> Padding {
        let [nx, ny, _] = self.volume_extents;
        let [pw, ph] = self.padded_dims.background;
        Padding {
            right: pw.saturating_sub(nx),
            bottom: ph.saturating_sub(ny),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let geo = |m: String| Err(StreamError::GeometryInconsistent(m));
        if self.format_version != MANIFEST_VERSION {
            return Err(StreamError::BadVersion(self.format_version as u64));
        }
        let [nx, ny, nz] = self.volume_extents;
        let s = self.square_side;
        if self.roi_records.len() != nz {
            return geo(format!("{} records for {nz} slices", self.roi_records.len()));
        }
        if s == 0 || !s.is_multiple_of(2) || s > nx || s > ny {
            return geo(format!("square side {s} invalid for {nx}x{ny}"));
        }
        let [pw, ph] = self.padded_dims.background;
        if pw != nx + nx % 2 || ph != ny + ny % 2 {
            return geo(format!("background padded to {pw}x{ph} for {nx}x{ny}"));
        }
        if self.padded_dims.roi != [s, s] {
            return geo(format!("roi dims {:?} for side {s}", self.padded_dims.roi));
        }
        if self.crf_roi > MAX_CRF || self.crf_bg > MAX_CRF {
            return geo(format!("CRF outside 0..={MAX_CRF}"));
        }
        for (i, r) in self.roi_records.iter().enumerate() {
            if r.slice_index != i {
                return geo(format!("record {i} has slice_index {}", r.slice_index));
            }
            if r.rect.side != s {
                return geo(format!("record {i} square side {} != {s}", r.rect.side));
            }
            if !r.rect.fits(nx, ny) {
                return geo(format!("record {i} square {:?} outside {nx}x{ny}", r.rect));
            }
            if !r.present && r.source_bbox.is_some() {
                return geo(format!("record {i} is absent but has a bbox"));
            }
        }
        Ok(())
    }
}

/// Canonical text form: pretty JSON with keys sorted at every level.
pub fn write_manifest(manifest: &Manifest) -> String {
    // serde_json::Value objects are BTreeMap-backed, which sorts keys.
    let value = serde_json::to_value(manifest).expect("manifest serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    text
}

pub fn read_manifest(text: &str) -> Result<Manifest> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| StreamError::Malformed(e.to_string()))?;
    match value.get("format_version") {
        None => return Err(StreamError::MissingField("format_version".into())),
        Some(v) => match v.as_u64() {
            Some(1) => {}
            Some(other) => return Err(StreamError::BadVersion(other)),
            None => return Err(StreamError::Malformed(format!("format_version {v}"))),
        },
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        let quoted = || msg.split('`').nth(1).unwrap_or_default().to_string();
        if msg.starts_with("missing field") {
            StreamError::MissingField(quoted())
        } else if msg.starts_with("unknown field") {
            StreamError::UnknownField(quoted())
        } else {
            StreamError::Malformed(msg)
        }
    })?;
    manifest.validate()?;
    Ok(manifest)
}
