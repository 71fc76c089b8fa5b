//! Stream encoding: an external HEVC encoder driven through argv templates,
//! and a deterministic internal lossless codec.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::imaging::SliceImage;
use crate::stream::{self, Manifest, RawStream, StreamError, MANIFEST_FILE, MAX_CRF};

pub const INTERNAL_ENCODER_ID: &str = "internal-lossless/1";
pub const LOSSLESS_MAGIC: &[u8; 4] = b"RCL1";
pub const ROI_PAYLOAD_FILE: &str = "roi.bin";
pub const BG_PAYLOAD_FILE: &str = "bg.bin";

pub const DEFAULT_ENCODE_TEMPLATE: &str =
    "ffmpeg -y -i {input} -c:v libx265 -crf {crf} -preset medium -f hevc {output}";
pub const DEFAULT_DECODE_TEMPLATE: &str = "ffmpeg -y -i {input} -pix_fmt gray -f yuv4mpeg2 {output}";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("encoder configuration: {0}")]
    Config(String),
    #[error("encoder not found: {}", argv.join(" "))]
    EncoderNotFound { argv: Vec<String> },
    #[error("encoder failed ({}): {}\n{stderr}", exit_label(*status), argv.join(" "))]
    EncoderFailed {
        argv: Vec<String>,
        status: Option<i32>,
        stderr: String,
    },
    #[error("decoder failed ({}): {}\n{stderr}", exit_label(*status), argv.join(" "))]
    DecoderFailed {
        argv: Vec<String>,
        status: Option<i32>,
        stderr: String,
    },
    #[error("encoder timed out after {}s: {}", timeout.as_secs_f64(), argv.join(" "))]
    EncoderTimeout { argv: Vec<String>, timeout: Duration },
    #[error("checksum mismatch on {stream} payload: manifest {expected}, payload {actual}")]
    ChecksumError {
        stream: &'static str,
        expected: String,
        actual: String,
    },
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("payload is not an internal lossless stream (bad magic)")]
    BadMagic,
    #[error("corrupt lossless payload: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

fn exit_label(status: Option<i32>) -> String {
    match status {
        Some(code) => format!("exit {code}"),
        None => "killed by signal".to_string(),
    }
}

pub type Result<T> = std::result::Result<T, CodecError>;

/// A whitespace-separated argv with `{input}`, `{output}` and `{crf}`
/// placeholders. Substitution happens per token, after splitting, so paths
/// containing spaces stay a single argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandTemplate {
    tokens: Vec<String>,
}

impl CommandTemplate {
    pub fn parse(text: &str, required: &[&str]) -> Result<Self> {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            return Err(CodecError::Config("empty command template".into()));
        }
        if let Some(missing) = required.iter().find(|p| !text.contains(*p)) {
            return Err(CodecError::Config(format!(
                "command template {text:?} lacks the {missing} placeholder"
            )));
        }
        Ok(CommandTemplate { tokens })
    }

    pub fn program(&self) -> &str {
        &self.tokens[0]
    }

    pub fn render(&self, input: &Path, output: &Path, crf: Option<u8>) -> Vec<OsString> {
        let crf = crf.map(|c| c.to_string()).unwrap_or_default();
        self.tokens
            .iter()
            .map(|t| {
                let mut arg = OsString::new();
                let mut rest = t.as_str();
                while let Some(open) = rest.find('{') {
                    let (head, tail) = rest.split_at(open);
                    arg.push(head);
                    let (sub, skip): (Option<&std::ffi::OsStr>, usize) = if tail.starts_with("{input}") {
                        (Some(input.as_os_str()), 7)
                    } else if tail.starts_with("{output}") {
                        (Some(output.as_os_str()), 8)
                    } else if tail.starts_with("{crf}") {
                        (Some(crf.as_ref()), 5)
                    } else {
                        (None, 1)
                    };
                    arg.push(sub.unwrap_or("{".as_ref()));
                    rest = &tail[skip..];
                }
                arg.push(rest);
                arg
            })
            .collect()
    }
}

impl std::fmt::Display for CommandTemplate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncoderKind {
    InternalLossless,
    ExternalHevc {
        encode: CommandTemplate,
        decode: CommandTemplate,
    },
}

#[derive(Clone, Debug)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    pub timeout: Duration,
    /// Parent for per-process scratch directories; the system temp dir if unset.
    pub scratch_dir: Option<PathBuf>,
}

impl EncoderSpec {
    pub fn internal_lossless() -> Self {
        EncoderSpec {
            kind: EncoderKind::InternalLossless,
            timeout: DEFAULT_TIMEOUT,
            scratch_dir: None,
        }
    }

    /// Validates both templates before anything is launched.
    pub fn external(encode_template: &str, decode_template: &str) -> Result<Self> {
        Ok(EncoderSpec {
            kind: EncoderKind::ExternalHevc {
                encode: CommandTemplate::parse(encode_template, &["{input}", "{output}", "{crf}"])?,
                decode: CommandTemplate::parse(decode_template, &["{input}", "{output}"])?,
            },
            timeout: DEFAULT_TIMEOUT,
            scratch_dir: None,
        })
    }

    pub fn default_external() -> Self {
        Self::external(DEFAULT_ENCODE_TEMPLATE, DEFAULT_DECODE_TEMPLATE).expect("default templates are valid")
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_scratch_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.scratch_dir = Some(dir.into());
        self
    }

    fn scratch(&self) -> Result<tempfile::TempDir> {
        let builder = {
            let mut b = tempfile::Builder::new();
            b.prefix("roicomp-proc-");
            b
        };
        Ok(match &self.scratch_dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                builder.tempdir_in(dir)?
            }
            None => builder.tempdir()?,
        })
    }

    /// Identifier recorded in the manifest: the tool's version banner for
    /// external encoders.
    pub fn encoder_id(&self) -> String {
        match &self.kind {
            EncoderKind::InternalLossless => INTERNAL_ENCODER_ID.to_string(),
            EncoderKind::ExternalHevc { encode, .. } => {
                let banner = Command::new(encode.program())
                    .arg("-version")
                    .stdin(Stdio::null())
                    .stderr(Stdio::null())
                    .output()
                    .ok()
                    .filter(|o| o.status.success())
                    .and_then(|o| {
                        String::from_utf8_lossy(&o.stdout)
                            .lines()
                            .next()
                            .map(|l| l.trim().to_string())
                    })
                    .filter(|l| !l.is_empty());
                banner.unwrap_or_else(|| format!("external:{}", encode.program()))
            }
        }
    }
}

enum RunFailure {
    NotFound,
    Failed { status: Option<i32>, stderr: String },
    Timeout,
    Io(io::Error),
}

/// Runs `argv`, capturing stderr, killing the child once `timeout` elapses.
fn run_process(argv: &[OsString], timeout: Duration) -> std::result::Result<(), RunFailure> {
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => RunFailure::NotFound,
            _ => RunFailure::Io(e),
        })?;
    let mut pipe = child.stderr.take().expect("stderr is piped");
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe.read_to_end(&mut buf);
        buf
    });
    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = reader.join();
                return Err(RunFailure::Timeout);
            }
            Ok(None) => thread::sleep(Duration::from_millis(10)),
            Err(e) => return Err(RunFailure::Io(e)),
        }
    };
    let stderr = reader.join().unwrap_or_default();
    if status.success() {
        Ok(())
    } else {
        Err(RunFailure::Failed {
            status: status.code(),
            stderr: String::from_utf8_lossy(&stderr).into_owned(),
        })
    }
}

fn display_argv(argv: &[OsString]) -> Vec<String> {
    argv.iter().map(|a| a.to_string_lossy().into_owned()).collect()
}

fn run_external(argv: Vec<OsString>, timeout: Duration, decoding: bool) -> Result<()> {
    run_process(&argv, timeout).map_err(|f| {
        let argv = display_argv(&argv);
        match f {
            RunFailure::NotFound => CodecError::EncoderNotFound { argv },
            RunFailure::Timeout => CodecError::EncoderTimeout { argv, timeout },
            RunFailure::Io(e) => CodecError::Io(e),
            RunFailure::Failed { status, stderr } if decoding => CodecError::DecoderFailed { argv, status, stderr },
            RunFailure::Failed { status, stderr } => CodecError::EncoderFailed { argv, status, stderr },
        }
    })
}

/// Encodes one stream. `crf` is ignored by the lossless codec.
pub fn encode_stream(stream: &RawStream, crf: u8, enc: &EncoderSpec) -> Result<Vec<u8>> {
    check_crf(crf)?;
    match &enc.kind {
        EncoderKind::InternalLossless => Ok(lossless_encode(stream)),
        EncoderKind::ExternalHevc { encode, .. } => {
            let dir = enc.scratch()?;
            let input = dir.path().join("input.y4m");
            let output = dir.path().join("output.hevc");
            fs::write(&input, stream::write_y4m(stream))?;
            run_external(encode.render(&input, &output, Some(crf)), enc.timeout, false)?;
            Ok(fs::read(&output)?)
        }
    }
}

pub fn decode_stream(payload: &[u8], enc: &EncoderSpec) -> Result<RawStream> {
    match &enc.kind {
        EncoderKind::InternalLossless => lossless_decode(payload),
        EncoderKind::ExternalHevc { decode, .. } => {
            let dir = enc.scratch()?;
            let input = dir.path().join("input.hevc");
            let output = dir.path().join("output.y4m");
            fs::write(&input, payload)?;
            run_external(decode.render(&input, &output, None), enc.timeout, true)?;
            Ok(stream::read_y4m(&fs::read(&output)?)?)
        }
    }
}

fn check_crf(crf: u8) -> Result<()> {
    if crf > MAX_CRF {
        return Err(CodecError::Config(format!("CRF {crf} outside 0..={MAX_CRF}")));
    }
    Ok(())
}

/// Per-frame delta against the previous frame (wrapping), then deflate.
///
/// Layout: `RCL1`, width, height, frame count (u32 little-endian), then the
/// raw-deflate residual stream.
pub fn lossless_encode(stream: &RawStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + stream.raw_bytes() / 4);
    out.extend_from_slice(LOSSLESS_MAGIC);
    for v in [stream.width, stream.height, stream.frame_count()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    let mut deflate = DeflateEncoder::new(out, Compression::best());
    let mut residual = vec![0u8; stream.frame_len()];
    let zero = vec![0u8; stream.frame_len()];
    let mut prev: &[u8] = &zero;
    for frame in &stream.frames {
        for ((r, &cur), &old) in residual.iter_mut().zip(frame).zip(prev) {
            *r = cur.wrapping_sub(old);
        }
        deflate.write_all(&residual).expect("writing to a Vec cannot fail");
        prev = frame;
    }
    deflate.finish().expect("writing to a Vec cannot fail")
}

pub fn lossless_decode(payload: &[u8]) -> Result<RawStream> {
    if payload.len() < 4 || &payload[..4] != LOSSLESS_MAGIC {
        return Err(CodecError::BadMagic);
    }
    if payload.len() < 16 {
        return Err(CodecError::Corrupt("header truncated".into()));
    }
    let field = |i: usize| u32::from_le_bytes(payload[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (width, height, count) = (field(0), field(1), field(2));
    let frame_len = width
        .checked_mul(height)
        .ok_or_else(|| CodecError::Corrupt("dimensions overflow".into()))?;
    let total = frame_len
        .checked_mul(count)
        .ok_or_else(|| CodecError::Corrupt("frame count overflow".into()))?;

    let mut residuals = Vec::with_capacity(total.min(1 << 28));
    DeflateDecoder::new(&payload[16..])
        .take(total as u64 + 1)
        .read_to_end(&mut residuals)
        .map_err(|e| CodecError::Corrupt(e.to_string()))?;
    if residuals.len() != total {
        return Err(CodecError::Corrupt(format!(
            "expected {total} residual bytes, found {}",
            residuals.len()
        )));
    }

    let mut frames: Vec<Vec<u8>> = Vec::with_capacity(count);
    if frame_len > 0 {
        for chunk in residuals.chunks_exact(frame_len) {
            let frame = match frames.last() {
                Some(prev) => chunk.iter().zip(prev).map(|(&r, &p)| r.wrapping_add(p)).collect(),
                None => chunk.to_vec(),
            };
            frames.push(frame);
        }
    } else {
        frames.resize(count, Vec::new());
    }
    Ok(RawStream {
        width,
        height,
        frames,
    })
}

pub fn checksum(payload: &[u8]) -> String {
    hex::encode(Sha256::digest(payload))
}

/// The compressed artifact: manifest plus the two encoded streams.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamBundle {
    pub manifest: Manifest,
    pub roi_payload: Vec<u8>,
    pub bg_payload: Vec<u8>,
}

impl StreamBundle {
    pub fn verify(&self) -> Result<()> {
        for (stream, payload, expected) in [
            ("roi", &self.roi_payload, &self.manifest.checksums.roi),
            ("bg", &self.bg_payload, &self.manifest.checksums.bg),
        ] {
            let actual = checksum(payload);
            if &actual != expected {
                return Err(CodecError::ChecksumError {
                    stream,
                    expected: expected.clone(),
                    actual,
                });
            }
        }
        Ok(())
    }

    pub fn manifest_text(&self) -> String {
        stream::write_manifest(&self.manifest)
    }

    pub fn payload_bytes(&self) -> usize {
        self.roi_payload.len() + self.bg_payload.len()
    }

    /// Bytes of the on-disk bundle: both payloads and the manifest.
    pub fn total_bytes(&self) -> usize {
        self.payload_bytes() + self.manifest_text().len()
    }

    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(ROI_PAYLOAD_FILE), &self.roi_payload)?;
        fs::write(dir.join(BG_PAYLOAD_FILE), &self.bg_payload)?;
        fs::write(dir.join(MANIFEST_FILE), self.manifest_text())?;
        Ok(())
    }

    /// Loads a bundle directory. Checksums are not verified here.
    pub fn read_from_dir(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(StreamBundle {
            manifest: stream::read_manifest(&text)?,
            roi_payload: fs::read(dir.join(ROI_PAYLOAD_FILE))?,
            bg_payload: fs::read(dir.join(BG_PAYLOAD_FILE))?,
        })
    }
}

/// Encodes the ROI stream at `manifest.crf_roi` and the background stream at
/// `manifest.crf_bg`, concurrently, and fills in checksums and encoder id.
pub fn encode_bundle(roi: &RawStream, bg: &RawStream, manifest: Manifest, enc: &EncoderSpec) -> Result<StreamBundle> {
    let mut manifest = manifest;
    check_crf(manifest.crf_roi)?;
    check_crf(manifest.crf_bg)?;
    if manifest.crf_roi >= manifest.crf_bg {
        log::warn!(
            "ROI CRF {} is not below background CRF {}; the ROI will not get the higher quality",
            manifest.crf_roi,
            manifest.crf_bg
        );
    }
    let nz = manifest.roi_records.len();
    if roi.frame_count() != nz || bg.frame_count() != nz {
        return Err(CodecError::GeometryMismatch(format!(
            "streams have {} ROI and {} background frames for {nz} records",
            roi.frame_count(),
            bg.frame_count()
        )));
    }
    check_dims("ROI", roi, manifest.padded_dims.roi)?;
    check_dims("background", bg, manifest.padded_dims.background)?;

    let (roi_payload, bg_payload) = thread::scope(|s| {
        let roi_job = s.spawn(|| encode_stream(roi, manifest.crf_roi, enc));
        let bg_payload = encode_stream(bg, manifest.crf_bg, enc);
        let roi_payload = roi_job.join().expect("encoder thread panicked");
        (roi_payload, bg_payload)
    });
    let (roi_payload, bg_payload) = (roi_payload?, bg_payload?);

    manifest.encoder_id = enc.encoder_id();
    manifest.checksums.roi = checksum(&roi_payload);
    manifest.checksums.bg = checksum(&bg_payload);
    Ok(StreamBundle {
        manifest,
        roi_payload,
        bg_payload,
    })
}

fn check_dims(what: &str, s: &RawStream, dims: [usize; 2]) -> Result<()> {
    if [s.width, s.height] != dims {
        return Err(CodecError::GeometryMismatch(format!(
            "{what} stream is {}x{}, manifest says {}x{}",
            s.width, s.height, dims[0], dims[1]
        )));
    }
    Ok(())
}

/// Decoded ROI patches and background frames, padding removed.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedBundle {
    pub roi: Vec<SliceImage>,
    pub background: Vec<SliceImage>,
}

pub fn decode_bundle(bundle: &StreamBundle, enc: &EncoderSpec) -> Result<DecodedBundle> {
    bundle.verify()?;
    let m = &bundle.manifest;
    let (roi, bg) = thread::scope(|s| {
        let roi_job = s.spawn(|| decode_stream(&bundle.roi_payload, enc));
        let bg = decode_stream(&bundle.bg_payload, enc);
        (roi_job.join().expect("decoder thread panicked"), bg)
    });
    let (roi, bg) = (roi?, bg?);
    let nz = m.volume_extents[2];
    for (what, s) in [("ROI", &roi), ("background", &bg)] {
        if s.frame_count() != nz {
            return Err(CodecError::GeometryMismatch(format!(
                "decoded {what} stream has {} frames, manifest says {nz}",
                s.frame_count()
            )));
        }
    }
    check_dims("decoded ROI", &roi, m.padded_dims.roi)?;
    check_dims("decoded background", &bg, m.padded_dims.background)?;
    let [nx, ny, _] = m.volume_extents;
    Ok(DecodedBundle {
        roi: stream::disassemble(&roi, m.square_side, m.square_side)?,
        background: stream::disassemble(&bg, nx, ny)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream(width: usize, height: usize, frames: Vec<Vec<u8>>) -> RawStream {
        RawStream {
            width,
            height,
            frames,
        }
    }

    #[test]
    fn constant_stream_compresses_below_one_percent() {
        let s = stream(128, 128, vec![vec![77u8; 128 * 128]; 16]);
        let payload = lossless_encode(&s);
        assert!(payload.len() * 100 < s.raw_bytes(), "{} bytes", payload.len());
        assert_eq!(lossless_decode(&payload).unwrap(), s);
    }

    #[test]
    fn empty_stream_roundtrips() {
        let s = stream(4, 4, vec![]);
        let payload = lossless_encode(&s);
        assert_eq!(&payload[..4], LOSSLESS_MAGIC);
        assert_eq!(lossless_decode(&payload).unwrap(), s);
    }

    #[test]
    fn adversarial_frames_roundtrip() {
        let frames = vec![vec![0u8; 64], vec![255u8; 64], vec![0u8; 64], (0..64).map(|i| (i * 37) as u8).collect()];
        let s = stream(8, 8, frames);
        assert_eq!(lossless_decode(&lossless_encode(&s)).unwrap(), s);
    }

    #[test]
    fn bad_payloads() {
        assert!(matches!(lossless_decode(b"NOPE...."), Err(CodecError::BadMagic)));
        let s = stream(8, 8, vec![vec![3u8; 64]; 2]);
        let mut payload = lossless_encode(&s);
        payload.truncate(payload.len() - 2);
        assert!(matches!(lossless_decode(&payload), Err(CodecError::Corrupt(_))));
        let mut payload = lossless_encode(&s);
        payload[12] = 9;
        assert!(matches!(lossless_decode(&payload), Err(CodecError::Corrupt(_))));
    }

    #[test]
    fn template_requires_placeholders() {
        let err = EncoderSpec::external("ffmpeg -i {input} {output}", DEFAULT_DECODE_TEMPLATE).unwrap_err();
        assert!(matches!(err, CodecError::Config(m) if m.contains("{crf}")));
        assert!(EncoderSpec::external(DEFAULT_ENCODE_TEMPLATE, "ffmpeg -i {input}").is_err());
        assert!(EncoderSpec::external("", DEFAULT_DECODE_TEMPLATE).is_err());
    }

    #[test]
    fn template_substitution() {
        let t = CommandTemplate::parse("enc --in={input} -q {crf} {output} {literal}", &[]).unwrap();
        let argv = t.render(Path::new("/tmp/a b.y4m"), Path::new("out.hevc"), Some(20));
        let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(argv, ["enc", "--in=/tmp/a b.y4m", "-q", "20", "out.hevc", "{literal}"]);
    }

    #[test]
    fn missing_encoder_reports_argv() {
        let enc = EncoderSpec::external(
            "roicomp-no-such-encoder -i {input} -crf {crf} {output}",
            "roicomp-no-such-encoder -i {input} {output}",
        )
        .unwrap();
        let s = stream(2, 2, vec![vec![0; 4]]);
        match encode_stream(&s, 20, &enc) {
            Err(CodecError::EncoderNotFound { argv }) => {
                assert_eq!(argv[0], "roicomp-no-such-encoder");
                assert_eq!(argv[4], "20");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[cfg(unix)]
    #[test]
    fn failing_encoder_keeps_stderr() {
        let argv: Vec<OsString> = ["sh", "-c", "echo boom >&2; exit 3"].iter().map(OsString::from).collect();
        match run_external(argv, Duration::from_secs(10), false) {
            Err(CodecError::EncoderFailed { status, stderr, .. }) => {
                assert_eq!(status, Some(3));
                assert_eq!(stderr, "boom\n");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[cfg(unix)]
    #[test]
    fn slow_encoder_times_out() {
        let argv: Vec<OsString> = ["sleep", "5"].iter().map(OsString::from).collect();
        let started = Instant::now();
        let err = run_external(argv, Duration::from_millis(100), false).unwrap_err();
        assert!(matches!(err, CodecError::EncoderTimeout { .. }));
        assert!(started.elapsed() < Duration::from_secs(3));
    }

    #[test]
    fn crf_out_of_range_rejected() {
        let s = stream(2, 2, vec![vec![0; 4]]);
        assert!(matches!(
            encode_stream(&s, 52, &EncoderSpec::internal_lossless()),
            Err(CodecError::Config(_))
        ));
    }

    proptest! {
        #[test]
        fn lossless_identity(w in 1usize..12, h in 1usize..12, n in 0usize..5, seed in any::<u64>()) {
            let mut state = seed;
            let mut next = || { state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (state >> 56) as u8 };
            let frames = (0..n).map(|_| (0..w * h).map(|_| next()).collect()).collect();
            let s = stream(w, h, frames);
            prop_assert_eq!(lossless_decode(&lossless_encode(&s)).unwrap(), s);
        }
    }
}
