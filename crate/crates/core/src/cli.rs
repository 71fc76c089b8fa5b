//! Command-line surface of the `roicomp` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codec::{EncoderSpec, StreamBundle};
use crate::config::{FileConfig, FlagConfig, Settings};
use crate::imaging::LabelMode;
use crate::metrics::PSNR_CAP_DB;
use crate::nifti::{self, Endianness};
use crate::phantom::{self, PhantomSpec};
use crate::pipeline::{self, CompressOptions, MaskSource};
use crate::report::{self, ReportFormat, SizeFigures};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "roicomp", version, about = "Region-of-interest compression for volumetric scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the header summary of a .nii / .nii.gz file.
    Inspect { path: PathBuf },
    /// Write a synthetic scan with a spherical tumor and its label volume.
    Phantom(PhantomArgs),
    /// Compress a scan into a bundle directory.
    Compress(CompressArgs),
    /// Rebuild a NIfTI volume from a bundle directory.
    Decompress(DecompressArgs),
    /// Compare a reconstruction with its reference.
    Evaluate(EvaluateArgs),
}

/// `NXxNYxNZ`, e.g. `96x96x24`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Extents(pub [usize; 3]);

impl FromStr for Extents {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<usize> = s
            .split(['x', 'X', ','])
            .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad extent {p:?}")))
            .collect::<std::result::Result<_, _>>()?;
        match parts.as_slice() {
            &[x, y, z] if x > 0 && y > 0 && z > 0 => Ok(Extents([x, y, z])),
            _ => Err(format!("expected three positive extents like 96x96x24, got {s:?}")),
        }
    }
}

/// `x,y,z` voxel coordinates.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Point(pub [f64; 3]);

impl FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad coordinate {p:?}")))
            .collect::<std::result::Result<_, _>>()?;
        match parts.as_slice() {
            &[x, y, z] => Ok(Point([x, y, z])),
            _ => Err(format!("expected x,y,z, got {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long, default_value = "96x96x24")]
    pub extents: Extents,
    /// Tumor center in voxels; defaults to the volume center.
    #[arg(long)]
    pub center: Option<Point>,
    #[arg(long, default_value_t = 8.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output scan path.
    #[arg(long)]
    pub out: PathBuf,
    /// Output label volume path.
    #[arg(long)]
    pub labels_out: PathBuf,
}

/// `labels:<path>`, `baseline`, or `external:<dir>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaskSourceArg {
    Labels(PathBuf),
    Baseline,
    External(PathBuf),
}

impl FromStr for MaskSourceArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "baseline" {
            Ok(MaskSourceArg::Baseline)
        } else if let Some(p) = s.strip_prefix("labels:") {
            Ok(MaskSourceArg::Labels(p.into()))
        } else if let Some(p) = s.strip_prefix("external:") {
            Ok(MaskSourceArg::External(p.into()))
        } else {
            Err(format!("expected labels:<path>, baseline or external:<dir>, got {s:?}"))
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EncoderArg {
    /// Pick from the bundle manifest (decompress only).
    Auto,
    InternalLossless,
    Hevc,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MaskModeArg {
    Whole,
    Core,
}

impl From<MaskModeArg> for LabelMode {
    fn from(m: MaskModeArg) -> Self {
        match m {
            MaskModeArg::Whole => LabelMode::WholeTumor,
            MaskModeArg::Core => LabelMode::TumorCore,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::TextTable,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct EncoderArgs {
    /// Encode command template with {input}, {output} and {crf}.
    #[arg(long)]
    pub encoder_cmd: Option<String>,
    /// Decode command template with {input} and {output}, producing Y4M.
    #[arg(long)]
    pub decoder_cmd: Option<String>,
    /// Per-process timeout in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
    /// Parent directory for run-scoped temporary files.
    #[arg(long)]
    pub tmpdir: Option<PathBuf>,
    /// TOML config file (lowest precedence).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    pub volume: PathBuf,
    #[arg(long, default_value = "baseline")]
    pub mask_source: MaskSourceArg,
    #[arg(long, value_enum, default_value = "whole")]
    pub mask_mode: MaskModeArg,
    /// Baseline segmenter threshold on the 8-bit scale.
    #[arg(long, default_value_t = pipeline::DEFAULT_THRESHOLD)]
    pub threshold: u8,
    #[arg(long, default_value_t = pipeline::DEFAULT_MIN_COMPONENT)]
    pub min_component: usize,
    /// ROI square side (even).
    #[arg(long = "square-side", short = 's')]
    pub square_side: Option<usize>,
    #[arg(long)]
    pub crf_roi: Option<u8>,
    #[arg(long)]
    pub crf_bg: Option<u8>,
    /// Volume index to use from 4D inputs.
    #[arg(long, default_value_t = 0)]
    pub time_index: usize,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Bundle output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Decode the bundle again and print a quality report.
    #[arg(long)]
    pub verify: bool,
    /// Label volume to score the masks against (baseline/external sources).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write the per-slice masks as PGM files here.
    #[arg(long)]
    pub masks_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value = "hevc")]
    pub encoder: EncoderArg,
    #[command(flatten)]
    pub tool: EncoderArgs,
}

#[derive(Debug, Args)]
pub struct DecompressArgs {
    pub bundle: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub encoder: EncoderArg,
    #[command(flatten)]
    pub tool: EncoderArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub reference: PathBuf,
    pub reconstructed: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "whole")]
    pub mask_mode: MaskModeArg,
    /// Bundle directory, for size and ratio figures.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub per_slice: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
}

/// Runs one command and returns the text to print on stdout.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Inspect { path } => inspect(&path),
        Command::Phantom(a) => make_phantom(&a),
        Command::Compress(a) => compress(&a),
        Command::Decompress(a) => decompress(&a),
        Command::Evaluate(a) => evaluate(&a),
    }
}

pub fn inspect(path: &Path) -> Result<String> {
    let bytes = pipeline::read_file(path)?;
    let (h, v) = nifti::parse_nifti(&bytes)?;
    let mut out = String::new();
    let rank = h.rank() as usize;
    let dims: Vec<String> = h.dim[1..=rank].iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "dims:       {} (rank {rank})", dims.join(" x "));
    let _ = writeln!(
        out,
        "datatype:   {} (code {}, bitpix {})",
        h.datatype.name(),
        h.datatype.code(),
        h.bitpix
    );
    let _ = writeln!(out, "spacing:    {} x {} x {} mm", h.pixdim[1], h.pixdim[2], h.pixdim[3]);
    let _ = writeln!(out, "scaling:    slope {} inter {}", h.scl_slope, h.scl_inter);
    let _ = writeln!(out, "vox_offset: {}", h.vox_offset);
    let _ = writeln!(
        out,
        "byte order: {}",
        match h.endianness {
            Endianness::Little => "little-endian",
            Endianness::Big => "big-endian",
        }
    );
    let (lo, hi) = v.range();
    let _ = writeln!(out, "range:      [{lo}, {hi}]");
    let _ = writeln!(out, "descrip:    {}", h.descriptor());
    Ok(out)
}

pub fn make_phantom(a: &PhantomArgs) -> Result<String> {
    let mut spec = PhantomSpec::centered(a.extents.0, a.radius, a.seed);
    if let Some(c) = a.center {
        spec.center = c.0;
    }
    let p = phantom::generate(&spec);
    let (image, labels) = p.to_nifti()?;
    pipeline::write_file(&a.out, &image)?;
    pipeline::write_file(&a.labels_out, &labels)?;
    Ok(format!(
        "wrote {} ({} bytes) and {} ({} tumor voxels)\n",
        a.out.display(),
        image.len(),
        a.labels_out.display(),
        p.tumor_voxels()
    ))
}

fn settings(e: &EncoderArgs, square_side: Option<usize>, crf_roi: Option<u8>, crf_bg: Option<u8>) -> Result<Settings> {
    let file = match &e.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = FlagConfig {
        encoder_cmd: e.encoder_cmd.clone(),
        decoder_cmd: e.decoder_cmd.clone(),
        tmpdir: e.tmpdir.clone(),
        timeout_secs: e.timeout,
        square_side,
        crf_roi,
        crf_bg,
    };
    Ok(Settings::from_process_env(&flags, &file))
}

/// A temporary directory for one command, deleted on success and kept on failure.
struct RunDir {
    dir: Option<tempfile::TempDir>,
}

impl RunDir {
    fn create(base: Option<&Path>) -> Result<Self> {
        let mut b = tempfile::Builder::new();
        b.prefix("roicomp-run-");
        let dir = match base {
            Some(base) => {
                std::fs::create_dir_all(base).map_err(|e| Error::io(base, e))?;
                b.tempdir_in(base).map_err(|e| Error::io(base, e))?
            }
            None => b.tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?,
        };
        Ok(RunDir { dir: Some(dir) })
    }

    fn path(&self) -> &Path {
        self.dir.as_ref().expect("run dir present").path()
    }

    fn finish<T>(mut self, result: Result<T>) -> Result<T> {
        let dir = self.dir.take().expect("run dir present");
        if result.is_err() {
            let kept = dir.keep();
            log::error!("temporary files kept in {}", kept.display());
        }
        result
    }
}

fn encoder_spec(arg: EncoderArg, s: &Settings, run: &RunDir) -> Result<EncoderSpec> {
    match arg {
        EncoderArg::InternalLossless => Ok(EncoderSpec::internal_lossless()),
        EncoderArg::Hevc | EncoderArg::Auto => Ok(s.external_encoder()?.with_scratch_dir(run.path())),
    }
}

pub fn compress(a: &CompressArgs) -> Result<String> {
    let s = settings(&a.tool, a.square_side, a.crf_roi, a.crf_bg)?;
    let run = RunDir::create(s.tmpdir.as_deref())?;
    let result = compress_in(a, &s, &run);
    run.finish(result)
}

fn compress_in(a: &CompressArgs, s: &Settings, run: &RunDir) -> Result<String> {
    let started = Instant::now();
    let enc = encoder_spec(a.encoder, s, run)?;
    let (_, volume, source_bytes) = pipeline::load_volume(&a.volume, a.time_index)?;
    let mode = LabelMode::from(a.mask_mode);
    let source = match &a.mask_source {
        MaskSourceArg::Baseline => MaskSource::Baseline {
            threshold: a.threshold,
            min_component_px: a.min_component,
        },
        MaskSourceArg::Labels(p) => MaskSource::Labels {
            volume: pipeline::load_volume(p, a.time_index)?.1,
            mode,
        },
        MaskSourceArg::External(dir) => MaskSource::External(pipeline::load_external_masks(dir, volume.extents[2])?),
    };
    let opts = CompressOptions {
        square_side: s.square_side,
        crf_roi: s.crf_roi,
        crf_bg: s.crf_bg,
        jobs: a.jobs,
    };
    let out = pipeline::compress(&volume, &source, &opts, &enc)?;
    for w in &out.prepared.warnings {
        eprintln!("warning: {w}");
    }
    out.bundle.write_to_dir(&a.out).map_err(Error::from)?;
    if let Some(dir) = &a.masks_out {
        pipeline::write_masks(dir, &out.prepared.masks)?;
    }

    let m = &out.bundle.manifest;
    let present = m.roi_records.iter().filter(|r| r.present).count();
    let mut text = format!(
        "bundle {}: {} slices ({} with ROI), square {}, CRF {}/{}, {} bytes, encoder {}\n",
        a.out.display(),
        m.volume_extents[2],
        present,
        m.square_side,
        m.crf_roi,
        m.crf_bg,
        out.bundle.total_bytes(),
        m.encoder_id
    );

    if a.verify {
        let reconstructed = pipeline::decompress(&out.bundle, &enc)?;
        let mut report = pipeline::verify(&out.prepared, &reconstructed, &out.bundle)?;
        if let Some(sizes) = report.sizes.as_mut() {
            *sizes = sizes.with_source_file(source_bytes);
        }
        if matches!(enc.kind, crate::codec::EncoderKind::InternalLossless) && report.psnr_full != PSNR_CAP_DB {
            return Err(Error::VerifyFailed(format!(
                "lossless reconstruction differs (PSNR {:.4} dB)",
                report.psnr_full
            )));
        }
        if let Some(truth) = &a.truth {
            let labels = pipeline::load_volume(truth, a.time_index)?.1;
            let truth = pipeline::label_masks(&labels, mode)?;
            report.segmentation = Some(pipeline::overlap(&out.prepared.masks, &truth)?.metrics());
        }
        report.per_slice = None;
        text.push_str(&report::render_report(&report, a.format.into()));
    }
    log::info!("compress finished in {:.2?}", started.elapsed());
    Ok(text)
}

pub fn decompress(a: &DecompressArgs) -> Result<String> {
    let s = settings(&a.tool, None, None, None)?;
    let run = RunDir::create(s.tmpdir.as_deref())?;
    let result = (|| {
        let bundle = StreamBundle::read_from_dir(&a.bundle)?;
        let enc = match a.encoder {
            EncoderArg::Auto => pipeline::encoder_for_bundle(&bundle, || encoder_spec(EncoderArg::Hevc, &s, &run))?,
            other => encoder_spec(other, &s, &run)?,
        };
        let slices = pipeline::decompress(&bundle, &enc)?;
        let (header, volume) = pipeline::reconstructed_volume(&bundle.manifest, &slices);
        let bytes = nifti::write_nifti(&header, &volume)?;
        pipeline::write_file(&a.out, &bytes)?;
        let [nx, ny, nz] = volume.extents;
        Ok(format!("wrote {} ({nx}x{ny}x{nz}, uint8)\n", a.out.display()))
    })();
    run.finish(result)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<String> {
    let (_, reference, _) = pipeline::load_volume(&a.reference, 0)?;
    let (_, reconstructed, _) = pipeline::load_volume(&a.reconstructed, 0)?;
    let labels = match &a.labels {
        Some(p) => Some(pipeline::load_volume(p, 0)?.1),
        None => None,
    };
    let mut report = pipeline::evaluate(
        &reference,
        &reconstructed,
        labels.as_ref().map(|l| (l, LabelMode::from(a.mask_mode))),
    )?;
    if let Some(dir) = &a.bundle {
        let bundle = StreamBundle::read_from_dir(dir)?;
        let [nx, ny, nz] = reference.extents;
        report.sizes = Some(SizeFigures::new((nx * ny * nz) as u64, bundle.total_bytes() as u64)?);
    }
    if !a.per_slice {
        report.per_slice = None;
    }
    Ok(report::render_report(&report, a.format.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_value_types() {
        assert_eq!("96x96x24".parse::<Extents>().unwrap(), Extents([96, 96, 24]));
        assert!("96x96".parse::<Extents>().is_err());
        assert!("0x1x1".parse::<Extents>().is_err());
        assert_eq!("1,2.5,3".parse::<Point>().unwrap(), Point([1.0, 2.5, 3.0]));
        assert_eq!("baseline".parse::<MaskSourceArg>().unwrap(), MaskSourceArg::Baseline);
        assert_eq!(
            "labels:a/b.nii".parse::<MaskSourceArg>().unwrap(),
            MaskSourceArg::Labels("a/b.nii".into())
        );
        assert_eq!(
            "external:masks".parse::<MaskSourceArg>().unwrap(),
            MaskSourceArg::External("masks".into())
        );
        assert!("unet".parse::<MaskSourceArg>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
