//! Dual-CRF encoding through an external HEVC encoder.
//!
//!     cargo run --example hevc_dual_crf
//!
//! Uses ROICOMP_ENCODER_CMD when set, otherwise ffmpeg with libx265. Prints a
//! notice and exits cleanly when the encoder is not installed.

use roicomp::codec::{CodecError, CommandTemplate, EncoderSpec, DEFAULT_DECODE_TEMPLATE, DEFAULT_ENCODE_TEMPLATE};
use roicomp::config::ENV_ENCODER_CMD;
use roicomp::imaging::LabelMode;
use roicomp::phantom::{self, PhantomSpec};
use roicomp::pipeline::{self, CompressOptions, MaskSource};
use roicomp::report::{self, ReportFormat};
use roicomp::Error;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let template = std::env::var(ENV_ENCODER_CMD).unwrap_or_else(|_| DEFAULT_ENCODE_TEMPLATE.into());
    let program = CommandTemplate::parse(&template, &["{input}", "{output}", "{crf}"])?.program().to_string();
    let enc = EncoderSpec::external(&template, DEFAULT_DECODE_TEMPLATE)?;

    let p = phantom::generate(&PhantomSpec::centered([128, 128, 16], 7.0, 5));
    let source = MaskSource::Labels { volume: p.labels.clone(), mode: LabelMode::WholeTumor };

    for (crf_roi, crf_bg) in [(20, 40), (20, 20), (20, 30), (20, 45)] {
        let opts = CompressOptions { square_side: 32, crf_roi, crf_bg, jobs: None };
        let out = match pipeline::compress(&p.image, &source, &opts, &enc) {
            Ok(out) => out,
            Err(Error::Codec(CodecError::EncoderNotFound { argv })) => {
                println!("skipping: encoder `{program}` not installed (tried `{}`)", argv.join(" "));
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        let slices = pipeline::decompress(&out.bundle, &enc)?;
        let mut report = pipeline::verify(&out.prepared, &slices, &out.bundle)?;
        report.per_slice = None;
        println!("CRF roi {crf_roi} / bg {crf_bg}  ({})", out.bundle.manifest.encoder_id);
        print!("{}", report::render_report(&report, ReportFormat::TextTable));
        println!();
    }
    Ok(())
}
