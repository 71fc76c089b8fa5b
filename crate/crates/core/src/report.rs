//! Quality/size reports, rendered as an aligned text table or CSV.

use std::fmt::Write as _;

use crate::metrics::{self, MetricsError};
use crate::segment::SegmentationMetrics;

const BYTES_PER_MB: f64 = 1_000_000.0;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    TextTable,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SizeFigures {
    /// Raw 8-bit slice stream size, W·H·nz.
    pub original_bytes: u64,
    pub compressed_bytes: u64,
    pub compression_ratio: f64,
    /// Size of the NIfTI file the volume came from, for context.
    pub source_file_bytes: Option<u64>,
}

impl SizeFigures {
    pub fn new(original_bytes: u64, compressed_bytes: u64) -> Result<Self, MetricsError> {
        Ok(SizeFigures {
            original_bytes,
            compressed_bytes,
            compression_ratio: metrics::compression_ratio(original_bytes, compressed_bytes)?,
            source_file_bytes: None,
        })
    }

    pub fn with_source_file(mut self, bytes: u64) -> Self {
        self.source_file_bytes = Some(bytes);
        self
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SliceQuality {
    pub slice_index: usize,
    pub psnr: f64,
    pub roi_present: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QualityReport {
    pub sizes: Option<SizeFigures>,
    pub psnr_full: f64,
    pub psnr_roi: Option<f64>,
    pub psnr_bg: Option<f64>,
    pub segmentation: Option<SegmentationMetrics>,
    pub per_slice: Option<Vec<SliceQuality>>,
}

fn mb(bytes: u64) -> String {
    format!("{:.2}", bytes as f64 / BYTES_PER_MB)
}

impl QualityReport {
    /// `(metric, value)` pairs in output order. Absent figures are skipped.
    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| rows.push((k.to_string(), v));
        if let Some(s) = &self.sizes {
            push("original_bytes", s.original_bytes.to_string());
            push("original_mb", mb(s.original_bytes));
            if let Some(src) = s.source_file_bytes {
                push("source_file_bytes", src.to_string());
                push("source_file_mb", mb(src));
            }
            push("compressed_bytes", s.compressed_bytes.to_string());
            push("compressed_mb", mb(s.compressed_bytes));
            push("compression_ratio", format!("{:.3}", s.compression_ratio));
        }
        push("psnr_full_db", format!("{:.4}", self.psnr_full));
        if let Some(p) = self.psnr_roi {
            push("psnr_roi_db", format!("{p:.4}"));
        }
        if let Some(p) = self.psnr_bg {
            push("psnr_bg_db", format!("{p:.4}"));
        }
        if let Some(seg) = &self.segmentation {
            push("dice_coefficient", format!("{:.5}", seg.dice));
            push("iou", format!("{:.5}", seg.iou));
            if let Some(bce) = seg.bce {
                push("bce_loss", format!("{bce:.5}"));
            }
        }
        for s in self.per_slice.iter().flatten() {
            push(&format!("slice_{:04}.psnr_db", s.slice_index), format!("{:.4}", s.psnr));
        }
        rows
    }
}

pub fn render_report(report: &QualityReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::TextTable => render_text(report),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(report: &QualityReport) -> String {
    let mut out = String::from("metric,value\r\n");
    for (k, v) in report.rows() {
        let _ = write!(out, "{},{}\r\n", csv_field(&k), csv_field(&v));
    }
    out
}

fn table(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c + 1 == row.len() {
                line.push_str(cell);
            } else {
                let _ = write!(line, "{cell:<w$}  ", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

/// The compression size table in the layout of the original results table:
/// one row for the original stream carrying the ratio, one for the output.
pub fn render_size_table(sizes: &SizeFigures) -> String {
    let mut out = String::new();
    table(
        &mut out,
        &[
            vec!["Video Type".into(), "Compressed Size (MB)".into(), "Compression Ratio".into()],
            vec!["Original".into(), mb(sizes.original_bytes), format!("{:.3}", sizes.compression_ratio)],
            vec!["Final Compressed".into(), mb(sizes.compressed_bytes), String::new()],
        ],
    );
    out
}

fn render_text(report: &QualityReport) -> String {
    let mut out = String::new();
    if let Some(sizes) = &report.sizes {
        out.push_str(&render_size_table(sizes));
        if let Some(src) = sizes.source_file_bytes {
            let _ = writeln!(out, "(source file: {} MB)", mb(src));
        }
        out.push('\n');
    }

    let mut quality = vec![vec!["Metric".to_string(), "Value".to_string()]];
    quality.push(vec!["PSNR full (dB)".into(), format!("{:.4}", report.psnr_full)]);
    if let Some(p) = report.psnr_roi {
        quality.push(vec!["PSNR ROI (dB)".into(), format!("{p:.4}")]);
    }
    if let Some(p) = report.psnr_bg {
        quality.push(vec!["PSNR background (dB)".into(), format!("{p:.4}")]);
    }
    table(&mut out, &quality);

    if let Some(seg) = &report.segmentation {
        out.push('\n');
        let mut rows = vec![
            vec!["Metrics".to_string(), "Value".to_string()],
            vec!["Dice Coefficient".into(), format!("{:.5}", seg.dice)],
            vec!["IoU".into(), format!("{:.5}", seg.iou)],
        ];
        if let Some(bce) = seg.bce {
            rows.push(vec!["BCE Loss".into(), format!("{bce:.5}")]);
        }
        table(&mut out, &rows);
    }

    if let Some(slices) = &report.per_slice {
        out.push('\n');
        let mut rows = vec![vec!["Slice".to_string(), "ROI".to_string(), "PSNR (dB)".to_string()]];
        rows.extend(slices.iter().map(|s| {
            vec![
                s.slice_index.to_string(),
                if s.roi_present { "yes" } else { "no" }.to_string(),
                format!("{:.4}", s.psnr),
            ]
        }));
        table(&mut out, &rows);
    }
    out
}
