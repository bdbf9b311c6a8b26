//! Metric reports.
//!
//! A report has one block per surface orientation class (horizontal,
//! vertical, canted), the horizontal-to-vertical density ratio, pooled
//! accuracy over every patch, the per-pass offset profile and per-surface
//! diagnostics. Undefined metrics serialise as `null`.
//!
//! JSON output is deterministic: fields appear in declaration order and
//! floats use the shortest representation that round-trips. The CSV form
//! flattens the same content into `block,metric,index,value` rows.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accuracy::{pass_offset_profile, summarize_accuracy, ErrorDecomposition, PassOffset};
use crate::density::{density_ratio, summarize_values, HeightBin};
use crate::error::{Error, Result};
use crate::model::OrientationClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// `.csv` selects CSV; anything else is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

/// Density and accuracy over all patches of one orientation class.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassBlock {
    pub surfaces: Vec<String>,
    pub patch_count: usize,
    pub anpd: Option<f64>,
    pub anpd_sd: Option<f64>,
    pub avg_passes: Option<f64>,
    pub per_pass_density: Option<f64>,
    pub rmse: Option<f64>,
    pub c: Option<f64>,
    pub w: Option<f64>,
    pub c_over_w: Option<f64>,
    pub per_pass_offsets: Vec<PassOffset>,
    /// Per-patch densities, in sampling order.
    pub patch_density: Vec<f64>,
    /// Per-patch overlapping pass counts.
    pub patch_passes: Vec<usize>,
    /// Per-patch RMSE / C / W for patches that could be decomposed.
    pub patch_rmse: Vec<f64>,
    pub patch_c: Vec<f64>,
    pub patch_w: Vec<f64>,
}

impl ClassBlock {
    /// Fills the aggregates from per-patch values.
    pub fn from_patches(
        surfaces: Vec<String>,
        densities: &[f64],
        passes: &[usize],
        decompositions: &[ErrorDecomposition],
    ) -> Result<Self> {
        let mut block = ClassBlock {
            surfaces,
            patch_count: densities.len(),
            patch_density: densities.to_vec(),
            patch_passes: passes.to_vec(),
            patch_rmse: decompositions.iter().map(|d| d.rmse).collect(),
            patch_c: decompositions.iter().map(|d| d.c).collect(),
            patch_w: decompositions.iter().map(|d| d.w).collect(),
            ..ClassBlock::default()
        };
        if !densities.is_empty() {
            let overlaps: Vec<f64> = passes.iter().map(|&p| p as f64).collect();
            let d = summarize_values(densities, &overlaps)?;
            block.anpd = Some(d.anpd);
            block.anpd_sd = Some(d.anpd_sd);
            block.avg_passes = Some(d.avg_overlapping_passes);
            block.per_pass_density = d.avg_density_per_pass;
        }
        if !decompositions.is_empty() {
            let a = summarize_accuracy(decompositions)?;
            block.rmse = Some(a.rmse);
            block.c = Some(a.c);
            block.w = Some(a.w);
            block.c_over_w = a.c_over_w;
            block.per_pass_offsets = pass_offset_profile(decompositions).passes;
        }
        Ok(block)
    }
}

/// Pooled accuracy over every decomposed patch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AccuracyBlock {
    pub patch_count: usize,
    pub n_points: usize,
    pub rmse: Option<f64>,
    pub c: Option<f64>,
    pub w: Option<f64>,
    pub c_over_w: Option<f64>,
}

impl AccuracyBlock {
    pub fn from_decompositions(decompositions: &[ErrorDecomposition]) -> Result<Self> {
        if decompositions.is_empty() {
            return Ok(AccuracyBlock::default());
        }
        let a = summarize_accuracy(decompositions)?;
        Ok(AccuracyBlock {
            patch_count: a.patch_count,
            n_points: a.n_total,
            rmse: Some(a.rmse),
            c: Some(a.c),
            w: Some(a.w),
            c_over_w: a.c_over_w,
        })
    }
}

/// Sampling outcome for one surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDiagnostics {
    pub label: String,
    pub orientation: OrientationClass,
    pub member_points: usize,
    pub patches: usize,
    pub draws: usize,
    pub sparse: usize,
    pub rejected: usize,
    /// Patches dropped from the accuracy block because no plane fit.
    pub undecomposed: usize,
    /// Measured density by height above the surface's lower edge (vertical
    /// surfaces only).
    pub height_profile: Option<Vec<HeightBin>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub toolkit_version: String,
    pub seed: u64,
    /// SHA-256 of the surfaces file and run parameters, hex.
    pub config_hash: String,
    pub patch_area: f64,
    pub patches_requested: usize,
    pub horizontal: ClassBlock,
    pub vertical: ClassBlock,
    pub canted: ClassBlock,
    pub eta_hv: Option<f64>,
    pub accuracy: AccuracyBlock,
    pub per_pass_offsets: Vec<PassOffset>,
    pub surfaces: Vec<SurfaceDiagnostics>,
    pub diagnostics: Vec<String>,
}

impl MetricsReport {
    /// A report with no metrics; blocks are filled by the caller.
    pub fn new(seed: u64, config_hash: String, patch_area: f64, patches_requested: usize) -> Self {
        MetricsReport {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash,
            patch_area,
            patches_requested,
            horizontal: ClassBlock::default(),
            vertical: ClassBlock::default(),
            canted: ClassBlock::default(),
            eta_hv: None,
            accuracy: AccuracyBlock::default(),
            per_pass_offsets: Vec::new(),
            surfaces: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn block(&self, class: OrientationClass) -> &ClassBlock {
        match class {
            OrientationClass::Horizontal => &self.horizontal,
            OrientationClass::Vertical => &self.vertical,
            OrientationClass::Canted => &self.canted,
        }
    }

    pub fn block_mut(&mut self, class: OrientationClass) -> &mut ClassBlock {
        match class {
            OrientationClass::Horizontal => &mut self.horizontal,
            OrientationClass::Vertical => &mut self.vertical,
            OrientationClass::Canted => &mut self.canted,
        }
    }

    /// Sets `eta_hv` from the class blocks, noting why when it cannot.
    pub fn update_eta_hv(&mut self) {
        self.eta_hv = match (self.horizontal.anpd, self.vertical.anpd) {
            (Some(h), Some(v)) => match density_ratio(h, v) {
                Ok(r) => Some(r),
                Err(e) => {
                    self.diagnostics.push(format!("eta_hv undefined: {e}"));
                    None
                }
            },
            _ => {
                self.diagnostics
                    .push("eta_hv undefined: needs both horizontal and vertical patches".into());
                None
            }
        };
    }
}

pub fn encode_json(report: &MetricsReport) -> Result<Vec<u8>> {
    super::to_json(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn push_block(out: &mut String, name: &str, b: &ClassBlock) {
    let mut row = |metric: &str, index: &str, value: String| {
        let _ = writeln!(out, "{name},{metric},{index},{}", csv_text(&value));
    };
    for (i, s) in b.surfaces.iter().enumerate() {
        row("surface", &i.to_string(), s.clone());
    }
    row("patch_count", "", b.patch_count.to_string());
    for (metric, v) in [
        ("anpd", b.anpd),
        ("anpd_sd", b.anpd_sd),
        ("avg_passes", b.avg_passes),
        ("per_pass_density", b.per_pass_density),
        ("rmse", b.rmse),
        ("c", b.c),
        ("w", b.w),
        ("c_over_w", b.c_over_w),
    ] {
        row(metric, "", opt(v));
    }
    for p in &b.per_pass_offsets {
        row("per_pass_offsets", &p.pass_id.to_string(), p.mean_abs_offset.to_string());
    }
    for (metric, values) in [
        ("patch_density", &b.patch_density),
        ("patch_rmse", &b.patch_rmse),
        ("patch_c", &b.patch_c),
        ("patch_w", &b.patch_w),
    ] {
        for (i, v) in values.iter().enumerate() {
            row(metric, &i.to_string(), v.to_string());
        }
    }
    for (i, v) in b.patch_passes.iter().enumerate() {
        row("patch_passes", &i.to_string(), v.to_string());
    }
}

pub fn encode_csv(report: &MetricsReport) -> Vec<u8> {
    let mut out = String::from("block,metric,index,value\n");
    let mut meta = |metric: &str, value: String| {
        let _ = writeln!(out, "run,{metric},,{}", csv_text(&value));
    };
    meta("toolkit_version", report.toolkit_version.clone());
    meta("seed", report.seed.to_string());
    meta("config_hash", report.config_hash.clone());
    meta("patch_area", report.patch_area.to_string());
    meta("patches_requested", report.patches_requested.to_string());
    meta("eta_hv", opt(report.eta_hv));
    push_block(&mut out, "horizontal", &report.horizontal);
    push_block(&mut out, "vertical", &report.vertical);
    push_block(&mut out, "canted", &report.canted);
    let a = &report.accuracy;
    let _ = writeln!(out, "accuracy,patch_count,,{}", a.patch_count);
    let _ = writeln!(out, "accuracy,n_points,,{}", a.n_points);
    for (metric, v) in [("rmse", a.rmse), ("c", a.c), ("w", a.w), ("c_over_w", a.c_over_w)] {
        let _ = writeln!(out, "accuracy,{metric},,{}", opt(v));
    }
    for p in &report.per_pass_offsets {
        let _ = writeln!(out, "per_pass_offsets,mean_abs_offset,{},{}", p.pass_id, p.mean_abs_offset);
        let _ = writeln!(out, "per_pass_offsets,mean_signed_offset,{},{}", p.pass_id, p.mean_signed_offset);
        let _ = writeln!(out, "per_pass_offsets,patch_support,{},{}", p.pass_id, p.patch_support);
    }
    for s in &report.surfaces {
        let block = format!("surface:{}", s.label);
        let block = csv_text(&block);
        let _ = writeln!(out, "{block},orientation,,{}", s.orientation);
        for (metric, v) in [
            ("member_points", s.member_points),
            ("patches", s.patches),
            ("draws", s.draws),
            ("sparse", s.sparse),
            ("rejected", s.rejected),
            ("undecomposed", s.undecomposed),
        ] {
            let _ = writeln!(out, "{block},{metric},,{v}");
        }
        for b in s.height_profile.iter().flatten() {
            let _ = writeln!(out, "{block},height_density,{},{}", b.h, b.density);
        }
    }
    for (i, d) in report.diagnostics.iter().enumerate() {
        let _ = writeln!(out, "diagnostics,note,{i},{}", csv_text(d));
    }
    out.into_bytes()
}

pub fn write_report(report: &MetricsReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        ReportFormat::Json => encode_json(report)?,
        ReportFormat::Csv => encode_csv(report),
    };
    super::write_atomic(path, &bytes)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<MetricsReport> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchor_report() -> MetricsReport {
        let mut r = MetricsReport::new(1, "abc".into(), 4.0, 2);
        r.horizontal = ClassBlock::from_patches(vec!["lot".into()], &[510.49], &[2], &[]).unwrap();
        r.vertical = ClassBlock::from_patches(vec!["wall".into()], &[49.74], &[1], &[]).unwrap();
        r.update_eta_hv();
        r
    }

    #[test]
    fn eta_hv_serialised() {
        let json = String::from_utf8(encode_json(&anchor_report()).unwrap()).unwrap();
        let eta = 510.49 / 49.74;
        assert!(json.contains(&format!("\"eta_hv\": {eta}")), "{json}");
        assert!(json.contains("\"eta_hv\": 10.263"));
    }

    #[test]
    fn empty_report_has_nulls_and_a_note() {
        let mut r = MetricsReport::new(0, String::new(), 4.0, 10);
        r.update_eta_hv();
        let json = String::from_utf8(encode_json(&r).unwrap()).unwrap();
        assert!(json.contains("\"anpd\": null"));
        assert!(json.contains("\"eta_hv\": null"));
        assert_eq!(r.diagnostics.len(), 1);
    }

    #[test]
    fn stable_field_names() {
        let json = String::from_utf8(encode_json(&anchor_report()).unwrap()).unwrap();
        for key in [
            "anpd", "anpd_sd", "avg_passes", "per_pass_density", "eta_hv", "rmse", "c", "w",
            "c_over_w", "per_pass_offsets",
        ] {
            assert!(json.contains(&format!("\"{key}\":")), "missing {key}");
        }
    }

    #[test]
    fn writes_are_byte_identical_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = anchor_report();
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        write_report(&r, &a, ReportFormat::Json).unwrap();
        write_report(&r, &b, ReportFormat::Json).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(read_report(&a).unwrap(), r);
    }

    #[test]
    fn csv_rows() {
        let text = String::from_utf8(encode_csv(&anchor_report())).unwrap();
        assert!(text.starts_with("block,metric,index,value\n"));
        assert!(text.contains("horizontal,anpd,,510.49\n"));
        assert!(text.contains("vertical,c,,\n"));
    }
}
