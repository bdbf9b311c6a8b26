//! Measured point density: per patch, aggregated per surface class, and
//! binned by height on a wall face.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Patch;
use crate::predictor::height_bins;
use crate::sampling::SurfacePoints;

/// Points per m² in the patch.
pub fn patch_density(patch: &Patch) -> f64 {
    patch.point_count() as f64 / patch.area
}

/// Number of distinct passes with at least one point in the patch.
pub fn overlap_count(patch: &Patch) -> usize {
    patch.points_by_pass.values().filter(|v| !v.is_empty()).count()
}

/// Aggregate density over a set of patches (one block of a density table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    /// Mean of per-patch densities, pts/m².
    pub anpd: f64,
    /// Sample standard deviation of per-patch densities; 0 for one patch.
    pub anpd_sd: f64,
    pub avg_overlapping_passes: f64,
    /// `anpd / avg_overlapping_passes`; `None` when no pass overlaps.
    pub avg_density_per_pass: Option<f64>,
    pub patch_count: usize,
    /// Set when the SD is undefined because only one patch was given.
    pub single_patch: bool,
}

pub fn summarize_density<'a, I>(patches: I) -> Result<DensitySummary>
where
    I: IntoIterator<Item = &'a Patch>,
{
    let (densities, overlaps): (Vec<f64>, Vec<f64>) = patches
        .into_iter()
        .map(|p| (patch_density(p), overlap_count(p) as f64))
        .unzip();
    summarize_values(&densities, &overlaps)
}

/// Same as [`summarize_density`] but from precomputed per-patch values.
pub fn summarize_values(densities: &[f64], overlaps: &[f64]) -> Result<DensitySummary> {
    if densities.is_empty() {
        return Err(Error::InsufficientData(
            "density summary needs at least one patch".into(),
        ));
    }
    debug_assert_eq!(densities.len(), overlaps.len());
    let n = densities.len();
    let anpd = mean(densities);
    let anpd_sd = if n > 1 {
        let ss: f64 = densities.iter().map(|d| (d - anpd).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let avg = mean(overlaps);
    Ok(DensitySummary {
        anpd,
        anpd_sd,
        avg_overlapping_passes: avg,
        avg_density_per_pass: (avg > 0.0).then(|| anpd / avg),
        patch_count: n,
        single_patch: n == 1,
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Horizontal-to-vertical density ratio.
pub fn eta_hv(horizontal: &DensitySummary, vertical: &DensitySummary) -> Result<f64> {
    density_ratio(horizontal.anpd, vertical.anpd)
}

/// `anpd_h / anpd_v`, refusing a zero or negative denominator.
pub fn density_ratio(anpd_h: f64, anpd_v: f64) -> Result<f64> {
    if !(anpd_v > 0.0) {
        return Err(Error::DivisionDomain(format!(
            "vertical density must be positive, got {anpd_v}"
        )));
    }
    Ok(anpd_h / anpd_v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightBin {
    /// Bin centre, meters above ground.
    pub h: f64,
    pub count: usize,
    /// Points per m² of wall face in the bin.
    pub density: f64,
}

/// Bins the points of a wall face by height.
///
/// `v` of the face frame is taken as height above `h_min`; bins are
/// half-open `[lo, hi)` except the topmost, which includes the wall top.
pub fn height_profile(points: &SurfacePoints, h_min: f64, bin_height: f64) -> Result<Vec<HeightBin>> {
    let surface = &points.surface;
    let h_max = h_min + surface.extent_v();
    let bins = height_bins(h_min, h_max, bin_height)?;
    let mut counts = vec![0usize; bins.len()];
    for [_, v, _] in &points.uvw {
        let k = ((v / bin_height).floor().max(0.0) as usize).min(bins.len() - 1);
        counts[k] += 1;
    }
    Ok(bins
        .iter()
        .zip(counts)
        .map(|(&(lo, hi), count)| HeightBin {
            h: (lo + hi) / 2.0,
            count,
            density: count as f64 / ((hi - lo) * surface.extent_u()),
        })
        .collect())
}
