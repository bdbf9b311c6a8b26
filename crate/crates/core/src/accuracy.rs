//! Decomposition of local surface error into cross-pass and within-pass parts.
//!
//! For the points of a patch, a plane S is fitted to all passes together and
//! every point gets its orthogonal distance `z_i` to S. Writing
//! `z_i = h_k + r_i` with `h_k` the mean distance of pass `k`, the residuals
//! of each pass sum to zero and
//!
//! ```text
//! RMSE² = Σ z² / (N-1) = C² + W²
//! C²    = Σ_k n_k h_k²  / (N-1)
//! W²    = Σ_k n_k MSE_k / (N-1),   MSE_k = Σ_{i∈k} (z_i - h_k)² / n_k
//! ```
//!
//! holds exactly. `C` measures misregistration between passes, `W` the
//! scatter inside each pass.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, MIN_PATCH_POINTS};
use crate::model::{Patch, PointCloud, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassError {
    pub pass_id: u32,
    pub n: usize,
    /// Signed mean orthogonal offset of the pass from the shared plane, m.
    pub h_hat: f64,
    /// Mean squared deviation of the pass around `h_hat` (divisor `n`), m².
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub rmse: f64,
    pub c: f64,
    pub w: f64,
    /// `None` when `w` is zero.
    pub c_over_w: Option<f64>,
    pub per_pass: Vec<PassError>,
    pub n_total: usize,
    /// Number of patches pooled into this value (1 for a single patch).
    pub patch_count: usize,
}

impl ErrorDecomposition {
    /// `(N - 1)`, the weight of this decomposition when pooling.
    fn dof(&self) -> f64 {
        (self.n_total.saturating_sub(self.patch_count)) as f64
    }

    pub fn pass(&self, pass_id: u32) -> Option<&PassError> {
        self.per_pass.iter().find(|p| p.pass_id == pass_id)
    }
}

fn ratio(c: f64, w: f64) -> Option<f64> {
    (w > 0.0).then(|| c / w)
}

/// Decomposes the error of raw points labelled by pass.
pub fn decompose_points(points: &[Vec3], pass_ids: &[u32]) -> Result<ErrorDecomposition> {
    if points.len() != pass_ids.len() {
        return Err(Error::InvalidInput(
            "points and pass labels differ in length".into(),
        ));
    }
    if points.len() < MIN_PATCH_POINTS {
        return Err(Error::InsufficientData(format!(
            "error decomposition needs at least {MIN_PATCH_POINTS} points, got {}",
            points.len()
        )));
    }
    let plane = geometry::fit_plane(points)?;
    let z: Vec<f64> = points.iter().map(|p| plane.signed_distance(p)).collect();

    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (&id, &zi) in pass_ids.iter().zip(&z) {
        groups.entry(id).or_default().push(zi);
    }
    let per_pass: Vec<PassError> = groups
        .into_iter()
        .map(|(pass_id, zs)| {
            let n = zs.len();
            let h_hat = zs.iter().sum::<f64>() / n as f64;
            let mse = zs.iter().map(|zi| (zi - h_hat).powi(2)).sum::<f64>() / n as f64;
            PassError {
                pass_id,
                n,
                h_hat,
                mse,
            }
        })
        .collect();

    let dof = (z.len() - 1) as f64;
    let rmse = (z.iter().map(|zi| zi * zi).sum::<f64>() / dof).sqrt();
    let c = (per_pass.iter().map(|p| p.n as f64 * p.h_hat * p.h_hat).sum::<f64>() / dof).sqrt();
    let w = (per_pass.iter().map(|p| p.n as f64 * p.mse).sum::<f64>() / dof).sqrt();
    Ok(ErrorDecomposition {
        rmse,
        c,
        w,
        c_over_w: ratio(c, w),
        per_pass,
        n_total: z.len(),
        patch_count: 1,
    })
}

/// Decomposes the error of the points in one patch.
pub fn decompose_patch(patch: &Patch, cloud: &PointCloud) -> Result<ErrorDecomposition> {
    let all = cloud.points();
    let mut positions = Vec::with_capacity(patch.point_count());
    let mut ids = Vec::with_capacity(patch.point_count());
    for (&pass, members) in &patch.points_by_pass {
        for &i in members {
            let p = all.get(i).ok_or_else(|| {
                Error::InvalidInput(format!("patch references point {i} outside the cloud"))
            })?;
            positions.push(p.position());
            ids.push(pass);
        }
    }
    decompose_points(&positions, &ids)
}

/// Pools per-patch decompositions, weighting each by its `N - 1`.
///
/// Point counts are summed; per-pass offsets and MSEs become point-weighted
/// means. `rmse² = c² + w²` carries over because each term is pooled the
/// same way.
pub fn summarize_accuracy(decompositions: &[ErrorDecomposition]) -> Result<ErrorDecomposition> {
    if decompositions.is_empty() {
        return Err(Error::InsufficientData(
            "accuracy summary needs at least one decomposition".into(),
        ));
    }
    let mut weight = 0.0;
    let (mut rmse2, mut c2, mut w2) = (0.0, 0.0, 0.0);
    let mut passes: BTreeMap<u32, (usize, f64, f64)> = BTreeMap::new();
    for d in decompositions {
        let dof = d.dof();
        weight += dof;
        rmse2 += dof * d.rmse * d.rmse;
        c2 += dof * d.c * d.c;
        w2 += dof * d.w * d.w;
        for p in &d.per_pass {
            let e = passes.entry(p.pass_id).or_default();
            e.0 += p.n;
            e.1 += p.n as f64 * p.h_hat;
            e.2 += p.n as f64 * p.mse;
        }
    }
    let (rmse, c, w) = if weight > 0.0 {
        ((rmse2 / weight).sqrt(), (c2 / weight).sqrt(), (w2 / weight).sqrt())
    } else {
        (0.0, 0.0, 0.0)
    };
    Ok(ErrorDecomposition {
        rmse,
        c,
        w,
        c_over_w: ratio(c, w),
        per_pass: passes
            .into_iter()
            .map(|(pass_id, (n, sh, sm))| PassError {
                pass_id,
                n,
                h_hat: sh / n as f64,
                mse: sm / n as f64,
            })
            .collect(),
        n_total: decompositions.iter().map(|d| d.n_total).sum(),
        patch_count: decompositions.iter().map(|d| d.patch_count).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassOffset {
    pub pass_id: u32,
    /// Mean over supporting patches of `|h_hat|`, m.
    pub mean_abs_offset: f64,
    /// Mean over supporting patches of signed `h_hat`, m.
    pub mean_signed_offset: f64,
    pub patch_support: usize,
}

/// Per-pass mean absolute offset from the shared surface.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PassOffsetProfile {
    /// Ordered by pass id.
    pub passes: Vec<PassOffset>,
}

impl PassOffsetProfile {
    /// Passes ordered from largest to smallest mean absolute offset.
    pub fn ranked(&self) -> Vec<PassOffset> {
        let mut v = self.passes.clone();
        v.sort_by(|a, b| {
            b.mean_abs_offset
                .total_cmp(&a.mean_abs_offset)
                .then(a.pass_id.cmp(&b.pass_id))
        });
        v
    }

    pub fn get(&self, pass_id: u32) -> Option<&PassOffset> {
        self.passes.iter().find(|p| p.pass_id == pass_id)
    }

    /// Mean of the per-pass absolute offsets, `(1/K) Σ_k |h_k|`.
    pub fn mean_abs_offset(&self) -> Option<f64> {
        (!self.passes.is_empty()).then(|| {
            self.passes.iter().map(|p| p.mean_abs_offset).sum::<f64>() / self.passes.len() as f64
        })
    }
}

pub fn pass_offset_profile(decompositions: &[ErrorDecomposition]) -> PassOffsetProfile {
    let mut acc: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
    for d in decompositions {
        for p in &d.per_pass {
            let e = acc.entry(p.pass_id).or_default();
            e.0 += p.h_hat.abs();
            e.1 += p.h_hat;
            e.2 += 1;
        }
    }
    PassOffsetProfile {
        passes: acc
            .into_iter()
            .map(|(pass_id, (abs, signed, k))| PassOffset {
                pass_id,
                mean_abs_offset: abs / k as f64,
                mean_signed_offset: signed / k as f64,
                patch_support: k,
            })
            .collect(),
    }
}

/// Mean of `h_a - h_b` over patches holding both passes: the classic
/// pairwise strip height difference when the surface is horizontal.
pub fn pairwise_offset_difference(
    decompositions: &[ErrorDecomposition],
    pass_a: u32,
    pass_b: u32,
) -> Option<f64> {
    let diffs: Vec<f64> = decompositions
        .iter()
        .filter_map(|d| Some(d.pass(pass_a)?.h_hat - d.pass(pass_b)?.h_hat))
        .collect();
    (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64)
}

/// RMSE from its two components.
pub fn combine_components(c: f64, w: f64) -> f64 {
    c.hypot(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn two_pass_hand_example() {
        let pts = [
            v(0.0, 0.0, 0.01),
            v(1.0, 1.0, 0.01),
            v(0.0, 0.0, -0.01),
            v(1.0, 1.0, -0.01),
            // Pin the plane orientation with the same offsets at other (x, y).
            v(1.0, 0.0, 0.01),
            v(1.0, 0.0, -0.01),
        ];
        let ids = [0, 0, 1, 1, 0, 1];
        let d = decompose_points(&pts, &ids).unwrap();
        // N = 6 here: C = sqrt(6 * 1e-4 / 5)
        assert!((d.c - (6.0 * 1e-4 / 5.0f64).sqrt()).abs() < 1e-12);
        assert!(d.w.abs() < 1e-12);
        assert!((d.rmse - d.c).abs() < 1e-12);
        assert!(d.c_over_w.is_none());
    }

    #[test]
    fn two_pass_four_points() {
        // Pass A on one diagonal of a unit square at +0.01, pass B on the
        // other at -0.01. The fitted plane is z = 0, every residual is zero
        // and C = sqrt(4 * 0.01² / 3).
        let pts = [
            v(0.0, 0.0, 0.01),
            v(1.0, 1.0, 0.01),
            v(1.0, 0.0, -0.01),
            v(0.0, 1.0, -0.01),
        ];
        let d = decompose_points(&pts, &[7, 7, 9, 9]).unwrap();
        assert!((d.pass(7).unwrap().h_hat - 0.01).abs() < 1e-12);
        assert!((d.pass(9).unwrap().h_hat + 0.01).abs() < 1e-12);
        assert!(d.w.abs() < 1e-12);
        assert!((d.c - 0.011547).abs() < 5e-7);
        assert!((d.rmse - d.c).abs() < 1e-15);
    }

    #[test]
    fn single_pass_has_no_cross_error() {
        let pts: Vec<Vec3> = (0..50)
            .map(|i| {
                let t = i as f64;
                v(t.sin() * 3.0, (t * 0.7).cos() * 3.0, 0.02 * (t * 1.9).sin())
            })
            .collect();
        let d = decompose_points(&pts, &vec![3; 50]).unwrap();
        assert!(d.c < 1e-12);
        assert!((d.rmse - d.w).abs() < 1e-12);
    }

    #[test]
    fn table5_vertical_anchor() {
        let rmse = combine_components(0.025, 0.015);
        assert!((rmse - 0.02915).abs() < 1e-5);
        assert!((0.025f64 / 0.015 - 1.667).abs() < 0.001);
    }

    #[test]
    fn errors() {
        let pts = [v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(0.0, 1.0, 0.0)];
        assert!(matches!(
            decompose_points(&pts, &[0, 0, 0]),
            Err(Error::InsufficientData(_))
        ));
        let line: Vec<Vec3> = (0..6).map(|i| v(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            decompose_points(&line, &[0; 6]),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(summarize_accuracy(&[]).is_err());
    }

    fn sample(seed: u64) -> ErrorDecomposition {
        let pts: Vec<Vec3> = (0..40)
            .map(|i| {
                let t = i as f64 + seed as f64;
                v(t.sin() * 2.0, (1.3 * t).cos() * 2.0, 0.01 * (if i % 2 == 0 { 1.0 } else { -1.0 }) + 0.003 * (5.1 * t).sin())
            })
            .collect();
        let ids: Vec<u32> = (0..40).map(|i| (i % 2) as u32).collect();
        decompose_points(&pts, &ids).unwrap()
    }

    #[test]
    fn pooled_summaries() {
        let a = sample(1);
        let one = summarize_accuracy(std::slice::from_ref(&a)).unwrap();
        assert!((one.rmse - a.rmse).abs() < 1e-15);
        assert!((one.c - a.c).abs() < 1e-15);
        assert!((one.w - a.w).abs() < 1e-15);

        let two = summarize_accuracy(&[a.clone(), a.clone()]).unwrap();
        assert!((two.rmse - a.rmse).abs() < 1e-15);
        assert!((two.c - a.c).abs() < 1e-15);
        assert_eq!(two.n_total, 2 * a.n_total);

        let mixed = summarize_accuracy(&[a, sample(9)]).unwrap();
        let lhs = mixed.rmse.powi(2);
        assert!((lhs - (mixed.c.powi(2) + mixed.w.powi(2))).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn offset_profile() {
        let mk = |h: &[(u32, f64)]| ErrorDecomposition {
            rmse: 0.0,
            c: 0.0,
            w: 0.0,
            c_over_w: None,
            per_pass: h
                .iter()
                .map(|&(pass_id, h_hat)| PassError {
                    pass_id,
                    n: 10,
                    h_hat,
                    mse: 0.0,
                })
                .collect(),
            n_total: 10 * h.len(),
            patch_count: 1,
        };
        let ds = vec![mk(&[(0, 0.01), (1, -0.01)]), mk(&[(0, 0.01), (1, -0.01)]), mk(&[(1, -0.01), (5, 0.04)])];
        let prof = pass_offset_profile(&ds);
        assert!((prof.get(0).unwrap().mean_abs_offset - 0.01).abs() < 1e-15);
        assert!((prof.get(1).unwrap().mean_abs_offset - 0.01).abs() < 1e-15);
        assert_eq!(prof.get(1).unwrap().patch_support, 3);
        assert!(prof.get(2).is_none());
        assert_eq!(prof.ranked()[0].pass_id, 5);
        assert!((pairwise_offset_difference(&ds, 0, 1).unwrap() - 0.02).abs() < 1e-15);
        assert!(pairwise_offset_difference(&ds, 0, 5).is_none());
    }
}
