//! Random square patches on a bounded surface.
//!
//! Patch centres are drawn from member points, not uniformly in area, and
//! clamped so the square stays inside the rectangle. Patches may overlap.
//! Each candidate draw has its own RNG stream derived from `(seed, ordinal)`,
//! so the accepted list is identical however many worker threads run.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, MIN_PATCH_POINTS};
use crate::model::{Patch, PlanarSurface, PointCloud, Vec3};

/// Candidate draws allowed per requested patch before sampling gives up.
pub const DRAW_CAP_FACTOR: usize = 100;

/// Axis-aligned rectangle in surface `(u, v)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UvRect {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl UvRect {
    pub fn new(u_min: f64, v_min: f64, u_max: f64, v_max: f64) -> Self {
        UvRect {
            u_min: u_min.min(u_max),
            v_min: v_min.min(v_max),
            u_max: u_min.max(u_max),
            v_max: v_min.max(v_max),
        }
    }

    /// True when the interiors overlap with `[u0,u1) x [v0,v1)`.
    fn overlaps(&self, [u0, v0, u1, v1]: [f64; 4]) -> bool {
        u0 < self.u_max && self.u_min < u1 && v0 < self.v_max && self.v_min < v1
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RejectionPolicy {
    #[default]
    None,
    /// Reject patches touching any declared obstruction footprint.
    ExclusionZones { zones: Vec<UvRect> },
    /// Reject patches whose own plane fit leaves any residual above threshold.
    ResidualOutlier { threshold: f64 },
}

impl RejectionPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            RejectionPolicy::ResidualOutlier { threshold } if !(*threshold > 0.0) => Err(
                Error::InvalidInput(format!("residual threshold must be positive, got {threshold}")),
            ),
            _ => Ok(()),
        }
    }

    fn needs_residuals(&self) -> bool {
        matches!(self, RejectionPolicy::ResidualOutlier { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Patch area in m²; the side is its square root.
    pub patch_area: f64,
    pub patch_count: usize,
    pub seed: u64,
    /// Half-thickness of the band around the surface that counts as on it.
    pub max_w_offset: f64,
    pub min_points: usize,
    pub rejection: RejectionPolicy,
}

impl SamplingPlan {
    pub fn new(patch_area: f64, patch_count: usize, seed: u64) -> Self {
        SamplingPlan {
            patch_area,
            patch_count,
            seed,
            max_w_offset: 0.5,
            min_points: MIN_PATCH_POINTS,
            rejection: RejectionPolicy::None,
        }
    }

    pub fn side(&self) -> f64 {
        self.patch_area.sqrt()
    }

    pub fn validate_for(&self, surface: &PlanarSurface) -> Result<()> {
        if !(self.patch_area > 0.0) || !self.patch_area.is_finite() {
            return Err(Error::InvalidInput(format!(
                "patch area must be positive, got {}",
                self.patch_area
            )));
        }
        if self.patch_count == 0 {
            return Err(Error::InvalidInput("patch count must be positive".into()));
        }
        if !(self.max_w_offset > 0.0) {
            return Err(Error::InvalidInput("max_w_offset must be positive".into()));
        }
        let limit = surface.extent_u().min(surface.extent_v());
        if self.side() > limit {
            return Err(Error::InvalidInput(format!(
                "patch side {:.3} m does not fit surface `{}` (smallest extent {:.3} m)",
                self.side(),
                surface.label(),
                limit
            )));
        }
        self.rejection.validate()
    }
}

/// Cloud points lying on a surface, in surface coordinates.
#[derive(Debug, Clone)]
pub struct SurfacePoints {
    pub surface: PlanarSurface,
    /// Index of each member in the source cloud.
    pub indices: Vec<usize>,
    pub uvw: Vec<[f64; 3]>,
    pub pass_ids: Vec<u32>,
}

impl SurfacePoints {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Points with `0 <= u <= extent_u`, `0 <= v <= extent_v`, `|w| <= max_w_offset`.
pub fn collect_surface_points(
    cloud: &PointCloud,
    surface: &PlanarSurface,
    max_w_offset: f64,
) -> SurfacePoints {
    let mut out = SurfacePoints {
        surface: surface.clone(),
        indices: Vec::new(),
        uvw: Vec::new(),
        pass_ids: Vec::new(),
    };
    for (i, p) in cloud.points().iter().enumerate() {
        let [u, v, w] = geometry::project_to_surface(surface, &p.position());
        if (0.0..=surface.extent_u()).contains(&u)
            && (0.0..=surface.extent_v()).contains(&v)
            && w.abs() <= max_w_offset
        {
            out.indices.push(i);
            out.uvw.push([u, v, w]);
            out.pass_ids.push(p.pass_id);
        }
    }
    out
}

/// Decides whether a populated patch is discarded.
///
/// `residuals` are the patch's plane-fit residuals; only the residual
/// policy looks at them.
pub fn reject_patch(patch: &Patch, policy: &RejectionPolicy, residuals: &[f64]) -> bool {
    match policy {
        RejectionPolicy::None => false,
        RejectionPolicy::ExclusionZones { zones } => {
            let rect = patch.uv_rect();
            zones.iter().any(|z| z.overlaps(rect))
        }
        RejectionPolicy::ResidualOutlier { threshold } => {
            residuals.iter().any(|r| r.abs() > *threshold)
        }
    }
}

/// Result of a sampling run.
#[derive(Debug, Clone, Default)]
pub struct PatchSample {
    pub patches: Vec<Patch>,
    /// Candidate draws consumed to fill `patches`.
    pub draws: usize,
    /// Candidates dropped for too few points.
    pub sparse: usize,
    /// Candidates dropped by the rejection policy.
    pub rejected: usize,
    pub diagnostics: Vec<String>,
}

enum Candidate {
    Accepted(Patch),
    Sparse,
    Rejected,
}

/// Uniform grid over `(u, v)` with one bucket per patch-sized cell.
struct CellIndex {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<u32>>,
}

impl CellIndex {
    fn build(points: &SurfacePoints, cell: f64) -> Self {
        let cols = (points.surface.extent_u() / cell).floor() as usize + 1;
        let rows = (points.surface.extent_v() / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); cols * rows];
        for (k, [u, v, _]) in points.uvw.iter().enumerate() {
            let c = ((u / cell) as usize).min(cols - 1);
            let r = ((v / cell) as usize).min(rows - 1);
            buckets[r * cols + c].push(k as u32);
        }
        CellIndex {
            cell,
            cols,
            rows,
            buckets,
        }
    }

    fn query(&self, points: &SurfacePoints, patch: &Patch) -> Vec<usize> {
        let [u0, v0, u1, v1] = patch.uv_rect();
        let span = |lo: f64, hi: f64, n: usize| {
            let a = (lo.max(0.0) / self.cell) as usize;
            let b = ((hi.max(0.0) / self.cell) as usize).min(n - 1);
            a.min(n - 1)..=b
        };
        let mut hits = Vec::new();
        for r in span(v0, v1, self.rows) {
            for c in span(u0, u1, self.cols) {
                for &k in &self.buckets[r * self.cols + c] {
                    let [u, v, _] = points.uvw[k as usize];
                    if patch.contains_uv(u, v) {
                        hits.push(k as usize);
                    }
                }
            }
        }
        hits.sort_unstable();
        hits
    }
}

fn candidate_rng(seed: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ordinal);
    rng
}

fn evaluate_candidate(
    points: &SurfacePoints,
    index: &CellIndex,
    plan: &SamplingPlan,
    ordinal: u64,
) -> Candidate {
    let surface = &points.surface;
    let side = plan.side();
    let half = side / 2.0;
    let mut rng = candidate_rng(plan.seed, ordinal);
    let pick = rng.random_range(0..points.len());
    let [u, v, _] = points.uvw[pick];
    let center = [
        u.clamp(half, surface.extent_u() - half),
        v.clamp(half, surface.extent_v() - half),
    ];
    let mut patch = Patch::new(surface.label(), center, side, BTreeMap::new());
    let members = index.query(points, &patch);
    if members.len() < plan.min_points.max(1) {
        return Candidate::Sparse;
    }
    for &k in &members {
        patch
            .points_by_pass
            .entry(points.pass_ids[k])
            .or_default()
            .push(points.indices[k]);
    }
    let residuals = if plan.rejection.needs_residuals() {
        let local: Vec<Vec3> = members
            .iter()
            .map(|&k| Vec3::from(points.uvw[k]))
            .collect();
        match geometry::fit_plane(&local) {
            Ok(plane) => local.iter().map(|p| plane.signed_distance(p)).collect(),
            // A patch that cannot be fitted cannot be screened.
            Err(_) => return Candidate::Rejected,
        }
    } else {
        Vec::new()
    };
    if reject_patch(&patch, &plan.rejection, &residuals) {
        Candidate::Rejected
    } else {
        Candidate::Accepted(patch)
    }
}

/// Draws up to `plan.patch_count` accepted patches.
///
/// Rejected and sparse candidates are replaced by further draws until the
/// count is met or `DRAW_CAP_FACTOR * patch_count` draws have been used.
pub fn sample_patches(points: &SurfacePoints, plan: &SamplingPlan) -> Result<PatchSample> {
    plan.validate_for(&points.surface)?;
    let mut sample = PatchSample::default();
    if points.is_empty() {
        sample.diagnostics.push(format!(
            "surface `{}` has no member points; no patches sampled",
            points.surface.label()
        ));
        return Ok(sample);
    }
    let index = CellIndex::build(points, plan.side());
    let cap = plan.patch_count.saturating_mul(DRAW_CAP_FACTOR);
    let mut next = 0usize;
    'outer: while sample.patches.len() < plan.patch_count && next < cap {
        let need = plan.patch_count - sample.patches.len();
        let batch = (need + need / 2).max(64).min(cap - next);
        let results: Vec<Candidate> = (next..next + batch)
            .into_par_iter()
            .map(|ordinal| evaluate_candidate(points, &index, plan, ordinal as u64))
            .collect();
        for result in results {
            next += 1;
            match result {
                Candidate::Accepted(p) => sample.patches.push(p),
                Candidate::Sparse => sample.sparse += 1,
                Candidate::Rejected => sample.rejected += 1,
            }
            if sample.patches.len() == plan.patch_count {
                break 'outer;
            }
        }
    }
    sample.draws = next;
    if sample.patches.len() < plan.patch_count {
        sample.diagnostics.push(format!(
            "surface `{}`: draw cap of {cap} reached with {} of {} patches accepted ({} sparse, {} rejected)",
            points.surface.label(),
            sample.patches.len(),
            plan.patch_count,
            sample.sparse,
            sample.rejected
        ));
    }
    Ok(sample)
}
