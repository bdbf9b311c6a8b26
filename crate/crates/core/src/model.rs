//! Core domain types shared by every other module.
//!
//! Units at the API boundary are meters and degrees. Everything here is
//! immutable after construction and validated in its constructor, so the
//! algorithms downstream can rely on the invariants without re-checking.

use std::collections::BTreeSet;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Tolerance for the orthonormality checks on surface frames.
pub const FRAME_TOLERANCE: f64 = 1e-9;

/// Half-width of the horizontal/vertical orientation bands, degrees.
pub const ORIENTATION_BAND_DEG: f64 = 10.0;

/// A single LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub pass_id: u32,
    pub intensity: Option<f64>,
    pub gps_time: Option<f64>,
}

impl Point {
    pub fn new(x: f64, y: f64, z: f64, pass_id: u32) -> Self {
        Point {
            x,
            y,
            z,
            pass_id,
            intensity: None,
            gps_time: None,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.z.is_finite()
            && self.intensity.is_none_or(f64::is_finite)
            && self.gps_time.is_none_or(f64::is_finite)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Bounds {
    /// The empty box; `min > max` on every axis so any point extends it.
    pub const EMPTY: Bounds = Bounds {
        min: [f64::INFINITY; 3],
        max: [f64::NEG_INFINITY; 3],
    };

    pub fn is_empty(&self) -> bool {
        self.min[0] > self.max[0]
    }

    pub fn extend(&mut self, p: &Point) {
        let c = [p.x, p.y, p.z];
        for axis in 0..3 {
            self.min[axis] = self.min[axis].min(c[axis]);
            self.max[axis] = self.max[axis].max(c[axis]);
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        let c = [p.x, p.y, p.z];
        (0..3).all(|axis| self.min[axis] <= c[axis] && c[axis] <= self.max[axis])
    }
}

/// An ordered set of points with their pass labels and bounds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point>,
    pass_ids: BTreeSet<u32>,
    bounds: Option<Bounds>,
}

impl PointCloud {
    /// Builds a cloud, rejecting any point with a non-finite field.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "point {i} has a non-finite coordinate or attribute"
            )));
        }
        let (pass_ids, bounds) = derive_summary(&points);
        Ok(PointCloud {
            points,
            pass_ids,
            bounds,
        })
    }

    pub fn empty() -> Self {
        PointCloud::default()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn pass_ids(&self) -> &BTreeSet<u32> {
        &self.pass_ids
    }

    /// `None` for an empty cloud.
    pub fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }

    /// Concatenates two clouds, preserving order (self first).
    pub fn merged(mut self, other: PointCloud) -> PointCloud {
        self.points.extend(other.points);
        self.pass_ids.extend(other.pass_ids);
        self.bounds = match (self.bounds, other.bounds) {
            (Some(a), Some(b)) => Some(Bounds {
                min: std::array::from_fn(|i| a.min[i].min(b.min[i])),
                max: std::array::from_fn(|i| a.max[i].max(b.max[i])),
            }),
            (a, b) => a.or(b),
        };
        self
    }
}

fn derive_summary(points: &[Point]) -> (BTreeSet<u32>, Option<Bounds>) {
    let mut bounds = Bounds::EMPTY;
    let mut ids = BTreeSet::new();
    for p in points {
        bounds.extend(p);
        ids.insert(p.pass_id);
    }
    (ids, (!points.is_empty()).then_some(bounds))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationClass {
    Horizontal,
    Vertical,
    Canted,
}

impl std::fmt::Display for OrientationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OrientationClass::Horizontal => "horizontal",
            OrientationClass::Vertical => "vertical",
            OrientationClass::Canted => "canted",
        })
    }
}

/// Classifies a unit normal into the horizontal/vertical/canted bands.
///
/// Horizontal when the normal is within 10° of vertical, vertical when it is
/// within 10° of horizontal, canted otherwise. Sign of the normal is ignored.
pub fn classify_orientation(normal: &Vec3) -> Result<OrientationClass> {
    if !normal.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidInput("normal has non-finite components".into()));
    }
    let len = normal.norm();
    if (len - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "normal must be a unit vector, |n| = {len}"
        )));
    }
    let nz = normal.z.abs();
    let band = ORIENTATION_BAND_DEG.to_radians();
    Ok(if nz > band.cos() {
        OrientationClass::Horizontal
    } else if nz < band.sin() {
        OrientationClass::Vertical
    } else {
        OrientationClass::Canted
    })
}

/// A bounded rectangle lying in a plane, with an orthonormal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarSurface {
    origin: Vec3,
    u_axis: Vec3,
    v_axis: Vec3,
    normal: Vec3,
    extent_u: f64,
    extent_v: f64,
    label: String,
    orientation: OrientationClass,
}

impl PlanarSurface {
    pub fn new(
        label: impl Into<String>,
        origin: Vec3,
        u_axis: Vec3,
        v_axis: Vec3,
        extent_u: f64,
        extent_v: f64,
    ) -> Result<Self> {
        let finite = origin.iter().chain(u_axis.iter()).chain(v_axis.iter()).all(|c| c.is_finite());
        if !finite {
            return Err(Error::InvalidInput("surface frame has non-finite components".into()));
        }
        if (u_axis.norm() - 1.0).abs() > FRAME_TOLERANCE
            || (v_axis.norm() - 1.0).abs() > FRAME_TOLERANCE
        {
            return Err(Error::InvalidInput("surface axes must be unit vectors".into()));
        }
        if u_axis.dot(&v_axis).abs() > FRAME_TOLERANCE {
            return Err(Error::InvalidInput("surface axes must be orthogonal".into()));
        }
        if !(extent_u > 0.0 && extent_v > 0.0) || !extent_u.is_finite() || !extent_v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "surface extents must be positive, got {extent_u} x {extent_v}"
            )));
        }
        let normal = u_axis.cross(&v_axis);
        let orientation = classify_orientation(&normal)?;
        Ok(PlanarSurface {
            origin,
            u_axis,
            v_axis,
            normal,
            extent_u,
            extent_v,
            label: label.into(),
            orientation,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }
    pub fn u_axis(&self) -> Vec3 {
        self.u_axis
    }
    pub fn v_axis(&self) -> Vec3 {
        self.v_axis
    }
    pub fn normal(&self) -> Vec3 {
        self.normal
    }
    pub fn extent_u(&self) -> f64 {
        self.extent_u
    }
    pub fn extent_v(&self) -> f64 {
        self.extent_v
    }
    pub fn label(&self) -> &str {
        &self.label
    }
    pub fn orientation(&self) -> OrientationClass {
        self.orientation
    }
    pub fn area(&self) -> f64 {
        self.extent_u * self.extent_v
    }
}

/// A square sample window on a surface and the points inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub surface_label: String,
    pub center_uv: [f64; 2],
    pub side: f64,
    pub area: f64,
    /// Member point indices (into the source cloud) grouped by pass.
    pub points_by_pass: std::collections::BTreeMap<u32, Vec<usize>>,
}

impl Patch {
    pub fn new(
        surface_label: impl Into<String>,
        center_uv: [f64; 2],
        side: f64,
        points_by_pass: std::collections::BTreeMap<u32, Vec<usize>>,
    ) -> Self {
        Patch {
            surface_label: surface_label.into(),
            center_uv,
            side,
            area: side * side,
            points_by_pass,
        }
    }

    pub fn point_count(&self) -> usize {
        self.points_by_pass.values().map(Vec::len).sum()
    }

    pub fn member_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.points_by_pass.values().flatten().copied()
    }

    /// `[u_min, v_min, u_max, v_max]`; membership is half-open on the max side.
    pub fn uv_rect(&self) -> [f64; 4] {
        let h = self.side / 2.0;
        [
            self.center_uv[0] - h,
            self.center_uv[1] - h,
            self.center_uv[0] + h,
            self.center_uv[1] + h,
        ]
    }

    pub fn contains_uv(&self, u: f64, v: f64) -> bool {
        let [u0, v0, u1, v1] = self.uv_rect();
        u0 <= u && u < u1 && v0 <= v && v < v1
    }
}

/// Emitter parameters of a nadir, parallel-line scanner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScannerSpec {
    /// Pulses per second.
    pub pulse_rate: f64,
    /// Half of the field of view, degrees from nadir.
    pub half_angle_deg: f64,
    /// Angle between consecutive pulses in a scan line, degrees.
    pub angular_step_deg: f64,
    /// Scan lines per second.
    pub line_rate: f64,
}

impl ScannerSpec {
    pub fn new(
        pulse_rate: f64,
        half_angle_deg: f64,
        angular_step_deg: f64,
        line_rate: f64,
    ) -> Result<Self> {
        let spec = ScannerSpec {
            pulse_rate,
            half_angle_deg,
            angular_step_deg,
            line_rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.pulse_rate,
            self.half_angle_deg,
            self.angular_step_deg,
            self.line_rate,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidInput("scanner parameters must be finite".into()));
        }
        if !(self.angular_step_deg > 0.0
            && self.angular_step_deg < self.half_angle_deg
            && self.half_angle_deg <= 60.0)
        {
            return Err(Error::InvalidInput(format!(
                "scanner angles must satisfy 0 < step < half-angle <= 60, got step {} half-angle {}",
                self.angular_step_deg, self.half_angle_deg
            )));
        }
        if self.pulse_rate <= 0.0 || self.line_rate <= 0.0 {
            return Err(Error::InvalidInput(
                "pulse rate and line rate must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `floor(2 θ_max / θ_L) + 1`, with a tiny guard so that exact ratios
    /// like 60 / 0.02 are not lost to rounding.
    pub fn pulses_per_line(&self) -> usize {
        let ratio = 2.0 * self.half_angle_deg / self.angular_step_deg;
        (ratio * (1.0 + 1e-12)).floor() as usize + 1
    }

    /// Emission angle of pulse `i` in a scan line, radians from nadir.
    pub fn pulse_angle(&self, i: usize) -> f64 {
        (-self.half_angle_deg + i as f64 * self.angular_step_deg).to_radians()
    }

    /// Pulses per second implied by the line geometry.
    pub fn effective_pulse_rate(&self) -> f64 {
        self.pulses_per_line() as f64 * self.line_rate
    }
}

/// One straight, level traversal at constant speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightLine {
    pub start_xy: [f64; 2],
    pub end_xy: [f64; 2],
    /// Altitude above ground level, meters.
    pub altitude_agl: f64,
    /// Ground speed, m/s.
    pub speed: f64,
    pub pass_id: u32,
}

impl FlightLine {
    pub fn new(
        start_xy: [f64; 2],
        end_xy: [f64; 2],
        altitude_agl: f64,
        speed: f64,
        pass_id: u32,
    ) -> Result<Self> {
        let line = FlightLine {
            start_xy,
            end_xy,
            altitude_agl,
            speed,
            pass_id,
        };
        line.validate()?;
        Ok(line)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .start_xy
            .iter()
            .chain(self.end_xy.iter())
            .chain([self.altitude_agl, self.speed].iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("flight line values must be finite".into()));
        }
        if self.altitude_agl <= 0.0 || self.speed <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "flight line {} needs positive altitude and speed",
                self.pass_id
            )));
        }
        if self.start_xy == self.end_xy {
            return Err(Error::InvalidInput(format!(
                "flight line {} has identical start and end",
                self.pass_id
            )));
        }
        Ok(())
    }

    pub fn start(&self) -> Vec2 {
        Vec2::new(self.start_xy[0], self.start_xy[1])
    }

    pub fn end(&self) -> Vec2 {
        Vec2::new(self.end_xy[0], self.end_xy[1])
    }

    pub fn length(&self) -> f64 {
        (self.end() - self.start()).norm()
    }

    /// Unit direction of travel.
    pub fn direction(&self) -> Vec2 {
        (self.end() - self.start()).normalize()
    }

    /// Along-track spacing between scan lines for the given scanner.
    pub fn along_spacing(&self, scanner: &ScannerSpec) -> f64 {
        self.speed / scanner.line_rate
    }

    /// Perpendicular horizontal distance from the (infinite) flight line.
    pub fn perpendicular_distance(&self, p: Vec2) -> f64 {
        let dir = self.direction();
        let rel = p - self.start();
        (rel.x * dir.y - rel.y * dir.x).abs()
    }
}

/// A vertical wall rising from the ground along a base segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallTarget {
    pub name: String,
    pub base_start: [f64; 2],
    pub base_end: [f64; 2],
    /// `[h_min, h_max]` above ground, meters.
    pub height_range: [f64; 2],
    /// Unit horizontal normal of the face.
    pub facing: [f64; 2],
}

impl WallTarget {
    pub fn new(
        name: impl Into<String>,
        base_start: [f64; 2],
        base_end: [f64; 2],
        height_range: [f64; 2],
        facing: [f64; 2],
    ) -> Result<Self> {
        let wall = WallTarget {
            name: name.into(),
            base_start,
            base_end,
            height_range,
            facing,
        };
        wall.validate()?;
        Ok(wall)
    }

    pub fn validate(&self) -> Result<()> {
        let [h_min, h_max] = self.height_range;
        if !(h_min.is_finite() && h_max.is_finite() && 0.0 <= h_min && h_min < h_max) {
            return Err(Error::InvalidInput(format!(
                "wall `{}` needs 0 <= h_min < h_max, got [{h_min}, {h_max}]",
                self.name
            )));
        }
        if self.base_start == self.base_end {
            return Err(Error::InvalidInput(format!(
                "wall `{}` has a zero-length base",
                self.name
            )));
        }
        let f = Vec2::new(self.facing[0], self.facing[1]);
        if (f.norm() - 1.0).abs() > FRAME_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "wall `{}` facing must be a unit vector",
                self.name
            )));
        }
        Ok(())
    }

    pub fn base_start(&self) -> Vec2 {
        Vec2::new(self.base_start[0], self.base_start[1])
    }

    pub fn base_end(&self) -> Vec2 {
        Vec2::new(self.base_end[0], self.base_end[1])
    }

    pub fn base_midpoint(&self) -> Vec2 {
        (self.base_start() + self.base_end()) / 2.0
    }

    pub fn length(&self) -> f64 {
        (self.base_end() - self.base_start()).norm()
    }

    pub fn height(&self) -> f64 {
        self.height_range[1] - self.height_range[0]
    }

    /// The wall face as a vertical surface: u along the base, v up.
    pub fn face_surface(&self, ground_z: f64) -> Result<PlanarSurface> {
        let along = (self.base_end() - self.base_start()).normalize();
        let origin = Vec3::new(
            self.base_start[0],
            self.base_start[1],
            ground_z + self.height_range[0],
        );
        PlanarSurface::new(
            self.name.clone(),
            origin,
            Vec3::new(along.x, along.y, 0.0),
            Vec3::z(),
            self.length(),
            self.height(),
        )
    }
}
