//! Synthetic nadir scanner over a flat ground plane with vertical walls.
//!
//! Each flight line carries the sensor at constant height, firing one scan
//! line every `1 / line_rate` seconds. A scan line sweeps the plane
//! perpendicular to travel from `-θ_max` to `+θ_max` in steps of `θ_L`.
//! Every pulse is an ideal ray with a single return at its first hit.
//! Per-pass rigid offsets and isotropic Gaussian noise are applied after the
//! hit, so the noise-free geometry stays available for exact bookkeeping.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlightLine, Point, PointCloud, ScannerSpec, Vec2, Vec3, WallTarget};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation of the isotropic per-point error, m.
    pub per_point_sigma: f64,
    /// Rigid translation applied to every point of a pass, m.
    pub per_pass_offsets: BTreeMap<u32, [f64; 3]>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.per_point_sigma >= 0.0) || !self.per_point_sigma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "per-point sigma must be >= 0, got {}",
                self.per_point_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub ground_z: f64,
    pub walls: Vec<WallTarget>,
    /// Optional `[x_min, y_min, x_max, y_max]` limit of the ground; rays
    /// landing outside it return nothing.
    pub ground_extent: Option<[f64; 4]>,
}

impl Scene {
    pub fn flat(ground_z: f64) -> Self {
        Scene {
            ground_z,
            ..Scene::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.ground_z.is_finite() {
            return Err(Error::InvalidInput("ground_z must be finite".into()));
        }
        self.walls.iter().try_for_each(WallTarget::validate)
    }

    pub fn wall_index(&self, name: &str) -> Option<usize> {
        self.walls.iter().position(|w| w.name == name)
    }
}

/// What a pulse hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitSurface {
    Ground,
    Wall(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Hit {
    surface: HitSurface,
    point: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassLog {
    pub pass_id: u32,
    pub scan_lines: usize,
    pub pulses_per_line: usize,
    pub pulses_emitted: u64,
    pub points_landed: u64,
    pub no_hit: u64,
    /// `2 H tan θ_max`, m.
    pub swath_width: f64,
    /// `v / line_rate`, m.
    pub along_spacing: f64,
}

/// Pulse bookkeeping for a simulation run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EmissionLog {
    pub pulses_emitted: u64,
    pub points_landed: u64,
    pub no_hit: u64,
    pub passes: Vec<PassLog>,
    /// Surface hit by each output point, in cloud order.
    pub hit_surface: Vec<HitSurface>,
}

impl EmissionLog {
    pub fn merged(mut self, other: EmissionLog) -> EmissionLog {
        self.pulses_emitted += other.pulses_emitted;
        self.points_landed += other.points_landed;
        self.no_hit += other.no_hit;
        self.passes.extend(other.passes);
        self.hit_surface.extend(other.hit_surface);
        self
    }

    /// Landed points per hit surface.
    pub fn hit_counts(&self) -> BTreeMap<HitSurface, u64> {
        let mut m = BTreeMap::new();
        for h in &self.hit_surface {
            *m.entry(*h).or_insert(0) += 1;
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub cloud: PointCloud,
    pub log: EmissionLog,
}

/// Precomputed frame for one flight line.
struct Track {
    start: Vec2,
    dir: Vec2,
    /// Left-hand horizontal perpendicular of `dir`.
    across: Vec2,
    sensor_z: f64,
    spacing: f64,
    lines: usize,
}

impl Track {
    fn new(scene: &Scene, scanner: &ScannerSpec, flight: &FlightLine) -> Self {
        let dir = flight.direction();
        let spacing = flight.along_spacing(scanner);
        Track {
            start: flight.start(),
            dir,
            across: Vec2::new(-dir.y, dir.x),
            sensor_z: scene.ground_z + flight.altitude_agl,
            spacing,
            lines: (flight.length() / spacing * (1.0 + 1e-12)).floor() as usize + 1,
        }
    }

    fn sensor(&self, line: usize) -> Vec3 {
        let xy = self.start + self.dir * (line as f64 * self.spacing);
        Vec3::new(xy.x, xy.y, self.sensor_z)
    }

    fn ray(&self, angle: f64) -> Vec3 {
        let h = self.across * angle.sin();
        Vec3::new(h.x, h.y, -angle.cos())
    }
}

/// First surface hit by the ray `origin + t * dir`, `t > 0`.
fn cast(scene: &Scene, origin: Vec3, dir: Vec3) -> Option<Hit> {
    let mut best: Option<(f64, HitSurface)> = None;
    if dir.z < 0.0 {
        let t = (scene.ground_z - origin.z) / dir.z;
        if t > 0.0 {
            best = Some((t, HitSurface::Ground));
        }
    }
    for (k, wall) in scene.walls.iter().enumerate() {
        if let Some(t) = wall_hit(scene.ground_z, wall, origin, dir) {
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, HitSurface::Wall(k)));
            }
        }
    }
    let (t, surface) = best?;
    let point = origin + dir * t;
    if surface == HitSurface::Ground {
        if let Some([x0, y0, x1, y1]) = scene.ground_extent {
            if !(x0..=x1).contains(&point.x) || !(y0..=y1).contains(&point.y) {
                return None;
            }
        }
    }
    Some(Hit { surface, point })
}

/// Ray parameter where the ray crosses the wall rectangle, if it does.
fn wall_hit(ground_z: f64, wall: &WallTarget, origin: Vec3, dir: Vec3) -> Option<f64> {
    let a = wall.base_start();
    let edge = wall.base_end() - a;
    let d = Vec2::new(dir.x, dir.y);
    let denom = d.x * edge.y - d.y * edge.x;
    if denom.abs() < 1e-15 {
        return None;
    }
    let rel = a - Vec2::new(origin.x, origin.y);
    let t = (rel.x * edge.y - rel.y * edge.x) / denom;
    let s = (rel.x * d.y - rel.y * d.x) / denom;
    if t <= 0.0 || !(0.0..=1.0).contains(&s) {
        return None;
    }
    let z = origin.z + dir.z * t;
    let lo = ground_z + wall.height_range[0];
    let hi = ground_z + wall.height_range[1];
    (lo..=hi).contains(&z).then_some(t)
}

pub(crate) fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// RNG for one scan line, keyed by `(seed, pass_id, line)`.
fn line_rng(seed: u64, pass_id: u32, line: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(pass_id as u64)));
    rng.set_stream(line as u64);
    rng
}

struct LineOutput {
    points: Vec<Point>,
    hits: Vec<HitSurface>,
    no_hit: u64,
}

fn scan_line(
    scene: &Scene,
    scanner: &ScannerSpec,
    flight: &FlightLine,
    track: &Track,
    noise: &NoiseSpec,
    normal: Option<&Normal<f64>>,
    line: usize,
) -> LineOutput {
    let pulses = scanner.pulses_per_line();
    let origin = track.sensor(line);
    let offset = noise
        .per_pass_offsets
        .get(&flight.pass_id)
        .map_or(Vec3::zeros(), |o| Vec3::from(*o));
    let mut rng = normal.map(|_| line_rng(noise.seed, flight.pass_id, line));
    let line_time = line as f64 / scanner.line_rate;
    let pulse_period = 1.0 / (pulses as f64 * scanner.line_rate);
    let mut out = LineOutput {
        points: Vec::with_capacity(pulses),
        hits: Vec::with_capacity(pulses),
        no_hit: 0,
    };
    for i in 0..pulses {
        let Some(hit) = cast(scene, origin, track.ray(scanner.pulse_angle(i))) else {
            out.no_hit += 1;
            continue;
        };
        let mut p = hit.point + offset;
        if let (Some(dist), Some(rng)) = (normal, rng.as_mut()) {
            p += Vec3::new(dist.sample(rng), dist.sample(rng), dist.sample(rng));
        }
        let mut point = Point::new(p.x, p.y, p.z, flight.pass_id);
        point.gps_time = Some(line_time + i as f64 * pulse_period);
        out.points.push(point);
        out.hits.push(hit.surface);
    }
    out
}

/// Simulates every flight line with one scanner.
///
/// Output order is flight-line order, then scan line, then pulse; it does
/// not depend on the number of worker threads.
pub fn simulate(
    scene: &Scene,
    scanner: &ScannerSpec,
    flights: &[FlightLine],
    noise: &NoiseSpec,
) -> Result<Simulation> {
    scene.validate()?;
    scanner.validate()?;
    noise.validate()?;
    let mut seen = std::collections::BTreeSet::new();
    for f in flights {
        f.validate()?;
        if !seen.insert(f.pass_id) {
            return Err(Error::InvalidInput(format!(
                "pass id {} is used by more than one flight line",
                f.pass_id
            )));
        }
    }
    let normal = (noise.per_point_sigma > 0.0)
        .then(|| Normal::new(0.0, noise.per_point_sigma).expect("sigma validated"));

    let mut points = Vec::new();
    let mut log = EmissionLog::default();
    for flight in flights {
        let track = Track::new(scene, scanner, flight);
        let lines: Vec<LineOutput> = (0..track.lines)
            .into_par_iter()
            .map(|j| scan_line(scene, scanner, flight, &track, noise, normal.as_ref(), j))
            .collect();
        let pulses_per_line = scanner.pulses_per_line();
        let emitted = (track.lines * pulses_per_line) as u64;
        let mut landed = 0u64;
        let mut no_hit = 0u64;
        for out in lines {
            landed += out.points.len() as u64;
            no_hit += out.no_hit;
            points.extend(out.points);
            log.hit_surface.extend(out.hits);
        }
        log.pulses_emitted += emitted;
        log.points_landed += landed;
        log.no_hit += no_hit;
        log.passes.push(PassLog {
            pass_id: flight.pass_id,
            scan_lines: track.lines,
            pulses_per_line,
            pulses_emitted: emitted,
            points_landed: landed,
            no_hit,
            swath_width: 2.0 * flight.altitude_agl * scanner.half_angle_deg.to_radians().tan(),
            along_spacing: track.spacing,
        });
    }
    Ok(Simulation {
        cloud: PointCloud::new(points)?,
        log,
    })
}

/// A counting region for [`expected_counts`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Ground rectangle `[x_min, x_max) x [y_min, y_max)`.
    Ground { x: [f64; 2], y: [f64; 2] },
    /// Part of a wall face: `u` along the base from its start, `h` above
    /// ground, both half-open.
    WallFace { wall: usize, u: [f64; 2], h: [f64; 2] },
}

impl Region {
    /// True when a noise-free hit lies in the region.
    pub fn contains(&self, scene: &Scene, surface: HitSurface, p: &Vec3) -> bool {
        match (self, surface) {
            (Region::Ground { x, y }, HitSurface::Ground) => {
                x[0] <= p.x && p.x < x[1] && y[0] <= p.y && p.y < y[1]
            }
            (Region::WallFace { wall, u, h }, HitSurface::Wall(k)) if *wall == k => {
                let w = &scene.walls[k];
                let along = (w.base_end() - w.base_start()).normalize();
                let uu = (Vec2::new(p.x, p.y) - w.base_start()).dot(&along);
                let hh = p.z - scene.ground_z;
                u[0] <= uu && uu < u[1] && h[0] <= hh && hh < h[1]
            }
            _ => false,
        }
    }
}

/// `j` values with `lo <= a + b j < hi`, padded by one line each side and
/// clamped to `[0, n)`.
fn line_range(a: f64, b: f64, lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let (first, last) = if b.abs() < 1e-15 {
        if lo <= a && a < hi {
            (0.0, n as f64 - 1.0)
        } else {
            return None;
        }
    } else {
        let (j0, j1) = ((lo - a) / b, (hi - a) / b);
        (j0.min(j1).floor() - 1.0, j0.max(j1).ceil() + 1.0)
    };
    let first = first.max(0.0);
    let last = last.min(n as f64 - 1.0);
    (first <= last).then(|| (first as usize, last as usize))
}

/// Noise-free pulse count whose hit falls in `region`, for one flight line.
///
/// For every emission angle the hit position moves linearly with the scan
/// line index, so the candidate lines are solved for directly and then
/// confirmed with the same ray cast the simulator uses, occlusion included.
pub fn expected_counts(
    scene: &Scene,
    scanner: &ScannerSpec,
    flight: &FlightLine,
    region: &Region,
) -> Result<u64> {
    scene.validate()?;
    scanner.validate()?;
    flight.validate()?;
    if let Region::WallFace { wall, .. } = region {
        if *wall >= scene.walls.len() {
            return Err(Error::InvalidInput(format!("no wall with index {wall}")));
        }
    }
    let track = Track::new(scene, scanner, flight);
    let n = track.lines;
    let mut total = 0u64;
    for i in 0..scanner.pulses_per_line() {
        let dir = track.ray(scanner.pulse_angle(i));
        let p0 = track.sensor(0);
        let step = Vec3::new(track.dir.x, track.dir.y, 0.0) * track.spacing;
        let range = match region {
            Region::Ground { x, y } => {
                if dir.z >= 0.0 {
                    continue;
                }
                let t = (scene.ground_z - p0.z) / dir.z;
                let hit0 = p0 + dir * t;
                let rx = line_range(hit0.x, step.x, x[0], x[1], n);
                let ry = line_range(hit0.y, step.y, y[0], y[1], n);
                match (rx, ry) {
                    (Some(a), Some(b)) if a.0.max(b.0) <= a.1.min(b.1) => {
                        (a.0.max(b.0), a.1.min(b.1))
                    }
                    _ => continue,
                }
            }
            Region::WallFace { wall, u, h } => {
                let w = &scene.walls[*wall];
                let a = w.base_start();
                let edge = w.base_end() - a;
                let d = Vec2::new(dir.x, dir.y);
                let denom = d.x * edge.y - d.y * edge.x;
                if denom.abs() < 1e-15 {
                    continue;
                }
                // t(j) and s(j) are affine in j; evaluate at j = 0 and j = 1.
                let solve = |origin: Vec3| {
                    let rel = a - Vec2::new(origin.x, origin.y);
                    let t = (rel.x * edge.y - rel.y * edge.x) / denom;
                    let s = (rel.x * d.y - rel.y * d.x) / denom;
                    (s * edge.norm(), origin.z + dir.z * t - scene.ground_z)
                };
                let (u0, h0) = solve(p0);
                let (u1, h1) = solve(p0 + step);
                let ru = line_range(u0, u1 - u0, u[0], u[1], n);
                let rh = line_range(h0, h1 - h0, h[0], h[1], n);
                match (ru, rh) {
                    (Some(a), Some(b)) if a.0.max(b.0) <= a.1.min(b.1) => {
                        (a.0.max(b.0), a.1.min(b.1))
                    }
                    _ => continue,
                }
            }
        };
        for j in range.0..=range.1 {
            if let Some(hit) = cast(scene, track.sensor(j), dir) {
                if region.contains(scene, hit.surface, &hit.point) {
                    total += 1;
                }
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scanner() -> ScannerSpec {
        ScannerSpec::new(300_100.0, 30.0, 0.02, 100.0).unwrap()
    }

    fn flight(pass: u32, x: f64, len: f64) -> FlightLine {
        FlightLine::new([x, 0.0], [x, len], 300.0, 25.0, pass).unwrap()
    }

    #[test]
    fn flat_ground_no_noise() {
        let sim = simulate(&Scene::flat(12.5), &scanner(), &[flight(0, 0.0, 10.0)], &NoiseSpec::none()).unwrap();
        assert!(sim.cloud.points().iter().all(|p| p.z == 12.5));
        assert_eq!(sim.log.pulses_emitted, 41 * 3001);
        assert_eq!(sim.log.points_landed, sim.cloud.len() as u64);
        assert_eq!(sim.log.no_hit, 0);
    }

    #[test]
    fn conservation_with_bounded_ground() {
        let scene = Scene {
            ground_extent: Some([-50.0, -1e9, 50.0, 1e9]),
            ..Scene::flat(0.0)
        };
        let sim = simulate(&scene, &scanner(), &[flight(0, 0.0, 5.0)], &NoiseSpec::none()).unwrap();
        assert!(sim.log.no_hit > 0);
        assert_eq!(sim.log.pulses_emitted, sim.log.points_landed + sim.log.no_hit);
        assert!(sim.cloud.points().iter().all(|p| p.x.abs() <= 50.0));
    }

    #[test]
    fn wall_shadows_ground() {
        // Wall 40 m east of the track, 20 m tall: ground just behind it is hidden.
        let wall = WallTarget::new("w", [40.0, -100.0], [40.0, 100.0], [0.0, 20.0], [-1.0, 0.0]).unwrap();
        let scene = Scene {
            walls: vec![wall],
            ..Scene::flat(0.0)
        };
        let sim = simulate(&scene, &scanner(), &[flight(0, 0.0, 20.0)], &NoiseSpec::none()).unwrap();
        // Shadow on the ground extends to 40 * 300 / 280 = 42.86 m.
        let shadowed = sim
            .cloud
            .points()
            .iter()
            .zip(&sim.log.hit_surface)
            .filter(|(p, h)| **h == HitSurface::Ground && p.x > 40.0 && p.x < 42.8)
            .count();
        assert_eq!(shadowed, 0);
        assert!(sim.log.hit_surface.contains(&HitSurface::Wall(0)));
        let beyond = sim.cloud.points().iter().filter(|p| p.x > 43.0).count();
        assert!(beyond > 0);
    }

    #[test]
    fn duplicate_pass_ids_rejected() {
        let r = simulate(&Scene::flat(0.0), &scanner(), &[flight(1, 0.0, 5.0), flight(1, 9.0, 5.0)], &NoiseSpec::none());
        assert!(r.is_err());
    }

    #[test]
    fn deterministic_with_noise() {
        let noise = NoiseSpec {
            per_point_sigma: 0.02,
            per_pass_offsets: [(0, [0.0, 0.0, 0.1])].into(),
            seed: 99,
        };
        let a = simulate(&Scene::flat(0.0), &scanner(), &[flight(0, 0.0, 5.0)], &noise).unwrap();
        let b = simulate(&Scene::flat(0.0), &scanner(), &[flight(0, 0.0, 5.0)], &noise).unwrap();
        assert_eq!(a.cloud, b.cloud);
        let mean_z: f64 = a.cloud.points().iter().map(|p| p.z).sum::<f64>() / a.cloud.len() as f64;
        assert!((mean_z - 0.1).abs() < 0.001);
    }

    #[test]
    fn full_scan_line_region() {
        let f = flight(0, 0.0, 0.0001);
        let c = expected_counts(&Scene::flat(0.0), &scanner(), &f, &Region::Ground { x: [-1e4, 1e4], y: [-1.0, 1.0] }).unwrap();
        assert_eq!(c, scanner().pulses_per_line() as u64);
        let outside = expected_counts(&Scene::flat(0.0), &scanner(), &f, &Region::Ground { x: [500.0, 600.0], y: [-1.0, 1.0] }).unwrap();
        assert_eq!(outside, 0);
    }

    fn count_in(sim: &Simulation, scene: &Scene, region: &Region) -> u64 {
        sim.cloud
            .points()
            .iter()
            .zip(&sim.log.hit_surface)
            .filter(|(p, h)| region.contains(scene, **h, &p.position()))
            .count() as u64
    }

    #[test]
    fn expected_counts_match_simulation() {
        let facing = [-40.0 / 1700f64.sqrt(), 10.0 / 1700f64.sqrt()];
        let wall = WallTarget::new("w", [60.0, 5.0], [70.0, 45.0], [0.0, 25.0], facing).unwrap();
        let scene = Scene {
            walls: vec![wall],
            ..Scene::flat(3.0)
        };
        let f = FlightLine::new([1.0, 0.0], [4.0, 50.0], 300.0, 25.0, 4).unwrap();
        let sim = simulate(&scene, &scanner(), &[f], &NoiseSpec::none()).unwrap();
        let regions = [
            Region::Ground { x: [0.3, 1.3], y: [20.1, 21.1] },
            Region::Ground { x: [-100.0, 100.0], y: [10.0, 30.0] },
            Region::Ground { x: [61.0, 90.0], y: [0.0, 50.0] },
            Region::WallFace { wall: 0, u: [0.0, 50.0], h: [0.0, 25.0] },
            Region::WallFace { wall: 0, u: [10.0, 20.0], h: [5.0, 6.0] },
        ];
        for r in &regions {
            let expected = expected_counts(&scene, &scanner(), &f, r).unwrap();
            assert_eq!(expected, count_in(&sim, &scene, r), "{r:?}");
        }
    }
}
