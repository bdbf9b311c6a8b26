//! Scene configuration files (TOML).
//!
//! One file describes the ground, walls, scanners, flight lines, noise and
//! the sample surfaces. Every section is optional, so the same grammar
//! serves `simulate` (scene + flights), `predict` (walls + flights) and
//! `metrics` (surfaces only). Unknown keys are rejected. The full grammar is
//! documented in the repository README.
//!
//! ```toml
//! ground_z = 0.0
//!
//! [[scanners]]
//! name = "q680i"
//! pulse_rate = 400000.0   # pulses/s
//! half_angle = 30.0       # degrees from nadir
//! angular_step = 0.02     # degrees between pulses
//! line_rate = 100.0       # scan lines/s
//!
//! [[flight_lines]]
//! pass_id = 0
//! start = [0.0, 0.0]
//! end = [0.0, 200.0]
//! altitude_agl = 300.0
//! speed = 25.0
//! scanner = "q680i"       # optional, defaults to the first scanner
//!
//! [[walls]]
//! name = "south"
//! base = [[97.0, 50.0], [97.0, 150.0]]
//! height_range = [0.0, 30.0]
//! facing = [-1.0, 0.0]    # optional, defaults to the left normal of the base
//!
//! [[surfaces]]
//! label = "lot"
//! corners = [[-20.0, 60.0, 0.0], [20.0, 60.0, 0.0], [-20.0, 100.0, 0.0]]
//! rejection = { mode = "exclusion_zones", zones = [{ u_min = 0.0, v_min = 0.0, u_max = 5.0, v_max = 2.0 }] }
//!
//! [noise]
//! per_point_sigma = 0.01
//! seed = 7
//! offsets = [{ pass_id = 0, offset = [0.0, 0.0, 0.01] }]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::surface_from_corners;
use crate::model::{FlightLine, PlanarSurface, ScannerSpec, Vec3, WallTarget};
use crate::sampling::RejectionPolicy;
use crate::simulator::{NoiseSpec, Scene};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    ground_z: f64,
    ground_extent: Option<[f64; 4]>,
    #[serde(default)]
    scanners: Vec<RawScanner>,
    #[serde(default)]
    flight_lines: Vec<RawFlight>,
    #[serde(default)]
    walls: Vec<RawWall>,
    #[serde(default)]
    surfaces: Vec<RawSurface>,
    #[serde(default)]
    noise: RawNoise,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScanner {
    name: String,
    pulse_rate: f64,
    half_angle: f64,
    angular_step: f64,
    line_rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlight {
    pass_id: u32,
    start: [f64; 2],
    end: [f64; 2],
    altitude_agl: f64,
    speed: f64,
    scanner: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWall {
    name: String,
    base: [[f64; 2]; 2],
    height_range: [f64; 2],
    facing: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    label: String,
    corners: [[f64; 3]; 3],
    extent_u: Option<f64>,
    extent_v: Option<f64>,
    #[serde(default)]
    rejection: RejectionPolicy,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    #[serde(default)]
    per_point_sigma: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    offsets: Vec<RawOffset>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOffset {
    pass_id: u32,
    offset: [f64; 3],
}

/// A flight line and the index of the scanner flying it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfiguredFlight {
    pub line: FlightLine,
    pub scanner: usize,
}

/// A sample surface with its obstruction policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceDefinition {
    pub surface: PlanarSurface,
    pub rejection: RejectionPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub scene: Scene,
    pub scanners: Vec<(String, ScannerSpec)>,
    pub flights: Vec<ConfiguredFlight>,
    pub surfaces: Vec<SurfaceDefinition>,
    pub noise: NoiseSpec,
}

impl SceneConfig {
    pub fn walls(&self) -> &[WallTarget] {
        &self.scene.walls
    }

    pub fn wall(&self, name: &str) -> Result<&WallTarget> {
        self.scene.walls.iter().find(|w| w.name == name).ok_or_else(|| Error::Lookup {
            kind: "wall",
            name: name.to_string(),
            available: list(self.scene.walls.iter().map(|w| w.name.as_str())),
        })
    }

    pub fn flight(&self, pass_id: u32) -> Result<&ConfiguredFlight> {
        self.flights.iter().find(|f| f.line.pass_id == pass_id).ok_or_else(|| Error::Lookup {
            kind: "pass",
            name: pass_id.to_string(),
            available: list(self.flights.iter().map(|f| f.line.pass_id.to_string())),
        })
    }
}

fn list<I: IntoIterator<Item = S>, S: AsRef<str>>(items: I) -> String {
    let v: Vec<String> = items.into_iter().map(|s| s.as_ref().to_string()).collect();
    if v.is_empty() {
        "(none)".into()
    } else {
        v.join(", ")
    }
}

/// Parses configuration text; `origin` only labels error messages.
pub fn parse_config(text: &str, origin: &Path) -> Result<SceneConfig> {
    let err = |message: String| Error::Config {
        path: origin.to_path_buf(),
        message,
    };
    let raw: RawConfig = toml::from_str(text).map_err(|e| err(e.to_string()))?;

    let mut scanners = Vec::new();
    for s in raw.scanners {
        let spec = ScannerSpec::new(s.pulse_rate, s.half_angle, s.angular_step, s.line_rate)
            .map_err(|e| err(format!("scanner `{}`: {e}", s.name)))?;
        if scanners.iter().any(|(n, _)| n == &s.name) {
            return Err(err(format!("duplicate scanner name `{}`", s.name)));
        }
        scanners.push((s.name, spec));
    }

    let mut flights = Vec::new();
    let mut pass_ids = BTreeSet::new();
    for f in raw.flight_lines {
        let line = FlightLine::new(f.start, f.end, f.altitude_agl, f.speed, f.pass_id)
            .map_err(|e| err(format!("flight line {}: {e}", f.pass_id)))?;
        if !pass_ids.insert(f.pass_id) {
            return Err(err(format!("pass_id {} appears on more than one flight line", f.pass_id)));
        }
        let scanner = match &f.scanner {
            None if scanners.is_empty() => {
                return Err(err(format!("flight line {} has no scanner to fly", f.pass_id)))
            }
            None => 0,
            Some(name) => scanners.iter().position(|(n, _)| n == name).ok_or_else(|| {
                err(format!(
                    "flight line {} names unknown scanner `{name}`; available: {}",
                    f.pass_id,
                    list(scanners.iter().map(|(n, _)| n.as_str()))
                ))
            })?,
        };
        flights.push(ConfiguredFlight { line, scanner });
    }

    let mut walls: Vec<WallTarget> = Vec::new();
    for w in raw.walls {
        let [a, b] = w.base;
        let facing = w.facing.unwrap_or_else(|| {
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = dx.hypot(dy);
            if len > 0.0 { [-dy / len, dx / len] } else { [0.0, 0.0] }
        });
        let wall = WallTarget::new(w.name.clone(), a, b, w.height_range, facing)
            .map_err(|e| err(format!("wall `{}`: {e}", w.name)))?;
        if walls.iter().any(|x| x.name == w.name) {
            return Err(err(format!("duplicate wall name `{}`", w.name)));
        }
        walls.push(wall);
    }

    let mut surfaces = Vec::new();
    for s in raw.surfaces {
        let [c1, c2, c3] = s.corners.map(Vec3::from);
        let surface = surface_from_corners(s.label.clone(), c1, c2, c3, s.extent_u, s.extent_v)
            .map_err(|e| err(format!("surface `{}`: {e}", s.label)))?;
        s.rejection
            .validate()
            .map_err(|e| err(format!("surface `{}`: {e}", s.label)))?;
        surfaces.push(SurfaceDefinition {
            surface,
            rejection: s.rejection,
        });
    }

    let mut noise = NoiseSpec {
        per_point_sigma: raw.noise.per_point_sigma,
        seed: raw.noise.seed,
        ..NoiseSpec::default()
    };
    for o in raw.noise.offsets {
        if noise.per_pass_offsets.insert(o.pass_id, o.offset).is_some() {
            return Err(err(format!("duplicate noise offset for pass {}", o.pass_id)));
        }
    }
    noise.validate().map_err(|e| err(e.to_string()))?;

    let scene = Scene {
        ground_z: raw.ground_z,
        walls,
        ground_extent: raw.ground_extent,
    };
    scene.validate().map_err(|e| err(e.to_string()))?;
    Ok(SceneConfig {
        scene,
        scanners,
        flights,
        surfaces,
        noise,
    })
}

pub fn read_config(path: impl AsRef<Path>) -> Result<SceneConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Reads raw config bytes alongside the parsed value (for hashing).
pub fn read_config_with_bytes(path: impl AsRef<Path>) -> Result<(SceneConfig, Vec<u8>)> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Config {
        path: path.clone(),
        message: "file is not valid UTF-8".into(),
    })?;
    Ok((parse_config(&text, &path)?, bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OrientationClass;

    const FULL: &str = r#"
ground_z = 2.0

[[scanners]]
name = "q680i"
pulse_rate = 400000.0
half_angle = 30.0
angular_step = 0.02
line_rate = 100.0

[[flight_lines]]
pass_id = 0
start = [0.0, 0.0]
end = [0.0, 200.0]
altitude_agl = 300.0
speed = 25.0

[[flight_lines]]
pass_id = 4
start = [20.0, 200.0]
end = [20.0, 0.0]
altitude_agl = 300.0
speed = 25.0
scanner = "q680i"

[[walls]]
name = "south"
base = [[97.0, 50.0], [97.0, 150.0]]
height_range = [0.0, 30.0]
facing = [-1.0, 0.0]

[[surfaces]]
label = "lot"
corners = [[-20.0, 60.0, 2.0], [20.0, 60.0, 2.0], [-20.0, 100.0, 2.0]]
rejection = { mode = "exclusion_zones", zones = [{ u_min = 0.0, v_min = 0.0, u_max = 5.0, v_max = 2.0 }] }

[noise]
per_point_sigma = 0.01
seed = 7
offsets = [{ pass_id = 0, offset = [0.0, 0.0, 0.01] }]
"#;

    #[test]
    fn parses_full_example() {
        let c = parse_config(FULL, Path::new("x.toml")).unwrap();
        assert_eq!(c.scene.ground_z, 2.0);
        assert_eq!(c.flights.len(), 2);
        assert_eq!(c.flights[1].scanner, 0);
        assert_eq!(c.wall("south").unwrap().height_range, [0.0, 30.0]);
        assert_eq!(c.surfaces[0].surface.orientation(), OrientationClass::Horizontal);
        assert!(matches!(c.surfaces[0].rejection, RejectionPolicy::ExclusionZones { .. }));
        assert_eq!(c.noise.per_pass_offsets[&0], [0.0, 0.0, 0.01]);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let e = parse_config("ground_z = 0\n[[scanners]\nname = 1\n", Path::new("bad.toml")).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn duplicate_pass_ids_rejected() {
        let text = FULL.replace("pass_id = 4", "pass_id = 0");
        let e = parse_config(&text, Path::new("x.toml")).unwrap_err();
        assert!(e.to_string().contains("more than one"), "{e}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config("grund_z = 1.0\n", Path::new("x.toml")).is_err());
    }

    #[test]
    fn lookup_lists_available_walls() {
        let c = parse_config(FULL, Path::new("x.toml")).unwrap();
        let e = c.wall("north").unwrap_err();
        assert!(e.to_string().contains("south"), "{e}");
    }

    #[test]
    fn surfaces_only_file() {
        let text = r#"
[[surfaces]]
label = "wall"
corners = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 0.0, 8.0]]
"#;
        let c = parse_config(text, Path::new("s.toml")).unwrap();
        assert_eq!(c.surfaces[0].surface.orientation(), OrientationClass::Vertical);
        assert!(c.flights.is_empty());
    }
}
