//! Closed-form point density from flight and scanner parameters.
//!
//! Angles are taken in degrees at the public boundary. The density chain is
//!
//! ```text
//! ρ_N = 1 / (H tan θ_L · R_along)          nadir
//! ρ_H = ρ_N cos² θ_H                        horizontal ground at θ_H
//! ρ_V = ρ_H tan θ_H                         wall base at θ_H
//! ρ_W = ρ_V sin²(θ_H + θ_W) / sin² θ_H      wall at height h
//! ```
//!
//! with `θ_H = atan(d / H)` and `θ_W = atan(d / (H - h)) - θ_H` for a wall at
//! horizontal distance `d` from the flight line. Each density has a matching
//! across-track spacing `R` with `ρ = 1 / (R · R_along)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlightLine, ScannerSpec, WallTarget};

/// Default height bin for wall profiles, meters.
pub const DEFAULT_BIN_HEIGHT: f64 = 1.0;

/// Walls whose base direction deviates from the flight direction by more
/// than this get a non-parallel warning, degrees.
pub const PARALLEL_TOLERANCE_DEG: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatDensity {
    /// Swath width, m.
    pub d_across: f64,
    /// Swath-average density from the pulse rate, pts/m².
    pub rho_flat: f64,
}

/// Swath width and swath-average density from the nominal pulse rate.
pub fn swath_and_flat_density(scanner: &ScannerSpec, flight: &FlightLine) -> Result<FlatDensity> {
    if !(scanner.half_angle_deg > 0.0 && scanner.half_angle_deg < 90.0) {
        return Err(Error::Domain(format!(
            "half-angle must be in (0, 90) degrees, got {}",
            scanner.half_angle_deg
        )));
    }
    let h = flight.altitude_agl;
    let d_across = 2.0 * h * scanner.half_angle_deg.to_radians().tan();
    Ok(FlatDensity {
        d_across,
        rho_flat: scanner.pulse_rate / (flight.speed * d_across),
    })
}

/// Along-track spacing between scan lines, `v / line_rate`.
pub fn along_track_spacing(scanner: &ScannerSpec, flight: &FlightLine) -> Result<f64> {
    if !(scanner.line_rate > 0.0) {
        return Err(Error::Domain("line rate must be positive".into()));
    }
    Ok(flight.speed / scanner.line_rate)
}

/// Density directly below the sensor.
pub fn nadir_density(scanner: &ScannerSpec, flight: &FlightLine) -> Result<f64> {
    if !(scanner.angular_step_deg > 0.0) {
        return Err(Error::Domain("angular step must be positive".into()));
    }
    let r_along = along_track_spacing(scanner, flight)?;
    Ok(1.0 / (nadir_spacing(flight.altitude_agl, scanner.angular_step_deg) * r_along))
}

fn check_capture_angle(theta_h_deg: f64) -> Result<()> {
    if !(0.0..90.0).contains(&theta_h_deg) {
        return Err(Error::Domain(format!(
            "capture angle must be in [0, 90) degrees, got {theta_h_deg}"
        )));
    }
    Ok(())
}

/// `(ρ_H / ρ_N, ρ_V / ρ_N)` at capture angle `θ_H`.
pub fn density_ratios(theta_h_deg: f64) -> Result<(f64, f64)> {
    check_capture_angle(theta_h_deg)?;
    let t = theta_h_deg.to_radians();
    let horizontal = t.cos().powi(2);
    Ok((horizontal, horizontal * t.tan()))
}

/// Across-track spacing at nadir, `H tan θ_L`.
pub fn nadir_spacing(altitude: f64, angular_step_deg: f64) -> f64 {
    altitude * angular_step_deg.to_radians().tan()
}

/// Spacing on horizontal ground at `θ_H`, `R_N sec² θ_H`.
pub fn horizontal_spacing(r_nadir: f64, theta_h_deg: f64) -> f64 {
    r_nadir / theta_h_deg.to_radians().cos().powi(2)
}

/// Vertical spacing at a wall base, `R_H cot θ_H`.
pub fn vertical_spacing(r_horizontal: f64, theta_h_deg: f64) -> f64 {
    r_horizontal / theta_h_deg.to_radians().tan()
}

/// Vertical spacing at height on a wall, `R_V sin² θ_H / sin²(θ_H + θ_W)`.
pub fn wall_spacing(r_vertical: f64, theta_h_deg: f64, theta_w_deg: f64) -> f64 {
    let th = theta_h_deg.to_radians();
    let tw = theta_w_deg.to_radians();
    r_vertical * th.sin().powi(2) / (th + tw).sin().powi(2)
}

/// Sensor-to-wall geometry for one height on the wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureGeometry {
    /// Angle from nadir to the wall base, degrees.
    pub theta_h_deg: f64,
    /// Angle at the sensor between wall base and height `h`, degrees.
    pub theta_w_deg: f64,
    pub theta_l_deg: f64,
    pub altitude: f64,
    pub offset: f64,
    pub height: f64,
}

impl CaptureGeometry {
    /// Geometry for a wall at horizontal distance `offset` from a sensor at
    /// `altitude`, evaluated at `height` on the wall.
    pub fn from_offset(altitude: f64, offset: f64, height: f64, theta_l_deg: f64) -> Result<Self> {
        if !(altitude > 0.0) {
            return Err(Error::Domain("altitude must be positive".into()));
        }
        if height >= altitude {
            return Err(Error::Domain(format!(
                "wall height {height} m is not below the sensor at {altitude} m"
            )));
        }
        if height < 0.0 {
            return Err(Error::Domain(format!("wall height must be >= 0, got {height}")));
        }
        let d = offset.abs();
        if d == 0.0 {
            return Err(Error::WallAtNadir(
                "wall lies directly below the flight line".into(),
            ));
        }
        let theta_h = (d / altitude).atan();
        let theta_top = (d / (altitude - height)).atan();
        Ok(CaptureGeometry {
            theta_h_deg: theta_h.to_degrees(),
            theta_w_deg: (theta_top - theta_h).to_degrees(),
            theta_l_deg,
            altitude,
            offset: d,
            height,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta_h_deg > 0.0) {
            return Err(Error::WallAtNadir(
                "capture angle is zero; a wall at nadir is not visible".into(),
            ));
        }
        check_capture_angle(self.theta_h_deg)?;
        if self.theta_w_deg < 0.0 || self.theta_h_deg + self.theta_w_deg >= 90.0 {
            return Err(Error::Domain(format!(
                "need theta_w >= 0 and theta_h + theta_w < 90, got {} + {}",
                self.theta_h_deg, self.theta_w_deg
            )));
        }
        if self.height >= self.altitude {
            return Err(Error::Domain("wall height must be below the sensor".into()));
        }
        Ok(())
    }
}

/// Density on the wall at the geometry's height, composed from the
/// horizontal, vertical and height-gain factors.
pub fn wall_density(geometry: &CaptureGeometry, rho_nadir: f64) -> Result<f64> {
    geometry.validate()?;
    let th = geometry.theta_h_deg.to_radians();
    let tw = geometry.theta_w_deg.to_radians();
    let rho_v = rho_nadir * th.cos().powi(2) * th.tan();
    Ok(rho_v * (th + tw).sin().powi(2) / th.sin().powi(2))
}

/// The same density written with `tan(θ_H + θ_L)`; agrees with
/// [`wall_density`] only as `θ_L → 0` and is kept as a cross-check.
pub fn wall_density_step_form(geometry: &CaptureGeometry, rho_nadir: f64) -> Result<f64> {
    geometry.validate()?;
    let th = geometry.theta_h_deg.to_radians();
    let tw = geometry.theta_w_deg.to_radians();
    let tl = geometry.theta_l_deg.to_radians();
    Ok(rho_nadir * (th + tl).tan() * (th + tw).sin().powi(2) / th.tan().powi(2))
}

/// Height bins `[lo, hi)` covering `[h_min, h_max]`; the last bin is
/// shortened to end at `h_max`.
pub fn height_bins(h_min: f64, h_max: f64, bin_height: f64) -> Result<Vec<(f64, f64)>> {
    if !(bin_height > 0.0) || !bin_height.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bin height must be positive, got {bin_height}"
        )));
    }
    if !(h_max > h_min) {
        return Err(Error::InvalidInput(format!(
            "empty height range [{h_min}, {h_max}]"
        )));
    }
    let span = h_max - h_min;
    // Absorb rounding so 30 / 1.0 gives 30 bins, not 31.
    let n = ((span / bin_height) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((0..n)
        .map(|k| {
            let lo = h_min + k as f64 * bin_height;
            let hi = if k + 1 == n { h_max } else { lo + bin_height };
            (lo, hi)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    /// Bin centre, m above ground.
    pub h: f64,
    pub theta_h_deg: f64,
    pub theta_w_deg: f64,
    pub rho_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallProfile {
    pub wall: String,
    pub pass_id: u32,
    /// Horizontal distance from flight line to wall base, m.
    pub offset: f64,
    pub altitude: f64,
    pub rho_nadir: f64,
    pub bins: Vec<ProfileBin>,
    pub warnings: Vec<String>,
}

/// Predicted density at the centre of each height bin of `wall` for a
/// single pass along `flight`.
///
/// Bins whose centre is seen at more than the scanner half-angle are
/// dropped and reported in `warnings`.
pub fn wall_profile(
    scanner: &ScannerSpec,
    flight: &FlightLine,
    wall: &WallTarget,
    bin_height: f64,
) -> Result<WallProfile> {
    let rho_nadir = nadir_density(scanner, flight)?;
    let altitude = flight.altitude_agl;
    let offset = flight.perpendicular_distance(wall.base_midpoint());
    let mut warnings = Vec::new();

    let wall_dir = (wall.base_end() - wall.base_start()).normalize();
    let skew = wall_dir.dot(&flight.direction()).abs().clamp(0.0, 1.0).acos().to_degrees();
    if skew > PARALLEL_TOLERANCE_DEG {
        warnings.push(format!(
            "wall `{}` is {skew:.1}° from parallel to pass {}; using the distance to its midpoint",
            wall.name, flight.pass_id
        ));
    }
    if wall.height_range[1] >= altitude {
        return Err(Error::Domain(format!(
            "wall `{}` top at {} m is not below the sensor at {altitude} m",
            wall.name, wall.height_range[1]
        )));
    }

    let max_angle = scanner.half_angle_deg;
    let mut bins = Vec::new();
    let mut dropped = 0;
    for (lo, hi) in height_bins(wall.height_range[0], wall.height_range[1], bin_height)? {
        let h = (lo + hi) / 2.0;
        let geometry = CaptureGeometry::from_offset(altitude, offset, h, scanner.angular_step_deg)?;
        if geometry.theta_h_deg + geometry.theta_w_deg > max_angle {
            dropped += 1;
            continue;
        }
        bins.push(ProfileBin {
            h,
            theta_h_deg: geometry.theta_h_deg,
            theta_w_deg: geometry.theta_w_deg,
            rho_w: wall_density(&geometry, rho_nadir)?,
        });
    }
    if dropped > 0 {
        warnings.push(format!(
            "{dropped} bin(s) of wall `{}` lie outside the ±{max_angle}° operating range; profile is partial",
            wall.name
        ));
    }
    Ok(WallProfile {
        wall: wall.name.clone(),
        pass_id: flight.pass_id,
        offset,
        altitude,
        rho_nadir,
        bins,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalSummary {
    /// Density at nadir, pts/m².
    pub rho_flat_nadir: f64,
    /// Mean predicted wall density over the height bins, pts/m².
    pub rho_wall_avg: f64,
    pub eta_hv_predicted: f64,
    pub warnings: Vec<String>,
}

pub fn theoretical_summary(
    scanner: &ScannerSpec,
    flight: &FlightLine,
    wall: &WallTarget,
) -> Result<TheoreticalSummary> {
    theoretical_summary_binned(scanner, flight, wall, DEFAULT_BIN_HEIGHT)
}

pub fn theoretical_summary_binned(
    scanner: &ScannerSpec,
    flight: &FlightLine,
    wall: &WallTarget,
    bin_height: f64,
) -> Result<TheoreticalSummary> {
    let profile = wall_profile(scanner, flight, wall, bin_height)?;
    if profile.bins.is_empty() {
        return Err(Error::Domain(format!(
            "wall `{}` is entirely outside the operating range",
            wall.name
        )));
    }
    let rho_wall_avg =
        profile.bins.iter().map(|b| b.rho_w).sum::<f64>() / profile.bins.len() as f64;
    Ok(TheoreticalSummary {
        rho_flat_nadir: profile.rho_nadir,
        rho_wall_avg,
        eta_hv_predicted: profile.rho_nadir / rho_wall_avg,
        warnings: profile.warnings,
    })
}
