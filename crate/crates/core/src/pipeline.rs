//! The three command-line workflows as library calls: simulate a scene,
//! compute metrics on a cloud, predict a wall density profile.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::accuracy::{decompose_patch, pass_offset_profile, ErrorDecomposition};
use crate::density::{height_profile, overlap_count, patch_density};
use crate::error::{Error, Result};
use crate::io::config::{read_config_with_bytes, SceneConfig};
use crate::io::report::{AccuracyBlock, ClassBlock, MetricsReport, SurfaceDiagnostics};
use crate::io::{read_cloud, write_cloud, write_json, write_report, CloudFormat, ReportFormat};
use crate::model::{OrientationClass, PointCloud};
use crate::predictor::{self, TheoreticalSummary, WallProfile, PARALLEL_TOLERANCE_DEG};
use crate::sampling::{collect_surface_points, sample_patches, SamplingPlan};
use crate::simulator::{mix64, simulate, EmissionLog, Simulation};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn stem_sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub scene: PathBuf,
    pub out: PathBuf,
    pub format: CloudFormat,
    /// Overrides the noise seed of the scene file.
    pub seed: Option<u64>,
    /// Emission log path; defaults to `<out stem>.log.json`.
    pub log: Option<PathBuf>,
}

/// Runs every flight line of a configuration, grouped by scanner.
pub fn simulate_config(config: &SceneConfig, seed: Option<u64>) -> Result<Simulation> {
    if config.flights.is_empty() {
        return Err(Error::InvalidInput("scene has no flight lines to simulate".into()));
    }
    let mut noise = config.noise.clone();
    if let Some(s) = seed {
        noise.seed = s;
    }
    let mut cloud = PointCloud::empty();
    let mut log = EmissionLog::default();
    for (index, (_, scanner)) in config.scanners.iter().enumerate() {
        let flights: Vec<_> = config
            .flights
            .iter()
            .filter(|f| f.scanner == index)
            .map(|f| f.line.clone())
            .collect();
        if flights.is_empty() {
            continue;
        }
        let sim = simulate(&config.scene, scanner, &flights, &noise)?;
        cloud = cloud.merged(sim.cloud);
        log = log.merged(sim.log);
    }
    Ok(Simulation { cloud, log })
}

pub fn run_simulate(args: &SimulateArgs) -> Result<EmissionLog> {
    let (config, _) = read_config_with_bytes(&args.scene)?;
    let sim = simulate_config(&config, args.seed)?;
    write_cloud(&sim.cloud, &args.out, args.format)?;
    let log_path = args.log.clone().unwrap_or_else(|| stem_sibling(&args.out, ".log.json"));
    write_json(&sim.log, log_path)?;
    Ok(sim.log)
}

#[derive(Debug, Clone)]
pub struct MetricsArgs {
    pub cloud: PathBuf,
    pub surfaces: PathBuf,
    pub patch_area: f64,
    pub patches: usize,
    pub seed: u64,
    /// Maximum distance of a point from a surface plane to count as on it, m.
    pub band: f64,
    /// Height bin for vertical-surface density profiles, m.
    pub bin: f64,
    pub out: PathBuf,
}

impl MetricsArgs {
    pub fn new(cloud: impl Into<PathBuf>, surfaces: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        MetricsArgs {
            cloud: cloud.into(),
            surfaces: surfaces.into(),
            patch_area: 4.0,
            patches: 10_000,
            seed: 0,
            band: 0.5,
            bin: predictor::DEFAULT_BIN_HEIGHT,
            out: out.into(),
        }
    }
}

/// Sampling parameters that shape a metrics run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsParams {
    pub patch_area: f64,
    pub patches: usize,
    pub seed: u64,
    pub band: f64,
    pub bin: f64,
}

impl From<&MetricsArgs> for MetricsParams {
    fn from(a: &MetricsArgs) -> Self {
        MetricsParams {
            patch_area: a.patch_area,
            patches: a.patches,
            seed: a.seed,
            band: a.band,
            bin: a.bin,
        }
    }
}

#[derive(Default)]
struct ClassAccumulator {
    surfaces: Vec<String>,
    densities: Vec<f64>,
    passes: Vec<usize>,
    decompositions: Vec<ErrorDecomposition>,
}

/// Samples every surface of `config` and assembles the report.
pub fn compute_metrics(
    cloud: &PointCloud,
    config: &SceneConfig,
    params: MetricsParams,
    config_hash: String,
) -> Result<MetricsReport> {
    let mut report = MetricsReport::new(params.seed, config_hash, params.patch_area, params.patches);
    if config.surfaces.is_empty() {
        report.diagnostics.push("no surfaces defined".into());
    }
    if cloud.is_empty() {
        report.diagnostics.push("point cloud is empty".into());
    }
    let classes = [
        OrientationClass::Horizontal,
        OrientationClass::Vertical,
        OrientationClass::Canted,
    ];
    let mut acc: [ClassAccumulator; 3] = Default::default();
    let mut all = Vec::new();
    for (i, def) in config.surfaces.iter().enumerate() {
        let surface = &def.surface;
        let class = surface.orientation();
        let mut plan = SamplingPlan::new(params.patch_area, params.patches, mix64(params.seed ^ mix64(i as u64)));
        plan.max_w_offset = params.band;
        plan.rejection = def.rejection.clone();
        let points = collect_surface_points(cloud, surface, plan.max_w_offset);
        let sample = sample_patches(&points, &plan)?;
        report.diagnostics.extend(sample.diagnostics.iter().cloned());

        let slot = &mut acc[classes.iter().position(|c| *c == class).unwrap_or(0)];
        slot.surfaces.push(surface.label().to_string());
        let mut undecomposed = 0;
        for patch in &sample.patches {
            slot.densities.push(patch_density(patch));
            slot.passes.push(overlap_count(patch));
            match decompose_patch(patch, cloud) {
                Ok(d) => {
                    slot.decompositions.push(d.clone());
                    all.push(d);
                }
                Err(_) => undecomposed += 1,
            }
        }
        if undecomposed > 0 {
            report.diagnostics.push(format!(
                "surface `{}`: {undecomposed} patch(es) had no fitting plane and were left out of the accuracy metrics",
                surface.label()
            ));
        }
        let profile = if class == OrientationClass::Vertical && !points.is_empty() {
            Some(height_profile(&points, 0.0, params.bin)?)
        } else {
            None
        };
        report.surfaces.push(SurfaceDiagnostics {
            label: surface.label().to_string(),
            orientation: class,
            member_points: points.len(),
            patches: sample.patches.len(),
            draws: sample.draws,
            sparse: sample.sparse,
            rejected: sample.rejected,
            undecomposed,
            height_profile: profile,
        });
    }
    for (class, a) in classes.iter().zip(acc) {
        *report.block_mut(*class) =
            ClassBlock::from_patches(a.surfaces, &a.densities, &a.passes, &a.decompositions)?;
    }
    report.update_eta_hv();
    report.accuracy = AccuracyBlock::from_decompositions(&all)?;
    report.per_pass_offsets = pass_offset_profile(&all).passes;
    Ok(report)
}

/// Hash of the surfaces file plus the sampling parameters.
pub fn config_hash(surfaces_bytes: &[u8], params: &MetricsParams) -> String {
    let mut h = Sha256::new();
    h.update(surfaces_bytes);
    h.update(
        format!(
            "patch_area={};patches={};seed={};band={};bin={}",
            params.patch_area, params.patches, params.seed, params.band, params.bin
        )
        .as_bytes(),
    );
    hex(&h.finalize())
}

pub fn run_metrics(args: &MetricsArgs) -> Result<MetricsReport> {
    let (config, bytes) = read_config_with_bytes(&args.surfaces)?;
    let cloud = read_cloud(&args.cloud)?;
    let params = MetricsParams::from(args);
    let report = compute_metrics(&cloud, &config, params, config_hash(&bytes, &params))?;
    write_report(&report, &args.out, ReportFormat::from_path(&args.out))?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct PredictArgs {
    pub scene: PathBuf,
    pub wall: String,
    pub bin: f64,
    pub out: PathBuf,
    /// Pass to predict for; defaults to the nearest parallel flight line.
    pub pass: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Prediction {
    pub profile: WallProfile,
    pub summary: TheoreticalSummary,
}

/// Picks the flight line nearest the wall among those running parallel to
/// it, or the nearest overall when none is parallel.
fn default_flight<'a>(config: &'a SceneConfig, wall: &crate::model::WallTarget) -> Result<&'a crate::io::config::ConfiguredFlight> {
    let wall_dir = (wall.base_end() - wall.base_start()).normalize();
    let key = |f: &&crate::io::config::ConfiguredFlight| {
        let skew = wall_dir.dot(&f.line.direction()).abs().clamp(0.0, 1.0).acos().to_degrees();
        let parallel = skew <= PARALLEL_TOLERANCE_DEG;
        (!parallel, f.line.perpendicular_distance(wall.base_midpoint()))
    };
    config
        .flights
        .iter()
        .min_by(|a, b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        })
        .ok_or_else(|| Error::InvalidInput("scene has no flight lines".into()))
}

pub fn predict_config(config: &SceneConfig, wall: &str, bin: f64, pass: Option<u32>) -> Result<Prediction> {
    let wall = config.wall(wall)?;
    let flight = match pass {
        Some(id) => config.flight(id)?,
        None => default_flight(config, wall)?,
    };
    let scanner = &config.scanners[flight.scanner].1;
    let profile = predictor::wall_profile(scanner, &flight.line, wall, bin)?;
    let summary = predictor::theoretical_summary_binned(scanner, &flight.line, wall, bin)?;
    Ok(Prediction { profile, summary })
}

pub fn profile_csv(profile: &WallProfile) -> Vec<u8> {
    let mut s = String::from("h_bin,rho_w,theta_h_deg,theta_w_deg\n");
    for b in &profile.bins {
        s.push_str(&format!("{},{},{},{}\n", b.h, b.rho_w, b.theta_h_deg, b.theta_w_deg));
    }
    s.into_bytes()
}

/// Writes the profile CSV to `out` and the summary to `<out stem>.summary.json`.
pub fn run_predict(args: &PredictArgs) -> Result<Prediction> {
    let (config, _) = read_config_with_bytes(&args.scene)?;
    let prediction = predict_config(&config, &args.wall, args.bin, args.pass)?;
    crate::io::write_atomic(&args.out, &profile_csv(&prediction.profile))?;
    write_json(&prediction, stem_sibling(&args.out, ".summary.json"))?;
    Ok(prediction)
}
