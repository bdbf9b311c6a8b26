// Sample patches on simulated ground and compare measured with predicted density.

use lidarqc::density::summarize_density;
use lidarqc::geometry::surface_from_corners;
use lidarqc::predictor::nadir_density;
use lidarqc::sampling::{collect_surface_points, sample_patches, SamplingPlan};
use lidarqc::simulator::{simulate, NoiseSpec, Scene};
use lidarqc::{FlightLine, ScannerSpec, Vec3};

pub fn run_example() -> lidarqc::Result<()> {
    let scanner = ScannerSpec::new(400_000.0, 10.0, 0.02, 100.0)?;
    let flight = FlightLine::new([0.0, 0.0], [0.0, 60.0], 300.0, 25.0, 0)?;
    let sim = simulate(&Scene::flat(0.0), &scanner, &[flight.clone()], &NoiseSpec::none())?;

    // A 10 m x 40 m strip under the track, where density is close to nadir.
    let surface = surface_from_corners(
        "strip",
        Vec3::new(-5.0, 10.0, 0.0),
        Vec3::new(5.0, 10.0, 0.0),
        Vec3::new(-5.0, 50.0, 0.0),
        None,
        None,
    )?;
    let points = collect_surface_points(&sim.cloud, &surface, 0.5);
    let sample = sample_patches(&points, &SamplingPlan::new(4.0, 500, 9))?;
    let summary = summarize_density(&sample.patches)?;
    let predicted = nadir_density(&scanner, &flight)?;
    println!("{} member points, {} patches", points.len(), sample.patches.len());
    println!("measured ANPD {:.2} +/- {:.2} pts/m2", summary.anpd, summary.anpd_sd);
    println!("predicted nadir density {predicted:.2} pts/m2");
    Ok(())
}

fn main() -> lidarqc::Result<()> {
    run_example()
}
