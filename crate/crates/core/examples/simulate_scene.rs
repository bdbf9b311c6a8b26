// Scan a flat ground plane with one wall and inspect the emission log.

use lidarqc::simulator::{simulate, HitSurface, NoiseSpec, Scene};
use lidarqc::{FlightLine, ScannerSpec, WallTarget};

pub fn run_example() -> lidarqc::Result<()> {
    let scanner = ScannerSpec::new(400_000.0, 20.0, 0.05, 50.0)?;
    let wall = WallTarget::new("w", [40.0, 20.0], [40.0, 60.0], [0.0, 15.0], [-1.0, 0.0])?;
    let scene = Scene {
        walls: vec![wall],
        ..Scene::flat(0.0)
    };
    let flights = [
        FlightLine::new([0.0, 0.0], [0.0, 80.0], 300.0, 25.0, 1)?,
        FlightLine::new([10.0, 80.0], [10.0, 0.0], 300.0, 25.0, 2)?,
    ];
    let noise = NoiseSpec {
        per_point_sigma: 0.01,
        seed: 42,
        ..NoiseSpec::none()
    };
    let sim = simulate(&scene, &scanner, &flights, &noise)?;
    let log = &sim.log;
    println!("{} pulses, {} points, {} misses", log.pulses_emitted, log.points_landed, log.no_hit);
    for p in &log.passes {
        println!(
            "pass {}: {} lines x {} pulses, swath {:.1} m, line spacing {:.2} m",
            p.pass_id, p.scan_lines, p.pulses_per_line, p.swath_width, p.along_spacing
        );
    }
    for (surface, n) in log.hit_counts() {
        let name = match surface {
            HitSurface::Ground => "ground".to_string(),
            HitSurface::Wall(i) => format!("wall {}", scene.walls[i].name),
        };
        println!("{name}: {n} points");
    }
    Ok(())
}

fn main() -> lidarqc::Result<()> {
    run_example()
}
