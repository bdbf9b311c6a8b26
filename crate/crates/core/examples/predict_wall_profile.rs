// Predicted wall density by height for one pass flown parallel to a wall.

use lidarqc::predictor::{nadir_density, swath_and_flat_density, theoretical_summary, wall_profile};
use lidarqc::{FlightLine, ScannerSpec, WallTarget};

pub fn run_example() -> lidarqc::Result<()> {
    // 300 m above ground, 25.8 m/s, wall 97 m to the side of the track.
    let scanner = ScannerSpec::new(400_000.0, 30.0, 0.02, 100.0)?;
    let flight = FlightLine::new([0.0, 0.0], [0.0, 1000.0], 300.0, 25.8, 0)?;
    let wall = WallTarget::new("facade", [97.0, 400.0], [97.0, 600.0], [0.0, 30.0], [-1.0, 0.0])?;

    let flat = swath_and_flat_density(&scanner, &flight)?;
    println!("swath width {:.1} m, swath-average density {:.2} pts/m2", flat.d_across, flat.rho_flat);
    println!("nadir density {:.2} pts/m2", nadir_density(&scanner, &flight)?);

    let profile = wall_profile(&scanner, &flight, &wall, 1.0)?;
    println!("h_bin  theta_h  theta_w   rho_w");
    for b in profile.bins.iter().step_by(5) {
        println!("{:5.1}  {:7.3}  {:7.3}  {:6.3}", b.h, b.theta_h_deg, b.theta_w_deg, b.rho_w);
    }
    let s = theoretical_summary(&scanner, &flight, &wall)?;
    println!("mean wall density {:.3}, predicted eta_hv {:.2}", s.rho_wall_avg, s.eta_hv_predicted);
    Ok(())
}

fn main() -> lidarqc::Result<()> {
    run_example()
}
