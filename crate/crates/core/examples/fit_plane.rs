// Fit a plane to a noisy wall patch and classify its orientation.

use lidarqc::geometry::fit_plane;
use lidarqc::model::classify_orientation;
use lidarqc::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> lidarqc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // A 2 m x 2 m patch of a wall facing +x, with 1 cm of scatter.
    let points: Vec<Vec3> = (0..400)
        .map(|_| {
            Vec3::new(
                10.0 + rng.random_range(-0.01..0.01),
                rng.random_range(0.0..2.0),
                rng.random_range(5.0..7.0),
            )
        })
        .collect();
    let plane = fit_plane(&points)?;
    let class = classify_orientation(&plane.normal)?;
    println!("normal   = [{:.4}, {:.4}, {:.4}]", plane.normal.x, plane.normal.y, plane.normal.z);
    println!("centroid = [{:.3}, {:.3}, {:.3}]", plane.centroid.x, plane.centroid.y, plane.centroid.z);
    println!("class    = {class}");
    let worst = points.iter().map(|p| plane.signed_distance(p).abs()).fold(0.0, f64::max);
    println!("max |residual| = {worst:.4} m");
    Ok(())
}

fn main() -> lidarqc::Result<()> {
    run_example()
}
