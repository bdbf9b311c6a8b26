// Write a cloud to LAS and read it back.

use lidarqc::io::las::{decode_las, encode_las, LasWriteOptions};
use lidarqc::{Point, PointCloud};

pub fn run_example() -> lidarqc::Result<()> {
    let points: Vec<Point> = (0..1000)
        .map(|i| {
            let t = i as f64;
            let mut p = Point::new(583_000.0 + t * 0.1, 4_505_000.0 - t * 0.05, 12.0 + (t * 0.01).sin(), i % 4);
            p.gps_time = Some(1000.0 + t * 1e-5);
            p
        })
        .collect();
    let cloud = PointCloud::new(points)?;
    let bytes = encode_las(&cloud, &LasWriteOptions::default())?;
    let back = decode_las(&bytes)?;
    let worst = cloud
        .points()
        .iter()
        .zip(back.points())
        .map(|(a, b)| (a.position() - b.position()).amax())
        .fold(0.0, f64::max);
    println!("{} bytes for {} points", bytes.len(), back.len());
    println!("passes {:?}", back.pass_ids());
    println!("largest coordinate change {worst:.2e} m (scale 1e-3)");
    Ok(())
}

fn main() -> lidarqc::Result<()> {
    run_example()
}
