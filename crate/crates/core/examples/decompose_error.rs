// Split the error of a two-pass patch into cross-pass and within-pass parts.

use lidarqc::accuracy::{combine_components, decompose_points};
use lidarqc::Vec3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> lidarqc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.015).unwrap();
    let mut points = Vec::new();
    let mut passes = Vec::new();
    // Pass 1 sits 2.5 cm above pass 2 on a flat 2 m patch.
    for (pass, dz) in [(1u32, 0.0125), (2u32, -0.0125)] {
        for i in 0..20 {
            for j in 0..20 {
                let (x, y) = (i as f64 * 0.1, j as f64 * 0.1);
                points.push(Vec3::new(x, y, dz + noise.sample(&mut rng)));
                passes.push(pass);
            }
        }
    }
    let d = decompose_points(&points, &passes)?;
    println!("rmse = {:.4} m", d.rmse);
    println!("C    = {:.4} m (cross-pass)", d.c);
    println!("W    = {:.4} m (within-pass)", d.w);
    println!("C/W  = {:.3}", d.c_over_w.unwrap_or(f64::NAN));
    println!("sqrt(C^2 + W^2) - rmse = {:.2e}", combine_components(d.c, d.w) - d.rmse);
    for p in &d.per_pass {
        println!("pass {}: n = {}, offset = {:+.4} m", p.pass_id, p.n, p.h_hat);
    }
    Ok(())
}

fn main() -> lidarqc::Result<()> {
    run_example()
}
