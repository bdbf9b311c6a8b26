// Simulate a two-pass scene from a config file and compute the full report.

use std::path::Path;

use lidarqc::io::config::parse_config;
use lidarqc::pipeline::{compute_metrics, simulate_config, MetricsParams};

const SCENE: &str = r#"
[[scanners]]
name = "nadir"
pulse_rate = 400000.0
half_angle = 20.0
angular_step = 0.02
line_rate = 100.0

[[flight_lines]]
pass_id = 1
start = [0.0, 0.0]
end = [0.0, 60.0]
altitude_agl = 300.0
speed = 25.0

[[flight_lines]]
pass_id = 2
start = [20.0, 60.0]
end = [20.0, 0.0]
altitude_agl = 300.0
speed = 25.0

[[walls]]
name = "facade"
base = [[60.0, 10.0], [60.0, 50.0]]
height_range = [0.0, 20.0]
facing = [-1.0, 0.0]

[[surfaces]]
label = "lot"
corners = [[0.0, 10.0, 0.0], [20.0, 10.0, 0.0], [0.0, 50.0, 0.0]]

[[surfaces]]
label = "facade"
corners = [[60.0, 12.0, 2.0], [60.0, 48.0, 2.0], [60.0, 12.0, 18.0]]

[noise]
per_point_sigma = 0.01
seed = 5
offsets = [{ pass_id = 2, offset = [0.0, 0.0, 0.02] }]
"#;

pub fn run_example() -> lidarqc::Result<()> {
    let config = parse_config(SCENE, Path::new("inline.toml"))?;
    let sim = simulate_config(&config, None)?;
    let params = MetricsParams {
        patch_area: 4.0,
        patches: 300,
        seed: 1,
        band: 0.5,
        bin: 1.0,
    };
    let report = compute_metrics(&sim.cloud, &config, params, String::new())?;
    let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    for (name, b) in [("horizontal", &report.horizontal), ("vertical", &report.vertical)] {
        println!(
            "{name:>10}: anpd {} avg_passes {} rmse {} C {} W {}",
            f(b.anpd),
            f(b.avg_passes),
            f(b.rmse),
            f(b.c),
            f(b.w)
        );
    }
    println!("eta_hv {}", f(report.eta_hv));
    for p in &report.per_pass_offsets {
        println!("pass {}: mean |offset| {:.4} m over {} patches", p.pass_id, p.mean_abs_offset, p.patch_support);
    }
    Ok(())
}

fn main() -> lidarqc::Result<()> {
    run_example()
}
