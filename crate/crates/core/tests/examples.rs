macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(fit_plane, "fit_plane.rs");
example!(decompose_error, "decompose_error.rs");
example!(predict_wall_profile, "predict_wall_profile.rs");
example!(simulate_scene, "simulate_scene.rs");
example!(sample_density, "sample_density.rs");
example!(las_roundtrip, "las_roundtrip.rs");
example!(metrics_pipeline, "metrics_pipeline.rs");

#[test]
fn fit_plane_runs() {
    fit_plane::run_example().unwrap();
}

#[test]
fn decompose_error_runs() {
    decompose_error::run_example().unwrap();
}

#[test]
fn predict_wall_profile_runs() {
    predict_wall_profile::run_example().unwrap();
}

#[test]
fn simulate_scene_runs() {
    simulate_scene::run_example().unwrap();
}

#[test]
fn sample_density_runs() {
    sample_density::run_example().unwrap();
}

#[test]
fn las_roundtrip_runs() {
    las_roundtrip::run_example().unwrap();
}

#[test]
fn metrics_pipeline_runs() {
    metrics_pipeline::run_example().unwrap();
}
