use std::path::Path;

use nanorbit::config::OutputFormat;
use nanorbit::pipeline::CacheUse;
use nanorbit::{run_pipeline, Config, Pipeline, PipelineError, Request, Stage};

fn coarse() -> Config {
    let mut c = Config::default();
    c.numerics.grid_points = 4000;
    c.numerics.m_scan_min = 440;
    c.numerics.m_scan_max = 516;
    c
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn probe_without_dispersion_is_a_dependency_error() {
    let dir = tempfile::tempdir().unwrap();
    for stage in [Stage::Probe, Stage::Evolve] {
        match run_pipeline(&coarse(), dir.path(), &[stage]) {
            Err(e @ PipelineError::StageDependency { .. }) => {
                assert_eq!(e.exit_code(), 2);
                assert!(e.to_string().contains("dispersion"));
            }
            other => panic!("{other:?}"),
        }
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn cached_dispersion_satisfies_later_stages() {
    let dir = tempfile::tempdir().unwrap();
    let config = coarse();
    let first = Pipeline::new(config.clone(), dir.path()).run(&Request::new([Stage::Dispersion])).unwrap();
    assert_eq!(first.timings.dispersion_cache, Some(CacheUse::Stored));
    assert!(dir.path().join("cache").join(format!("dispersion-{}.bin", first.manifest.config_hash)).exists());

    let probe = Pipeline::new(config.clone(), dir.path()).run(&Request::new([Stage::Probe])).unwrap();
    assert_eq!(probe.timings.dispersion_cache, Some(CacheUse::Hit));
    assert_eq!(probe.table, first.table);
    let summary: serde_json::Value = serde_json::from_slice(&read(dir.path(), "probe_summary.json")).unwrap();
    assert!(summary["analysis"]["t_osc_s"].as_f64().unwrap() > 0.0);

    // Packet settings are not part of the cache key.
    let mut shifted = config.clone();
    shifted.packet.m0 = 470;
    shifted.packet.m_min = 448;
    shifted.packet.m_max = 512;
    Pipeline::new(shifted, dir.path()).run(&Request::new([Stage::Evolve])).unwrap();

    let mut other = config;
    other.fiber.trap_power_w = 21e-3;
    assert!(matches!(
        run_pipeline(&other, dir.path(), &[Stage::Probe]),
        Err(PipelineError::StageDependency { .. })
    ));
}

#[test]
fn default_config_produces_six_timescales() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&Config::default(), dir.path(), &[Stage::Dispersion]).unwrap();
    assert_eq!(manifest.stages, vec![Stage::Dispersion]);
    let summary: serde_json::Value = serde_json::from_slice(&read(dir.path(), "dispersion_summary.json")).unwrap();
    let ts = &summary["timescales"];
    for key in ["t_rot_s", "t_coll_s", "t_rev_s", "t_osc_sca_s", "t_fall_sca_s", "t_resume_sca_s"] {
        assert!(ts[key].as_f64().unwrap() > 0.0, "{key}");
    }
    let t_rev_us = ts["t_rev_us"].as_f64().unwrap();
    assert!((t_rev_us - 794.0).abs() / 794.0 < 0.3);
    let csv = String::from_utf8(read(dir.path(), "dispersion.csv")).unwrap();
    assert!(csv.starts_with("m,E_J,E_over_h_Hz,bound\n"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = coarse();
    let ma = run_pipeline(&config, a.path(), &Stage::ALL).unwrap();
    let mb = Pipeline::new(config, b.path()).with_threads(Some(2)).run(&Request::all()).unwrap().manifest;
    assert_eq!(ma, mb);
    let mut files: Vec<&String> = ma.outputs.values().flatten().collect();
    let extra = ["manifest.json".to_string(), "config.txt".to_string()];
    files.extend(&extra);
    for f in files {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let cache = format!("cache/dispersion-{}.bin", ma.config_hash);
    assert_eq!(read(a.path(), &cache), read(b.path(), &cache));
}

#[test]
fn csv_outputs_carry_unit_headers() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&coarse(), dir.path(), &Stage::ALL).unwrap();
    let units = ["_m", "_rad", "_J", "_Hz", "_s", "_us", "_per_m2", "_per_rad", "_V2_per_m2", "_rel", "bound", "visibility"];
    for f in manifest.outputs.values().flatten().filter(|f| f.ends_with(".csv")) {
        let text = String::from_utf8(read(dir.path(), f)).unwrap();
        let header = text.lines().next().unwrap();
        for col in header.split(',') {
            assert!(col == "m" || units.iter().any(|u| col.ends_with(u)), "{f}: column `{col}`");
        }
    }
}

#[test]
fn json_format_and_explicit_times() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = coarse();
    config.output.format = OutputFormat::Json;
    config.evolve.times_s = vec![0.0, 1e-5];
    let manifest = run_pipeline(&config, dir.path(), &[Stage::Dispersion, Stage::Evolve]).unwrap();
    let evolve = &manifest.outputs[&Stage::Evolve];
    assert_eq!(evolve, &["density_00.json", "density_01.json", "marginals.json", "evolve_summary.json"]);
    let marginals: serde_json::Value = serde_json::from_slice(&read(dir.path(), "marginals.json")).unwrap();
    assert_eq!(marginals["columns"].as_array().unwrap().len(), 3);
    let summary: serde_json::Value = serde_json::from_slice(&read(dir.path(), "evolve_summary.json")).unwrap();
    let snaps = summary["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), 2);
    assert_eq!(snaps[0]["peaks"], 1);
    assert!((snaps[1]["norm"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn config_file_round_trip_and_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    let mut config = coarse();
    config.probe.axis_angle_rad = 0.3;
    std::fs::write(&path, config.serialize()).unwrap();
    assert_eq!(Config::load(&path).unwrap(), config);

    std::fs::write(&path, "numerics.grid_points = 4000\nnumerics.tolerance = 1e-9\n").unwrap();
    match Config::load(&path) {
        Err(e @ PipelineError::Config { .. }) => {
            assert_eq!(e.exit_code(), 2);
            assert!(e.to_string().contains("numerics.tolerance"));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        Config::load(&dir.path().join("missing.conf")),
        Err(PipelineError::Io { .. })
    ));
}
