//! End-to-end tests of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn sitesel(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sitesel"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitesel(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitesel(&["slope", "--dem", "x.asc", "--out", "y.asc", "--wat"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitesel(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("run-pipeline"));
}

#[test]
fn missing_config_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitesel(&["run-pipeline", "--config", "absent.json", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.starts_with("error: cannot read config"), "{msg}");
}

#[test]
fn missing_raster_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitesel(&["slope", "--dem", "absent.asc", "--out", "s.asc"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: "), "{}", stderr(&out));
}

#[test]
fn slope_then_render_on_constant_dem() {
    let dir = tempfile::tempdir().unwrap();
    let dem = "ncols 6\nnrows 5\nxllcorner 0\nyllcorner 0\ncellsize 30\nNODATA_value -9999\n\
               5 5 5 5 5 5\n5 5 5 5 5 5\n5 5 5 5 5 5\n5 5 5 5 5 5\n5 5 5 5 5 5\n";
    std::fs::write(dir.path().join("dem.asc"), dem).unwrap();
    let out = sitesel(&["slope", "--dem", "dem.asc", "--out", "slope.asc"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = sitesel(&["render", "--in", "slope.asc", "--out", "slope.png"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let img = image::open(dir.path().join("slope.png")).unwrap().into_rgba8();
    assert_eq!((img.width(), img.height()), (6, 5));
    // flat interior renders a single color; the NODATA border is transparent
    let interior = img.get_pixel(1, 1);
    assert_ne!(interior.0[3], 0);
    for x in 1..5 {
        for y in 1..4 {
            assert_eq!(img.get_pixel(x, y), interior);
        }
    }
    assert_eq!(img.get_pixel(0, 0).0[3], 0);
}

#[test]
fn gen_synthetic_then_pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitesel(
        &["gen-synthetic", "--size", "48", "48", "--seed", "11", "--out", "land"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for file in [
        "dem.asc",
        "landcover.asc",
        "road_mask.asc",
        "rail_mask.asc",
        "urban_mask.asc",
        "zone.asc",
        "capacity.csv",
        "availability.csv",
        "slope.asc",
        "road_dist.asc",
        "rail_dist.asc",
        "urban_dist.asc",
        "supply_demand.asc",
        "config.json",
    ] {
        assert!(dir.path().join("land").join(file).exists(), "{file}");
    }

    // shrink the sample and forest so the smoke run stays quick
    let cfg_path = dir.path().join("land/config.json");
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cfg_path).unwrap()).unwrap();
    cfg["sampling"]["n"] = 400.into();
    cfg["training"]["forest"]["n_trees"] = 20.into();
    std::fs::write(&cfg_path, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();

    let out = sitesel(
        &["run-pipeline", "--config", "land/config.json", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("iter 0: winner="), "{stdout}");
    assert!(dir.path().join("run/final/ranking.csv").exists());

    // rank with the saved model reproduces a CSV of the same shape
    let out = sitesel(
        &[
            "rank",
            "--model",
            "run/final/model.json",
            "--config",
            "land/config.json",
            "--out",
            "rerank.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("rerank.csv")).unwrap();
    assert!(csv.starts_with("rank,id,row,col,x,y,likelihood,suitability\n"));
    assert!(csv.lines().count() > 1);
}

#[test]
fn reclassify_and_overlay_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 30\nNODATA_value -9999\n\
                1 4\n12 30\n";
    std::fs::write(dir.path().join("raw.asc"), grid).unwrap();
    std::fs::write(
        dir.path().join("table.json"),
        r#"{"kind":"continuous","breakpoints":[{"upto":5,"score":10},{"upto":20,"score":5},{"upto":null,"score":0}]}"#,
    )
    .unwrap();
    let out = sitesel(
        &["reclassify", "--in", "raw.asc", "--table", "table.json", "--out", "scored.asc"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let scored = std::fs::read_to_string(dir.path().join("scored.asc")).unwrap();
    assert!(scored.ends_with("10.000000 10.000000\n5.000000 0.000000\n"), "{scored}");

    // overlay of the same layer twice with explicit uneven weights
    std::fs::write(dir.path().join("b.asc"), grid).unwrap();
    let config = r#"{
        "layers": [
            {"name": "a", "path": "scored.asc",
             "reclass": {"kind": "continuous", "breakpoints": [{"upto": null, "score": 10}]}},
            {"name": "b", "path": "scored.asc",
             "reclass": {"kind": "continuous", "breakpoints": [{"upto": 7, "score": 0}, {"upto": null, "score": 10}]}}
        ],
        "weights": [{"name": "a", "weight": 3.0}, {"name": "b", "weight": 1.0}]
    }"#;
    std::fs::write(dir.path().join("overlay.json"), config).unwrap();
    let out = sitesel(
        &["overlay", "--config", "overlay.json", "--out", "combined.asc"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let combined = std::fs::read_to_string(dir.path().join("combined.asc")).unwrap();
    // layer a scores 10 everywhere; layer b scores 10 only where scored > 7
    assert!(combined.ends_with("10.000000 10.000000\n7.500000 7.500000\n"), "{combined}");
}

#[test]
fn rerunning_a_command_overwrites_with_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitesel(
        &["gen-synthetic", "--size", "32", "32", "--seed", "3", "--out", "a"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let first = std::fs::read(dir.path().join("a/dem.asc")).unwrap();
    let out = sitesel(
        &["gen-synthetic", "--size", "32", "32", "--seed", "3", "--out", "a"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(std::fs::read(dir.path().join("a/dem.asc")).unwrap(), first);
}
