//! Helpers shared by the integration and acceptance suites.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sitesel::config::default_reclass_tables;
use sitesel::dataset::{gen_synthetic_landscape, supply_demand_layer};
use sitesel::overlay::CandidateMode;
use sitesel::pipeline::{LabelRule, LayerSpec, PipelineConfig, SamplingConfig, TrainingSection};
use sitesel::raster::{write_ascii_grid, RasterGrid};
use sitesel::terrain::{distance_map, slope_degrees};

/// Write a small generated landscape's criterion layers into `dir` and return
/// a quick-running pipeline config over them.
pub fn small_config(dir: &Path, seed: u64) -> PipelineConfig {
    let land = gen_synthetic_landscape(48, 48, 30.0, seed).unwrap();
    let sdr = supply_demand_layer(&land.zone, &land.capacity, &land.availability).unwrap();
    let derived: Vec<(&str, RasterGrid)> = vec![
        ("landcover", land.landcover.clone()),
        ("slope", slope_degrees(&land.dem).unwrap()),
        ("road_dist", distance_map(&land.road_mask).unwrap()),
        ("rail_dist", distance_map(&land.rail_mask).unwrap()),
        ("urban_dist", distance_map(&land.urban_mask).unwrap()),
        ("supply_demand", sdr),
    ];
    let tables = default_reclass_tables();
    let layers = derived
        .into_iter()
        .map(|(name, grid)| {
            let path = dir.join(format!("{name}.asc"));
            write_ascii_grid(&grid, &path).unwrap();
            LayerSpec {
                name: name.to_string(),
                path,
                reclass: tables[name].clone(),
            }
        })
        .collect();

    let mut training = TrainingSection::default();
    training.forest.n_trees = 20;
    PipelineConfig {
        layers,
        labels: LabelRule::Quantile { q: 0.3 },
        sampling: SamplingConfig {
            n: 400,
            stratified: true,
            seed,
            test_fraction: 0.2,
        },
        training,
        iteration: Default::default(),
        candidates: CandidateMode::TopFraction { fraction: 0.1 },
        weights: None,
        output_dir: None,
    }
}

/// Relative path to bytes, for byte-level comparison of output directories.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    fn walk(root: &Path, dir: &Path, files: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, files);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    walk(dir, dir, &mut files);
    files
}
