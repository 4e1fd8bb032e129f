//! Command-line surface for the site suitability engine.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Runtime failures go to
//! stderr with a stable `error:` prefix.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use sitesel::config::{default_reclass_tables, parse_config, parse_reclass_table};
use sitesel::dataset::{gen_synthetic_landscape, supply_demand_layer, write_zone_table};
use sitesel::learners::TrainedModel;
use sitesel::overlay::{extract_candidates, weighted_sum, WeightVector};
use sitesel::pipeline::{
    initial_weights, load_reclassified_layers, rank_candidates, run_lb_mcdm, weights_from_importance,
    write_ranking_csv, LayerSpec, PipelineConfig, SamplingConfig,
};
use sitesel::raster::{read_ascii_grid, write_ascii_grid};
use sitesel::render::{render_png, ColorRamp};
use sitesel::rng::derive_seed;
use sitesel::terrain::{distance_map, slope_degrees};
use sitesel::{Error, Result};

#[derive(Parser)]
#[command(name = "sitesel", version, about = "Raster-based site suitability engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic landscape plus derived criterion layers
    /// and a ready-to-run pipeline config.
    GenSynthetic {
        /// Grid size as ROWS COLS.
        #[arg(long, num_args = 2, value_names = ["ROWS", "COLS"])]
        size: Vec<usize>,
        /// Cell size in map units (meters).
        #[arg(long, default_value_t = 30.0)]
        cellsize: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reclassify a raster through a table onto the 0..10 scale.
    Reclassify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Slope in degrees from a DEM (Horn's method).
    Slope {
        #[arg(long)]
        dem: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact Euclidean distance to the nearest source cell of a 0/1 mask.
    Distance {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reclassify the configured layers and write their weighted sum
    /// (config `weights`, or equal weights when absent).
    Overlay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full learning-based weighting loop.
    RunPipeline {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the configured candidates with a saved model (weights taken from
    /// the model's feature importances).
    Rank {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a raster to PNG.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "viridis")]
        ramp: ColorRamp,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenSynthetic { size, cellsize, seed, out } => gen_synthetic(&size, cellsize, seed, &out),
        Command::Reclassify { input, table, out } => {
            let grid = read_ascii_grid(&input)?;
            let table = parse_reclass_table(&table)?;
            let scored = sitesel::raster::reclassify(&grid, &table)?;
            write_ascii_grid(&scored, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Slope { dem, out } => {
            let grid = read_ascii_grid(&dem)?;
            write_ascii_grid(&slope_degrees(&grid)?, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Distance { mask, out } => {
            let grid = read_ascii_grid(&mask)?;
            write_ascii_grid(&distance_map(&grid)?, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Overlay { config, out } => {
            let cfg = parse_config(&config)?;
            let (names, layers) = load_reclassified_layers(&cfg)?;
            let weights = match &cfg.weights {
                Some(w) => reorder_weights(w, &names)?.normalized(),
                None => initial_weights(&names)?,
            };
            let map = weighted_sum(&layers, &weights)?;
            write_ascii_grid(&map, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::RunPipeline { config, out } => {
            let cfg = parse_config(&config)?;
            let out_dir = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Error::InvalidInput(
                    "no output directory: pass --out or set `output_dir` in the config".into(),
                ))?;
            let outcome = run_lb_mcdm(&cfg, &out_dir)?;
            for record in &outcome.history {
                println!(
                    "iter {}: winner={} f1={:.4} accuracy={:.4} weight_delta={:.4}",
                    record.index,
                    record.winner,
                    record.winner_metrics.f1,
                    record.winner_metrics.accuracy,
                    record.weight_delta
                );
            }
            println!(
                "final: retrained {} f1={:.4}, ranked {} candidates",
                outcome.final_model.kind(),
                outcome.final_metrics.f1,
                outcome.ranking.len()
            );
            println!("wrote {}", out_dir.display());
            Ok(())
        }
        Command::Rank { model, config, out } => {
            let model = TrainedModel::load(&model)?;
            let cfg = parse_config(&config)?;
            let (names, layers) = load_reclassified_layers(&cfg)?;
            let weights = weights_from_importance(&model.importance, &names)?;
            let suitability = weighted_sum(&layers, &weights)?;
            let candidates = extract_candidates(&suitability, &cfg.candidates)?;
            let ranking = rank_candidates(&model, &layers, &suitability, &candidates)?;
            write_ranking_csv(&ranking, &out)?;
            println!("wrote {} ({} candidates)", out.display(), ranking.len());
            Ok(())
        }
        Command::Render { input, out, ramp } => {
            let grid = read_ascii_grid(&input)?;
            render_png(&grid, ramp, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

/// Match config weights to the layer order by name.
fn reorder_weights(weights: &WeightVector, names: &[String]) -> Result<WeightVector> {
    let pairs: Result<Vec<(String, f64)>> = names
        .iter()
        .map(|name| {
            weights
                .entries()
                .iter()
                .find(|e| &e.name == name)
                .map(|e| (name.clone(), e.weight))
                .ok_or_else(|| Error::InvalidInput(format!("weights missing layer `{name}`")))
        })
        .collect();
    WeightVector::new(pairs?)
}

fn gen_synthetic(size: &[usize], cellsize: f64, seed: u64, out: &Path) -> Result<()> {
    let [nrows, ncols] = size else {
        return Err(Error::InvalidInput("--size takes exactly ROWS COLS".into()));
    };
    let land = gen_synthetic_landscape(*nrows, *ncols, cellsize, seed)?;

    // raw layers
    write_ascii_grid(&land.dem, out.join("dem.asc"))?;
    write_ascii_grid(&land.landcover, out.join("landcover.asc"))?;
    write_ascii_grid(&land.road_mask, out.join("road_mask.asc"))?;
    write_ascii_grid(&land.rail_mask, out.join("rail_mask.asc"))?;
    write_ascii_grid(&land.urban_mask, out.join("urban_mask.asc"))?;
    write_ascii_grid(&land.zone, out.join("zone.asc"))?;
    write_zone_table(&land.capacity, out.join("capacity.csv"))?;
    write_zone_table(&land.availability, out.join("availability.csv"))?;

    // derived criterion layers the default config consumes
    write_ascii_grid(&slope_degrees(&land.dem)?, out.join("slope.asc"))?;
    write_ascii_grid(&distance_map(&land.road_mask)?, out.join("road_dist.asc"))?;
    write_ascii_grid(&distance_map(&land.rail_mask)?, out.join("rail_dist.asc"))?;
    write_ascii_grid(&distance_map(&land.urban_mask)?, out.join("urban_dist.asc"))?;
    let sdr = supply_demand_layer(&land.zone, &land.capacity, &land.availability)?;
    write_ascii_grid(&sdr, out.join("supply_demand.asc"))?;

    let cfg = synthetic_pipeline_config(seed);
    let mut bytes = serde_json::to_vec_pretty(&cfg)
        .map_err(|e| Error::InvalidInput(format!("config serialization failed: {e}")))?;
    bytes.push(b'\n');
    let cfg_path = out.join("config.json");
    let tmp = out.join("config.json.tmp");
    std::fs::write(&tmp, &bytes).map_err(|source| Error::Io { path: tmp.clone(), source })?;
    std::fs::rename(&tmp, &cfg_path).map_err(|source| Error::Io { path: cfg_path, source })?;

    println!("wrote {} (13 layers/tables + config.json)", out.display());
    Ok(())
}

/// The shipped default config for a generated landscape: quantile labels,
/// stratified sampling seeded from the landscape seed, two passes.
fn synthetic_pipeline_config(seed: u64) -> PipelineConfig {
    let tables = default_reclass_tables();
    let layer = |name: &str, file: &str| LayerSpec {
        name: name.to_string(),
        path: PathBuf::from(file),
        reclass: tables[name].clone(),
    };
    let mut training = sitesel::pipeline::TrainingSection::default();
    training.tree.seed = derive_seed(seed, 101);
    training.forest.seed = derive_seed(seed, 102);
    training.logistic.seed = derive_seed(seed, 103);
    PipelineConfig {
        layers: vec![
            layer("landcover", "landcover.asc"),
            layer("slope", "slope.asc"),
            layer("road_dist", "road_dist.asc"),
            layer("rail_dist", "rail_dist.asc"),
            layer("urban_dist", "urban_dist.asc"),
            layer("supply_demand", "supply_demand.asc"),
        ],
        labels: sitesel::pipeline::LabelRule::Quantile { q: 0.3 },
        sampling: SamplingConfig {
            seed,
            ..SamplingConfig::default()
        },
        training,
        iteration: Default::default(),
        candidates: sitesel::overlay::CandidateMode::AllCells,
        weights: None,
        output_dir: None,
    }
}
