//! JSON configuration parsing with a strict schema: unknown keys are rejected
//! and every error is labeled with the JSON path of the offending key.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::raster::ReclassTable;

/// Build a config error at a JSON path.
pub(crate) fn location(path: &str, msg: &str) -> Error {
    Error::Config {
        location: path.to_string(),
        msg: msg.to_string(),
    }
}

fn deserialize_strict<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let loc = if path.is_empty() || path == "." {
            "<root>".to_string()
        } else {
            format!(".{path}")
        };
        Error::Config {
            location: loc,
            msg: e.inner().to_string(),
        }
    })
}

/// Parse and validate a pipeline config. Relative layer paths and the
/// optional output directory are resolved against the config file's parent
/// directory, so a config travels with its data.
pub fn parse_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

/// Parse config text, resolving relative paths against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = deserialize_strict(text)?;
    for layer in &mut cfg.layers {
        if layer.path.is_relative() {
            layer.path = base.join(&layer.path);
        }
    }
    if let Some(dir) = &cfg.output_dir {
        if dir.is_relative() {
            cfg.output_dir = Some(base.join(dir));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parse a standalone reclass table document (for the `reclassify` command).
pub fn parse_reclass_table(path: impl AsRef<Path>) -> Result<ReclassTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    let table: ReclassTable = deserialize_strict(&text)?;
    table.validate()?;
    Ok(table)
}

/// Default reclass tables for the six synthetic criterion layers. Breakpoints
/// are in map units (meters) and degrees; land-cover codes follow the
/// generator's class bands. All of them are editable config, not fixed logic.
pub fn default_reclass_tables() -> BTreeMap<&'static str, ReclassTable> {
    let mut tables = BTreeMap::new();
    tables.insert(
        "landcover",
        // developed-open 21, forest 41, agriculture 82, barren 31,
        // wetland 90 and open water 11 are unsuitable
        ReclassTable::categorical([
            (21, 9.0),
            (41, 8.0),
            (82, 6.0),
            (31, 4.0),
            (90, 0.0),
            (11, 0.0),
        ]),
    );
    tables.insert(
        "slope",
        ReclassTable::continuous([
            (2.0, 10.0),
            (5.0, 8.0),
            (10.0, 5.0),
            (15.0, 2.0),
            (f64::INFINITY, 0.0),
        ]),
    );
    let transport = ReclassTable::continuous([
        (500.0, 10.0),
        (1000.0, 8.0),
        (2000.0, 5.0),
        (5000.0, 2.0),
        (f64::INFINITY, 0.0),
    ]);
    tables.insert("road_dist", transport.clone());
    tables.insert("rail_dist", transport);
    tables.insert(
        "urban_dist",
        ReclassTable::continuous([
            (5000.0, 10.0),
            (15000.0, 7.0),
            (30000.0, 4.0),
            (f64::INFINITY, 1.0),
        ]),
    );
    tables.insert(
        "supply_demand",
        ReclassTable::continuous([
            (0.5, 10.0),
            (0.8, 6.0),
            (1.0, 3.0),
            (f64::INFINITY, 0.0),
        ]),
    );
    tables
}
