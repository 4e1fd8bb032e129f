//! Training data construction: point sampling from labeled raster stacks,
//! stratified train/test splits, the zone-level supply-demand composite, and
//! a seeded synthetic landscape generator for desk-scale studies.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fs_util::write_atomic;
use crate::raster::{check_aligned, RasterGrid};
use crate::rng::{derive_seed, from_seed, SeededRng};
use crate::terrain::{rasterize_polyline, slope_degrees, Segment};

/// A sampled training set: one row per cell, one feature column per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub feature_names: Vec<String>,
    /// Row-major feature matrix; `x[i][k]` is layer `k`'s value at sample `i`.
    pub x: Vec<Vec<f64>>,
    /// Binary labels.
    pub y: Vec<u8>,
    /// Provenance `(row, col)` of each sample.
    pub cells: Vec<(usize, usize)>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `(class 0 count, class 1 count)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.y.iter().filter(|&&l| l == 1).count();
        (self.y.len() - ones, ones)
    }

    fn take(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            feature_names: self.feature_names.clone(),
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            cells: indices.iter().map(|&i| self.cells[i]).collect(),
        }
    }
}

/// Sample `n` cells without replacement from the cells that carry data in
/// every layer and in the label grid. With `stratified` set, `ceil(n/2)` rows
/// come from class 1 and `floor(n/2)` from class 0. Identical seeds yield
/// identical sample sets.
pub fn sample_points(
    layers: &[RasterGrid],
    feature_names: &[String],
    labels: &RasterGrid,
    n: usize,
    stratified: bool,
    seed: u64,
) -> Result<SampleSet> {
    if layers.is_empty() {
        return Err(Error::Sampling("no layers to sample from".into()));
    }
    if layers.len() != feature_names.len() {
        return Err(Error::Sampling(format!(
            "{} layers but {} feature names",
            layers.len(),
            feature_names.len()
        )));
    }
    if n == 0 {
        return Err(Error::Sampling("sample size must be positive".into()));
    }
    check_aligned(layers.iter().chain(std::iter::once(labels)))?;

    let mut valid: Vec<(usize, usize, u8)> = Vec::new();
    for row in 0..labels.nrows() {
        'cells: for col in 0..labels.ncols() {
            let lv = labels.value(row, col);
            if labels.is_nodata(lv) {
                continue;
            }
            let label = if lv == 0.0 {
                0u8
            } else if lv == 1.0 {
                1u8
            } else {
                return Err(Error::Sampling(format!(
                    "label grid must be binary, found {lv} at ({row}, {col})"
                )));
            };
            for layer in layers {
                if layer.is_nodata_at(row, col) {
                    continue 'cells;
                }
            }
            valid.push((row, col, label));
        }
    }

    let mut rng = from_seed(seed);
    let chosen: Vec<(usize, usize, u8)> = if stratified {
        let ones: Vec<_> = valid.iter().copied().filter(|&(_, _, l)| l == 1).collect();
        let zeros: Vec<_> = valid.iter().copied().filter(|&(_, _, l)| l == 0).collect();
        if ones.is_empty() {
            return Err(Error::Sampling("class 1 empty".into()));
        }
        if zeros.is_empty() {
            return Err(Error::Sampling("class 0 empty".into()));
        }
        let want_one = n.div_ceil(2);
        let want_zero = n / 2;
        if ones.len() < want_one || zeros.len() < want_zero {
            return Err(Error::Sampling(format!(
                "not enough cells for a stratified sample of {n}: class 1 has {} (need {want_one}), class 0 has {} (need {want_zero})",
                ones.len(),
                zeros.len()
            )));
        }
        let pick = |pool: Vec<(usize, usize, u8)>, k: usize, rng: &mut SeededRng| {
            let mut pool = pool;
            pool.shuffle(rng);
            pool.truncate(k);
            pool
        };
        let mut rows = pick(ones, want_one, &mut rng);
        rows.extend(pick(zeros, want_zero, &mut rng));
        rows
    } else {
        if valid.len() < n {
            return Err(Error::Sampling(format!(
                "requested {n} samples but only {} valid cells exist",
                valid.len()
            )));
        }
        valid.shuffle(&mut rng);
        valid.truncate(n);
        valid
    };

    let mut x = Vec::with_capacity(chosen.len());
    let mut y = Vec::with_capacity(chosen.len());
    let mut cells = Vec::with_capacity(chosen.len());
    for (row, col, label) in chosen {
        x.push(layers.iter().map(|l| l.value(row, col)).collect());
        y.push(label);
        cells.push((row, col));
    }
    Ok(SampleSet {
        feature_names: feature_names.to_vec(),
        x,
        y,
        cells,
    })
}

/// Split into disjoint train and test parts, preserving class proportions
/// within one sample per class. Deterministic under `seed`.
pub fn train_test_split(s: &SampleSet, test_fraction: f64, seed: u64) -> Result<(SampleSet, SampleSet)> {
    if !test_fraction.is_finite() || test_fraction <= 0.0 || test_fraction >= 1.0 {
        return Err(Error::Sampling(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = from_seed(seed);
    let mut test_idx: Vec<usize> = Vec::new();
    let mut train_idx: Vec<usize> = Vec::new();
    for class in [0u8, 1u8] {
        let mut members: Vec<usize> = (0..s.len()).filter(|&i| s.y[i] == class).collect();
        members.shuffle(&mut rng);
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        test_idx.extend(members.iter().take(n_test));
        train_idx.extend(members.iter().skip(n_test));
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::Sampling(format!(
            "degenerate split: {} train and {} test samples",
            train_idx.len(),
            test_idx.len()
        )));
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((s.take(&train_idx), s.take(&test_idx)))
}

/// Zone-level supply-demand composite: each cell takes
/// `capacity[zone] / availability[zone]` for its zone id. NODATA propagates.
pub fn supply_demand_layer(
    zone: &RasterGrid,
    capacity: &BTreeMap<i64, f64>,
    availability: &BTreeMap<i64, f64>,
) -> Result<RasterGrid> {
    let mut out = vec![zone.nodata_value(); zone.len()];
    for (row, col, v) in zone.data_cells() {
        let code = v.round();
        if (v - code).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "zone raster holds non-integer id {v} at ({row}, {col})"
            )));
        }
        let id = code as i64;
        let cap = *capacity
            .get(&id)
            .ok_or_else(|| Error::InvalidInput(format!("zone {id} missing from capacity table")))?;
        let avail = *availability
            .get(&id)
            .ok_or_else(|| Error::InvalidInput(format!("zone {id} missing from availability table")))?;
        if avail.is_nan() || avail <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "availability for zone {id} must be positive, got {avail}"
            )));
        }
        out[zone.idx(row, col)] = cap / avail;
    }
    zone.with_values(out)
}

/// Read a two-column `zone_id,value` CSV (header row required).
pub fn read_zone_table(path: impl AsRef<Path>) -> Result<BTreeMap<i64, f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let origin = path.display().to_string();
    let mut table = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue; // header
        }
        let mut fields = line.split(',');
        let (id_raw, value_raw) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a.trim(), b.trim()),
            _ => {
                return Err(Error::AsciiGrid {
                    origin,
                    line: i + 1,
                    msg: "expected two comma-separated fields".into(),
                })
            }
        };
        let id: i64 = id_raw.parse().map_err(|_| Error::AsciiGrid {
            origin: origin.clone(),
            line: i + 1,
            msg: format!("unparseable zone id `{id_raw}`"),
        })?;
        let value: f64 = value_raw.parse().map_err(|_| Error::AsciiGrid {
            origin: origin.clone(),
            line: i + 1,
            msg: format!("unparseable number `{value_raw}`"),
        })?;
        table.insert(id, value);
    }
    Ok(table)
}

/// Write a zone table as `zone_id,value` CSV, rows sorted by id.
pub fn write_zone_table(table: &BTreeMap<i64, f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("zone_id,value\n");
    for (id, value) in table {
        let _ = writeln!(out, "{id},{value}");
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Raw layers of a generated landscape, all on one grid.
#[derive(Debug, Clone)]
pub struct SyntheticLandscape {
    pub dem: RasterGrid,
    pub landcover: RasterGrid,
    pub road_mask: RasterGrid,
    pub rail_mask: RasterGrid,
    pub urban_mask: RasterGrid,
    pub zone: RasterGrid,
    pub capacity: BTreeMap<i64, f64>,
    pub availability: BTreeMap<i64, f64>,
}

/// Land-cover class codes emitted by the generator, one per terrain band from
/// wettest to most developed. The shipped reclass tables key off these.
pub const LANDCOVER_CODES: [i64; 6] = [11, 90, 31, 82, 41, 21];

pub const NODATA: f64 = -9999.0;

const MIN_SYNTH_SIZE: usize = 32;

/// Generate a deterministic synthetic landscape.
///
/// The DEM is a sum of six Gaussian bumps sized so the slope layer spans flat
/// ground through better than 15 degrees; land cover bands six classes over a
/// second smooth field; road and rail masks come from random polylines, the
/// urban mask from random discs; zones are a 3x3 block partition with
/// capacity/availability tables whose ratios span [0, 1.5]. If a draw misses
/// the slope span or produces an empty mask, the generator deterministically
/// retries with the next derived seed.
pub fn gen_synthetic_landscape(
    nrows: usize,
    ncols: usize,
    cellsize: f64,
    seed: u64,
) -> Result<SyntheticLandscape> {
    if nrows < MIN_SYNTH_SIZE || ncols < MIN_SYNTH_SIZE {
        return Err(Error::InvalidInput(format!(
            "synthetic landscape needs at least {MIN_SYNTH_SIZE}x{MIN_SYNTH_SIZE} cells, got {nrows}x{ncols}"
        )));
    }
    if cellsize.is_nan() || cellsize <= 0.0 {
        return Err(Error::InvalidInput(format!("cellsize must be positive, got {cellsize}")));
    }

    for attempt in 0..32u64 {
        let candidate = generate_once(nrows, ncols, cellsize, derive_seed(seed, attempt))?;
        if landscape_acceptable(&candidate)? {
            return Ok(candidate);
        }
    }
    Err(Error::InvalidInput(
        "synthetic generator failed to meet the slope/mask checks in 32 attempts".into(),
    ))
}

fn landscape_acceptable(l: &SyntheticLandscape) -> Result<bool> {
    let slope = slope_degrees(&l.dem)?;
    let mut min_s = f64::INFINITY;
    let mut max_s = f64::NEG_INFINITY;
    for (_, _, v) in slope.data_cells() {
        min_s = min_s.min(v);
        max_s = max_s.max(v);
    }
    let has_source = |m: &RasterGrid| m.values().contains(&1.0);
    Ok(min_s < 2.0
        && max_s > 15.0
        && has_source(&l.road_mask)
        && has_source(&l.rail_mask)
        && has_source(&l.urban_mask))
}

fn generate_once(nrows: usize, ncols: usize, cellsize: f64, seed: u64) -> Result<SyntheticLandscape> {
    let mut rng = from_seed(seed);
    let template = RasterGrid::filled(ncols, nrows, 0.0, 0.0, cellsize, NODATA, 0.0)?;
    let width = ncols as f64 * cellsize;
    let height = nrows as f64 * cellsize;
    let extent = width.min(height);

    // terrain: six radial bumps; amplitude tied to radius so peak gradient is
    // roughly amp/(sigma*sqrt(e)), putting slopes well past 15 degrees
    let dem = {
        let mut bumps = Vec::with_capacity(6);
        for _ in 0..6 {
            let cx = rng.gen_range(0.0..width);
            let cy = rng.gen_range(0.0..height);
            let sigma = rng.gen_range(0.06..0.20) * extent;
            let amp = rng.gen_range(0.4..1.2) * sigma * if rng.gen_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
            bumps.push((cx, cy, sigma, amp));
        }
        let values = field_from_bumps(&template, &bumps);
        template.with_values(values)?
    };

    // land cover: rank-bucket a second smooth field into six equal bands
    let landcover = {
        let mut bumps = Vec::with_capacity(10);
        for _ in 0..10 {
            let cx = rng.gen_range(0.0..width);
            let cy = rng.gen_range(0.0..height);
            let sigma = rng.gen_range(0.08..0.30) * extent;
            let amp = if rng.gen_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
            bumps.push((cx, cy, sigma, amp));
        }
        let field = field_from_bumps(&template, &bumps);
        let mut order: Vec<usize> = (0..field.len()).collect();
        order.sort_by(|&a, &b| field[a].total_cmp(&field[b]).then(a.cmp(&b)));
        let mut values = vec![0.0f64; field.len()];
        let n = field.len();
        for (rank, &cell) in order.iter().enumerate() {
            let band = (rank * LANDCOVER_CODES.len() / n).min(LANDCOVER_CODES.len() - 1);
            values[cell] = LANDCOVER_CODES[band] as f64;
        }
        template.with_values(values)?
    };

    let road_mask = rasterize_polyline(&random_polylines(&mut rng, width, height), &template);
    let rail_mask = rasterize_polyline(&random_polylines(&mut rng, width, height), &template);

    // urban: one to three discs
    let urban_mask = {
        let n_discs = rng.gen_range(1..=3);
        let mut values = vec![0.0f64; template.len()];
        for _ in 0..n_discs {
            let cx = rng.gen_range(0.0..width);
            let cy = rng.gen_range(0.0..height);
            let radius = (rng.gen_range(0.04..0.12) * extent).max(1.5 * cellsize);
            for row in 0..nrows {
                for col in 0..ncols {
                    let dx = template.cell_x(col) - cx;
                    let dy = template.cell_y(row) - cy;
                    if dx * dx + dy * dy <= radius * radius {
                        values[template.idx(row, col)] = 1.0;
                    }
                }
            }
        }
        template.with_values(values)?
    };

    // zones: 3x3 county-like blocks, ids 1..=9
    let zone = {
        let block_h = nrows.div_ceil(3);
        let block_w = ncols.div_ceil(3);
        let mut values = vec![0.0f64; template.len()];
        for row in 0..nrows {
            for col in 0..ncols {
                let br = (row / block_h).min(2);
                let bc = (col / block_w).min(2);
                values[template.idx(row, col)] = (br * 3 + bc + 1) as f64;
            }
        }
        template.with_values(values)?
    };

    // ratios pinned to span [0, 1.5]; the rest uniform
    let mut ratios = vec![0.0, 1.5];
    for _ in 0..7 {
        ratios.push(rng.gen_range(0.0..1.5));
    }
    ratios.shuffle(&mut rng);
    let mut capacity = BTreeMap::new();
    let mut availability = BTreeMap::new();
    for (i, ratio) in ratios.iter().enumerate() {
        let avail = rng.gen_range(50.0..200.0);
        availability.insert((i + 1) as i64, avail);
        capacity.insert((i + 1) as i64, ratio * avail);
    }

    Ok(SyntheticLandscape {
        dem,
        landcover,
        road_mask,
        rail_mask,
        urban_mask,
        zone,
        capacity,
        availability,
    })
}

fn field_from_bumps(template: &RasterGrid, bumps: &[(f64, f64, f64, f64)]) -> Vec<f64> {
    let mut values = vec![0.0f64; template.len()];
    for row in 0..template.nrows() {
        for col in 0..template.ncols() {
            let (x, y) = (template.cell_x(col), template.cell_y(row));
            let mut z = 0.0;
            for &(cx, cy, sigma, amp) in bumps {
                let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                z += amp * (-d2 / (2.0 * sigma * sigma)).exp();
            }
            values[template.idx(row, col)] = z;
        }
    }
    values
}

fn random_polylines(rng: &mut SeededRng, width: f64, height: f64) -> Vec<Segment> {
    let n_lines = rng.gen_range(2..=5);
    let mut segments = Vec::new();
    for _ in 0..n_lines {
        let n_points = rng.gen_range(3..=5);
        let mut prev = (rng.gen_range(0.0..width), rng.gen_range(0.0..height));
        for _ in 1..n_points {
            let next = (rng.gen_range(0.0..width), rng.gen_range(0.0..height));
            segments.push((prev, next));
            prev = next;
        }
    }
    segments
}
