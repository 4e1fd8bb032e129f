//! PNG rendering of raster grids, one pixel per cell.

use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, Rgba, RgbaImage};

use crate::error::{Error, Result};
use crate::fs_util::write_atomic;
use crate::raster::RasterGrid;

/// Color ramps. `Viridis` is min-max normalized over the grid's data cells;
/// `Suitability` uses fixed anchors on the 0..10 scale (0 red, 10 green) so
/// two maps rendered with it are directly comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ColorRamp {
    Viridis,
    Suitability,
}

impl std::str::FromStr for ColorRamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "viridis" => Ok(ColorRamp::Viridis),
            "suitability" => Ok(ColorRamp::Suitability),
            other => Err(Error::Render(format!(
                "unknown ramp `{other}` (expected viridis or suitability)"
            ))),
        }
    }
}

// viridis anchors sampled every 16 steps of the standard 256-entry table
const VIRIDIS: [[u8; 3]; 17] = [
    [68, 1, 84],
    [72, 26, 108],
    [71, 47, 125],
    [65, 68, 135],
    [59, 82, 139],
    [52, 96, 141],
    [44, 113, 142],
    [39, 127, 142],
    [33, 140, 141],
    [28, 155, 138],
    [37, 171, 130],
    [66, 187, 116],
    [101, 203, 94],
    [144, 215, 67],
    [192, 223, 37],
    [225, 231, 30],
    [253, 231, 37],
];

// red through pale yellow to green, anchored at scores 0, 2.5, 5, 7.5, 10
const SUITABILITY: [[u8; 3]; 5] = [
    [178, 24, 43],
    [239, 138, 98],
    [254, 224, 144],
    [145, 207, 96],
    [26, 152, 80],
];

fn lerp_table(table: &[[u8; 3]], t: f64) -> Rgba<u8> {
    let t = t.clamp(0.0, 1.0);
    let pos = t * (table.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(table.len() - 1);
    let frac = pos - lo as f64;
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * frac).round() as u8;
    Rgba([
        mix(table[lo][0], table[hi][0]),
        mix(table[lo][1], table[hi][1]),
        mix(table[lo][2], table[hi][2]),
        255,
    ])
}

const TRANSPARENT: Rgba<u8> = Rgba([0, 0, 0, 0]);

/// Render `grid` to a PNG at `out`. Image dimensions equal `(ncols, nrows)`;
/// NODATA cells are transparent. A constant grid maps to the ramp midpoint.
pub fn render_png(grid: &RasterGrid, ramp: ColorRamp, out: impl AsRef<Path>) -> Result<()> {
    let (min, max) = grid
        .data_cells()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, _, v)| {
            (lo.min(v), hi.max(v))
        });

    let mut img = RgbaImage::new(grid.ncols() as u32, grid.nrows() as u32);
    for row in 0..grid.nrows() {
        for col in 0..grid.ncols() {
            let v = grid.value(row, col);
            let pixel = if grid.is_nodata(v) {
                TRANSPARENT
            } else {
                let t = match ramp {
                    ColorRamp::Viridis => {
                        if max > min {
                            (v - min) / (max - min)
                        } else {
                            0.5
                        }
                    }
                    ColorRamp::Suitability => v / 10.0,
                };
                match ramp {
                    ColorRamp::Viridis => lerp_table(&VIRIDIS, t),
                    ColorRamp::Suitability => lerp_table(&SUITABILITY, t),
                }
            };
            img.put_pixel(col as u32, row as u32, pixel);
        }
    }

    let mut bytes = Vec::new();
    PngEncoder::new(&mut bytes)
        .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::Rgba8)
        .map_err(|e| Error::Render(e.to_string()))?;
    write_atomic(out.as_ref(), &bytes)
}
