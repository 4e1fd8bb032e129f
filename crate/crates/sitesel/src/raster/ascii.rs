//! ESRI ASCII grid reader and writer.
//!
//! Format: six header lines in order (`ncols`, `nrows`, `xllcorner`,
//! `yllcorner`, `cellsize`, `NODATA_value`), then `nrows` lines of `ncols`
//! space-separated values, row 0 at the top. The reader tolerates arbitrary
//! whitespace and case-insensitive header keys; the writer emits exactly one
//! space between values, `\n` line endings, and fixed 6-decimal cell values.
//! Header reals are written with shortest round-trip formatting so a
//! write/read cycle reproduces them exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fs_util::write_atomic;
use crate::raster::RasterGrid;

const HEADER_KEYS: [&str; 6] = [
    "ncols",
    "nrows",
    "xllcorner",
    "yllcorner",
    "cellsize",
    "nodata_value",
];

pub fn read_ascii_grid(path: impl AsRef<Path>) -> Result<RasterGrid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_ascii_grid(&text, &path.display().to_string())
}

/// Parse grid text; `origin` labels error messages (usually the file path).
pub fn parse_ascii_grid(text: &str, origin: &str) -> Result<RasterGrid> {
    let err = |line: usize, msg: String| Error::AsciiGrid {
        origin: origin.to_string(),
        line,
        msg,
    };

    let mut lines = text.lines().enumerate();
    let mut header = [0.0f64; 6];
    for (key_idx, key) in HEADER_KEYS.iter().enumerate() {
        let (line_idx, line) = lines
            .next()
            .ok_or_else(|| err(key_idx + 1, format!("malformed header: missing `{key}` line")))?;
        let mut tokens = line.split_whitespace();
        let found = tokens
            .next()
            .ok_or_else(|| err(line_idx + 1, format!("malformed header: expected `{key}`, got blank line")))?;
        if !found.eq_ignore_ascii_case(key) && !(key_idx == 5 && found.eq_ignore_ascii_case("nodata")) {
            return Err(err(
                line_idx + 1,
                format!("malformed header: expected `{key}`, found `{found}`"),
            ));
        }
        let raw = tokens
            .next()
            .ok_or_else(|| err(line_idx + 1, format!("malformed header: `{key}` has no value")))?;
        if tokens.next().is_some() {
            return Err(err(line_idx + 1, format!("malformed header: trailing tokens after `{key}`")));
        }
        header[key_idx] = raw
            .parse::<f64>()
            .map_err(|_| err(line_idx + 1, format!("unparseable number `{raw}`")))?;
        if key_idx < 2
            && (header[key_idx].fract() != 0.0
                || header[key_idx] < 1.0
                || header[key_idx] > crate::raster::MAX_CELLS as f64)
        {
            return Err(err(
                line_idx + 1,
                format!("malformed header: `{key}` must be a positive integer, got `{raw}`"),
            ));
        }
    }

    let ncols = header[0] as usize;
    let nrows = header[1] as usize;
    let expected = ncols.checked_mul(nrows).filter(|&n| n <= crate::raster::MAX_CELLS).ok_or_else(
        || err(2, format!("malformed header: grid of {ncols}x{nrows} cells is too large")),
    )?;
    // cap the pre-allocation so a hostile header cannot reserve gigabytes
    let mut values = Vec::with_capacity(expected.min(1 << 22));
    let mut last_line = 6usize;
    for (line_idx, line) in lines {
        last_line = line_idx + 1;
        for raw in line.split_whitespace() {
            let v = raw
                .parse::<f64>()
                .map_err(|_| err(last_line, format!("unparseable number `{raw}`")))?;
            if v.is_nan() {
                return Err(err(last_line, "NaN cell value".to_string()));
            }
            values.push(v);
            if values.len() > expected {
                return Err(err(
                    last_line,
                    format!("cell count mismatch: header says {expected} values, body has more"),
                ));
            }
        }
    }
    if values.len() != expected {
        return Err(err(
            last_line,
            format!(
                "cell count mismatch: header says {expected} values, body has {}",
                values.len()
            ),
        ));
    }

    RasterGrid::new(ncols, nrows, header[2], header[3], header[4], header[5], values)
}

pub fn write_ascii_grid(grid: &RasterGrid, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_ascii_grid(grid).as_bytes())
}

/// Serialize a grid to ESRI ASCII text, bit-reproducibly.
pub fn format_ascii_grid(grid: &RasterGrid) -> String {
    let mut out = String::with_capacity(grid.len() * 10 + 128);
    let _ = writeln!(out, "ncols {}", grid.ncols());
    let _ = writeln!(out, "nrows {}", grid.nrows());
    let _ = writeln!(out, "xllcorner {}", grid.xllcorner());
    let _ = writeln!(out, "yllcorner {}", grid.yllcorner());
    let _ = writeln!(out, "cellsize {}", grid.cellsize());
    let _ = writeln!(out, "NODATA_value {}", grid.nodata_value());
    for row in 0..grid.nrows() {
        for col in 0..grid.ncols() {
            if col > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.6}", grid.value(row, col));
        }
        out.push('\n');
    }
    out
}
