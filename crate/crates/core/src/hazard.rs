//! Shakemap rasters and per-location PGA sampling.
//!
//! Two ESRI ASCII grids are loaded per run: the natural log of mean PGA and
//! the log standard deviation. A location's PGA realization is
//! exp(μ_ln + σ_ln·z) with z standard normal; locations outside the raster
//! (or on NODATA cells) experience no shaking and get PGA 0.

use serde::Serialize;
use thiserror::Error;

use crate::grid::{LocationId, LocationRecord};
use crate::rng::SubstreamRng;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("raster header missing required key `{0}`")]
    MissingHeader(&'static str),
    #[error("raster header line {line}: {message}")]
    BadHeader { line: usize, message: String },
    #[error("raster cell at row {row}, col {col}: cannot parse `{token}`")]
    BadCell {
        row: usize,
        col: usize,
        token: String,
    },
    #[error("raster has {got} data values, expected {expected}")]
    CellCount { got: usize, expected: usize },
    #[error(
        "raster geometry mismatch between mean and sigma grids: \
         {mean_rows}x{mean_cols} vs {sigma_rows}x{sigma_cols}"
    )]
    GeometryMismatch {
        mean_rows: usize,
        mean_cols: usize,
        sigma_rows: usize,
        sigma_cols: usize,
    },
    #[error("raster origin/cellsize mismatch between mean and sigma grids")]
    OriginMismatch,
    #[error("sigma grid has negative value {value} at row {row}, col {col}")]
    NegativeSigma { row: usize, col: usize, value: f64 },
    #[error("io error reading raster: {0}")]
    Io(#[from] std::io::Error),
}

/// One parsed ESRI ASCII grid. Row 0 is the northernmost row, as stored in
/// the file; `xll`/`yll` name the lower-left cell corner.
#[derive(Debug, Clone)]
pub struct AsciiGrid {
    pub ncols: usize,
    pub nrows: usize,
    pub xll: f64,
    pub yll: f64,
    pub cell_size: f64,
    pub nodata: Option<f64>,
    values: Vec<f64>,
}

impl AsciiGrid {
    pub fn parse(source: &str) -> Result<Self, RasterError> {
        let mut ncols = None;
        let mut nrows = None;
        let mut xll = None;
        let mut yll = None;
        let mut cell_size = None;
        let mut nodata = None;
        let mut xll_is_center = false;
        let mut yll_is_center = false;

        let mut lines = source.lines().enumerate().peekable();
        while let Some(&(line_no, line)) = lines.peek() {
            let mut parts = line.split_whitespace();
            let Some(key) = parts.next() else {
                lines.next();
                continue;
            };
            let key_lower = key.to_ascii_lowercase();
            let is_header = matches!(
                key_lower.as_str(),
                "ncols"
                    | "nrows"
                    | "xllcorner"
                    | "yllcorner"
                    | "xllcenter"
                    | "yllcenter"
                    | "cellsize"
                    | "nodata_value"
            );
            if !is_header {
                break;
            }
            let value = parts.next().ok_or_else(|| RasterError::BadHeader {
                line: line_no + 1,
                message: format!("header `{key}` has no value"),
            })?;
            let parsed: f64 = value.parse().map_err(|_| RasterError::BadHeader {
                line: line_no + 1,
                message: format!("header `{key}` value `{value}` is not numeric"),
            })?;
            match key_lower.as_str() {
                "ncols" => ncols = Some(parsed as usize),
                "nrows" => nrows = Some(parsed as usize),
                "xllcorner" => xll = Some(parsed),
                "xllcenter" => {
                    xll = Some(parsed);
                    xll_is_center = true;
                }
                "yllcorner" => yll = Some(parsed),
                "yllcenter" => {
                    yll = Some(parsed);
                    yll_is_center = true;
                }
                "cellsize" => cell_size = Some(parsed),
                "nodata_value" => nodata = Some(parsed),
                _ => unreachable!(),
            }
            lines.next();
        }

        let ncols = ncols.ok_or(RasterError::MissingHeader("ncols"))?;
        let nrows = nrows.ok_or(RasterError::MissingHeader("nrows"))?;
        let mut xll = xll.ok_or(RasterError::MissingHeader("xllcorner"))?;
        let mut yll = yll.ok_or(RasterError::MissingHeader("yllcorner"))?;
        let cell_size = cell_size.ok_or(RasterError::MissingHeader("cellsize"))?;
        if xll_is_center {
            xll -= cell_size / 2.0;
        }
        if yll_is_center {
            yll -= cell_size / 2.0;
        }

        let mut values = Vec::with_capacity(ncols * nrows);
        for (_, line) in lines {
            for token in line.split_whitespace() {
                let idx = values.len();
                let v: f64 = token.parse().map_err(|_| RasterError::BadCell {
                    row: idx / ncols,
                    col: idx % ncols,
                    token: token.to_string(),
                })?;
                values.push(v);
            }
        }
        if values.len() != ncols * nrows {
            return Err(RasterError::CellCount {
                got: values.len(),
                expected: ncols * nrows,
            });
        }

        Ok(Self {
            ncols,
            nrows,
            xll,
            yll,
            cell_size,
            nodata,
            values,
        })
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    fn is_nodata(&self, v: f64) -> bool {
        self.nodata.is_some_and(|nd| v == nd)
    }

    /// Cell indices for a point, or None when outside the grid extent.
    /// Points exactly on a cell boundary resolve to the lower-index
    /// (south/west) cell.
    fn cell_of(&self, lat: f64, lon: f64) -> Option<(usize, usize)> {
        let fx = (lon - self.xll) / self.cell_size;
        let fy = (lat - self.yll) / self.cell_size; // rows counted from the south edge
        if fx < 0.0 || fy < 0.0 || fx > self.ncols as f64 || fy > self.nrows as f64 {
            return None;
        }
        let col = index_with_low_tie(fx, self.ncols);
        let row_from_south = index_with_low_tie(fy, self.nrows);
        let row = self.nrows - 1 - row_from_south;
        Some((row, col))
    }
}

/// Floor to a cell index, sending exact boundary values to the lower cell
/// and clamping into [0, n).
fn index_with_low_tie(f: f64, n: usize) -> usize {
    let floored = f.floor();
    let mut idx = if f == floored && f > 0.0 {
        floored as usize - 1
    } else {
        floored as usize
    };
    if idx >= n {
        idx = n - 1;
    }
    idx
}

/// One PGA realization for a geographic location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgaSample {
    pub location_id: LocationId,
    pub pga_g: f64,
}

/// Paired log-mean / log-sigma PGA fields with shared geometry.
#[derive(Debug, Clone)]
pub struct ShakeRaster {
    mean: AsciiGrid,
    sigma: AsciiGrid,
}

impl ShakeRaster {
    pub fn from_grids(mean: AsciiGrid, sigma: AsciiGrid) -> Result<Self, RasterError> {
        if mean.ncols != sigma.ncols || mean.nrows != sigma.nrows {
            return Err(RasterError::GeometryMismatch {
                mean_rows: mean.nrows,
                mean_cols: mean.ncols,
                sigma_rows: sigma.nrows,
                sigma_cols: sigma.ncols,
            });
        }
        if mean.xll != sigma.xll || mean.yll != sigma.yll || mean.cell_size != sigma.cell_size {
            return Err(RasterError::OriginMismatch);
        }
        for row in 0..sigma.nrows {
            for col in 0..sigma.ncols {
                let v = sigma.get(row, col);
                if !sigma.is_nodata(v) && v < 0.0 {
                    return Err(RasterError::NegativeSigma { row, col, value: v });
                }
            }
        }
        Ok(Self { mean, sigma })
    }

    pub fn parse(mean_source: &str, sigma_source: &str) -> Result<Self, RasterError> {
        Self::from_grids(
            AsciiGrid::parse(mean_source)?,
            AsciiGrid::parse(sigma_source)?,
        )
    }

    pub fn nrows(&self) -> usize {
        self.mean.nrows
    }

    pub fn ncols(&self) -> usize {
        self.mean.ncols
    }

    /// Nearest-cell (μ_ln, σ_ln) for a point; None outside the extent or on
    /// a NODATA cell in either grid.
    pub fn lookup(&self, lat: f64, lon: f64) -> Option<(f64, f64)> {
        let (row, col) = self.mean.cell_of(lat, lon)?;
        let mu = self.mean.get(row, col);
        let sg = self.sigma.get(row, col);
        if self.mean.is_nodata(mu) || self.sigma.is_nodata(sg) {
            return None;
        }
        Some((mu, sg))
    }

    /// One PGA realization for `location`. Exactly one normal draw is
    /// consumed per call, in or out of bounds, so the per-iteration stream
    /// layout is one draw per location.
    pub fn sample_pga(&self, location: &LocationRecord, rng: &mut SubstreamRng) -> PgaSample {
        let z = rng.standard_normal();
        let pga_g = match self.lookup(location.lat, location.lon) {
            Some((mu_ln, sigma_ln)) => (mu_ln + sigma_ln * z).exp(),
            None => 0.0,
        };
        PgaSample {
            location_id: location.id,
            pga_g,
        }
    }
}
