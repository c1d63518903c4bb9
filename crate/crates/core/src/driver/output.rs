//! CSV time series, loop tables, and plain-text snapshots.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::vec3::Vec3;

/// One row of `timeseries.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSeriesRecord {
    pub step: usize,
    /// Physical time, s.
    pub t: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    /// LL energy, J.
    #[serde(rename = "F")]
    pub f: f64,
    /// Total energy, J.
    #[serde(rename = "J")]
    pub j: f64,
    pub gmres_iters: usize,
}

impl TimeSeriesRecord {
    pub fn mean(&self) -> Vec3 {
        [self.mx, self.my, self.mz]
    }
}

/// One row of `hysteresis.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HysteresisRecord {
    /// Signed applied field along the loop direction, T.
    #[serde(rename = "field_T")]
    pub field_t: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub steps_to_steady: usize,
    pub converged: bool,
}

impl HysteresisRecord {
    pub fn mean(&self) -> Vec3 {
        [self.mx, self.my, self.mz]
    }
}

/// One row of `convergence.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub sweep: String,
    pub dims: String,
    pub alpha: f64,
    pub eta: f64,
    pub resolution: usize,
    pub step_size: f64,
    pub error: f64,
    pub order: f64,
}

/// Writes `rows` with a header to `path`.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// CSV file written one row at a time, flushed after each row.
pub struct CsvAppender {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvAppender {
    pub fn create(path: &Path) -> Result<Self> {
        let writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        Ok(CsvAppender {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn push<T: Serialize>(&mut self, row: &T) -> Result<()> {
        self.writer.serialize(row).map_err(|e| csv_error(&self.path, e))?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes a header-only CSV (used when a run produced no rows).
pub fn write_header(path: &Path, header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub const TIMESERIES_HEADER: [&str; 8] = ["step", "t", "mx", "my", "mz", "F", "J", "gmres_iters"];

/// `snapshot_<step>.txt` inside `dir`.
pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step}.txt"))
}

/// Snapshot contents: a grid in physical units plus one vector per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub counts: [usize; 3],
    /// Cell edges, m.
    pub cell: Vec3,
    /// Physical time, s.
    pub time: f64,
    pub m: Vec<Vec3>,
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// Dumps `m` (on a grid whose spacings are in units of its length scale).
///
/// Line 1 is a `#` comment naming the header fields, line 2 holds
/// `nx ny nz dx dy dz time` (m, s), and each following line is
/// `i j k x y z mx my mz` with 1-based indices, x fastest, and cell centers
/// in metres.
pub fn write_snapshot(m: &VectorField, time: f64, path: &Path) -> Result<()> {
    let g = m.grid();
    let l = g.length_scale;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = String::new();
    body.push_str("# nx ny nz dx dy dz time\n");
    body.push_str(&format!(
        "{} {} {} {} {} {} {}\n",
        g.nx,
        g.ny,
        g.nz,
        sci(g.dx * l),
        sci(g.dy * l),
        sci(g.dz * l),
        sci(time)
    ));
    w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    for (idx, v) in m.values().iter().enumerate() {
        let (i, j, k) = g.coords(idx);
        let c = g.center(i, j, k);
        writeln!(
            w,
            "{} {} {} {} {} {} {} {} {}",
            i + 1,
            j + 1,
            k + 1,
            sci(c[0] * l),
            sci(c[1] * l),
            sci(c[2] * l),
            sci(v[0]),
            sci(v[1]),
            sci(v[2])
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, msg: &str| Error::Parse {
        path: path.display().to_string(),
        message: format!("line {line}: {msg}"),
    };
    let mut header: Option<([usize; 3], Vec3, f64)> = None;
    let mut m = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        match header {
            None => {
                if tok.len() != 7 {
                    return Err(bad(n + 1, "header needs nx ny nz dx dy dz time"));
                }
                let int = |s: &str| s.parse::<usize>().map_err(|_| bad(n + 1, "bad cell count"));
                let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n + 1, "bad number"));
                header = Some((
                    [int(tok[0])?, int(tok[1])?, int(tok[2])?],
                    [num(tok[3])?, num(tok[4])?, num(tok[5])?],
                    num(tok[6])?,
                ));
            }
            Some(_) => {
                if tok.len() != 9 {
                    return Err(bad(n + 1, "cell line needs 9 columns"));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n + 1, "bad number"));
                m.push([num(tok[6])?, num(tok[7])?, num(tok[8])?]);
            }
        }
    }
    let (counts, cell, time) = header.ok_or_else(|| bad(0, "missing header"))?;
    if m.len() != counts.iter().product::<usize>() {
        return Err(bad(0, &format!("expected {} cells, found {}", counts.iter().product::<usize>(), m.len())));
    }
    Ok(Snapshot { counts, cell, time, m })
}

impl Snapshot {
    /// Places the snapshot on `grid`, checking that shapes and spacings agree.
    pub fn into_field(self, grid: Grid) -> Result<VectorField> {
        let l = grid.length_scale;
        let spacing = [grid.dx * l, grid.dy * l, grid.dz * l];
        let same = self.counts == [grid.nx, grid.ny, grid.nz]
            && self.cell.iter().zip(spacing).all(|(a, b)| (a - b).abs() <= 1e-9 * b);
        if !same {
            return Err(Error::GridMismatch(format!(
                "snapshot is {:?} cells of {:?} m, run grid is {}x{}x{} cells of {:?} m",
                self.counts, self.cell, grid.nx, grid.ny, grid.nz, spacing
            )));
        }
        VectorField::from_vec(grid, self.m)
    }
}
