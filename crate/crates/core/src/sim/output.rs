//! Frame and diagnostics files.
//!
//! Frame `<field>_<step:08>.csv`: a header `# t=<t> nx=<N> h=<h> field=<field>`
//! followed by `N` lines, one per `j` (ascending), each holding `N`
//! comma-separated values for ascending `i`. Values carry 17 significant
//! digits.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

use super::StepRecord;

pub const DIAG_FILE: &str = "diag.csv";
pub const FAILURE_MARKER: &str = "FAILED";
pub const DIAG_HEADER: &str =
    "step,t,dt,mass,min_n,max_n,max_W,cg_iters,mass_residual,entropy_residual,bounds_residual";

pub fn frame_path(dir: &Path, field: &str, step: usize) -> PathBuf {
    dir.join(format!("{field}_{step:08}.csv"))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_frame(field: &ScalarField, name: &str, t: f64) -> String {
    let n = field.n_cells();
    let mut out = format!("# t={t} nx={n} h={} field={name}\n", field.grid().h());
    for j in 0..n {
        let line: Vec<String> = (0..n).map(|i| num(field[(i, j)])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_frame(dir: &Path, name: &str, step: usize, t: f64, field: &ScalarField) -> Result<PathBuf> {
    let path = frame_path(dir, name, step);
    fs::write(&path, format_frame(field, name, t)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// A frame file read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub nx: usize,
    pub h: f64,
    pub field: String,
    /// Row-major, `j` outer.
    pub values: Vec<f64>,
}

pub fn parse_frame(text: &str) -> Result<Frame> {
    let bad = |msg: &str| Error::Config(format!("malformed frame: {msg}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let header = header.strip_prefix("# ").ok_or_else(|| bad("missing header"))?;
    let (mut t, mut nx, mut h, mut field) = (None, None, None, None);
    for token in header.split_whitespace() {
        let (k, v) = token.split_once('=').ok_or_else(|| bad("header token"))?;
        match k {
            "t" => t = v.parse::<f64>().ok(),
            "nx" => nx = v.parse::<usize>().ok(),
            "h" => h = v.parse::<f64>().ok(),
            "field" => field = Some(v.to_string()),
            _ => return Err(bad("unknown header key")),
        }
    }
    let (t, nx, h, field) = match (t, nx, h, field) {
        (Some(t), Some(nx), Some(h), Some(f)) => (t, nx, h, f),
        _ => return Err(bad("incomplete header")),
    };
    let mut values = Vec::with_capacity(nx * nx);
    let mut rows = 0;
    for line in lines {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad("value")))
            .collect::<Result<_>>()?;
        if row.len() != nx {
            return Err(bad("row length"));
        }
        values.extend(row);
        rows += 1;
    }
    if rows != nx {
        return Err(bad("row count"));
    }
    Ok(Frame { t, nx, h, field, values })
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_frame(&text)
}

pub fn format_diag_row(r: &StepRecord) -> String {
    [
        r.step.to_string(),
        num(r.t),
        num(r.dt),
        num(r.mass),
        num(r.min_n),
        num(r.max_n),
        num(r.max_w),
        r.cg_iterations.to_string(),
        num(r.mass_residual),
        num(r.entropy_residual),
        num(r.bounds_residual),
    ]
    .join(",")
}

/// Line-buffered writer for `diag.csv`; every row is flushed so partial runs
/// leave a readable file.
pub struct DiagWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl DiagWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        let path = dir.join(DIAG_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = Self {
            path,
            out: BufWriter::new(file),
        };
        w.line(DIAG_HEADER)?;
        Ok(w)
    }

    pub fn record(&mut self, r: &StepRecord) -> Result<()> {
        self.line(&format_diag_row(r))
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}
