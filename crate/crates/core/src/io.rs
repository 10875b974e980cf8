//! Text and image formats for traces, barcodes, crocker grids, distance
//! matrices and clustering results.
//!
//! Floats are written in Rust's shortest round-trip form, so every format
//! here reads back to the same value and rewrites to the same bytes.
//! Infinity is spelled `inf`. Line endings are LF.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{ClusterResult, Confusion};
use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::persistence::{Barcode, PersistenceInterval};
use crate::summaries::{BarcodeSeries, CrockerPlot, CrockerStack};
use crate::vicsek::{AgentState, Frame};

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad number {s:?}")))
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad integer {s:?}")))
}

fn expect_header<R: BufRead>(lines: &mut std::io::Lines<R>, header: &str) -> Result<()> {
    match lines.next().transpose()? {
        Some(l) if l.trim_end() == header => Ok(()),
        _ => Err(Error::Parse(format!("expected header {header:?}"))),
    }
}

fn fields(line: &str, n: usize, lineno: usize) -> Result<Vec<&str>> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != n {
        return Err(Error::Parse(format!(
            "line {lineno}: expected {n} fields, found {}",
            f.len()
        )));
    }
    Ok(f)
}

pub const TRACE_HEADER: &str = "t,id,x,y,theta";

/// One row per agent per frame.
pub fn write_trace_csv<W: Write>(mut w: W, frames: &[Frame]) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for (t, frame) in frames.iter().enumerate() {
        for (id, a) in frame.iter().enumerate() {
            writeln!(w, "{t},{id},{},{},{}", a.x, a.y, a.theta)?;
        }
    }
    Ok(())
}

pub fn read_trace_csv<R: BufRead>(r: R) -> Result<Vec<Frame>> {
    let mut lines = r.lines();
    expect_header(&mut lines, TRACE_HEADER)?;
    let mut frames: Vec<Frame> = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        let f = fields(&line, 5, lineno)?;
        let (t, id) = (parse_usize(f[0], lineno)?, parse_usize(f[1], lineno)?);
        if t == frames.len() {
            frames.push(Vec::new());
        }
        if t + 1 != frames.len() || id != frames[t].len() {
            return Err(Error::Parse(format!("line {lineno}: rows out of order")));
        }
        frames[t].push(AgentState {
            x: parse_f64(f[2], lineno)?,
            y: parse_f64(f[3], lineno)?,
            theta: parse_f64(f[4], lineno)?,
        });
    }
    Ok(frames)
}

pub const BARCODE_HEADER: &str = "dim,birth,death";
pub const BARCODE_SERIES_HEADER: &str = "t,dim,birth,death";

pub fn write_barcode_csv<W: Write>(mut w: W, b: &Barcode) -> Result<()> {
    writeln!(w, "{BARCODE_HEADER}")?;
    for iv in b.intervals() {
        writeln!(w, "{},{},{}", iv.dim, iv.birth, iv.death)?;
    }
    Ok(())
}

/// The file does not record the computed scale range, so the caller
/// supplies it.
pub fn read_barcode_csv<R: BufRead>(r: R, max_scale: f64) -> Result<Barcode> {
    let mut lines = r.lines();
    expect_header(&mut lines, BARCODE_HEADER)?;
    let mut intervals = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let f = fields(&line, 3, k + 2)?;
        intervals.push(PersistenceInterval::new(
            parse_usize(f[0], k + 2)?,
            parse_f64(f[1], k + 2)?,
            parse_f64(f[2], k + 2)?,
        ));
    }
    Ok(Barcode::new(intervals, max_scale))
}

/// All slices of a barcode series in one file, keyed by time stamp. A slice
/// with no bars is written as a row with empty `dim,birth,death` fields.
pub fn write_barcode_series_csv<W: Write>(mut w: W, s: &BarcodeSeries) -> Result<()> {
    writeln!(w, "{BARCODE_SERIES_HEADER}")?;
    for (t, b) in s.times().iter().zip(s.barcodes()) {
        if b.is_empty() {
            writeln!(w, "{t},,,")?;
        }
        for iv in b.intervals() {
            writeln!(w, "{t},{},{},{}", iv.dim, iv.birth, iv.death)?;
        }
    }
    Ok(())
}

pub fn read_barcode_series_csv<R: BufRead>(r: R, max_scale: f64) -> Result<BarcodeSeries> {
    let mut lines = r.lines();
    expect_header(&mut lines, BARCODE_SERIES_HEADER)?;
    let mut times: Vec<f64> = Vec::new();
    let mut slices: Vec<Vec<PersistenceInterval>> = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        let f = fields(&line, 4, lineno)?;
        let t = parse_f64(f[0], lineno)?;
        if times.last() != Some(&t) {
            times.push(t);
            slices.push(Vec::new());
        }
        if f[1].is_empty() {
            continue;
        }
        slices.last_mut().unwrap().push(PersistenceInterval::new(
            parse_usize(f[1], lineno)?,
            parse_f64(f[2], lineno)?,
            parse_f64(f[3], lineno)?,
        ));
    }
    let barcodes = slices
        .into_iter()
        .map(|iv| Barcode::new(iv, max_scale))
        .collect();
    BarcodeSeries::new(times, barcodes)
}

#[derive(Serialize, Deserialize)]
struct StackJson {
    times: Vec<f64>,
    epsilons: Vec<f64>,
    alphas: Vec<f64>,
    dim: usize,
    max_scale: f64,
    /// Row-major over `(t, ε, α)`.
    values: Vec<u32>,
}

pub fn write_stack_json<W: Write>(mut w: W, s: &CrockerStack) -> Result<()> {
    let json = StackJson {
        times: s.times.clone(),
        epsilons: s.epsilons.clone(),
        alphas: s.alphas.clone(),
        dim: s.dim,
        max_scale: s.max_scale,
        values: s.values().to_vec(),
    };
    serde_json::to_writer(&mut w, &json).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_stack_json<R: BufRead>(r: R) -> Result<CrockerStack> {
    let j: StackJson = serde_json::from_reader(r).map_err(|e| Error::Parse(e.to_string()))?;
    CrockerStack::from_values(j.times, j.epsilons, j.alphas, j.dim, j.max_scale, j.values)
}

/// Grid CSV: header `t,<ε values>`, then one row per time stamp.
pub fn write_plot_csv<W: Write>(mut w: W, plot: &CrockerPlot) -> Result<()> {
    write!(w, "t")?;
    for e in &plot.epsilons {
        write!(w, ",{e}")?;
    }
    writeln!(w)?;
    for (t, row) in plot.times.iter().zip(&plot.values) {
        write!(w, "{t}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a grid CSV back; `dim`, `alpha` and `max_scale` are not stored in it.
pub fn read_plot_csv<R: BufRead>(r: R, dim: usize, alpha: f64, max_scale: f64) -> Result<CrockerPlot> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty grid file".into()))??;
    let mut head = header.split(',');
    if head.next() != Some("t") {
        return Err(Error::Parse("grid header must start with t".into()));
    }
    let epsilons = head.map(|e| parse_f64(e, 1)).collect::<Result<Vec<_>>>()?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let f = fields(&line, epsilons.len() + 1, k + 2)?;
        times.push(parse_f64(f[0], k + 2)?);
        values.push(
            f[1..]
                .iter()
                .map(|v| parse_usize(v, k + 2).map(|x| x as u32))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(CrockerPlot {
        times,
        epsilons,
        values,
        dim,
        alpha,
        max_scale,
    })
}

/// Full `N × N` matrix, comma separated, no header.
pub fn write_distance_csv<W: Write>(mut w: W, dm: &DistanceMatrix) -> Result<()> {
    for row in dm.rows() {
        let cells: Vec<String> = row.iter().map(|d| d.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_distance_csv<R: BufRead>(r: R) -> Result<DistanceMatrix> {
    let mut rows = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        rows.push(
            line.split(',')
                .map(|c| parse_f64(c, k + 1))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    DistanceMatrix::from_rows(rows)
}

/// Clustering outcome as persisted to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub medoid_indices: Vec<usize>,
    pub medoid_labels: Vec<f64>,
    pub assignment: Vec<usize>,
    pub accuracy: f64,
    pub confusion: Confusion,
}

impl ClusterReport {
    pub fn new(cr: &ClusterResult, labels: &[f64], accuracy: f64, confusion: Confusion) -> Self {
        Self {
            medoid_indices: cr.medoid_indices.clone(),
            medoid_labels: cr.medoid_indices.iter().map(|&m| labels[m]).collect(),
            assignment: cr.assignment.clone(),
            accuracy,
            confusion,
        }
    }
}

pub fn write_cluster_json<W: Write>(mut w: W, report: &ClusterReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_cluster_json<R: BufRead>(r: R) -> Result<ClusterReport> {
    serde_json::from_reader(r).map_err(|e| Error::Parse(e.to_string()))
}

/// Binary (P5) grayscale heatmap of a crocker grid.
///
/// Columns are time stamps, rows are scales with the largest scale on top.
/// Values above `clamp` are drawn as `clamp`; without a clamp the grid
/// maximum maps to white.
pub fn write_pgm<W: Write>(mut w: W, plot: &CrockerPlot, clamp: Option<u32>) -> Result<()> {
    let (width, height) = (plot.times.len(), plot.epsilons.len());
    let top = clamp.unwrap_or_else(|| plot.values.iter().flatten().copied().max().unwrap_or(0));
    write!(w, "P5\n{width} {height}\n255\n")?;
    let mut pixels = Vec::with_capacity(width * height);
    for e in (0..height).rev() {
        for t in 0..width {
            let v = plot.values[t][e].min(top);
            let g = if top == 0 {
                0
            } else {
                ((v as f64 / top as f64) * 255.0).round() as u8
            };
            pixels.push(g);
        }
    }
    w.write_all(&pixels)?;
    Ok(())
}

/// Time series CSV with header `t,<column>`.
pub fn write_series_csv<W: Write>(mut w: W, column: &str, times: &[f64], values: &[f64]) -> Result<()> {
    writeln!(w, "t,{column}")?;
    for (t, v) in times.iter().zip(values) {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

pub fn read_series_csv<R: BufRead>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = r.lines();
    lines
        .next()
        .ok_or_else(|| Error::Parse("empty series file".into()))??;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let line = line?;
        let f = fields(&line, 2, k + 2)?;
        times.push(parse_f64(f[0], k + 2)?);
        values.push(parse_f64(f[1], k + 2)?);
    }
    Ok((times, values))
}
