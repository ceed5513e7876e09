//! CSV encoding shared by every table the crate emits.
//!
//! RFC-4180 via the `csv` crate, LF line endings, floats with 17 significant
//! digits so that a round trip through text is lossless.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::paths::{GridPath, TimeGrid};

/// 17 significant digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Writes header plus rows; every row must have the header's width.
pub fn write_table<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(header).map_err(io_err)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.write_record(row).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Header `t,v1,...,vk`, one row per grid point.
pub fn write_path<W: Write>(w: W, x: &GridPath) -> Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=x.dim()).map(|k| format!("v{k}")));
    let mut out = csv_writer(w);
    out.write_record(&header).map_err(io_err)?;
    for (i, &t) in x.grid().points().iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        row.extend(x.at(i).iter().map(|&v| fmt_f64(v)));
        out.write_record(&row).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Reads a path written by [`write_path`]; `delay` must be one of its times.
pub fn read_path<R: Read>(r: R, delay: f64) -> Result<GridPath> {
    let mut rdr = csv::Reader::from_reader(r);
    let dim = rdr.headers().map_err(io_err)?.len().saturating_sub(1);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(io_err)?;
        let mut fields = rec.iter().map(|f| f.trim().parse::<f64>().map_err(io_err));
        times.push(fields.next().ok_or_else(|| io_err("empty row"))??);
        for f in fields {
            values.push(f?);
        }
    }
    let grid = Arc::new(TimeGrid::new(times, delay)?);
    GridPath::new(grid, dim, values)
}
