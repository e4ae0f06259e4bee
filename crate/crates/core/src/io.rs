//! CSV and JSON exchange formats.
//!
//! Paths are stored as `t,v_1,…,v_k` with one row per grid node and matrix
//! values flattened row-major. Floats are written in shortest round-trip form,
//! so equal data gives byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::ExponentSeries;
use crate::path::SampledPath;

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

pub fn write_path_csv<W: Write>(path: &SampledPath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.width()).map(|k| format!("v_{k}")));
    w.write_record(&header).map_err(io_err)?;
    for (i, t) in path.times().iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(path.value(i).iter().map(f64::to_string));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads a path of shape `rows × cols`; the column count must be `1 + rows·cols`.
pub fn read_path_csv<R: Read>(input: R, rows: usize, cols: usize) -> Result<SampledPath> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let width = r.headers().map_err(|e| Error::Parse(e.to_string()))?.len();
    if width != 1 + rows * cols {
        return Err(Error::Parse(format!("expected {} columns for shape {rows}x{cols}, found {width}", 1 + rows * cols)));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        for (col, field) in rec.iter().enumerate() {
            let x: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: column {} is not a number: {field:?}", line + 2, col + 1)))?;
            if col == 0 {
                times.push(x);
            } else {
                values.push(x);
            }
        }
    }
    SampledPath::new(times, values, rows, cols)
}

pub fn write_path_csv_file(path: &SampledPath, file: &Path) -> Result<()> {
    write_path_csv(path, BufWriter::new(File::create(file).map_err(io_err)?))
}

pub fn read_path_csv_file(file: &Path, rows: usize, cols: usize) -> Result<SampledPath> {
    let f = File::open(file).map_err(|e| Error::Io(format!("{}: {e}", file.display())))?;
    read_path_csv(f, rows, cols)
}

/// `t,lambda_1,…,lambda_d,logdet`.
pub fn write_series_csv<W: Write>(series: &ExponentSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = series.lambdas.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|k| format!("lambda_{k}")));
    header.push("logdet".into());
    w.write_record(&header).map_err(io_err)?;
    for ((t, l), ld) in series.times.iter().zip(&series.lambdas).zip(&series.logdet) {
        let mut row = vec![t.to_string()];
        row.extend(l.iter().map(f64::to_string));
        row.push(ld.to_string());
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_series_csv_file(series: &ExponentSeries, file: &Path) -> Result<()> {
    write_series_csv(series, BufWriter::new(File::create(file).map_err(io_err)?))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)
}

pub fn write_json_file<T: Serialize + ?Sized>(value: &T, file: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(file).map_err(io_err)?);
    write_json(value, &mut w)?;
    w.flush().map_err(io_err)
}
