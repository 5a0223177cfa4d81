//! CSV ingestion of dated prices or returns.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::features::ReturnSeries;

/// How the return column is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadOptions {
    /// Read precomputed log-returns from a `return` column instead of
    /// differencing `price`.
    pub returns_column: bool,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line: line as usize, message: message.into() }
}

fn cell(rec: &csv::StringRecord, idx: Option<usize>) -> Option<&str> {
    idx.and_then(|i| rec.get(i)).map(str::trim)
}

fn number(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64> {
    let s = cell(rec, Some(idx)).unwrap_or("");
    let v: f64 = s.parse().map_err(|_| parse_err(line, format!("{name} '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{name} '{s}' is not finite")));
    }
    Ok(v)
}

/// Reads `date,price[,volume][,iv]` (or `date,return,...` with
/// `returns_column`). Lines starting with `#` are metadata and skipped; extra
/// columns are ignored. Errors carry 1-based file line numbers.
pub fn read_series<R: Read>(reader: R, opts: LoadOptions) -> Result<ReturnSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(Error::EmptyFile),
        Err(e) => return Err(parse_err(1, e.to_string())),
    };
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let date_i = col("date").ok_or_else(|| parse_err(1, "missing 'date' column"))?;
    let value_name = if opts.returns_column { "return" } else { "price" };
    let value_i = col(value_name).ok_or_else(|| parse_err(1, format!("missing '{value_name}' column")))?;
    let (vol_i, iv_i) = (col("volume"), col("iv"));

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values = Vec::new();
    let mut volume = Vec::new();
    let mut iv = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let ds = cell(&rec, Some(date_i)).unwrap_or("");
        let date = NaiveDate::parse_from_str(ds, "%Y-%m-%d")
            .map_err(|_| parse_err(line, format!("date '{ds}' is not ISO-8601 (YYYY-MM-DD)")))?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(Error::NonmonotoneDates { row: line as usize });
            }
        }
        let v = number(&rec, value_i, value_name, line)?;
        if !opts.returns_column && v <= 0.0 {
            return Err(parse_err(line, format!("nonpositive price {v}")));
        }
        if let Some(i) = vol_i {
            let x = number(&rec, i, "volume", line)?;
            if x < 0.0 {
                return Err(parse_err(line, format!("negative volume {x}")));
            }
            volume.push(x);
        }
        if let Some(i) = iv_i {
            let x = number(&rec, i, "iv", line)?;
            if x < 0.0 {
                return Err(parse_err(line, format!("negative iv {x}")));
            }
            iv.push(x);
        }
        dates.push(date);
        values.push(v);
    }
    if dates.is_empty() {
        return Err(Error::EmptyFile);
    }
    let (dates, returns, skip) = if opts.returns_column {
        (dates, values, 0)
    } else {
        let r: Vec<f64> = values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        (dates[1..].to_vec(), r, 1)
    };
    if returns.is_empty() {
        return Err(Error::EmptySample);
    }
    let tail = |v: Vec<f64>| (!v.is_empty()).then(|| v[skip..].to_vec());
    ReturnSeries::new(dates, returns, tail(volume), tail(iv))
}

pub fn load_series(path: &Path, opts: LoadOptions) -> Result<ReturnSeries> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_series(std::io::BufReader::new(f), opts)
}
