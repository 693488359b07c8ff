//! CSV ingestion and emission for datasets.
//!
//! Layout: the first column is an index or timestamp and is ignored; every
//! remaining column is one numeric channel. Parse errors report 1-based
//! file row and column.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::{Dataset, MultivariateSeries};

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_csv(&text, has_header, &name, &path.display().to_string())
}

/// Parses CSV text; `origin` only labels error messages.
pub fn parse_csv(text: &str, has_header: bool, name: &str, origin: &str) -> Result<Dataset> {
    let err = |row: usize, column: usize, message: String| Error::Parse {
        path: origin.to_string(),
        row,
        column,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut names: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();

    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| err(row, 1, e.to_string()))?;
        if record.len() == 1 && record.get(0).is_some_and(str::is_empty) {
            continue;
        }
        match width {
            None => {
                if record.len() < 2 {
                    return Err(err(
                        row,
                        record.len(),
                        format!("need an index column and at least one value column, found {} column(s)", record.len()),
                    ));
                }
                width = Some(record.len());
                columns = vec![Vec::new(); record.len() - 1];
            }
            Some(w) if w != record.len() => {
                return Err(err(
                    row,
                    record.len().min(w) + 1,
                    format!("ragged row: expected {w} columns, found {}", record.len()),
                ));
            }
            Some(_) => {}
        }
        if has_header && names.is_none() {
            names = Some(record.iter().skip(1).map(str::to_string).collect());
            continue;
        }
        for (c, cell) in record.iter().enumerate().skip(1) {
            let value: f64 = cell
                .parse()
                .map_err(|_| err(row, c + 1, format!("non-numeric cell {cell:?}")))?;
            if !value.is_finite() {
                return Err(err(row, c + 1, format!("non-finite value {cell:?}")));
            }
            columns[c - 1].push(value);
        }
    }

    if columns.first().is_none_or(Vec::is_empty) {
        return Err(err(1, 1, "no data rows".to_string()));
    }
    let mut series = MultivariateSeries::from_columns(columns)?;
    if let Some(names) = names {
        series = series.with_names(names)?;
    }
    Ok(Dataset::new(name, series))
}

/// Header of the long forecast format written by [`crate::fusion::forecast_csv`].
pub const LONG_HEADER: &str = "channel,step,value";

/// Parses either layout: the long `channel,step,value` forecast format
/// (detected by its header) or the wide index-plus-channels layout.
pub fn parse_any_csv(text: &str, has_header: bool, name: &str, origin: &str) -> Result<Dataset> {
    let first = text.lines().next().unwrap_or("").trim();
    if first.replace(' ', "") == LONG_HEADER {
        parse_long_csv(text, name, origin)
    } else {
        parse_csv(text, has_header, name, origin)
    }
}

/// Long-format rows `channel,step,value`; channels keep their order of first
/// appearance and every channel must cover steps `1..=n` for the same `n`.
pub fn parse_long_csv(text: &str, name: &str, origin: &str) -> Result<Dataset> {
    let err = |row: usize, column: usize, message: String| Error::Parse {
        path: origin.to_string(),
        row,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| err(row, 1, e.to_string()))?;
        if record.len() != 3 {
            return Err(err(row, 1, format!("expected 3 columns, found {}", record.len())));
        }
        let channel = &record[0];
        let c = match names.iter().position(|n| n == channel) {
            Some(c) => c,
            None => {
                names.push(channel.to_string());
                columns.push(Vec::new());
                names.len() - 1
            }
        };
        let step: usize = record[1]
            .parse()
            .map_err(|_| err(row, 2, format!("non-integer step {:?}", &record[1])))?;
        if step != columns[c].len() + 1 {
            return Err(err(row, 2, format!("channel {channel}: expected step {}, found {step}", columns[c].len() + 1)));
        }
        let value: f64 = record[2]
            .parse()
            .map_err(|_| err(row, 3, format!("non-numeric cell {:?}", &record[2])))?;
        if !value.is_finite() {
            return Err(err(row, 3, format!("non-finite value {:?}", &record[2])));
        }
        columns[c].push(value);
    }
    if columns.first().is_none_or(Vec::is_empty) {
        return Err(err(1, 1, "no data rows".to_string()));
    }
    let series = MultivariateSeries::from_columns(columns)
        .map_err(|e| err(1, 1, e.to_string()))?
        .with_names(names)?;
    Ok(Dataset::new(name, series))
}

/// `index,<channel...>` rows with round-trip exact float text.
pub fn csv_text(series: &MultivariateSeries) -> String {
    let mut out = String::new();
    out.push_str("index");
    for c in 0..series.num_channels() {
        out.push(',');
        match series.channel_names() {
            Some(names) => out.push_str(&names[c]),
            None => out.push_str(&format!("c{c}")),
        }
    }
    out.push('\n');
    for t in 0..series.len() {
        out.push_str(&t.to_string());
        for ch in series.channels() {
            out.push(',');
            out.push_str(&ch[t].to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(path: impl AsRef<Path>, series: &MultivariateSeries) -> Result<()> {
    write_file(path.as_ref(), csv_text(series).as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
