//! Rendering helpers: shortest round-trip numbers, CSV tables, and the reader
//! that loads emitted CSV back.

use std::io::Read;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

/// Shortest decimal that parses back to the same `f64`; `inf` for infinity.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:?}")
    }
}

/// Inverse of [`fmt_f64`].
pub fn parse_f64(text: &str) -> Option<f64> {
    match text {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => text.parse().ok(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV of UTF-8 fields")
    }

    /// Whitespace-aligned columns.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].len())
                    .chain([self.header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}

pub fn read_table(reader: impl Read) -> Result<Table, csv::Error> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    Ok(Table { header, rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CurveCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("expected header axis1,axis2,feasible, got {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Loads a `curve` CSV. Infeasible rows carry an empty `axis2`.
pub fn read_curve_csv(reader: impl Read) -> Result<Vec<CurveRow>, CurveCsvError> {
    let table = read_table(reader)?;
    if table.header != ["axis1", "axis2", "feasible"] {
        return Err(CurveCsvError::Header(table.header));
    }
    table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let bad = |message: String| CurveCsvError::Row { row: i + 1, message };
            let axis1 = parse_f64(&r[0]).ok_or_else(|| bad(format!("bad axis1 `{}`", r[0])))?;
            let axis2 = match r[1].as_str() {
                "" => None,
                s => Some(parse_f64(s).ok_or_else(|| bad(format!("bad axis2 `{s}`")))?),
            };
            let feasible = match r[2].as_str() {
                "true" => true,
                "false" => false,
                s => return Err(bad(format!("bad feasible flag `{s}`"))),
            };
            if feasible != axis2.is_some() {
                return Err(bad("feasible flag disagrees with axis2".into()));
            }
            Ok(CurveRow { axis1, axis2, feasible })
        })
        .collect()
}
