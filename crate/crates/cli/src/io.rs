//! File formats: CSV series panels in (rows = time, columns = series) and
//! the JSON test report.
//!
//! Report floats are serialized with 17 significant digits so that parsing
//! the emitted file recovers every numeric field bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use hdwn_core::whitenoise::UStatReport;
use hdwn_core::SeriesMatrix;

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("file {0} is empty")]
    Empty(String),
    #[error("ragged row: data row {row} has {found} cells, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("data row {row}, column {col}: cell {text:?} is not a finite number")]
    BadCell {
        row: usize,
        col: usize,
        text: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Shape(#[from] hdwn_core::Error),
}

/// Read a rectangular CSV of finite reals: row t is observation t, column
/// i is series i. `has_header` skips a single leading label row.
pub fn read_series_csv(path: &Path, has_header: bool) -> Result<SeriesMatrix, CsvError> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = idx + 1;
        if rows.is_empty() {
            width = record.len();
        } else if record.len() != width {
            return Err(CsvError::Ragged {
                row: row_no,
                expected: width,
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(width);
        for (col, cell) in record.iter().enumerate() {
            let parsed: f64 = cell.parse().map_err(|_| CsvError::BadCell {
                row: row_no,
                col: col + 1,
                text: cell.to_string(),
            })?;
            if !parsed.is_finite() {
                return Err(CsvError::BadCell {
                    row: row_no,
                    col: col + 1,
                    text: cell.to_string(),
                });
            }
            row.push(parsed);
        }
        rows.push(row);
    }
    if rows.is_empty() || width == 0 {
        return Err(CsvError::Empty(path.display().to_string()));
    }

    let t_len = rows.len();
    let p = width;
    let mut values = vec![0.0; p * t_len];
    for (t, row) in rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            values[i * t_len + t] = v;
        }
    }
    Ok(SeriesMatrix::new(p, t_len, values)?)
}

/// Write a panel in the same layout (no header row); floats use the
/// shortest lossless decimal form.
pub fn write_series_csv(x: &SeriesMatrix, path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in 0..x.t_len() {
        for i in 0..x.p() {
            if i > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{}", x.get(i, t))?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct InputDesc {
    pub path: String,
    pub p: usize,
    #[serde(rename = "T")]
    pub t_len: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ConfigEcho {
    pub q: usize,
    pub orders: Vec<usize>,
    pub alpha: f64,
    pub demean: bool,
    pub scale: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct OrderEntry {
    pub a: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_raw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reject: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AdaptiveEntry {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reject: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// The on-disk test report.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportFile {
    pub input: InputDesc,
    pub config: ConfigEcho,
    pub orders: Vec<OrderEntry>,
    pub adaptive: AdaptiveEntry,
    pub conditioning_warning: bool,
    pub software_version: String,
    pub wall_time_seconds: f64,
}

impl ReportFile {
    pub fn from_report(
        input: InputDesc,
        config: ConfigEcho,
        report: &UStatReport,
        wall_time_seconds: f64,
    ) -> Self {
        let orders = report
            .orders
            .iter()
            .map(|o| match &o.outcome {
                Ok(s) => OrderEntry {
                    a: o.order,
                    status: "ok".into(),
                    u_raw: Some(s.u_raw),
                    sigma_hat: Some(s.sigma_hat),
                    z: Some(s.z),
                    p_value: Some(s.p_value),
                    reject: Some(s.reject),
                    reason: None,
                },
                Err(e) => OrderEntry {
                    a: o.order,
                    status: "failed".into(),
                    u_raw: None,
                    sigma_hat: None,
                    z: None,
                    p_value: None,
                    reject: None,
                    reason: Some(e.to_string()),
                },
            })
            .collect();
        let adaptive = match &report.adaptive {
            Some(a) => AdaptiveEntry {
                status: "ok".into(),
                z: Some(a.z),
                p_value: Some(a.p_value),
                reject: Some(a.reject),
                reason: None,
            },
            None => AdaptiveEntry {
                status: "failed".into(),
                z: None,
                p_value: None,
                reject: None,
                reason: Some("some component order failed".into()),
            },
        };
        Self {
            input,
            config,
            orders,
            adaptive,
            conditioning_warning: report.conditioning_warning,
            software_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_seconds,
        }
    }

    /// Serialize with 17-significant-digit floats.
    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitFormatter);
        self.serialize(&mut ser).expect("serializable report");
        String::from_utf8(buf).expect("utf8 json")
    }
}

/// Compact JSON formatter that writes every f64 with 17 significant
/// digits (`{:.16e}`), enough to round-trip any double exactly.
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}
