//! Long-format CSV ingestion: `series_id,time,value`, plus an optional
//! teacher-signal file `time,target`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{IrregularSeries, IstsDataset, Observation, Target};
use crate::error::{Error, Result};

/// Column names for the three required fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub series_col: String,
    pub time_col: String,
    pub value_col: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self { series_col: "series_id".into(), time_col: "time".into(), value_col: "value".into() }
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Csv { line: 1, message: format!("missing column '{name}'") })
}

fn parse_f64(record: &csv::StringRecord, idx: usize, line: usize, what: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("").trim();
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::Csv { line, message: format!("cannot parse {what} '{raw}'") })?;
    if !v.is_finite() {
        return Err(Error::Csv { line, message: format!("{what} is not finite") });
    }
    Ok(v)
}

/// Reads a long-format dataset. Series are ordered by label (numeric labels
/// numerically), observations sorted by time, rates estimated per series.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<IstsDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub(crate) fn read_csv(reader: impl Read, schema: &CsvSchema) -> Result<IstsDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?
        .clone();
    if headers.is_empty() {
        return Err(Error::EmptyDataset("csv has no header".into()));
    }
    let (si, ti, vi) = (
        column(&headers, &schema.series_col)?,
        column(&headers, &schema.time_col)?,
        column(&headers, &schema.value_col)?,
    );
    let mut groups: BTreeMap<SeriesKey, Vec<(Observation, usize)>> = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::Csv { line, message: e.to_string() })?;
        let label = rec
            .get(si)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Csv { line, message: "missing series id".into() })?;
        let time = parse_f64(&rec, ti, line, "time")?;
        let value = parse_f64(&rec, vi, line, "value")?;
        groups.entry(SeriesKey::new(label)).or_default().push((Observation::new(time, value), line));
    }
    if groups.is_empty() {
        return Err(Error::EmptyDataset("csv has no rows".into()));
    }
    let mut series = Vec::with_capacity(groups.len());
    for (key, mut rows) in groups {
        rows.sort_by(|a, b| a.0.time.total_cmp(&b.0.time));
        if let Some(w) = rows.windows(2).find(|w| w[0].0.time == w[1].0.time) {
            return Err(Error::Csv {
                line: w[1].1,
                message: format!("duplicate timestamp {} in series '{}'", w[1].0.time, key.label),
            });
        }
        let obs = rows.into_iter().map(|(o, _)| o).collect();
        series.push(IrregularSeries::new(key.label, obs)?);
    }
    IstsDataset::new(series, None)
}

/// Reads a `time,target` teacher-signal file, sorted by time.
pub fn load_targets(path: impl AsRef<Path>) -> Result<Vec<Target>> {
    let mut rdr = csv::Reader::from_path(path.as_ref())
        .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?;
    let headers = rdr.headers().map_err(|e| Error::Csv { line: 1, message: e.to_string() })?.clone();
    let (ti, vi) = (column(&headers, "time")?, column(&headers, "target")?);
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::Csv { line, message: e.to_string() })?;
        out.push(Target { time: parse_f64(&rec, ti, line, "time")?, value: parse_f64(&rec, vi, line, "target")? });
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(out)
}

/// Writes the dataset in the long format read by [`load_csv`].
pub fn write_csv(dataset: &IstsDataset, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["series_id", "time", "value"]).map_err(csv_io)?;
    for s in dataset.series() {
        for o in s.observations() {
            w.write_record([s.label(), &o.time.to_string(), &o.value.to_string()]).map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_targets(targets: &[Target], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "target"]).map_err(csv_io)?;
    for t in targets {
        w.write_record([t.time.to_string(), t.value.to_string()]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Orders numeric labels numerically, everything else lexically after them.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct SeriesKey {
    textual: bool,
    numeric: i64,
    label: String,
}

impl SeriesKey {
    fn new(label: &str) -> Self {
        match label.parse::<i64>() {
            Ok(numeric) => Self { textual: false, numeric, label: label.to_string() },
            Err(_) => Self { textual: true, numeric: 0, label: label.to_string() },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<IstsDataset> {
        read_csv(s.as_bytes(), &CsvSchema::default())
    }

    #[test]
    fn single_series_three_rows() {
        let ds = read("series_id,time,value\n0,0,1.5\n0,1,2.5\n0,2,3.5\n").unwrap();
        assert_eq!(ds.num_series(), 1);
        assert_eq!(ds.series()[0].len(), 3);
        assert_eq!(ds.max_time(), 2.0);
    }

    #[test]
    fn two_series_rate_ratio() {
        let mut s = String::from("series_id,time,value\n");
        for i in 0..5 {
            s += &format!("a,{},{}\n", i as f64 * 9.0 / 4.0, i);
        }
        for i in 0..10 {
            s += &format!("b,{},{}\n", i, i);
        }
        let ds = read(&s).unwrap();
        assert_eq!(ds.num_series(), 2);
        let r = ds.rates();
        assert!((r[0] / r[1] - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let ds = read("series_id,time,value\n1,2,0.2\n1,0,0.0\n1,1,0.1\n").unwrap();
        let t: Vec<f64> = ds.series()[0].times().collect();
        assert_eq!(t, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match read("series_id,time,value\n0,0,1\n0,x,2\n") {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match read("series_id,time,value\n0,0,1\n0,1,2\n0,1,3\n") {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(read("").is_err());
        assert!(read("series_id,time,value\n").is_err());
        assert!(read("id,time,value\n0,0,1\n").is_err());
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let ds = read("series_id,time,value\n10,0,1\n10,1,1\n9,0,1\n9,1,1\nz,0,1\nz,1,1\n").unwrap();
        let labels: Vec<&str> = ds.series().iter().map(|s| s.label()).collect();
        assert_eq!(labels, vec!["9", "10", "z"]);
    }

    #[test]
    fn write_then_read() {
        let ds = read("series_id,time,value\n0,0,1.25\n0,1.5,-2\n1,0.5,3\n1,4,0.125\n").unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        assert_eq!(read(std::str::from_utf8(&buf).unwrap()).unwrap(), ds);
    }
}
