//! CSV ingestion, deterministic artifact writers, flat config files.
//!
//! Accepted inputs (first non-`#` line is the header):
//!
//! ```text
//! timestamp,price            t,value
//! 2024-01-02T09:30:00,4701.5 0.0000000000000000e0,0.0
//! ```
//!
//! `timestamp,price` rows are grouped by calendar date (naive, exchange-local)
//! and prices are logged. `t,value` rows carry log-prices on a day-unit time
//! axis; day = ⌊t⌋.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::SamplePath;

pub const SCHEMA_VERSION: u32 = 1;
/// First line of every CSV artifact.
pub const SCHEMA_HEADER: &str = "# fsrm-schema-version: 1";

/// Intraday log-prices on a regular r-per-day grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedSeries {
    pub log_prices: SamplePath,
    /// Last log-price of each retained day.
    pub closes: Vec<f64>,
    pub r: usize,
    pub day_labels: Vec<String>,
    pub dropped_days: Vec<String>,
    pub n_rows: usize,
}

impl IngestedSeries {
    pub fn n_days(&self) -> usize {
        self.closes.len()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Layout {
    TimestampPrice,
    TimeValue,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum DayKey {
    Date(NaiveDate),
    Index(i64),
}

impl DayKey {
    fn label(&self) -> String {
        match self {
            DayKey::Date(d) => d.to_string(),
            DayKey::Index(i) => i.to_string(),
        }
    }
}

pub fn ingest_csv(path: impl AsRef<Path>, r: Option<usize>) -> Result<IngestedSeries> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, r)
}

/// Parses CSV from any reader. `r` overrides the modal per-day count.
pub fn ingest_reader<R: Read>(reader: R, r: Option<usize>) -> Result<IngestedSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let mut layout = None;
    let mut days: Vec<(DayKey, Vec<f64>)> = Vec::new();
    let mut last_time: Option<(f64, usize)> = None;
    let mut last_stamp: Option<NaiveDateTime> = None;
    let mut n_rows = 0usize;

    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let Some(lay) = layout else {
            let cols: Vec<String> = rec.iter().map(str::to_ascii_lowercase).collect();
            layout = Some(match cols.iter().map(String::as_str).collect::<Vec<_>>()[..] {
                ["timestamp", "price"] => Layout::TimestampPrice,
                ["t", "value"] => Layout::TimeValue,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: "expected header `timestamp,price` or `t,value`".into(),
                    })
                }
            });
            continue;
        };
        if rec.len() != 2 {
            return Err(Error::Parse { line, message: format!("expected 2 fields, got {}", rec.len()) });
        }
        let (key, value) = match lay {
            Layout::TimestampPrice => {
                let ts = parse_timestamp(&rec[0])
                    .ok_or_else(|| Error::Parse { line, message: format!("bad timestamp `{}`", &rec[0]) })?;
                if let Some(prev) = last_stamp {
                    if ts <= prev {
                        return Err(Error::Parse {
                            line,
                            message: format!("timestamp {ts} does not increase (previous {prev})"),
                        });
                    }
                }
                last_stamp = Some(ts);
                let price = parse_float(&rec[1], line)?;
                if price <= 0.0 {
                    return Err(Error::Parse { line, message: format!("price must be > 0, got {price}") });
                }
                (DayKey::Date(ts.date()), price.ln())
            }
            Layout::TimeValue => {
                let t = parse_float(&rec[0], line)?;
                if let Some((prev, _)) = last_time {
                    if t <= prev {
                        return Err(Error::Parse {
                            line,
                            message: format!("time {t} does not increase (previous {prev})"),
                        });
                    }
                }
                last_time = Some((t, line));
                (DayKey::Index((t + 1e-9).floor() as i64), parse_float(&rec[1], line)?)
            }
        };
        n_rows += 1;
        match days.last_mut() {
            Some((k, v)) if *k == key => v.push(value),
            _ => days.push((key, vec![value])),
        }
    }
    if n_rows == 0 {
        return Err(Error::EmptyInput);
    }

    let r = match r {
        Some(r) => r,
        None => modal_count(days.iter().map(|(_, v)| v.len())),
    };
    if r < 4 {
        return Err(Error::invalid("r", format!("must be >= 4, got {r}")));
    }

    let mut values = Vec::with_capacity(r * days.len());
    let mut closes = Vec::new();
    let mut day_labels = Vec::new();
    let mut dropped_days = Vec::new();
    for (key, v) in days {
        if v.len() < r {
            log::warn!("dropping day {}: {} observations < r = {r}", key.label(), v.len());
            dropped_days.push(key.label());
            continue;
        }
        if v.len() > r {
            log::warn!("day {}: keeping the last {r} of {} observations", key.label(), v.len());
        }
        values.extend_from_slice(&v[v.len() - r..]);
        closes.push(*v.last().expect("non-empty day"));
        day_labels.push(key.label());
    }
    if closes.is_empty() {
        return Err(Error::InsufficientData(format!("no day has {r} observations")));
    }
    Ok(IngestedSeries {
        log_prices: SamplePath::new(1.0 / r as f64, 0.0, values)?,
        closes,
        r,
        day_labels,
        dropped_days,
        n_rows,
    })
}

/// Most frequent value; ties go to the larger count.
fn modal_count(counts: impl Iterator<Item = usize>) -> usize {
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for c in counts {
        *freq.entry(c).or_default() += 1;
    }
    freq.into_iter().max_by_key(|&(c, f)| (f, c)).map_or(0, |(c, _)| c)
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse { line, message: format!("bad number `{s}`") }),
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] =
        ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.naive_local()))
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Small CSV table rendered with the schema header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        CsvTable { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 2));
        out.push_str(SCHEMA_HEADER);
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `t,value` rendering of a path.
pub fn series_table(path: &SamplePath) -> CsvTable {
    let mut t = CsvTable::new(["t", "value"]);
    t.rows = (0..path.len())
        .map(|k| vec![format_float(path.time(k)), format_float(path.values[k])])
        .collect();
    t
}

pub fn write_series<W: Write>(mut w: W, path: &SamplePath) -> std::io::Result<()> {
    writeln!(w, "{SCHEMA_HEADER}")?;
    writeln!(w, "t,value")?;
    for (k, v) in path.values.iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e}", path.time(k), v)?;
    }
    w.flush()
}

/// Writes via a sibling temp file and rename.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `key = value` lines; `#` starts a comment; later keys override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_day_file(per_day: usize) -> String {
        let mut s = String::from("timestamp,price\n");
        for (d, date) in ["2024-01-02", "2024-01-03"].iter().enumerate() {
            for k in 0..per_day {
                let (h, m) = (9 + (30 + k) / 60, (30 + k) % 60);
                s.push_str(&format!("{date}T{h:02}:{m:02}:00,{}\n", 100.0 + d as f64 + k as f64 * 0.01));
            }
        }
        s
    }

    #[test]
    fn two_full_days() {
        let ing = ingest_reader(two_day_file(391).as_bytes(), None).unwrap();
        assert_eq!(ing.r, 391);
        assert_eq!(ing.closes.len(), 2);
        assert_eq!(ing.log_prices.len(), 782);
        assert_eq!(ing.day_labels, vec!["2024-01-02", "2024-01-03"]);
        assert_eq!(ing.closes[1], (101.0f64 + 3.9).ln());
    }

    #[test]
    fn malformed_row_names_its_line() {
        let mut s = two_day_file(10);
        s = s.replacen("2024-01-02T09:33:00,100.03", "2024-01-02T09:33:00,abc", 1);
        match ingest_reader(s.as_bytes(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_empty_and_unordered() {
        assert!(matches!(ingest_reader("timestamp,price\n".as_bytes(), None), Err(Error::EmptyInput)));
        assert!(matches!(ingest_reader("".as_bytes(), None), Err(Error::EmptyInput)));
        let s = "timestamp,price\n2024-01-02 09:31,1\n2024-01-02 09:30,1\n";
        assert!(matches!(ingest_reader(s.as_bytes(), Some(4)), Err(Error::Parse { line: 3, .. })));
        assert!(ingest_reader("time,px\n1,2\n".as_bytes(), None).is_err());
        let s = "timestamp,price\n2024-01-02 09:31,-1\n";
        assert!(matches!(ingest_reader(s.as_bytes(), None), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn short_days_dropped_long_days_trimmed() {
        let mut s = String::from("t,value\n");
        let counts = [8, 8, 5, 9, 8];
        for (d, &c) in counts.iter().enumerate() {
            for k in 0..c {
                s.push_str(&format!("{},{}\n", d as f64 + k as f64 / c as f64, (d * 100 + k) as f64));
            }
        }
        let ing = ingest_reader(s.as_bytes(), None).unwrap();
        assert_eq!(ing.r, 8);
        assert_eq!(ing.dropped_days, vec!["2"]);
        assert_eq!(ing.day_labels, vec!["0", "1", "3", "4"]);
        assert_eq!(ing.log_prices.values[16], 301.0);
        assert_eq!(ing.closes, vec![7.0, 107.0, 308.0, 407.0]);
        assert_eq!(ing.n_rows, 38);
    }

    #[test]
    fn series_round_trip_is_lossless() {
        let values: Vec<f64> = (0..40).map(|k| (k as f64 * 0.7).sin() / 3.0 + 1e-13 * k as f64).collect();
        let path = SamplePath::new(0.1, 0.0, values).unwrap();
        let mut buf = Vec::new();
        write_series(&mut buf, &path).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), series_table(&path).render());
        let ing = ingest_reader(buf.as_slice(), None).unwrap();
        assert_eq!(ing.r, 10);
        assert_eq!(ing.log_prices.values, path.values);
    }

    #[test]
    fn timestamp_formats() {
        for s in ["2024-01-02T09:30:00", "2024-01-02 09:30", "2024-01-02T09:30:00.5", "2024-01-02T09:30:00+01:00"] {
            assert!(parse_timestamp(s).is_some(), "{s}");
        }
        assert!(parse_timestamp("02/01/2024").is_none());
    }

    #[test]
    fn config_parsing() {
        let c = parse_config("# run\nr = 391\n tau=1 # lag\n\nbeta = 0.7\nr = 390\n").unwrap();
        assert_eq!(c["r"], "390");
        assert_eq!(c["tau"], "1");
        assert_eq!(c.len(), 3);
        assert!(parse_config("oops\n").is_err());
        assert!(parse_config(" = 3\n").is_err());
    }

    #[test]
    fn atomic_write_and_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"abc").unwrap();
        write_atomic(&p, b"abcd").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"abcd");
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn modal_ties_prefer_larger() {
        assert_eq!(modal_count([3, 5, 3, 5].into_iter()), 5);
        assert_eq!(modal_count([391, 391, 210].into_iter()), 391);
    }
}
