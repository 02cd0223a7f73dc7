//! Sweep result tables: `#` metadata lines, then a fixed CSV header.
//! Numbers use 17 significant digits so that parse and re-emit round-trips.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::SweepRow;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ResultTable {
    /// Ordered key/value provenance entries.
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<SweepRow>,
    /// Number of occupation columns; kept so an empty sweep still has them.
    pub modes: usize,
}

/// Canonical number text.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn parse_number(s: &str) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Table(format!("bad number '{s}'"))),
    }
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    detuning: Option<f64>,
    sigma_minus_abs: Option<f64>,
    sigma_z: Option<f64>,
    occupations: Vec<Option<f64>>,
    flagged: bool,
    error: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    metadata: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<JsonRow>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl ResultTable {
    pub fn new(metadata: Vec<(String, String)>, rows: Vec<SweepRow>) -> Self {
        let modes = rows.iter().map(|r| r.occupations.len()).max().unwrap_or(0);
        ResultTable { metadata, rows, modes }
    }

    /// Sets the occupation column count (at least what the rows carry).
    pub fn with_modes(mut self, modes: usize) -> Self {
        self.modes = self.modes.max(modes);
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn columns(&self) -> Vec<String> {
        let mut c = vec!["detuning".to_string(), "sigma_minus_abs".into(), "sigma_z".into()];
        c.extend((0..self.modes).map(|k| format!("occupation_{k}")));
        c.push("flagged".into());
        c.push("error".into());
        c
    }

    pub fn detunings(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.detuning).collect()
    }

    pub fn sigma_minus_abs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sigma_minus_abs).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema_version = {SCHEMA_VERSION}")?;
        for (k, v) in &self.metadata {
            if k == "schema_version" {
                continue;
            }
            for line in v.lines() {
                writeln!(w, "# {k} = {line}")?;
            }
        }
        let mut csv = csv::WriterBuilder::new().from_writer(w);
        let modes = self.modes;
        let err = |e: csv::Error| Error::Table(e.to_string());
        csv.write_record(self.columns()).map_err(err)?;
        for r in &self.rows {
            let mut rec = vec![format_number(r.detuning), format_number(r.sigma_minus_abs), format_number(r.sigma_z)];
            rec.extend((0..modes).map(|k| format_number(r.occupations.get(k).copied().unwrap_or(f64::NAN))));
            rec.push(if r.flagged { "1".into() } else { "0".into() });
            rec.push(r.error.clone().unwrap_or_default());
            csv.write_record(&rec).map_err(err)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut metadata: Vec<(String, String)> = Vec::new();
        let mut body = String::new();
        for line in reader.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once(" = ").ok_or_else(|| Error::Table(format!("bad metadata line '{line}'")))?;
                match metadata.last_mut() {
                    Some((pk, pv)) if pk == k && k != "schema_version" => {
                        pv.push('\n');
                        pv.push_str(v);
                    }
                    _ => metadata.push((k.to_string(), v.to_string())),
                }
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        match metadata.first() {
            Some((k, v)) if k == "schema_version" && v.parse::<u32>().ok() == Some(SCHEMA_VERSION) => {}
            _ => return Err(Error::Table(format!("missing or unsupported schema_version (expected {SCHEMA_VERSION})"))),
        }
        metadata.remove(0);
        let mut csv = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let header = csv.headers().map_err(|e| Error::Table(e.to_string()))?.clone();
        let modes = header.iter().filter(|h| h.starts_with("occupation_")).count();
        if header.len() != modes + 5 {
            return Err(Error::Table("unexpected column layout".into()));
        }
        let mut rows = Vec::new();
        for rec in csv.records() {
            let rec = rec.map_err(|e| Error::Table(e.to_string()))?;
            let num = |i: usize| parse_number(&rec[i]);
            rows.push(SweepRow {
                detuning: num(0)?,
                sigma_minus_abs: num(1)?,
                sigma_z: num(2)?,
                occupations: (0..modes).map(|k| num(3 + k)).collect::<Result<_>>()?,
                flagged: &rec[3 + modes] == "1",
                error: Some(rec[4 + modes].to_string()).filter(|s| !s.is_empty()),
            });
        }
        Ok(ResultTable { metadata, rows, modes })
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        let mut metadata = vec![("schema_version".to_string(), SCHEMA_VERSION.to_string())];
        metadata.extend(self.metadata.iter().filter(|(k, _)| k != "schema_version").cloned());
        let t = JsonTable {
            metadata,
            columns: self.columns(),
            rows: self
                .rows
                .iter()
                .map(|r| JsonRow {
                    detuning: finite(r.detuning),
                    sigma_minus_abs: finite(r.sigma_minus_abs),
                    sigma_z: finite(r.sigma_z),
                    occupations: r.occupations.iter().map(|&x| finite(x)).collect(),
                    flagged: r.flagged,
                    error: r.error.clone(),
                })
                .collect(),
        };
        serde_json::to_writer_pretty(w, &t).map_err(|e| Error::Table(e.to_string()))
    }

    pub fn read_json<R: std::io::Read>(r: R) -> Result<Self> {
        let t: JsonTable = serde_json::from_reader(r).map_err(|e| Error::Table(e.to_string()))?;
        let nan = |x: Option<f64>| x.unwrap_or(f64::NAN);
        let mut metadata = t.metadata;
        if metadata.first().map(|(k, v)| k == "schema_version" && v.parse::<u32>().ok() == Some(SCHEMA_VERSION)) != Some(true) {
            return Err(Error::Table(format!("missing or unsupported schema_version (expected {SCHEMA_VERSION})")));
        }
        metadata.remove(0);
        let rows = t
            .rows
            .into_iter()
            .map(|r| SweepRow {
                detuning: nan(r.detuning),
                sigma_minus_abs: nan(r.sigma_minus_abs),
                sigma_z: nan(r.sigma_z),
                occupations: r.occupations.into_iter().map(nan).collect(),
                flagged: r.flagged,
                error: r.error,
            })
            .collect();
        let modes = t.columns.iter().filter(|c| c.starts_with("occupation_")).count();
        Ok(ResultTable::new(metadata, rows).with_modes(modes))
    }

    pub fn write<W: Write>(&self, w: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    /// Reads either format, sniffing the first non-blank byte.
    pub fn read_any(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::read_json(text.as_bytes())
        } else {
            Self::read_csv(text.as_bytes())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Deviation {
    pub max: f64,
    pub mean: f64,
    /// Detuning at the maximum.
    pub at: f64,
    pub count: usize,
}

/// |Δ|⟨σ⁻⟩|| between two tables on a shared grid, restricted to detunings
/// accepted by `keep`. Rows with non-finite values on either side are skipped.
pub fn compare(a: &ResultTable, b: &ResultTable, keep: impl Fn(f64) -> bool) -> Result<Deviation> {
    if a.rows.len() != b.rows.len() {
        return Err(Error::Table(format!("grids differ in length: {} vs {}", a.rows.len(), b.rows.len())));
    }
    let mut dev = Deviation { max: 0.0, mean: 0.0, at: f64::NAN, count: 0 };
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        if (ra.detuning - rb.detuning).abs() > 1e-9 * (1.0 + ra.detuning.abs()) {
            return Err(Error::Table(format!("grids differ at {} vs {}", ra.detuning, rb.detuning)));
        }
        if !keep(ra.detuning) {
            continue;
        }
        let d = (ra.sigma_minus_abs - rb.sigma_minus_abs).abs();
        if !d.is_finite() {
            continue;
        }
        if d > dev.max || dev.count == 0 {
            dev.max = d;
            dev.at = ra.detuning;
        }
        dev.mean += d;
        dev.count += 1;
    }
    if dev.count > 0 {
        dev.mean /= dev.count as f64;
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ResultTable {
        ResultTable::new(
            vec![("method".into(), "perturb".into()), ("config".into(), "a = 1\nb = \"x\"".into())],
            vec![
                SweepRow { detuning: -1.0 / 3.0, sigma_minus_abs: 0.1, sigma_z: -0.9, occupations: vec![1.5, 2e-300], flagged: false, error: None },
                SweepRow { detuning: 0.5, sigma_minus_abs: f64::NAN, sigma_z: f64::NAN, occupations: vec![f64::NAN; 2], flagged: true, error: Some("pole, \"near\" zero".into()) },
            ],
        )
    }

    fn csv_text(t: &ResultTable) -> String {
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let text = csv_text(&sample());
        let back = ResultTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(csv_text(&back), text);
        assert_eq!(back.meta("config"), Some("a = 1\nb = \"x\""));
        assert_eq!(back.rows[1].error.as_deref(), Some("pole, \"near\" zero"));
    }

    #[test]
    fn json_round_trip() {
        let mut buf = Vec::new();
        sample().write_json(&mut buf).unwrap();
        let back = ResultTable::read_any(std::str::from_utf8(&buf).unwrap()).unwrap();
        let mut again = Vec::new();
        back.write_json(&mut again).unwrap();
        assert_eq!(buf, again);
        assert_eq!(back.rows[0].detuning, -1.0 / 3.0);
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new(vec![], vec![]);
        let text = csv_text(&t);
        assert_eq!(text, "# schema_version = 1\ndetuning,sigma_minus_abs,sigma_z,flagged,error\n");
        assert!(ResultTable::read_csv(text.as_bytes()).unwrap().rows.is_empty());
        let t = ResultTable::new(vec![], vec![]).with_modes(2);
        let text = csv_text(&t);
        assert!(text.ends_with("detuning,sigma_minus_abs,sigma_z,occupation_0,occupation_1,flagged,error\n"));
        assert_eq!(ResultTable::read_csv(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn rejects_unknown_schema() {
        assert!(ResultTable::read_csv("# schema_version = 7\ndetuning\n".as_bytes()).is_err());
    }

    #[test]
    fn compare_reports_deviation() {
        let a = sample();
        let mut b = sample();
        b.rows[0].sigma_minus_abs = 0.25;
        let d = compare(&a, &b, |_| true).unwrap();
        assert!((d.max - 0.15).abs() < 1e-15);
        assert_eq!(d.count, 1);
        assert_eq!(compare(&a, &b, |x| x > 0.0).unwrap().count, 0);
    }

    proptest! {
        #[test]
        fn numbers_round_trip(x in proptest::num::f64::ANY) {
            let s = format_number(x);
            let y = parse_number(&s).unwrap();
            prop_assert_eq!(format_number(y), s);
            if x.is_finite() { prop_assert_eq!(x.to_bits(), y.to_bits()); }
        }
    }
}
