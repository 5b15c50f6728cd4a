//! Output schemas.
//!
//! CSV files start with `# key=value` metadata lines followed by a header
//! row. JSON files hold `{"meta": {...}, "rows": [...]}`, except the
//! exceptional-point file which has `points` and `s2_counts` instead of
//! `rows`. Floats are written in shortest round-trip form.
//!
//! | file | columns |
//! |------|---------|
//! | spectrum | `g, N, x, E, on_baseline[, oracle_dE]` |
//! | baselines | `g, E_<N>_<branch>...` |
//! | contours | `baseline_N, branch, polyline_id, vertex_index, delta, g, closed_flag` |
//! | exceptional | `N, branch, delta, g, x_p, energy, class, constraint_value, oracle_nearest, oracle_second` |
//! | oracle check | `check, g, value, tolerance, pass` |
//!
//! `on_baseline` is empty or `<N>:<branch>`; `closed_flag` and `pass` are
//! 0 or 1.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Ordered `key=value` metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta(pub Vec<(String, String)>);

impl Meta {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    /// Floats are stored in shortest round-trip form.
    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, format!("{value:?}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn to_json(&self) -> Value {
        Value::Object(
            self.0
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Float(v) => format!("{v:?}"),
            Field::Int(v) => v.to_string(),
            Field::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Float(v) => serde_json::Number::from_f64(*v)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Field::Int(v) => Value::from(*v),
            Field::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Meta,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Field>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> CliError + '_ {
    move |source| CliError::Json {
        path: path.to_path_buf(),
        source,
    }
}

fn meta_lines(meta: &Meta) -> String {
    meta.0.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

/// Writes `table` to `<stem>.<ext>` and returns the path.
pub fn write_table(table: &Table, stem: &Path, format: Format) -> CliResult<PathBuf> {
    let path = stem.with_extension(format.extension());
    let bytes = match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
            w.write_record(&table.columns).map_err(csv_err(&path))?;
            for row in &table.rows {
                w.write_record(row.iter().map(Field::csv))
                    .map_err(csv_err(&path))?;
            }
            let body = w.into_inner().map_err(|e| io_err(&path)(e.into_error()))?;
            let mut out = meta_lines(&table.meta).into_bytes();
            out.extend(body);
            out
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    Value::Object(
                        table
                            .columns
                            .iter()
                            .cloned()
                            .zip(row.iter().map(Field::json))
                            .collect::<Map<_, _>>(),
                    )
                })
                .collect();
            let doc = serde_json::json!({ "meta": table.meta.to_json(), "rows": rows });
            pretty(&doc, &path)?
        }
    };
    write_bytes(&path, &bytes)?;
    Ok(path)
}

fn pretty(doc: &Value, path: &Path) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(doc).map_err(json_err(path))?;
    out.push(b'\n');
    Ok(out)
}

fn split_meta(text: &str) -> (Meta, &str) {
    let mut meta = Meta::default();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix("# ") {
        let (head, tail) = line.split_once('\n').unwrap_or((line, ""));
        if let Some((k, v)) = head.split_once('=') {
            meta.push(k, v);
        }
        rest = tail;
    }
    (meta, rest)
}

fn meta_from_json(v: &Value) -> Meta {
    let mut meta = Meta::default();
    if let Some(obj) = v.as_object() {
        for (k, v) in obj {
            meta.push(k, v.as_str().unwrap_or_default());
        }
    }
    meta
}

/// Reads a CSV or JSON table written by [`write_table`] into typed rows;
/// the format follows the file extension.
pub fn read_table<T: DeserializeOwned>(path: &Path) -> CliResult<(Meta, Vec<T>)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    if path.extension().is_some_and(|e| e == "json") {
        #[derive(Deserialize)]
        struct Doc<T> {
            meta: Value,
            rows: Vec<T>,
        }
        let doc: Doc<T> = serde_json::from_str(&text).map_err(json_err(path))?;
        return Ok((meta_from_json(&doc.meta), doc.rows));
    }
    let (meta, body) = split_meta(&text);
    let rows = csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(csv_err(path))?;
    Ok((meta, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub g: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub x: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub on_baseline: String,
    #[serde(rename = "oracle_dE", default)]
    pub oracle_de: Option<f64>,
}

/// Wide baseline rows: `g` plus one `E_<N>_<branch>` column per baseline.
pub type BaselineRow = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRecord {
    #[serde(rename = "baseline_N")]
    pub baseline_n: u32,
    pub branch: String,
    pub polyline_id: usize,
    pub vertex_index: usize,
    pub delta: f64,
    pub g: f64,
    pub closed_flag: u8,
}

impl ContourRecord {
    pub const COLUMNS: [&'static str; 7] = [
        "baseline_N",
        "branch",
        "polyline_id",
        "vertex_index",
        "delta",
        "g",
        "closed_flag",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalRecord {
    #[serde(rename = "N")]
    pub n: u32,
    pub branch: String,
    pub delta: f64,
    pub g: f64,
    pub x_p: f64,
    pub energy: f64,
    pub class: String,
    pub constraint_value: f64,
    #[serde(default)]
    pub oracle_nearest: Option<f64>,
    #[serde(default)]
    pub oracle_second: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S2Count {
    #[serde(rename = "N")]
    pub n: u32,
    pub branch: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckRow {
    pub check: String,
    pub g: f64,
    pub value: f64,
    pub tolerance: f64,
    pub pass: u8,
}

/// Exceptional points with per-baseline S2 counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalDoc {
    pub meta: Meta,
    pub points: Vec<ExceptionalRecord>,
    pub s2_counts: Vec<S2Count>,
}

const EXCEPTIONAL_COLUMNS: [&str; 10] = [
    "N",
    "branch",
    "delta",
    "g",
    "x_p",
    "energy",
    "class",
    "constraint_value",
    "oracle_nearest",
    "oracle_second",
];

fn opt(v: Option<f64>) -> Field {
    match v {
        Some(v) => Field::Float(v),
        None => Field::Text(String::new()),
    }
}

/// JSON keeps the counts as an array; CSV carries them as
/// `s2_count_<N>_<branch>` metadata.
pub fn write_exceptional(doc: &ExceptionalDoc, stem: &Path, format: Format) -> CliResult<PathBuf> {
    let path = stem.with_extension(format.extension());
    match format {
        Format::Json => {
            let value = serde_json::json!({
                "meta": doc.meta.to_json(),
                "points": doc.points,
                "s2_counts": doc.s2_counts,
            });
            write_bytes(&path, &pretty(&value, &path)?)?;
            Ok(path)
        }
        Format::Csv => {
            let mut meta = doc.meta.clone();
            for c in &doc.s2_counts {
                meta.push(&format!("s2_count_{}_{}", c.n, c.branch), c.count);
            }
            let rows = doc
                .points
                .iter()
                .map(|r| {
                    vec![
                        Field::Int(r.n.into()),
                        Field::Text(r.branch.clone()),
                        Field::Float(r.delta),
                        Field::Float(r.g),
                        Field::Float(r.x_p),
                        Field::Float(r.energy),
                        Field::Text(r.class.clone()),
                        Field::Float(r.constraint_value),
                        opt(r.oracle_nearest),
                        opt(r.oracle_second),
                    ]
                })
                .collect();
            let table = Table {
                meta,
                columns: EXCEPTIONAL_COLUMNS.iter().map(|c| c.to_string()).collect(),
                rows,
            };
            write_table(&table, stem, format)
        }
    }
}

pub fn read_exceptional(path: &Path) -> CliResult<ExceptionalDoc> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        #[derive(Deserialize)]
        struct Doc {
            meta: Value,
            points: Vec<ExceptionalRecord>,
            s2_counts: Vec<S2Count>,
        }
        let doc: Doc = serde_json::from_str(&text).map_err(json_err(path))?;
        return Ok(ExceptionalDoc {
            meta: meta_from_json(&doc.meta),
            points: doc.points,
            s2_counts: doc.s2_counts,
        });
    }
    let (all, points) = read_table::<ExceptionalRecord>(path)?;
    let mut meta = Meta::default();
    let mut s2_counts = Vec::new();
    for (k, v) in all.0 {
        let Some(rest) = k.strip_prefix("s2_count_") else {
            meta.0.push((k, v));
            continue;
        };
        let parsed = rest.split_once('_').and_then(|(n, branch)| {
            Some(S2Count {
                n: n.parse().ok()?,
                branch: branch.to_string(),
                count: v.parse().ok()?,
            })
        });
        s2_counts.push(parsed.ok_or_else(|| CliError::Schema {
            path: path.to_path_buf(),
            message: format!("bad metadata entry `{k}={v}`"),
        })?);
    }
    Ok(ExceptionalDoc {
        meta,
        points,
        s2_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut meta = Meta::default();
        meta.push("omega", 1.0);
        meta.push("note", "a=b");
        Table {
            meta,
            columns: ["g", "N", "x", "E", "on_baseline"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows: vec![
                vec![
                    Field::Float(0.1),
                    Field::Int(0),
                    Field::Float(-1.0 / 3.0),
                    Field::Float(1e-300),
                    Field::Text(String::new()),
                ],
                vec![
                    Field::Float(0.2),
                    Field::Int(1),
                    Field::Float(1.3),
                    Field::Float(1.26),
                    Field::Text("1:plus".into()),
                ],
            ],
        }
    }

    #[test]
    fn tables_round_trip_in_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        for format in [Format::Csv, Format::Json] {
            let path = write_table(&sample(), &dir.path().join("t"), format).unwrap();
            let (meta, rows) = read_table::<SpectrumRow>(&path).unwrap();
            assert_eq!(meta.get("note"), Some("a=b"));
            assert_eq!(meta.get("omega"), Some("1"));
            assert_eq!(rows.len(), 2);
            assert_eq!(rows[0].x, -1.0 / 3.0);
            assert_eq!(rows[0].energy, 1e-300);
            assert_eq!(rows[0].oracle_de, None);
            assert_eq!(rows[1].on_baseline, "1:plus");
        }
    }

    #[test]
    fn exceptional_round_trip_in_both_formats() {
        let mut meta = Meta::default();
        meta.push("delta", 1.2);
        let doc = ExceptionalDoc {
            meta,
            points: vec![ExceptionalRecord {
                n: 1,
                branch: "plus".into(),
                delta: 1.2,
                g: 0.2,
                x_p: 1.3,
                energy: 1.26,
                class: "S1".into(),
                constraint_value: -2.5e-17,
                oracle_nearest: Some(1e-15),
                oracle_second: None,
            }],
            s2_counts: vec![S2Count {
                n: 1,
                branch: "plus".into(),
                count: 1,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        for format in [Format::Csv, Format::Json] {
            let path = write_exceptional(&doc, &dir.path().join("e"), format).unwrap();
            assert_eq!(read_exceptional(&path).unwrap(), doc);
        }
    }
}
