//! Text, CSV and JSON renderings of query results.

use std::fmt;
use std::str::FromStr;

use serde_json::{Map, Number, Value as Json};
use ssq_core::engine::QueryResult;
use ssq_core::relation::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!(
                "unknown format `{s}` (expected table, csv or json)"
            )),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Table => "table",
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Renders a result; the text always ends with a newline.
pub fn render(result: &QueryResult, format: Format) -> String {
    match format {
        Format::Table => table(result),
        Format::Csv => csv(result),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json(result)).expect("serializable");
            s.push('\n');
            s
        }
    }
}

fn table(result: &QueryResult) -> String {
    let header = result.header();
    let rows: Vec<Vec<String>> = result
        .flat_rows()
        .iter()
        .map(|r| r.iter().map(Value::to_string).collect())
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            rows.iter()
                .map(|r| r[i].chars().count())
                .chain([header[i].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join(" | ").trim_end().to_string() + "\n"
    };
    let mut out = line(&header);
    let dashes: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&dashes.join("-+-"));
    out.push('\n');
    for r in &rows {
        out.push_str(&line(r));
    }
    out
}

fn csv(result: &QueryResult) -> String {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(result.header()).expect("in-memory write");
    for r in result.flat_rows() {
        w.write_record(r.iter().map(Value::to_string))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn json_value(v: &Value) -> Json {
    match v {
        Value::Int(i) => Json::from(*i),
        // Decimal text is a valid JSON number; arbitrary precision keeps it exact.
        Value::Dec(d) => Json::Number(
            d.to_string()
                .parse::<Number>()
                .expect("decimal is a JSON number"),
        ),
        Value::Str(s) => Json::String(s.clone()),
    }
}

fn object(columns: &[String], values: &[Value]) -> Json {
    Json::Object(
        columns
            .iter()
            .zip(values)
            .map(|(c, v)| (c.clone(), json_value(v)))
            .collect::<Map<_, _>>(),
    )
}

/// `{"subsets": [{"sid": k, "rows": [..]}]}` for subset results, a flat
/// array of row objects otherwise.
pub fn json(result: &QueryResult) -> Json {
    match result {
        QueryResult::Subsets { columns, subsets } => {
            let subsets = subsets
                .iter()
                .map(|s| {
                    let rows = s
                        .rows
                        .iter()
                        .map(|(_, vals)| object(columns, vals))
                        .collect();
                    let mut m = Map::new();
                    m.insert("sid".into(), Json::from(s.sid));
                    m.insert("rows".into(), Json::Array(rows));
                    Json::Object(m)
                })
                .collect();
            let mut m = Map::new();
            m.insert("subsets".into(), Json::Array(subsets));
            Json::Object(m)
        }
        QueryResult::Rows { columns, rows } => {
            Json::Array(rows.iter().map(|r| object(columns, r)).collect())
        }
    }
}
