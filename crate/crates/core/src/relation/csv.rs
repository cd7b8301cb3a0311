use std::io::Read;
use std::path::Path;

use super::decimal::Decimal;
use super::schema::{Attribute, Schema};
use super::value::{Kind, Value};
use super::Relation;
use crate::error::{Error, Result};

/// Loads a relation from a CSV file with a header row.
///
/// Without a declared schema each column is Int if every cell parses as an
/// integer, else Dec if every cell parses as a decimal, else Str.
pub fn load_csv(path: impl AsRef<Path>, name: &str, declared: Option<&Schema>) -> Result<Relation> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Load(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file, name, declared)
}

pub fn read_csv(input: impl Read, name: &str, declared: Option<&Schema>) -> Result<Relation> {
    let load_err = |e: ::csv::Error| Error::Load(format!("`{name}`: {e}"));
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header: Vec<String> = reader
        .headers()
        .map_err(load_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(Error::Load(format!("`{name}`: missing header row")));
    }

    let mut cells: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(load_err)?;
        if record.len() != header.len() {
            return Err(Error::Load(format!(
                "`{name}` line {}: expected {} fields, found {}",
                i + 2,
                header.len(),
                record.len()
            )));
        }
        if let Some(col) = record.iter().position(str::is_empty) {
            return Err(Error::Load(format!(
                "`{name}` line {}: missing value for `{}`",
                i + 2,
                header[col]
            )));
        }
        cells.push(record.iter().map(str::to_string).collect());
    }

    let schema = match declared {
        Some(s) => {
            let names_match = s.arity() == header.len()
                && s.attributes()
                    .iter()
                    .zip(&header)
                    .all(|(a, h)| a.name.eq_ignore_ascii_case(h));
            if !names_match {
                return Err(Error::Load(format!(
                    "`{name}`: header ({}) does not match declared schema {s}",
                    header.join(", ")
                )));
            }
            Schema::from_attributes(
                s.attributes()
                    .iter()
                    .map(|a| Attribute {
                        table: name.to_string(),
                        ..a.clone()
                    })
                    .collect(),
            )
        }
        None => {
            let kinds =
                (0..header.len()).map(|c| infer_kind(cells.iter().map(|row| row[c].as_str())));
            Schema::new(name, header.iter().cloned().zip(kinds))
        }
    }
    .map_err(|e| match e {
        Error::DuplicateAttribute(a) => Error::Load(format!("duplicate column `{a}`")),
        other => other,
    })?;

    let rows = cells
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .zip(schema.attributes())
                .map(|(text, a)| {
                    Value::parse_as(text, a.kind).map_err(|e| {
                        let detail = match e {
                            Error::Load(m) => m,
                            other => other.to_string(),
                        };
                        Error::Load(format!(
                            "`{name}` line {}, column `{}`: {detail}",
                            i + 2,
                            a.name
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Relation::new(name, schema, rows)
}

fn infer_kind<'a>(mut cells: impl Iterator<Item = &'a str> + Clone) -> Kind {
    if cells.clone().all(|c| c.parse::<i64>().is_ok()) {
        Kind::Int
    } else if cells.all(|c| c.parse::<Decimal>().is_ok()) {
        Kind::Dec
    } else {
        Kind::Str
    }
}

impl Relation {
    /// Serializes the extension as CSV with a header row of attribute names.
    pub fn to_csv(&self) -> String {
        let mut w = ::csv::Writer::from_writer(Vec::new());
        w.write_record(self.schema().attributes().iter().map(|a| a.name.as_str()))
            .expect("in-memory write");
        for t in self.tuples() {
            w.write_record(t.values.iter().map(Value::to_string))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}
