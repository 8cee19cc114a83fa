//! File plumbing: dataset CSV, atomic writes, fixed-precision numbers.

use std::collections::HashMap;
use std::path::Path;

use serde::Serializer;
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::estimators::Subgroup;

/// 17 significant digits, enough to round-trip any f64.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn serialize_sig17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(format_sig17(*x)).map_err(serde::ser::Error::custom)?;
    serde::Serialize::serialize(&raw, s)
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Parse a `sample_id,value` CSV. Subgroups keep first-appearance order.
pub fn parse_dataset(text: &str, origin: &str) -> Result<Vec<Subgroup>> {
    let parse_err = |message: String| Error::Parse {
        path: origin.to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "sample_id" || &headers[1] != "value" {
        return Err(parse_err(format!(
            "expected header `sample_id,value`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<f64>> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(format!("line {line}: {e}")))?;
        if record.len() != 2 {
            return Err(parse_err(format!("line {line}: expected 2 fields, got {}", record.len())));
        }
        let id = record[0].to_string();
        let value: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(format!("line {line}: {:?} is not a number", &record[1])))?;
        if !value.is_finite() {
            return Err(parse_err(format!("line {line}: value must be finite")));
        }
        groups
            .entry(id.clone())
            .or_insert_with(|| {
                order.push(id);
                Vec::new()
            })
            .push(value);
    }
    if order.is_empty() {
        return Err(parse_err("dataset contains no observations".to_string()));
    }
    order
        .into_iter()
        .map(|id| {
            let values = groups.remove(&id).expect("grouped");
            Subgroup::new(id, values)
        })
        .collect()
}

pub fn read_dataset(path: &Path) -> Result<Vec<Subgroup>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

pub fn dataset_to_csv(samples: &[Subgroup]) -> String {
    let mut out = String::from("sample_id,value\n");
    for s in samples {
        for v in s.values() {
            out.push_str(&format!("{},{}\n", csv_field(&s.id), format_sig17(*v)));
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
