use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::concepts::ConceptSchema;
use crate::error::{Error, Result};
use crate::graph::ClassSet;

fn record_error(source: &str, record: usize, reason: impl Into<String>) -> Error {
    Error::Record {
        path: source.into(),
        record,
        reason: reason.into(),
    }
}

/// Resolves `x-y` (either orientation) to the index of the pair in
/// `classes.pairs()`.
fn pair_index(classes: &ClassSet, key: &str) -> Option<usize> {
    classes
        .pairs()
        .iter()
        .position(|&(x, y)| key == classes.pair_key((x, y)) || key == classes.pair_key((y, x)))
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Reads a concept prior: header `pair,<concept>,...` and one row per class
/// pair with values in `[0, 1]`. Columns may come in any order; rows are
/// returned in `classes.pairs()` order.
pub fn parse_prior(
    reader: impl Read,
    source: &str,
    classes: &ClassSet,
    schema: &ConceptSchema,
) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| record_error(source, 0, e.to_string()))?
        .clone();
    if header.get(0) != Some("pair") {
        return Err(record_error(source, 0, "first column must be `pair`"));
    }
    let mut columns = Vec::new();
    for name in header.iter().skip(1) {
        let c = schema
            .index_of(name)
            .ok_or_else(|| record_error(source, 0, format!("unknown concept `{name}`")))?;
        if columns.contains(&c) {
            return Err(record_error(
                source,
                0,
                format!("duplicate concept `{name}`"),
            ));
        }
        columns.push(c);
    }
    if columns.len() != schema.len() {
        return Err(record_error(
            source,
            0,
            "header must list every concept once",
        ));
    }
    let n_pairs = classes.pairs().len();
    let mut out = Array2::from_elem((n_pairs, schema.len()), f64::NAN);
    let mut seen = vec![false; n_pairs];
    for (i, row) in rdr.records().enumerate() {
        let rec = i + 1;
        let row = row.map_err(|e| record_error(source, rec, e.to_string()))?;
        let key = row.get(0).unwrap_or_default();
        let p = pair_index(classes, key)
            .ok_or_else(|| record_error(source, rec, format!("unknown class pair `{key}`")))?;
        if std::mem::replace(&mut seen[p], true) {
            return Err(record_error(source, rec, format!("pair `{key}` repeated")));
        }
        if row.len() != columns.len() + 1 {
            return Err(record_error(source, rec, "wrong number of fields"));
        }
        for (field, &c) in row.iter().skip(1).zip(&columns) {
            let v: f64 = field
                .parse()
                .map_err(|_| record_error(source, rec, format!("`{field}` is not a number")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(record_error(
                    source,
                    rec,
                    format!("prior value {v} outside [0, 1]"),
                ));
            }
            out[[p, c]] = v;
        }
    }
    if let Some(p) = seen.iter().position(|s| !s) {
        return Err(record_error(
            source,
            0,
            format!("missing pair `{}`", classes.pair_key(classes.pairs()[p])),
        ));
    }
    Ok(out)
}

pub fn load_prior(path: &Path, classes: &ClassSet, schema: &ConceptSchema) -> Result<Array2<f64>> {
    parse_prior(open(path)?, &path.display().to_string(), classes, schema)
}

pub fn write_prior(
    writer: impl Write,
    prior: &Array2<f64>,
    classes: &ClassSet,
    schema: &ConceptSchema,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("csv write failed: {e}"));
    let mut header = vec!["pair".to_string()];
    header.extend(schema.names().into_iter().map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for (p, row) in classes.pairs().into_iter().zip(prior.rows()) {
        let mut rec = vec![classes.pair_key(p)];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))
}

/// Class-hop risk `|x - y|` for classes ordered along a progression.
pub fn class_hop_risk(classes: &ClassSet) -> Vec<f64> {
    classes
        .pairs()
        .into_iter()
        .map(|(x, y)| y.abs_diff(x) as f64)
        .collect()
}

/// Reads `pair,risk` rows; risks must be positive integers.
pub fn parse_risk(reader: impl Read, source: &str, classes: &ClassSet) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| record_error(source, 0, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["pair", "risk"] {
        return Err(record_error(source, 0, "header must be `pair,risk`"));
    }
    let n_pairs = classes.pairs().len();
    let mut out = vec![f64::NAN; n_pairs];
    for (i, row) in rdr.records().enumerate() {
        let rec = i + 1;
        let row = row.map_err(|e| record_error(source, rec, e.to_string()))?;
        let key = row.get(0).unwrap_or_default();
        let p = pair_index(classes, key)
            .ok_or_else(|| record_error(source, rec, format!("unknown class pair `{key}`")))?;
        if !out[p].is_nan() {
            return Err(record_error(source, rec, format!("pair `{key}` repeated")));
        }
        let field = row.get(1).unwrap_or_default();
        let v: f64 = field
            .parse()
            .map_err(|_| record_error(source, rec, format!("`{field}` is not a number")))?;
        if !(v >= 1.0 && v.fract() == 0.0 && v.is_finite()) {
            return Err(record_error(
                source,
                rec,
                format!("risk {v} is not a positive integer"),
            ));
        }
        out[p] = v;
    }
    if let Some(p) = out.iter().position(|v| v.is_nan()) {
        return Err(record_error(
            source,
            0,
            format!("missing pair `{}`", classes.pair_key(classes.pairs()[p])),
        ));
    }
    Ok(out)
}

pub fn load_risk(path: &Path, classes: &ClassSet) -> Result<Vec<f64>> {
    parse_risk(open(path)?, &path.display().to_string(), classes)
}
