//! JSON and JSON-lines persistence. Errors carry the file path and, for
//! JSON-lines, the 1-based record number of the first bad line.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::EntityGraph;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Reads one value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Record {
            path: path.display().to_string(),
            record: i + 1,
            reason: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    values: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let mut w = create(path)?;
    for v in values {
        serde_json::to_writer(&mut w, v)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Record {
        path: path.display().to_string(),
        record: 1,
        reason: e.to_string(),
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes raw bytes, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_graphs(path: &Path) -> Result<Vec<EntityGraph>> {
    read_jsonl(path)
}

pub fn write_graphs(path: &Path, graphs: &[EntityGraph]) -> Result<()> {
    write_jsonl(path, graphs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeRecord;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("graphxq-io-{}", std::process::id()));
        dir.join(name)
    }

    #[test]
    fn graphs_round_trip() {
        let mut n = NodeRecord::new([1.5, 2.0], vec![0.25, 1.0]);
        n.attributes.insert("area".into(), 0.1 + 0.2);
        let g = EntityGraph::new(
            vec![n.clone(), NodeRecord::new([4.0, 0.0], vec![0.0, 0.0])],
            [(1, 0)],
            Some(1),
        )
        .unwrap();
        let p = tmp("g.jsonl");
        write_graphs(&p, &[g.clone(), g.clone()]).unwrap();
        assert_eq!(read_graphs(&p).unwrap(), vec![g.clone(), g]);
    }

    #[test]
    fn bad_record_is_located() {
        let p = tmp("bad.jsonl");
        let good = r#"{"label":0,"nodes":[{"pos":[0,0],"features":[1]}],"edges":[]}"#;
        let bad = r#"{"label":0,"nodes":[{"pos":[0,0],"features":[1e999]}],"edges":[]}"#;
        write_bytes(&p, format!("{good}\n\n{bad}\n").as_bytes()).unwrap();
        match read_graphs(&p) {
            Err(Error::Record { record, path, .. }) => {
                assert_eq!(record, 3);
                assert!(path.ends_with("bad.jsonl"));
            }
            other => panic!("{other:?}"),
        }
        let edge = r#"{"label":0,"nodes":[{"pos":[0,0],"features":[1]}],"edges":[[0,4]]}"#;
        write_bytes(&p, edge.as_bytes()).unwrap();
        assert!(matches!(
            read_graphs(&p),
            Err(Error::Record { record: 1, .. })
        ));
    }

    #[test]
    fn nan_literal_rejected() {
        let p = tmp("nan.jsonl");
        let line = r#"{"label":null,"nodes":[{"pos":[0,0],"features":[NaN]}],"edges":[]}"#;
        write_bytes(&p, line.as_bytes()).unwrap();
        assert!(read_graphs(&p).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_graphs(Path::new("/nonexistent/x.jsonl")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.jsonl"));
    }
}
