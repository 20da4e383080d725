//! Line-oriented JSON persistence for run state.
//!
//! Every mutable file in a run directory is JSONL: one record per line,
//! appended and flushed as work completes. A process killed mid-write can
//! leave at most one torn line at the end of a file, and that tail is the
//! only thing loading will repair; a malformed line followed by a good one
//! means real corruption and is refused.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("could not encode record: {0}")]
    Encode(serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Append-mode JSONL writer. Each record goes out as a single write of
/// `json\n` followed by a flush, so a crash can tear at most the line
/// being written.
pub struct JsonlWriter {
    path: PathBuf,
    file: fs::File,
}

impl JsonlWriter {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        Ok(Self { path, file })
    }

    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(record).map_err(StoreError::Encode)?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))
    }
}

/// Loads a JSONL file, truncating a torn final line in place.
///
/// A missing file is an empty store. Complete lines (newline-terminated)
/// must all parse; a trailing segment without a final newline is taken as
/// an interrupted append, cut off the file, and ignored.
pub fn load_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };

    let mut records = Vec::new();
    let mut start = 0usize;
    let mut line_no = 0usize;
    while start < bytes.len() {
        line_no += 1;
        let Some(off) = bytes[start..].iter().position(|&b| b == b'\n') else {
            // torn tail from an interrupted append; drop it on disk too
            fs::OpenOptions::new()
                .write(true)
                .open(path)
                .and_then(|f| f.set_len(start as u64))
                .map_err(io_err(path))?;
            break;
        };
        let line = &bytes[start..start + off];
        start += off + 1;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let record = serde_json::from_slice(line).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Replaces a JSONL file wholesale: the records are written to a sibling
/// temporary file and renamed over the target, so readers never observe a
/// half-written state.
pub fn rewrite_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), StoreError> {
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record).map_err(StoreError::Encode)?;
        buf.push(b'\n');
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, &buf).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Rec {
        id: u32,
        text: String,
    }

    fn rec(id: u32) -> Rec {
        Rec {
            id,
            text: format!("record {id}"),
        }
    }

    #[test]
    fn append_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let mut w = JsonlWriter::open(&path).unwrap();
        for i in 0..5 {
            w.append(&rec(i)).unwrap();
        }
        drop(w);
        let mut w = JsonlWriter::open(&path).unwrap();
        w.append(&rec(5)).unwrap();
        drop(w);
        let loaded: Vec<Rec> = load_jsonl(&path).unwrap();
        assert_eq!(loaded, (0..6).map(rec).collect::<Vec<_>>());
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let loaded: Vec<Rec> = load_jsonl(&dir.path().join("absent.jsonl")).unwrap();
        assert!(loaded.is_empty());
    }

    #[test]
    fn torn_final_line_is_truncated_and_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let mut w = JsonlWriter::open(&path).unwrap();
        w.append(&rec(0)).unwrap();
        w.append(&rec(1)).unwrap();
        drop(w);
        let good_len = fs::metadata(&path).unwrap().len();
        let mut f = fs::OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"id\":2,\"tex").unwrap();
        drop(f);

        let loaded: Vec<Rec> = load_jsonl(&path).unwrap();
        assert_eq!(loaded, vec![rec(0), rec(1)]);
        assert_eq!(fs::metadata(&path).unwrap().len(), good_len);

        // the repaired file appends cleanly
        let mut w = JsonlWriter::open(&path).unwrap();
        w.append(&rec(2)).unwrap();
        drop(w);
        let loaded: Vec<Rec> = load_jsonl(&path).unwrap();
        assert_eq!(loaded, vec![rec(0), rec(1), rec(2)]);
    }

    #[test]
    fn corrupt_interior_line_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        fs::write(&path, "{\"id\":0,\"text\":\"a\"}\nnot json\n{\"id\":1,\"text\":\"b\"}\n")
            .unwrap();
        let err = load_jsonl::<Rec>(&path).unwrap_err();
        assert!(matches!(err, StoreError::Corrupt { line: 2, .. }), "{err}");
    }

    #[test]
    fn blank_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        fs::write(&path, "{\"id\":0,\"text\":\"a\"}\n\n{\"id\":1,\"text\":\"b\"}\n").unwrap();
        let loaded: Vec<Rec> = load_jsonl(&path).unwrap();
        assert_eq!(loaded.len(), 2);
    }

    #[test]
    fn rewrite_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.jsonl");
        rewrite_jsonl(&path, &[rec(0), rec(1)]).unwrap();
        rewrite_jsonl(&path, &[rec(7)]).unwrap();
        let loaded: Vec<Rec> = load_jsonl(&path).unwrap();
        assert_eq!(loaded, vec![rec(7)]);
    }
}
