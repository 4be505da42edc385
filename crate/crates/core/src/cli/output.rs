//! CSV tables and atomic file output.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

fn io(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, creating parent directories as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(io)?;
    Ok(())
}

/// An in-memory CSV table with a mandatory header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    /// Trailing row `status,<message>,...` marking a run that stopped early.
    pub fn push_status(&mut self, message: &str) {
        let mut row = vec![String::new(); self.header.len()];
        row[0] = "status".into();
        if row.len() > 1 {
            row[1] = message.into();
        }
        self.rows.push(row);
    }

    /// Values of the named column.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    /// RFC 4180 bytes with CRLF record terminators.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// The table without the named columns, e.g. wall-clock timings.
    pub fn without(&self, drop: &[&str]) -> Self {
        let keep: Vec<usize> = (0..self.header.len())
            .filter(|&k| !drop.contains(&self.header[k].as_str()))
            .collect();
        Self {
            header: keep.iter().map(|&k| self.header[k].clone()).collect(),
            rows: self.rows.iter().map(|r| keep.iter().map(|&k| r[k].clone()).collect()).collect(),
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn table_bytes_and_columns() {
        let mut t = Table::new(&["n", "note", "runtime_s"]);
        t.push(vec!["1".into(), "a,b".into(), "0.5".into()]);
        t.push_status("error: boom");
        assert_eq!(
            String::from_utf8(t.to_bytes()).unwrap(),
            "n,note,runtime_s\r\n1,\"a,b\",0.5\r\nstatus,error: boom,\r\n"
        );
        assert_eq!(t.without(&["runtime_s"]).header(), ["n", "note"]);
        assert_eq!(t.column("n").unwrap(), ["1", "status"]);
        assert_eq!(num(0.1), "0.1");
    }
}
