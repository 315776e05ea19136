//! CSV tables of 64-bit floats written with the shortest decimal form that
//! parses back to the same value.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Shortest round-trip representation; `NaN`, `inf` and `-inf` for
/// non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

/// A header plus rows of equal length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|x| fmt_f64(*x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(self.to_csv_string().as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = BufReader::new(fs::File::open(path)?);
        let mut lines = f.lines();
        let header: Vec<String> = match lines.next() {
            Some(h) => h?.split(',').map(str::to_string).collect(),
            None => return Err(Error::Io(format!("{} is empty", path.display()))),
        };
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Io(format!("{} line {}: {e}", path.display(), k + 2)))?;
            if row.len() != header.len() {
                return Err(Error::Io(format!("{} line {}: wrong width", path.display(), k + 2)));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}
