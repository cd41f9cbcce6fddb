//! Minimal CSV writing. Floats use Rust's shortest round-trip
//! formatting, so identical runs produce byte-identical files.

use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

pub struct CsvWriter {
    out: BufWriter<std::fs::File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<CsvWriter> {
        let file = std::fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))?;
        let mut w = CsvWriter {
            out: BufWriter::new(file),
        };
        w.write_raw_row(header)?;
        Ok(w)
    }

    pub fn write_raw_row(&mut self, fields: &[&str]) -> Result<()> {
        let mut first = true;
        for f in fields {
            debug_assert!(!f.contains(',') && !f.contains('\n'));
            if !first {
                self.out.write_all(b",")?;
            }
            self.out.write_all(f.as_bytes())?;
            first = false;
        }
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_row(&mut self, fields: &[CsvField]) -> Result<()> {
        let strings: Vec<String> = fields.iter().map(|f| f.render()).collect();
        let refs: Vec<&str> = strings.iter().map(|s| s.as_str()).collect();
        self.write_raw_row(&refs)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub enum CsvField<'a> {
    Str(&'a str),
    U64(u64),
    F64(f64),
    Bool(bool),
}

impl CsvField<'_> {
    fn render(&self) -> String {
        match self {
            CsvField::Str(s) => (*s).to_string(),
            CsvField::U64(v) => v.to_string(),
            CsvField::F64(v) => format!("{v}"),
            CsvField::Bool(b) => (*b as u8).to_string(),
        }
    }
}

/// Convenience macro-free row builder.
pub fn f(v: f64) -> CsvField<'static> {
    CsvField::F64(v)
}

pub fn u(v: u64) -> CsvField<'static> {
    CsvField::U64(v)
}

pub fn b(v: bool) -> CsvField<'static> {
    CsvField::Bool(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_deterministic_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        for p in [&p1, &p2] {
            let mut w = CsvWriter::create(p, &["x", "y"]).unwrap();
            w.write_row(&[f(0.1 + 0.2), u(7)]).unwrap();
            w.finish().unwrap();
        }
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        let text = std::fs::read_to_string(&p1).unwrap();
        assert_eq!(text, "x,y\n0.30000000000000004,7\n");
    }
}
