//! Robot-pool files: line-delimited JSON, one robot per record.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use hcp_core::robot::RobotSpec;

pub fn write_pool(path: &Path, pool: &[RobotSpec]) -> Result<()> {
    let file = std::fs::File::create(path)
        .with_context(|| format!("creating pool file {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for spec in pool {
        serde_json::to_writer(&mut w, spec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pool(path: &Path) -> Result<Vec<RobotSpec>> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening pool file {}", path.display()))?;
    let reader = std::io::BufReader::new(file);
    let mut pool = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let spec: RobotSpec = serde_json::from_str(&line)
            .with_context(|| format!("pool record {} in {}", i + 1, path.display()))?;
        spec.validate()?;
        pool.push(spec);
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hcp_core::robot::{build_pool, SamplingRanges, TypeTag};

    #[test]
    fn pool_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.jsonl");
        let pool = build_pool(
            &[TypeTag::A, TypeTag::I],
            3,
            &SamplingRanges::manipulator(),
            9,
        )
        .unwrap();
        write_pool(&path, &pool).unwrap();
        let back = read_pool(&path).unwrap();
        assert_eq!(pool, back);
    }

    #[test]
    fn invalid_records_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"not\": \"a robot\"}\n").unwrap();
        assert!(read_pool(&path).is_err());
    }
}
