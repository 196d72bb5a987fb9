//! JSON and CSV report writers. Output depends only on the values written,
//! so identical runs produce identical bytes.

use std::io::Write;
use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use crate::io::create;

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(to_json(value)?.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Writes `rows` under `header`, with the schema tag as the first column.
pub fn write_csv(path: &Path, schema: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "schema,{}", header.join(","))?;
    for row in rows {
        anyhow::ensure!(
            row.len() == header.len(),
            "CSV row has {} fields, header has {}",
            row.len(),
            header.len()
        );
        writeln!(w, "{schema},{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Writes JSON to `path`, or to stdout when no path is given.
pub fn emit<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(to_json(value)?.as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![vec!["iid".to_string(), num(0.1), num(1.0 / 3.0)]];
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        write_csv(&a, "x/1", &["strategy", "p", "variance"], &rows).unwrap();
        write_csv(&b, "x/1", &["strategy", "p", "variance"], &rows).unwrap();
        let text = std::fs::read_to_string(&a).unwrap();
        assert_eq!(text, std::fs::read_to_string(&b).unwrap());
        assert_eq!(text.lines().next(), Some("schema,strategy,p,variance"));
        let last: f64 = text
            .lines()
            .nth(1)
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(last, 1.0 / 3.0);
    }
}
