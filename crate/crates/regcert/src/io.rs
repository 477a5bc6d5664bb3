//! CSV matrices in, JSON and CSV artifacts out.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use regcert_core::{Matrix, Rational};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

/// Header-free CSV, one matrix row per record. Errors carry the 1-based
/// line of the offending record.
pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(file, path)
}

pub fn parse_matrix(reader: impl std::io::Read, path: &Path) -> Result<Matrix, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            CliError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::parse(path, Some(line), format!("column {}: {field:?} is not a finite number", col + 1)))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::parse(
                    path,
                    Some(line),
                    format!("{} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, None, "no rows".into()));
    }
    Ok(Matrix::from_rows(&rows)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, Some(e.line()), e.to_string()))
}

/// Write to a temporary sibling, flush, then rename over `path`, so the
/// target either holds the old content or the complete new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))
}

/// Serialise records with a header row into an atomically written CSV.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::internal(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:?}"))).map_err(|e| CliError::internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::internal(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// `"numerator/denominator"`, denominator always present.
pub fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let (n, d) = s.split_once('/')?;
    let (n, d): (BigInt, BigInt) = (n.parse().ok()?, d.parse().ok()?);
    (d != BigInt::from(0)).then(|| Rational::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments_and_blank_lines() {
        let m = parse_matrix("# header\n1, 2\n\n3,4\n".as_bytes(), Path::new("m.csv")).unwrap();
        assert_eq!(m.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn bad_field_names_line() {
        let e = parse_matrix("1,2\n3,x\n".as_bytes(), Path::new("m.csv")).unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_matrix("1,2\n3\n".as_bytes(), Path::new("m.csv")).unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_matrix("1,2\n3,inf\n".as_bytes(), Path::new("m.csv")).unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn rationals_round_trip() {
        let r = Rational::new(3.into(), (-12).into());
        let s = rational_string(&r);
        assert_eq!(s, "-1/4");
        assert_eq!(parse_rational(&s), Some(r));
        assert_eq!(rational_string(&Rational::from_integer(5.into())), "5/1");
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_json(&p, &vec![1, 2, 3]).unwrap();
        write_json(&p, &vec![4]).unwrap();
        let back: Vec<i32> = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(back, vec![4]);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
