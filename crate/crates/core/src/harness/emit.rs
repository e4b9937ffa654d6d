//! Files: CSV tables, JSON records and raw field dumps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, ScalarField};

/// A row type with a fixed CSV header.
pub trait Table: Serialize {
    const HEADER: &'static [&'static str];
}

/// Writes `rows` as CSV with a header row and `\n` line ends.
pub fn write_csv<T: Table>(writer: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(T::HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<T: Table>(path: &Path, rows: &[T]) -> Result<()> {
    write_csv(fs::File::create(path)?, rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Sidecar of a field dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldHeader {
    pub format: String,
    /// `[n_theta, n_r]`; the angle is the slow index.
    pub shape: [usize; 2],
    pub grid: GridSpec,
    pub t: f64,
}

const FORMAT: &str = "f64-le";

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `field` to `path` as little-endian `f64`, row-major over
/// `(angle, radius)`, with a JSON sidecar next to it.
pub fn dump_field(path: &Path, field: &ScalarField, t: f64) -> Result<PathBuf> {
    let g = field.grid();
    let bytes: Vec<u8> = field.values().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes)?;
    let header = FieldHeader { format: FORMAT.into(), shape: [g.n_theta(), g.n_r()], grid: g.spec(), t };
    let side = sidecar(path);
    write_json(&side, &header)?;
    Ok(side)
}

/// Reads a dump written by [`dump_field`].
pub fn load_field(path: &Path) -> Result<ScalarField> {
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(sidecar(path))?)?;
    if header.format != FORMAT {
        return Err(Error::InvalidInput(format!("unsupported field format {}", header.format)));
    }
    let grid = header.grid.build()?;
    if header.shape != [grid.n_theta(), grid.n_r()] {
        return Err(Error::InvalidInput(format!("shape {:?} does not match the grid", header.shape)));
    }
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::InvalidInput(format!("{} holds {} bytes, expected {}", path.display(), bytes.len(), 8 * grid.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    ScalarField::from_values(&grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: usize,
    }

    impl Table for Row {
        const HEADER: &'static [&'static str] = &["a", "b"];
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut out = Vec::new();
        write_csv::<Row>(&mut out, &[]).unwrap();
        assert_eq!(out, b"a,b\n");
    }

    #[test]
    fn one_row_uses_plain_decimals() {
        let mut out = Vec::new();
        write_csv(&mut out, &[Row { a: 0.25, b: 3 }]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a,b\n0.25,3\n");
    }

    #[test]
    fn field_dump_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_grid(1.0, 16, 8).unwrap();
        let f = ScalarField::from_cartesian_fn(&g, |x, y| (3.0 * x).sin() / (1.0 + y * y) + 1e-300);
        let path = dir.path().join("omega.f64");
        dump_field(&path, &f, 0.5).unwrap();
        let back = load_field(&path).unwrap();
        assert_eq!(**back.grid(), *g);
        assert!(f.values().iter().zip(back.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn truncated_dump_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_grid(1.0, 8, 8).unwrap();
        let path = dir.path().join("omega.f64");
        dump_field(&path, &ScalarField::constant(&g, 1.0), 0.0).unwrap();
        fs::write(&path, [0u8; 24]).unwrap();
        assert!(load_field(&path).is_err());
    }
}
