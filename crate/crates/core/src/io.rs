//! Text serialization of wave fields.
//!
//! A field `stem` is stored as two files:
//!
//! - `stem.json`: header `{ "format": "evolparam-field", "version": 1, "n_s", "grid": {n_x, n_t, l_x, l_t, c, hbar} }`
//! - `stem.csv`: header row `s,i_x,i_t,re,im`, one row per amplitude.
//!
//! Numbers are written in shortest round-trip form, so reading back is exact.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::WaveField;
use crate::lattice::SpacetimeGrid;

const FORMAT: &str = "evolparam-field";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub version: u32,
    pub n_s: usize,
    pub grid: SpacetimeGrid,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("csv"))
}

pub fn field_to_csv(field: &WaveField) -> Result<String> {
    let g = field.grid();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "i_x", "i_t", "re", "im"])?;
    for s in 0..field.n_s() {
        for i in 0..g.n_x {
            for j in 0..g.n_t {
                let z = field.at(s, i, j);
                w.write_record([s.to_string(), i.to_string(), j.to_string(), z.re.to_string(), z.im.to_string()])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn field_from_csv(header: &FieldHeader, text: &str) -> Result<WaveField> {
    if header.format != FORMAT || header.version != 1 {
        return Err(Error::Format(format!("unsupported field header {} v{}", header.format, header.version)));
    }
    header.grid.validate()?;
    let g = header.grid;
    let total = header.n_s * g.cells();
    let mut amps = vec![Complex64::new(0.0, 0.0); total];
    let mut seen = vec![false; total];
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let cols: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if cols != ["s", "i_x", "i_t", "re", "im"] {
        return Err(Error::Format(format!("unexpected columns {cols:?}")));
    }
    for (line, rec) in r.deserialize::<(usize, usize, usize, f64, f64)>().enumerate() {
        let (s, i, j, re, im) = rec?;
        if s >= header.n_s || i >= g.n_x || j >= g.n_t {
            return Err(Error::Format(format!("row {}: index ({s}, {i}, {j}) out of range", line + 2)));
        }
        let k = (s * g.n_x + i) * g.n_t + j;
        if seen[k] {
            return Err(Error::Format(format!("row {}: duplicate entry ({s}, {i}, {j})", line + 2)));
        }
        seen[k] = true;
        amps[k] = Complex64::new(re, im);
    }
    if let Some(k) = seen.iter().position(|&b| !b) {
        return Err(Error::Format(format!("missing entry at flat index {k}")));
    }
    WaveField::from_amplitudes(g, header.n_s, amps)
}

pub fn header_of(field: &WaveField) -> FieldHeader {
    FieldHeader { format: FORMAT.to_string(), version: 1, n_s: field.n_s(), grid: *field.grid() }
}

/// Writes `stem.json` and `stem.csv`.
pub fn write_field(field: &WaveField, stem: &Path) -> Result<()> {
    let (json, csv) = paths(stem);
    let mut head = serde_json::to_string_pretty(&header_of(field))?;
    head.push('\n');
    fs::write(json, head)?;
    fs::write(csv, field_to_csv(field)?)?;
    Ok(())
}

pub fn read_field(stem: &Path) -> Result<WaveField> {
    let (json, csv) = paths(stem);
    let header: FieldHeader = serde_json::from_str(&fs::read_to_string(json)?)?;
    field_from_csv(&header, &fs::read_to_string(csv)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gaussian_packet;

    #[test]
    fn round_trip_is_exact() {
        let grid = SpacetimeGrid::natural(32, 32, 16.0, 32.0).unwrap();
        let f = gaussian_packet(&grid, 0.3, -1.0, 1.5, 3.0, 0.7, 1.1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("psi");
        write_field(&f, &stem).unwrap();
        let back = read_field(&stem).unwrap();
        assert_eq!(back.grid(), f.grid());
        for (a, b) in f.amplitudes().iter().zip(back.amplitudes()) {
            assert!((a - b).norm() <= 1e-15 * a.norm().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn spinor_round_trip() {
        let grid = SpacetimeGrid::natural(4, 4, 4.0, 4.0).unwrap();
        let amps: Vec<Complex64> = (0..32).map(|k| Complex64::new(k as f64 / 7.0, -(k as f64).sqrt())).collect();
        let f = WaveField::from_amplitudes(grid, 2, amps).unwrap();
        let back = field_from_csv(&header_of(&f), &field_to_csv(&f).unwrap()).unwrap();
        assert_eq!(back.amplitudes(), f.amplitudes());
    }

    #[test]
    fn rejects_incomplete_data() {
        let grid = SpacetimeGrid::natural(4, 4, 4.0, 4.0).unwrap();
        let f = WaveField::zeros(grid, 1).unwrap();
        let text = field_to_csv(&f).unwrap();
        let short: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(field_from_csv(&header_of(&f), &short), Err(Error::Format(_))));
        let mut dup = text.clone();
        dup.push_str("0,0,0,1,0\n");
        assert!(matches!(field_from_csv(&header_of(&f), &dup), Err(Error::Format(_))));
    }
}
