//! On-disk formats: JSON matrices, CSV exports and atomic file writes.
//!
//! Matrices are stored as `{"rows": r, "cols": c, "data": [...]}` with the
//! entries in row-major order; complex entries are `[re, im]` pairs. Floats
//! are written in shortest round-trip form, so a reload is bit-exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix};
use crate::montecarlo::MiSampleSet;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexMatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealMatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

fn check_len(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows.checked_mul(cols) != Some(len) {
        return Err(Error::Shape(format!(
            "matrix header says {rows}x{cols} but {len} entries are present"
        )));
    }
    Ok(())
}

pub fn complex_matrix_to_json(m: &CMatrix) -> Result<String> {
    let (rows, cols) = m.shape();
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let z = m[(i, j)];
            data.push([z.re, z.im]);
        }
    }
    Ok(serde_json::to_string(&ComplexMatrixDoc { rows, cols, data })?)
}

pub fn complex_matrix_from_json(text: &str) -> Result<CMatrix> {
    let doc: ComplexMatrixDoc = serde_json::from_str(text)?;
    check_len(doc.rows, doc.cols, doc.data.len())?;
    Ok(CMatrix::from_fn(doc.rows, doc.cols, |i, j| {
        let [re, im] = doc.data[i * doc.cols + j];
        Complex64::new(re, im)
    }))
}

pub fn real_matrix_to_json(m: &RMatrix) -> Result<String> {
    let (rows, cols) = m.shape();
    let data = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| m[(i, j)]))
        .collect();
    Ok(serde_json::to_string(&RealMatrixDoc { rows, cols, data })?)
}

pub fn real_matrix_from_json(text: &str) -> Result<RMatrix> {
    let doc: RealMatrixDoc = serde_json::from_str(text)?;
    check_len(doc.rows, doc.cols, doc.data.len())?;
    Ok(RMatrix::from_row_slice(doc.rows, doc.cols, &doc.data))
}

pub fn read_complex_matrix(path: &Path) -> Result<CMatrix> {
    complex_matrix_from_json(&fs::read_to_string(path)?)
}

pub fn read_real_matrix(path: &Path) -> Result<RMatrix> {
    real_matrix_from_json(&fs::read_to_string(path)?)
}

pub fn write_complex_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    write_atomic(path, complex_matrix_to_json(m)?.as_bytes())
}

pub fn write_real_matrix(path: &Path, m: &RMatrix) -> Result<()> {
    write_atomic(path, real_matrix_to_json(m)?.as_bytes())
}

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Domain(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `index,mi_nats`, one row per sample.
pub fn samples_csv(set: &MiSampleSet) -> String {
    let mut out = String::from("index,mi_nats\n");
    for (k, x) in set.samples().iter().enumerate() {
        out.push_str(&format!("{},{}\n", set.start() + k as u64, x));
    }
    out
}

/// `theoretical,empirical`.
pub fn qq_csv(pairs: &[(f64, f64)]) -> String {
    let mut out = String::from("theoretical,empirical\n");
    for (t, e) in pairs {
        out.push_str(&format!("{t},{e}\n"));
    }
    out
}

/// Generic two-column CSV.
pub fn pairs_csv(header: (&str, &str), rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = format!("{},{}\n", header.0, header.1);
    for (a, b) in rows {
        out.push_str(&format!("{a},{b}\n"));
    }
    out
}
