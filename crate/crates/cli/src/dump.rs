//! Plain CSV grids for matrices and vectors.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use lintsf::linalg::Matrix;

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}

/// One line per matrix row, values at full precision, no header.
pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let mut w = create(path)?;
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// `index,value` per entry.
pub fn write_vector(path: &Path, header: &str, v: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "index,{header}")?;
    for (i, x) in v.iter().enumerate() {
        writeln!(w, "{i},{x}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// `Linear+IN` → `Linear-IN`, for use in file names.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect()
}
