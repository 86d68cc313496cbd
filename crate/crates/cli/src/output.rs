//! CSV output. Values use 17 significant digits and `.` as the decimal
//! separator; lines end in LF.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use caputo_picard::fracops::GridFunction;
use caputo_picard::prelude::*;

pub fn header(dim: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=dim).map(|i| format!("x_{i}")));
    cols.extend((1..=dim).map(|i| format!("z_{i}")));
    cols.push("alg_residual".into());
    cols.push("caputo_residual".into());
    cols.join(",")
}

/// One row per node: `t, x, z, ‖alg residual‖, ‖Caputo residual‖`.
pub fn solution_csv(spec: &ProblemSpec, x: &GridFunction, z: &GridFunction) -> Result<String> {
    let res = residual_caputo(spec, x, z)?;
    let grid = *x.grid();
    let mut out = header(spec.dim());
    out.push('\n');
    for k in 0..grid.len() {
        let _ = write!(out, "{:.16e}", grid.node(k));
        for v in x.node(k).iter().chain(z.node(k)) {
            let _ = write!(out, ",{v:.16e}");
        }
        let _ = writeln!(out, ",{:.16e},{:.16e}", res.algebraic.node_norm(k), res.caputo.node_norm(k));
    }
    Ok(out)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Parses a file written by [`solution_csv`] back into rows of numbers.
pub fn read_rows(text: &str) -> std::result::Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let head: Vec<String> = lines
        .next()
        .ok_or("empty CSV")?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| format!("row {}: {s:?}: {e}", i + 1)))
            .collect::<std::result::Result<_, _>>()?;
        if row.len() != head.len() {
            return Err(format!("row {} has {} fields, header has {}", i + 1, row.len(), head.len()));
        }
        rows.push(row);
    }
    Ok((head, rows))
}
