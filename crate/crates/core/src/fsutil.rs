use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a temp file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::write(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::write(path, e))?;
    tmp.persist(path).map_err(|e| Error::write(path, e.error))?;
    Ok(())
}

/// Renders named columns as CSV with a leading `index_name` column.
pub(crate) fn columns_to_csv(index_name: &str, columns: &[(&str, &[f64])]) -> Result<Vec<u8>> {
    let rows = columns.first().map_or(0, |(_, c)| c.len());
    if columns.iter().any(|(_, c)| c.len() != rows) {
        return Err(Error::GridMismatch("CSV columns differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![index_name];
    header.extend(columns.iter().map(|(name, _)| *name));
    w.write_record(&header).map_err(csv_err)?;
    for row in 0..rows {
        let mut record = vec![row.to_string()];
        record.extend(columns.iter().map(|(_, c)| c[row].to_string()));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}
