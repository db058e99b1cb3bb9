use std::io::{BufWriter, Write};
use std::path::Path;

use priorclust::metric_space::sidecar_path;
use priorclust::{Dendrogram, DistanceMatrix, Error, Result};
use tempfile::NamedTempFile;

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub fn atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w)?;
        w.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn text(path: &Path, s: &str) -> Result<()> {
    atomic(path, |w| {
        w.write_all(s.as_bytes()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

/// Matrix triplets at `path`, label order at its sidecar.
pub fn matrix(path: &Path, m: &DistanceMatrix) -> Result<()> {
    let mut order = Vec::new();
    atomic(path, |w| priorclust::metric_space::write_matrix_to(m, w, &mut order))?;
    atomic(&sidecar_path(path), |w| {
        w.write_all(&order).map_err(|e| Error::Io {
            path: sidecar_path(path),
            source: e,
        })
    })
}

/// Merge table at `path`, label order at its sidecar.
pub fn dendrogram(path: &Path, d: &Dendrogram) -> Result<()> {
    let mut order = Vec::new();
    atomic(path, |w| d.write_to(w, &mut order))?;
    atomic(&sidecar_path(path), |w| {
        w.write_all(&order).map_err(|e| Error::Io {
            path: sidecar_path(path),
            source: e,
        })
    })
}
