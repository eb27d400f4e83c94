//! Artifact assembly: number formatting, CSV helpers, atomic writes.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Artifact numbers carry 17 significant digits, enough to reproduce the
/// f64 bit pattern on re-read, and the fixed format keeps outputs of
/// identical configs bitwise identical.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON array of numbers.
pub fn num_array<I: IntoIterator<Item = f64>>(vs: I) -> String {
    let body: Vec<String> = vs.into_iter().map(num).collect();
    format!("[{}]", body.join(","))
}

/// Writes to the path through a temp file in the same directory and a
/// final rename, so readers never observe a partial artifact; prints to
/// stdout when no path is given.
pub fn emit(path: Option<&str>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(Path::new(p), content),
        None => {
            print!("{content}");
            std::io::stdout().flush().map_err(CliError::Io)
        }
    }
}

fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(content.as_bytes())?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, 6.2e-27, -0.0, 1e300] {
            let back: f64 = num(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} reprinted as {}", num(v));
        }
    }

    #[test]
    fn atomic_write_replaces_the_target() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("artifact.csv");
        std::fs::write(&path, "old").unwrap();
        emit(Some(path.to_str().unwrap()), "new contents\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "new contents\n");
    }
}
