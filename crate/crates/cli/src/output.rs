//! Atomic file writes and small CSV readers for result directories.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Writes `contents` to a sibling temp file and renames it into place, so
/// `path` is either absent, the old file, or the complete new file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Runtime(format!("{} has no file name", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(contents)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Header and rows of a comma-separated file without quoting.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Unanalyzed(format!("{}: {e}", path.display())))?;
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Unanalyzed(format!("{} is empty", path.display())))?
            .split(',')
            .map(String::from)
            .collect();
        let rows = lines
            .map(|l| l.split(',').map(String::from).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        if let Some(bad) = rows.iter().position(|r| r.len() != header.len()) {
            return Err(CliError::Runtime(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                bad + 1,
                rows[bad].len(),
                header.len()
            )));
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Runtime(format!("missing column {name:?}")))
    }
}

/// Parses a numeric cell, naming the file on failure.
pub fn parse_cell<T: std::str::FromStr>(cell: &str, path: &Path) -> Result<T, CliError> {
    cell.parse()
        .map_err(|_| CliError::Runtime(format!("{}: bad value {cell:?}", path.display())))
}
