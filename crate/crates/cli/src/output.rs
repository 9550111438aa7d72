use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Reproduction record written next to the data files of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// Arguments after the program name.
    pub command: Vec<String>,
    pub seeds: Vec<u64>,
    pub caps: serde_json::Value,
    pub rule: Option<String>,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub files: Vec<FileRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Where a command's tables go: standard output, or files in a directory.
pub struct Sink {
    dir: Option<PathBuf>,
    files: Vec<FileRecord>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Sink { dir, files: Vec::new() })
    }

    /// Writes `bytes` to `name` in the output directory, or to standard
    /// output when `primary` is set and there is no directory. Secondary
    /// tables are dropped without a directory.
    pub fn emit(&mut self, name: &str, bytes: &[u8], primary: bool) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => {
                fs::write(d.join(name), bytes)?;
                self.files.push(FileRecord {
                    name: name.to_string(),
                    sha256: sha256_hex(bytes),
                    bytes: bytes.len() as u64,
                });
            }
            None if primary => std::io::stdout().write_all(bytes)?,
            None => {}
        }
        Ok(())
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<(), CliError> {
        let Some(d) = self.dir else {
            return Ok(());
        };
        manifest.files = self.files;
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        fs::write(d.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

pub fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    Ok(text)
}

pub fn read_manifest(path: &Path) -> Result<(PathBuf, RunManifest), CliError> {
    let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let text = fs::read(&file)?;
    let manifest = serde_json::from_slice(&text)?;
    let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((dir, manifest))
}

/// Names of recorded files whose current contents in `dir` differ from the
/// digest (missing files count as different).
pub fn changed_files(dir: &Path, files: &[FileRecord]) -> Vec<String> {
    files
        .iter()
        .filter(|f| match fs::read(dir.join(&f.name)) {
            Ok(bytes) => sha256_hex(&bytes) != f.sha256,
            Err(_) => true,
        })
        .map(|f| f.name.clone())
        .collect()
}
