//! `<output>.provenance.json` records: what went in, with which settings,
//! and what came out. No timestamps or host details, so identical runs
//! produce identical records.

use std::path::{Path, PathBuf};

use material_twin::{Error, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: String,
    pub parameters: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub summary: Value,
}

pub fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Regular files below `dir`, sorted by path.
fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Paths inside the output directory are recorded relative to it so the
/// record does not depend on where the run was placed.
fn display_path(path: &Path, base: &Path) -> String {
    match path.strip_prefix(base) {
        Ok(rel) if !base.as_os_str().is_empty() => rel.to_string_lossy().into_owned(),
        _ => path.to_string_lossy().into_owned(),
    }
}

pub struct Recorder {
    command: String,
    base: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Recorder {
    /// `primary_output` names the file the record is attached to.
    pub fn new(command: &str, primary_output: &Path) -> Self {
        Self {
            command: command.to_string(),
            base: primary_output.parent().map(Path::to_path_buf).unwrap_or_default(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Hashes a file, or every file below a directory.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        if path.is_dir() {
            let mut files = Vec::new();
            walk(path, &mut files)?;
            for f in files {
                self.push_input(&f)?;
            }
            Ok(())
        } else {
            self.push_input(path)
        }
    }

    fn push_input(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.inputs.push(FileDigest {
            path: display_path(path, &self.base),
            sha256,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.outputs.push(FileDigest {
            path: display_path(path, &self.base),
            sha256,
        });
        Ok(())
    }

    /// Writes the record next to `primary_output`.
    pub fn finish(self, primary_output: &Path, parameters: Value, summary: Value) -> Result<()> {
        let record = Provenance {
            tool: "material-twin",
            version: env!("CARGO_PKG_VERSION"),
            core_version: material_twin::VERSION,
            command: self.command,
            parameters,
            inputs: self.inputs,
            outputs: self.outputs,
            summary,
        };
        write_json(&sidecar(primary_output, "provenance.json"), &record)
    }
}

/// `out.ply` → `out.ply.<suffix>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    write_bytes(path, (text + "\n").as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(|e| io_err(p, e)),
        _ => Ok(()),
    }
}
