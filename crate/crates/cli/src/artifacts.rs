//! Stage inputs and outputs with content hashes, and the per-stage manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

/// Everything needed to tell whether two runs of a stage agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub parameter_hash: String,
    pub parameters: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Records what a stage reads and writes under one directory.
pub struct StageRun {
    dir: PathBuf,
    stage: &'static str,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl StageRun {
    pub fn new(dir: &Path, stage: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::input(dir.display(), e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            stage,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Read a file that must already exist, recording its digest.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = read_required(path)?;
        self.inputs.push(FileDigest {
            name: self.display_name(path),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    /// Read a file relative to the stage directory.
    pub fn read_local(&mut self, rel: &str) -> Result<Vec<u8>, CliError> {
        let path = self.dir.join(rel);
        self.read(&path)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::input(parent.display(), e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::input(path.display(), e))?;
        self.outputs.push(FileDigest {
            name: rel.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("stage outputs serialize");
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    /// Write `<stage>.manifest.json` and return it.
    pub fn finish<P: Serialize>(self, seed: u64, parameters: &P) -> Result<Manifest, CliError> {
        let parameters = serde_json::to_value(parameters).expect("parameters serialize");
        let manifest = Manifest {
            stage: self.stage.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: newsflow::rng::GENERATOR_NAME.to_string(),
            seed,
            parameter_hash: sha256_hex(parameters.to_string().as_bytes()),
            parameters,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.stage));
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| CliError::input(path.display(), e))?;
        Ok(manifest)
    }

    /// Inputs under the stage directory's parent are named by their relative
    /// path, anything else by file name, so manifests do not depend on where
    /// the run happened.
    fn display_name(&self, path: &Path) -> String {
        let root = self.dir.parent().unwrap_or(&self.dir);
        match path.strip_prefix(root) {
            Ok(rel) => rel.to_string_lossy().replace('\\', "/"),
            Err(_) => path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }
}

pub fn read_required(path: &Path) -> Result<Vec<u8>, CliError> {
    if !path.is_file() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    fs::read(path).map_err(|e| CliError::input(path.display(), e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let bytes = read_required(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::input(path.display(), e))
}

/// Rows of a delimited table with a header, deserialized into `T`.
pub fn read_table<T: serde::de::DeserializeOwned>(bytes: &[u8], what: &str) -> Result<Vec<T>, CliError> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::input(what, e))
}

pub fn table_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    w.into_inner().expect("in-memory writer")
}
