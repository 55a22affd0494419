//! Run directories and their manifests.
//!
//! Every file-emitting command writes into one run directory and finishes by
//! dropping a `manifest.json` listing each artifact with its SHA-256, so a
//! rerun with the same arguments can be byte-compared end to end. Writes go
//! through a temp file and rename, never in place.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Environment variable overriding the default output root (`./runs`).
pub const OUT_ROOT_ENV: &str = "NRSIM_OUT_ROOT";

const MANIFEST_SCHEMA: &str = "nrsim-run-manifest/1";

#[derive(Debug, Clone, Serialize)]
struct FileRecord {
    path: String,
    bytes: u64,
    sha256: String,
}

/// Echo of the arguments that shaped a run, stored in its manifest.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunMeta {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pe_scale: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sram_scale: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_file: Option<String>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    schema: &'static str,
    #[serde(flatten)]
    meta: &'a RunMeta,
    files: Vec<FileRecord>,
}

pub struct RunDir {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp-write");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunDir {
    /// Open (creating if needed) the run directory: `out` verbatim when
    /// given, else `<root>/<name>` where the root comes from
    /// [`OUT_ROOT_ENV`] or defaults to `./runs`.
    pub fn create(out: Option<&Path>, name: &str) -> Result<RunDir> {
        let dir = match out {
            Some(dir) => dir.to_path_buf(),
            None => {
                let root = std::env::var_os(OUT_ROOT_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("runs"));
                root.join(name)
            }
        };
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating run directory {}", dir.display()))?;
        Ok(RunDir {
            dir,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write one artifact atomically and record its checksum.
    pub fn emit(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write_atomic(&path, bytes)?;
        self.files.push(FileRecord {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Record a file some other component already wrote under the run
    /// directory (e.g. a saved scene).
    pub fn track(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading back {}", path.display()))?;
        let rel = path
            .strip_prefix(&self.dir)
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_else(|_| path.to_string_lossy().into_owned());
        self.files.push(FileRecord {
            path: rel,
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Sort the records, write `manifest.json`, and return its path.
    pub fn finish(mut self, meta: &RunMeta) -> Result<PathBuf> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA,
            meta,
            files: self.files,
        };
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        let path = self.dir.join("manifest.json");
        write_atomic(&path, json.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_emitted_file_with_checksums() {
        let tmp = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(Some(tmp.path()), "unused").unwrap();
        run.emit("b.txt", b"beta").unwrap();
        run.emit("a.txt", b"alpha").unwrap();
        let meta = RunMeta {
            command: "test".into(),
            seed: Some(7),
            ..RunMeta::default()
        };
        let manifest_path = run.finish(&meta).unwrap();
        let text = fs::read_to_string(manifest_path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let files = v["files"].as_array().unwrap();
        assert_eq!(files.len(), 2);
        // Sorted by path regardless of emission order.
        assert_eq!(files[0]["path"], "a.txt");
        assert_eq!(files[1]["path"], "b.txt");
        assert_eq!(files[0]["sha256"], hex::encode(Sha256::digest(b"alpha")));
        assert_eq!(v["seed"], 7);
        assert_eq!(v["schema"], "nrsim-run-manifest/1");
    }

    #[test]
    fn reruns_produce_identical_manifests() {
        let tmp = tempfile::tempdir().unwrap();
        let meta = RunMeta {
            command: "test".into(),
            ..RunMeta::default()
        };
        let mut manifests = Vec::new();
        for _ in 0..2 {
            let mut run = RunDir::create(Some(tmp.path()), "unused").unwrap();
            run.emit("x.bin", &[1, 2, 3]).unwrap();
            let p = run.finish(&meta).unwrap();
            manifests.push(fs::read(p).unwrap());
        }
        assert_eq!(manifests[0], manifests[1]);
    }

    #[test]
    fn out_flag_wins_over_default_root() {
        let tmp = tempfile::tempdir().unwrap();
        let run = RunDir::create(Some(&tmp.path().join("exact")), "ignored-name").unwrap();
        assert_eq!(run.dir(), tmp.path().join("exact"));
    }
}
