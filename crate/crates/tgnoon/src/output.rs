use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.to_string(),
            contents,
        }
    }
}

/// Comma-separated table with a mandatory header row.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let cols: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
        Self {
            text: cols.join(",") + "\n",
            columns: cols.len(),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        assert_eq!(fields.len(), self.columns, "row width");
        let cols: Vec<&str> = fields.iter().map(|s| s.as_ref()).collect();
        self.text.push_str(&cols.join(","));
        self.text.push('\n');
    }

    pub fn finish(self, name: &str) -> Artifact {
        Artifact::new(name, self.text)
    }
}

/// Shortest round-trip scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> io::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))
}

pub fn manifest(cfg: &ExperimentConfig, artifacts: &[Artifact]) -> serde_json::Value {
    let config = cfg.to_json();
    let files: Vec<_> = artifacts
        .iter()
        .map(|a| {
            json!({
                "name": a.name,
                "bytes": a.contents.len(),
                "sha256": sha256_hex(a.contents.as_bytes()),
            })
        })
        .collect();
    json!({
        "experiment": cfg.kind.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed(),
        "config_sha256": sha256_hex(config.to_string().as_bytes()),
        "config": config,
        "files": files,
    })
}

/// Writes every artifact and then `manifest.json` into the configured
/// output directory; each file appears under its final name only once
/// complete. Returns the written paths.
pub fn write_run(cfg: &ExperimentConfig, artifacts: &[Artifact]) -> io::Result<Vec<PathBuf>> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir)?;
    let mut written = Vec::with_capacity(artifacts.len() + 1);
    for a in artifacts {
        write_atomic(&dir, &a.name, a.contents.as_bytes())?;
        written.push(dir.join(&a.name));
    }
    let text = serde_json::to_string_pretty(&manifest(cfg, artifacts)).expect("manifest serializes") + "\n";
    write_atomic(&dir, "manifest.json", text.as_bytes())?;
    written.push(dir.join("manifest.json"));
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[num(1.0), num(2.5e-12)]);
        assert_eq!(c.finish("x.csv").contents, "a,b\n1e0,2.5e-12\n");
    }
}
