//! Run directories: atomic file writes, run ids and the manifest.
//!
//! A run id is the SHA-256 of the subcommand, the seed and the canonical
//! configuration, so it depends on nothing else. Every CSV starts with a
//! `# run_id=` line and every JSON object carries a `run_id` field. Wall
//! time goes to `timing.json` only; all other files are byte-identical
//! across repeated runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

/// Seventeen significant digits: lossless for `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run_id(command: &str, seed: u64, config: &BTreeMap<String, String>) -> String {
    let canonical = serde_json::to_string(config).expect("string map serialises");
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(seed.to_string().as_bytes());
    h.update(b"\n");
    h.update(canonical.as_bytes());
    let digest = h.finalize();
    digest[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Output directory of one run.
pub struct Run {
    dir: PathBuf,
    command: &'static str,
    seed: u64,
    config: BTreeMap<String, String>,
    run_id: String,
    files: Vec<String>,
    started: Instant,
}

impl Run {
    pub fn create(dir: &Path, command: &'static str, seed: u64, config: BTreeMap<String, String>) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            seed,
            run_id: run_id(command, seed, &config),
            config,
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    #[cfg(test)]
    pub fn id(&self) -> &str {
        &self.run_id
    }

    /// Writes through a temporary file in the same directory and renames it
    /// into place.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        let target = self.dir.join(name);
        if let Some(parent) = target.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut tmp = NamedTempFile::new_in(target.parent().unwrap_or(&self.dir))?;
        tmp.write_all(bytes)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| e.error)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[String], rows: I) -> io::Result<()>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut s = format!("# run_id={}\n{}\n", self.run_id, header.join(","));
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        self.write_bytes(name, s.as_bytes())
    }

    /// Writes `value` (an object) with the run id inserted.
    pub fn write_json(&mut self, name: &str, mut value: Value) -> io::Result<()> {
        if let Value::Object(map) = &mut value {
            map.insert("run_id".into(), Value::String(self.run_id.clone()));
        }
        let mut bytes = serde_json::to_vec_pretty(&value).map_err(io::Error::other)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Writes `manifest.json` and `timing.json`.
    pub fn finish(mut self, outcome: &str, exit_code: i32) -> io::Result<()> {
        let wall = self.started.elapsed().as_secs_f64();
        let mut files = self.files.clone();
        files.push("timing.json".into());
        files.sort();
        let manifest = json!({
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "versions": {
                "logspiral": logspiral::VERSION,
                "logspiral-cli": env!("CARGO_PKG_VERSION"),
            },
            "outcome": outcome,
            "exit_code": exit_code,
            "files": files,
            "timing": "timing.json",
        });
        self.write_json("timing.json", json!({ "wall_seconds": wall }))?;
        self.write_json("manifest.json", manifest)
    }
}
