//! Output directory bookkeeping: artifact list, stage timings, run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use irefined::instrument::{CounterSnapshot, Counters};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
/// Wall times live outside the manifest so that every JSON artifact is
/// reproducible byte for byte.
pub const TIMINGS_FILE: &str = "timings.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub method_tags: Vec<String>,
    pub counters: CounterSnapshot,
    /// Paths relative to the output directory, sorted.
    pub artifacts: Vec<String>,
    pub timings_file: String,
}

impl RunManifest {
    pub fn load(dir: impl AsRef<Path>) -> CliResult<Self> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

/// State shared by the stages of one command.
pub struct RunContext {
    out: PathBuf,
    artifacts: Vec<String>,
    timings: Vec<(String, f64)>,
    method_tags: Vec<String>,
    pub counters: Counters,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(irefined::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

impl RunContext {
    pub fn new(out: &Path) -> CliResult<Self> {
        fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
        Ok(Self {
            out: out.to_path_buf(),
            artifacts: Vec::new(),
            timings: Vec::new(),
            method_tags: Vec::new(),
            counters: Counters::new(),
        })
    }

    pub fn out(&self) -> &Path {
        &self.out
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn add_artifact(&mut self, rel: impl Into<String>) {
        self.artifacts.push(rel.into());
    }

    pub fn add_method_tag(&mut self, tag: impl Into<String>) {
        self.method_tags.push(tag.into());
    }

    pub fn record(&mut self, stage: &str, since: Instant) {
        self.timings.push((stage.to_string(), since.elapsed().as_secs_f64()));
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> CliResult<()> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let text = serde_json::to_string_pretty(value).map_err(irefined::Error::from)? + "\n";
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        self.add_artifact(rel);
        Ok(())
    }

    pub fn create_file(&mut self, rel: &str) -> CliResult<std::io::BufWriter<fs::File>> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        self.add_artifact(rel);
        Ok(std::io::BufWriter::new(f))
    }

    /// Writes `config.json`, `timings.tsv` and the manifest.
    pub fn finish(mut self, command: &str, cfg: &RunConfig) -> CliResult<RunManifest> {
        self.write_json(CONFIG_FILE, cfg)?;
        let mut tsv = String::from("stage\tseconds\n");
        for (stage, secs) in &self.timings {
            tsv.push_str(&format!("{stage}\t{secs:.6}\n"));
        }
        let tpath = self.path(TIMINGS_FILE);
        fs::write(&tpath, tsv).map_err(|e| io_err(&tpath, e))?;
        self.add_artifact(TIMINGS_FILE);
        self.add_artifact(MANIFEST_FILE);
        self.artifacts.sort();
        self.artifacts.dedup();
        let manifest = RunManifest {
            command: command.to_string(),
            config_hash: cfg.hash(),
            method_tags: self.method_tags.clone(),
            counters: self.counters.snapshot(),
            artifacts: self.artifacts.clone(),
            timings_file: TIMINGS_FILE.to_string(),
        };
        let mpath = self.path(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).map_err(irefined::Error::from)? + "\n";
        fs::write(&mpath, text).map_err(|e| io_err(&mpath, e))?;
        Ok(manifest)
    }
}
