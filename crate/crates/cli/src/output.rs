use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::config::RunConfig;

/// Output directory of one command invocation.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Header plus one record per row, in the given order.
    pub fn write_csv<R: Serialize>(&mut self, name: &str, rows: &[R], header: &[&str]) -> anyhow::Result<()> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Fully-defaulted configuration; feeding it back reproduces the run.
    pub fn write_config(&mut self, command: &str, cfg: &RunConfig) -> anyhow::Result<()> {
        let name = format!("{command}.config.toml");
        let path = self.path(&name);
        fs::write(&path, cfg.to_toml()?).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name);
        Ok(())
    }

    /// Timing and provenance sidecar; the only file that differs between reruns.
    pub fn write_metadata(&mut self, command: &str, started: DateTime<Utc>, seed: u64) -> anyhow::Result<()> {
        let finished = Utc::now();
        let meta = Metadata {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            threads: rayon::current_num_threads(),
            started_utc: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_utc: finished.to_rfc3339_opts(SecondsFormat::Millis, true),
            wall_clock_s: (finished - started).num_milliseconds() as f64 / 1e3,
            files: self.written.clone(),
        };
        self.write_json(&format!("{command}.meta.json"), &meta)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    threads: usize,
    started_utc: String,
    finished_utc: String,
    wall_clock_s: f64,
    files: Vec<String>,
}
