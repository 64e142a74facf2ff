//! Run manifest and output sink.

use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use sketchlab::report::{csv_string, jsonl_string, write_file, Record};

use crate::args::Cli;
use crate::status::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: &'a Cli,
    /// Resolved preset (dimensions, spike, thresholds) when one was used.
    pub instance: Option<serde_json::Value>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    pub exit_code: i32,
}

/// Collects outputs of one run; every data file names the manifest it belongs to.
pub struct Sink<'a> {
    dir: PathBuf,
    manifest: RunManifest<'a>,
}

impl<'a> Sink<'a> {
    pub fn new(cli: &'a Cli) -> Self {
        Self {
            dir: cli.global.out_dir.clone(),
            manifest: RunManifest {
                command: cli.command.name(),
                version: env!("CARGO_PKG_VERSION"),
                seed: cli.global.seed,
                config: cli,
                instance: None,
                started: now(),
                finished: String::new(),
                outputs: Vec::new(),
                notes: Vec::new(),
                exit_code: 0,
            },
        }
    }

    pub fn manifest_name(&self) -> String {
        format!("{}.manifest.json", self.manifest.command)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn set_instance(&mut self, value: impl Serialize) {
        self.manifest.instance = serde_json::to_value(value).ok();
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.manifest.notes.push(note.into());
    }

    pub fn jsonl(&mut self, name: &str, records: Vec<Record>) -> Result<(), CliError> {
        let manifest = self.manifest_name();
        let tagged: Vec<Record> = records.into_iter().map(|r| r.with("manifest", manifest.as_str())).collect();
        self.write(name, &jsonl_string(&tagged))
    }

    pub fn csv(&mut self, name: &str, header: &[&str], records: &[Record]) -> Result<(), CliError> {
        let preamble = format!("manifest={}", self.manifest_name());
        self.write(name, &csv_string(header, records, Some(&preamble)))
    }

    /// Registers a file written by other means.
    pub fn register(&mut self, name: &str) {
        self.manifest.outputs.push(name.to_owned());
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        write_file(&self.path(name), contents)?;
        self.register(name);
        Ok(())
    }

    pub fn finish(mut self, exit_code: i32) -> Result<PathBuf, CliError> {
        self.manifest.finished = now();
        self.manifest.exit_code = exit_code;
        let path = self.path(&self.manifest_name());
        let body = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::failure(e.to_string()))?;
        write_file(&path, &(body + "\n"))?;
        Ok(path)
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}
