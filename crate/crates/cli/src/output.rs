//! Run artifacts: `config.resolved.json`, `report.json` and `data/*.csv`.
//! Every file carries the config hash and the seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliResult;

pub struct Sink {
    dir: Option<PathBuf>,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Sink {
    pub fn new(dir: Option<&Path>, command: &str, config_hash: String, seed: u64) -> CliResult<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d.join("data"))?;
        }
        Ok(Sink {
            dir: dir.map(Path::to_path_buf),
            command: command.to_string(),
            config_hash,
            seed,
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn stamp(&self, body: Value) -> Value {
        json!({
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "body": body,
        })
    }

    fn write_json_file(&self, name: &str, value: &Value) -> CliResult<()> {
        if let Some(d) = &self.dir {
            let mut text = serde_json::to_string_pretty(value)?;
            text.push('\n');
            fs::write(d.join(name), text)?;
        }
        Ok(())
    }

    pub fn write_config<C: Serialize>(&self, cfg: &C) -> CliResult<()> {
        let v = self.stamp(serde_json::to_value(cfg)?);
        self.write_json_file("config.resolved.json", &v)
    }

    /// Writes `report.json` with the verdict next to the command's results.
    pub fn write_report<R: Serialize>(&self, pass: bool, report: &R) -> CliResult<()> {
        let v = self.stamp(json!({ "pass": pass, "results": report }));
        self.write_json_file("report.json", &v)
    }

    /// Writes `data/<name>` verbatim after the same two comment lines.
    pub fn write_text(&self, name: &str, body: &str) -> CliResult<()> {
        let Some(d) = &self.dir else { return Ok(()) };
        let text = format!("# config_hash={}\n# seed={}\n{body}", self.config_hash, self.seed);
        fs::write(d.join("data").join(name), text)?;
        Ok(())
    }

    /// Writes `data/<name>` with two comment lines (`# config_hash=…`,
    /// `# seed=…`) ahead of the header.
    pub fn write_csv<S: AsRef<str>>(&self, name: &str, header: &[&str], rows: &[Vec<S>]) -> CliResult<()> {
        let Some(d) = &self.dir else { return Ok(()) };
        let mut buf = format!("# config_hash={}\n# seed={}\n", self.config_hash, self.seed).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row.iter().map(|s| s.as_ref()))?;
            }
            w.flush()?;
        }
        fs::write(d.join("data").join(name), buf)?;
        Ok(())
    }
}

/// Shortest round-trip rendering of a float.
pub fn num(x: f64) -> String {
    format!("{x}")
}
