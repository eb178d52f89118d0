use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use psa_core::legendre::gauss_rule;
use psa_core::AngularFunction64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Failure;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub outputs: Vec<String>,
    pub version: String,
    pub wall_clock_seconds: f64,
}

/// Collects output paths for one command and writes them atomically.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))
            .map_err(Failure::io)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let target = self.dir.join(name);
        let result = (|| -> anyhow::Result<()> {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            tmp.persist(&target)?;
            Ok(())
        })();
        result
            .with_context(|| format!("cannot write {}", target.display()))
            .map_err(Failure::io)?;
        self.written.push(target.display().to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(e.into()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn csv(&mut self, name: &str, header: [&str; 2], rows: impl Iterator<Item = (f64, f64)>) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let encode = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
            w.write_record(header)?;
            for (a, b) in rows {
                w.write_record([a.to_string(), b.to_string()])?;
            }
            w.flush()?;
            Ok(())
        };
        encode(&mut w).map_err(|e| Failure::io(e.into()))?;
        let bytes = w.into_inner().map_err(|e| Failure::io(anyhow::anyhow!("{e}")))?;
        self.write_bytes(name, &bytes)
    }

    pub fn finish(
        mut self,
        command: &str,
        inputs: Vec<String>,
        parameters: BTreeMap<String, Value>,
        seconds: f64,
    ) -> Result<(), Failure> {
        let manifest = RunManifest {
            command: command.to_string(),
            inputs,
            parameters,
            outputs: self.written.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: seconds,
        };
        self.json(&format!("{command}.manifest.json"), &manifest)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::io)?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Reads a `cos_theta,value` table whose first column must be the nodes of
/// the Gauss rule with as many points as rows.
pub fn read_angular(path: &Path) -> Result<AngularFunction64, Failure> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::io)?;
    let header = reader
        .headers()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        .clone();
    if header.len() != 2 || &header[0] != "cos_theta" || &header[1] != "value" {
        return Err(Failure::usage(format!(
            "{}: header must be `cos_theta,value`, found `{}`",
            path.display(),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let parse = |k: usize, field: &str| {
            row.get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Failure::usage(format!("{}: row {}: bad {field}", path.display(), i + 1)))
        };
        xs.push(parse(0, "cos_theta")?);
        values.push(parse(1, "value")?);
    }
    let rule = gauss_rule::<f64>(xs.len()).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    for (i, (x, node)) in xs.iter().zip(&rule.nodes).enumerate() {
        if (x - node).abs() > 1e-12 {
            return Err(Failure::usage(format!(
                "{}: row {}: cos_theta {x} is not Gauss node {node} of order {}",
                path.display(),
                i + 1,
                xs.len()
            )));
        }
    }
    AngularFunction64::new(rule, values).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}
