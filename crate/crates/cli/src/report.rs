use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_hash: Option<&'a str>,
    report: &'a T,
}

/// Report writer bound to one output directory and one resolved config.
pub struct Writer<'a> {
    pub dir: PathBuf,
    config: &'a RunConfig,
    command: &'a str,
    config_hash: String,
    pub written: Vec<PathBuf>,
}

pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let text = serde_json::to_string(cfg)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

impl<'a> Writer<'a> {
    pub fn new(dir: &Path, config: &'a RunConfig, command: &'a str) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Writer { dir: dir.to_path_buf(), config, command, config_hash: config_hash(config)?, written: vec![] })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `<stem>.json` with the report wrapped in the config envelope.
    pub fn json<T: Serialize>(&mut self, stem: &str, report: &T, input_hash: Option<&str>) -> Result<PathBuf> {
        let env = Envelope {
            tool: "conewave",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: self.config,
            config_hash: self.config_hash.clone(),
            input_hash,
            report,
        };
        let mut text = serde_json::to_string_pretty(&env)?;
        text.push('\n');
        let p = self.path(&format!("{stem}.json"));
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        self.written.push(p.clone());
        Ok(p)
    }

    /// Writes `<stem>.csv` through a closure receiving the file.
    pub fn csv(&mut self, stem: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<PathBuf> {
        let p = self.path(&format!("{stem}.csv"));
        let mut w = BufWriter::new(File::create(&p).with_context(|| format!("writing {}", p.display()))?);
        body(&mut w)?;
        w.flush()?;
        self.written.push(p.clone());
        Ok(p)
    }
}
