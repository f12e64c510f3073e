use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{data, CliError};

/// Everything needed to repeat a run.
#[derive(Serialize)]
pub struct RunManifest<'a, A: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub flags: &'a A,
    pub seeds: BTreeMap<String, u64>,
    pub outputs: Vec<PathBuf>,
}

impl<'a, A: Serialize> RunManifest<'a, A> {
    pub fn new(subcommand: &'static str, flags: &'a A) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            flags,
            seeds: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Input(e.to_string()))?;
        data::write_text(path, &(text + "\n"))
    }
}

/// `model.txt` → `model.txt.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
