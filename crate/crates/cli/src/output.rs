use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::CliError;

pub const TOOL: &str = "splitforge";

/// Everything needed to repeat a run: the subcommand with all of its
/// resolved arguments, including the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub command: Command,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            tool: TOOL.to_string(),
            version: splitforge::VERSION.to_string(),
            command,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(splitforge::Error::from)?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut file = fs::File::open(path).map_err(splitforge::Error::from)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(splitforge::Error::from)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Output directory that remembers every file handed out, for the manifest.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
    inputs: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(splitforge::Error::from)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            inputs: Vec::new(),
        })
    }

    pub fn file(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.file(name);
        fs::write(path, contents).map_err(splitforge::Error::from)?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(splitforge::Error::from)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Writes `config.json` and `manifest.json`.
    pub fn finish(mut self, config: &RunConfig, command: &str, seed: u64) -> Result<(), CliError> {
        self.write_json("config.json", config)?;
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut names = self.files.clone();
        names.sort();
        let outputs = names
            .iter()
            .map(|n| {
                Ok(FileDigest {
                    path: n.clone(),
                    sha256: sha256_file(&self.root.join(n))?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let manifest = Manifest {
            tool: TOOL.to_string(),
            version: splitforge::VERSION.to_string(),
            command: command.to_string(),
            seed,
            inputs,
            outputs,
        };
        self.write_json("manifest.json", &manifest)
    }
}
