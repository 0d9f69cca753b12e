use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Output directory holding delimited record files and the run manifest.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Writes `records` to `<name>.csv` with a header row.
    pub fn write_records<R: Serialize>(&mut self, name: &str, records: &[R]) -> Result<(), CliError> {
        let file = format!("{name}.csv");
        let path = self.root.join(&file);
        let mut w = csv::Writer::from_path(&path)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        for r in records {
            w.serialize(r)?;
        }
        w.flush()?;
        self.files.push(file);
        Ok(())
    }

    pub fn write_manifest(self, subcommand: &str, config: &ExperimentConfig) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            subcommand: &'a str,
            seed: u64,
            files: &'a [String],
            config: &'a ExperimentConfig,
        }
        let manifest = Manifest {
            subcommand,
            seed: config.seed.unwrap_or_default(),
            files: &self.files,
            config,
        };
        let text = toml::to_string(&manifest)
            .map_err(|e| CliError::Io(format!("serializing manifest: {e}")))?;
        let path = self.root.join("manifest.toml");
        fs::write(&path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        Ok(path)
    }
}
