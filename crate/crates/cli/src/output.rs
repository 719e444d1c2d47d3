use std::path::{Path, PathBuf};

use hab_core::json::MatrixLiteral;
use hab_core::ComplexMatrix;
use serde::Serialize;

use crate::config::Format;
use crate::CliError;

/// Writes result files into the output directory.
pub struct Emitter {
    dir: PathBuf,
    format: Format,
}

impl Emitter {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
        })
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
    }

    pub fn json<T: Serialize>(&self, stem: &str, value: &T) -> Result<(), CliError> {
        if self.format.json() {
            self.always_json(&format!("{stem}.json"), value)?;
        }
        Ok(())
    }

    pub fn always_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn csv(&self, stem: &str, contents: &str) -> Result<(), CliError> {
        if self.format.csv() {
            self.write(&format!("{stem}.csv"), contents)?;
        }
        Ok(())
    }

    /// Matrix literals are always written: they are inputs for later runs.
    pub fn matrix(&self, stem: &str, m: &ComplexMatrix) -> Result<(), CliError> {
        self.always_json(&format!("{stem}.json"), &MatrixLiteral::from(m))
    }
}
