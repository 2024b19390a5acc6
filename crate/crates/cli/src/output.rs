use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::RunError;

/// The output directory. Every artifact is its own file.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(|source| RunError::Output {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, RunError> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|source| RunError::Output {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    /// Opens a JSON-lines file that is flushed after every record.
    pub fn lines(&self, name: &str) -> Result<JsonLines, RunError> {
        let path = self.path(name);
        let file = fs::File::create(&path).map_err(|source| RunError::Output {
            path: path.clone(),
            source,
        })?;
        Ok(JsonLines { path, file })
    }
}

pub struct JsonLines {
    path: PathBuf,
    file: fs::File,
}

impl JsonLines {
    /// Appends `record` here and echoes it to `sink`.
    pub fn emit<T: Serialize>(&mut self, record: &T, sink: &mut dyn Write) -> Result<(), RunError> {
        let line = serde_json::to_string(record).expect("reports serialize");
        let err = |source| RunError::Output {
            path: self.path.clone(),
            source,
        };
        writeln!(self.file, "{line}").map_err(err)?;
        self.file.flush().map_err(err)?;
        writeln!(sink, "{line}").map_err(|source| RunError::Output {
            path: "<stdout>".into(),
            source,
        })
    }
}

pub fn say<T: Serialize>(sink: &mut dyn Write, record: &T) -> Result<(), RunError> {
    let line = serde_json::to_string(record).expect("reports serialize");
    writeln!(sink, "{line}").map_err(|source| RunError::Output {
        path: "<stdout>".into(),
        source,
    })
}

pub fn file_stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "system".into())
}
