//! Output directory handling: files, CSV tables and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Name of the manifest written beside every command's outputs.
pub const MANIFEST: &str = "manifest.json";

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Invalid(format!("{}: {e}", path.display()))
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| io_error(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Write `name` through `fill`, recording it for the manifest.
    pub fn write(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        w.flush().map_err(|e| io_error(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
        self.write(name, |w| {
            let mut c = csv::Writer::from_writer(w);
            for r in rows {
                c.serialize(r)?;
            }
            c.flush().map_err(|e| CliError::Invalid(e.to_string()))
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n").map_err(|e| CliError::Invalid(e.to_string()))
        })
    }

    /// Record the command, seed, resolved settings and inputs; enough to
    /// reproduce every other file in the directory.
    pub fn finish<S: Serialize>(
        mut self,
        command: &str,
        seed: u64,
        inputs: &[&Path],
        settings: &S,
    ) -> Result<(), CliError> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            settings,
            outputs: self.written.clone(),
        };
        self.json(MANIFEST, &manifest)
    }
}

#[derive(Serialize)]
struct Manifest<'a, S> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    inputs: Vec<String>,
    settings: &'a S,
    outputs: Vec<String>,
}
