//! Output files: every file opens with `#` lines naming the command, model,
//! units and the hash of the settings that produced it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use scarlab::{PotentialModel, ScaledUnits};

use crate::config::Settings;
use crate::CliError;

pub struct Context {
    pub command: &'static str,
    pub hash: String,
    pub physical: bool,
    pub timestamp: bool,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn new(command: &'static str, settings: &Settings, physical: bool, timestamp: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(&settings.out_dir).map_err(|e| CliError::Io { path: settings.out_dir.clone(), source: e })?;
        Ok(Self {
            command,
            hash: settings.hash(),
            physical,
            timestamp,
            out_dir: settings.out_dir.clone(),
        })
    }

    pub fn header(&self, settings: &Settings, extra: &str) -> String {
        let units = match settings.eta {
            Some(eta) => ScaledUnits { model: settings.model, eta }.describe(),
            None => format!("model={} classical scaled units", settings.model),
        };
        let mut h = format!("# scarlab {} {units}", self.command);
        if !extra.is_empty() {
            h.push(' ');
            h.push_str(extra);
        }
        h.push_str(&format!(" config_sha256={}\n", self.hash));
        if self.physical {
            h.push_str(&physical_note(settings.model));
        }
        if self.timestamp {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            h.push_str(&format!("# generated_unix={secs}\n"));
        }
        h
    }

    /// Creates `name` in the output directory and writes the header.
    pub fn create(&self, name: &str, header: &str) -> Result<FileOut, CliError> {
        let path = self.out_dir.join(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
        }
        let f = File::create(&path).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
        let mut w = BufWriter::new(f);
        w.write_all(header.as_bytes()).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
        Ok(FileOut { path, w })
    }
}

pub struct FileOut {
    pub path: PathBuf,
    pub w: BufWriter<File>,
}

impl FileOut {
    /// Runs a writer on the body and flushes, attaching the path to errors.
    pub fn body(mut self, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf, CliError> {
        f(&mut self.w).and_then(|_| self.w.flush()).map_err(|e| CliError::Io { path: self.path.clone(), source: e })?;
        log::info!("wrote {}", self.path.display());
        Ok(self.path)
    }
}

/// Example laboratory scale for the ring: C6/h = 3 GHz um^6 at R = 7 um.
fn physical_note(model: PotentialModel) -> String {
    match model {
        PotentialModel::Ring => {
            let unit_hz = 3.0e9 / 7.0_f64.powi(6);
            format!(
                "# physical: C6/h = 3 GHz um^6, R = 7 um, energy unit C6/R^6 = h x {:.2} kHz (eps = 7 is h x {:.0} kHz)\n",
                unit_hz / 1e3,
                7.0 * unit_hz / 1e3
            )
        }
        PotentialModel::HenonHeiles => "# physical: the laboratory conversion is given for the ring model only\n".into(),
    }
}

/// Config hash recorded in the first line of an existing output file.
pub fn recorded_hash(path: &Path) -> Option<String> {
    let text = std::fs::read_to_string(path).ok()?;
    let first = text.lines().next()?;
    first.split_whitespace().find_map(|w| w.strip_prefix("config_sha256=")).map(str::to_string)
}
