//! Artifact writers. Every JSON document starts with the same provenance
//! block; nothing time-dependent is recorded, so reruns are byte-identical.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub struct Writer {
    pub dir: PathBuf,
    command: &'static str,
    hash: String,
}

impl Writer {
    pub fn new(dir: &Path, command: &'static str, hash: String) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Writer { dir: dir.to_path_buf(), command, hash })
    }

    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> io::Result<()> {
        let doc = Document {
            tool: "livsic",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config_hash: &self.hash,
            body,
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(self.dir.join(name), text)
    }

    /// Numeric table with a header row; floats use the shortest
    /// round-tripping representation.
    pub fn csv<R>(&self, name: &str, header: &[&str], rows: R) -> io::Result<()>
    where
        R: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_path(self.dir.join(name)).map_err(io::Error::other)?;
        w.write_record(header).map_err(io::Error::other)?;
        for row in rows {
            w.write_record(&row).map_err(io::Error::other)?;
        }
        w.flush()
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}
