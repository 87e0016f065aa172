//! Append-only JSONL persistence, one file per record kind.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Ratings,
    Chat,
    Traces,
}

impl Kind {
    fn file_name(self) -> &'static str {
        match self {
            Kind::Ratings => "ratings.jsonl",
            Kind::Chat => "chat.jsonl",
            Kind::Traces => "traces.jsonl",
        }
    }
}

/// All appends go through one lock so lines from concurrent requests never
/// interleave.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    writer: Mutex<()>,
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Store {
            dir,
            writer: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, kind: Kind) -> PathBuf {
        self.dir.join(kind.file_name())
    }

    pub fn append<T: Serialize>(&self, kind: Kind, record: &T) -> io::Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut file = OpenOptions::new().create(true).append(true).open(self.path(kind))?;
        file.write_all(&line)?;
        file.flush()
    }

    /// Every stored record of `kind`, in append order. A torn final line
    /// (crash mid-write) is skipped.
    pub fn replay<T: DeserializeOwned>(&self, kind: Kind) -> io::Result<Vec<T>> {
        let file = match File::open(self.path(kind)) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>()?;
        let last = lines.len().saturating_sub(1);
        let mut out = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(v) => out.push(v),
                Err(e) if i == last => {
                    tracing::warn!("{}: dropping torn final line: {e}", kind.file_name())
                }
                Err(e) => {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("{} line {}: {e}", kind.file_name(), i + 1),
                    ))
                }
            }
        }
        Ok(out)
    }
}
