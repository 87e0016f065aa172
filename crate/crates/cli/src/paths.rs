use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

/// Exit status categories.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or missing inputs; exit 2.
    Usage(String),
    /// Anything that fails after the inputs were accepted; exit 1.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Resolves relative paths against an optional data directory.
#[derive(Debug, Clone, Default)]
pub struct Paths {
    root: Option<PathBuf>,
}

impl Paths {
    pub fn new(root: Option<PathBuf>) -> Self {
        Paths { root }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.root {
            Some(root) if p.is_relative() => root.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn open(&self, p: &Path) -> CliResult<BufReader<File>> {
        let path = self.resolve(p);
        File::open(&path)
            .map(BufReader::new)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
    }

    pub fn create(&self, p: &Path) -> CliResult<BufWriter<File>> {
        let path = self.resolve(p);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
        }
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_use_root() {
        let paths = Paths::new(Some(PathBuf::from("/data")));
        assert_eq!(paths.resolve(Path::new("a/b.tsv")), PathBuf::from("/data/a/b.tsv"));
        assert_eq!(paths.resolve(Path::new("/abs.tsv")), PathBuf::from("/abs.tsv"));
        assert_eq!(Paths::default().resolve(Path::new("x")), PathBuf::from("x"));
    }

    #[test]
    fn missing_input_is_usage_error() {
        let err = Paths::default()
            .open(Path::new("/definitely/not/here.tsv"))
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err: CliError = anyhow::anyhow!("boom").into();
        assert_eq!(err.exit_code(), 1);
    }
}
