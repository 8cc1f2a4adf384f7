//! Output staging: every file of a command is written into a temporary
//! directory inside the target and only moved into place once all succeeded.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::TempDir;

pub struct Staging {
    dir: TempDir,
    target: PathBuf,
    files: Vec<String>,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self> {
        fs::create_dir_all(target).with_context(|| format!("creating {}", target.display()))?;
        let dir = tempfile::Builder::new()
            .prefix(".tmla-staging-")
            .tempdir_in(target)
            .with_context(|| format!("cannot write to {}", target.display()))?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Stage `name` through a buffered writer.
    pub fn write_with<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.dir.path().join(name);
        let file = fs::File::create(&path).with_context(|| format!("creating {name}"))?;
        let mut out = BufWriter::new(file);
        body(&mut out).with_context(|| format!("writing {name}"))?;
        out.flush().with_context(|| format!("writing {name}"))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<S: serde::Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_with(name, |w| writeln!(w, "{text}"))
    }

    /// Move staged files into the target; on failure, already moved files
    /// are removed again.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut moved = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let dest = self.target.join(name);
            if let Err(e) = fs::rename(self.dir.path().join(name), &dest) {
                for p in &moved {
                    let _ = fs::remove_file(p);
                }
                return Err(e)
                    .with_context(|| format!("moving {name} into {}", self.target.display()));
            }
            moved.push(dest);
        }
        Ok(moved)
    }
}
