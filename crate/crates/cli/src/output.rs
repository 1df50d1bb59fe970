//! Staged output files: everything is written to temporaries and renamed
//! into place only once every output succeeded.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub struct Staged {
    files: Vec<(PathBuf, PathBuf)>,
    created_dir: Option<PathBuf>,
    committed: bool,
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

impl Staged {
    pub fn new() -> Self {
        Self {
            files: Vec::new(),
            created_dir: None,
            committed: false,
        }
    }

    /// Creates `dir` if needed; it is removed again on failure if we made it.
    pub fn in_dir(dir: &Path) -> io::Result<Self> {
        let mut staged = Self::new();
        if !dir.exists() {
            fs::create_dir_all(dir)?;
            staged.created_dir = Some(dir.to_owned());
        }
        Ok(staged)
    }

    pub fn write<E>(
        &mut self,
        path: &Path,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>,
    ) -> Result<(), crate::CliError>
    where
        crate::CliError: From<E>,
    {
        let tmp = tmp_path(path);
        let file = File::create(&tmp).map_err(|e| crate::CliError::output(&tmp, e))?;
        self.files.push((tmp.clone(), path.to_owned()));
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| crate::CliError::output(&tmp, e))?;
        Ok(())
    }

    /// SHA-256 of each staged file, keyed by final file name.
    pub fn checksums(&self) -> io::Result<Vec<(String, String)>> {
        self.files
            .iter()
            .map(|(tmp, fin)| {
                let name = fin
                    .file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                Ok((name, sha256_file(tmp)?))
            })
            .collect()
    }

    pub fn commit(mut self) -> io::Result<()> {
        for (tmp, fin) in &self.files {
            fs::rename(tmp, fin)?;
        }
        self.committed = true;
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for (tmp, _) in &self.files {
            let _ = fs::remove_file(tmp);
        }
        if let Some(dir) = &self.created_dir {
            let _ = fs::remove_dir(dir);
        }
    }
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}
