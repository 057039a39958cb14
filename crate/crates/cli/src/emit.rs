//! Atomic file emission: write to a sibling temp file, then rename.

use sirsn_core::{Error, Result};
use std::fs;
use std::path::Path;

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid_parameter("output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    println!("wrote {}", path.display());
    Ok(())
}
