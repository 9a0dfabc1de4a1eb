//! File writing helpers. Every file is written to a sibling temporary and
//! renamed into place, so a failed command never leaves a truncated file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut fs::File) -> Result<()>,
{
    let tmp = temp_path(path);
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        fill(&mut file)?;
        file.flush()?;
        file.sync_all()?;
        Ok::<_, anyhow::Error>(())
    })();
    match result {
        Ok(()) => fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display())),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e.context(format!("writing {}", path.display())))
        }
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |f| {
        serde_json::to_writer_pretty(&mut *f, value)?;
        f.write_all(b"\n")?;
        Ok(())
    })
}

/// `dir/stem.ext`, with `-<suffix>` inserted before the extension when given.
pub fn suffixed(dir: &Path, stem: &str, ext: &str, suffix: Option<u32>) -> PathBuf {
    match suffix {
        Some(c) => dir.join(format!("{stem}-{c}.{ext}")),
        None => dir.join(format!("{stem}.{ext}")),
    }
}
