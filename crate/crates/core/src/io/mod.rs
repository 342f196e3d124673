//! Configuration, CSV series, binary checkpoints and run-directory output.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! crashed run never leaves a truncated file under the final name.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod runner;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{load_config, parse_config, ExperimentKind, RunConfig};
pub use csv::{read_csv, write_csv};
pub use runner::{run, verify_dir, Outcome, RunSummary};

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::usage(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()
    };
    if let Err(e) = write() {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(&tmp, e));
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
