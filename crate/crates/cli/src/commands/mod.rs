pub mod analyze;
pub mod correct;
pub mod ingest;
pub mod probe;
pub mod report;

use std::path::Path;

use crate::CliError;

/// Create the parent directory of an output path if needed.
pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::usage(format!("cannot create `{}`: {e}", parent.display())))?;
        }
    }
    Ok(())
}
