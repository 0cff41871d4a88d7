//! Reading IDX image/label pairs from disk.

use std::path::Path;

use tomography_core::neural::{parse_idx, Dataset};

use crate::error::{CliError, Result};

/// First `limit` examples of an IDX pair, pixels scaled to `[0, 1]`.
pub fn load_idx(images: &Path, labels: &Path, limit: usize, num_classes: usize) -> Result<Dataset> {
    let img = std::fs::read(images).map_err(CliError::io(images))?;
    let lab = std::fs::read(labels).map_err(CliError::io(labels))?;
    parse_idx(&img, &lab, limit, num_classes).map_err(|e| CliError::Runtime(e.into()))
}
