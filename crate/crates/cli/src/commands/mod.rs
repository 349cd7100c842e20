pub mod baseline;
pub mod mc;
pub mod solve;
pub mod sweep;
pub mod validate;

use std::io::Write;
use std::path::Path;

/// Writes `text` to `path`, or to stdout without one.
pub(crate) fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}
