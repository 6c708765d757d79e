//! Registry files: TOML on disk, [`Registry`] in memory.

use std::fs;
use std::path::{Path, PathBuf};

use cook_core::registry::{RegistryDocument, RegistryError};
use cook_core::Registry;

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("{0}")]
    Syntax(String),
    #[error(transparent)]
    Invalid(#[from] RegistryError),
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read registry {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad registry {}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
}

pub fn parse_registry(text: &str) -> Result<Registry, ParseError> {
    let doc: RegistryDocument = toml::from_str(text).map_err(|e| ParseError::Syntax(e.to_string()))?;
    Ok(Registry::new(doc)?)
}

pub fn load_registry(path: &Path) -> Result<Registry, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.into(), source })?;
    parse_registry(&text).map_err(|source| LoadError::Parse { path: path.into(), source })
}

/// Canonical TOML form of a registry. Parsing the output yields an equal
/// registry.
pub fn to_toml(registry: &Registry) -> String {
    toml::to_string(registry.document()).expect("registry documents always serialize")
}
