//! Evaluation datasets (JSON lines) and in-context demonstration blocks.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use cook_core::evaluation::DatasetFormat;
use cook_core::EvalRecord;

use crate::jsonl::{read_jsonl, JsonlError};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}: {message}", path.display())]
    Line { path: PathBuf, line: usize, message: String },
    #[error("{}: {message}", path.display())]
    Content { path: PathBuf, message: String },
}

/// Reads and validates every record. Blank lines are skipped; the first bad
/// line aborts the load.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<EvalRecord>, DatasetError> {
    let numbered = read_records(path)?;
    validate_records(path, &numbered, format)?;
    Ok(numbered.into_iter().map(|(_, r)| r).collect())
}

/// Like [`load_dataset`], with the format settled by [`infer_format`].
pub fn load_dataset_inferred(path: &Path) -> Result<(Vec<EvalRecord>, DatasetFormat), DatasetError> {
    let numbered = read_records(path)?;
    let records: Vec<EvalRecord> = numbered.iter().map(|(_, r)| r.clone()).collect();
    let format = infer_format(&records).ok_or_else(|| DatasetError::Content {
        path: path.into(),
        message: "records mix lettered choices and free answers; name the format".into(),
    })?;
    validate_records(path, &numbered, format)?;
    Ok((records, format))
}

fn read_records(path: &Path) -> Result<Vec<(usize, EvalRecord)>, DatasetError> {
    let records: Vec<EvalRecord> = read_jsonl(path).map_err(|e| match e {
        JsonlError::Io(source) => DatasetError::Io { path: path.into(), source },
        JsonlError::Line { line, message } => DatasetError::Line { path: path.into(), line, message },
    })?;
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.into(), source })?;
    let line_numbers = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, _)| i + 1);
    Ok(line_numbers.zip(records).collect())
}

fn validate_records(path: &Path, numbered: &[(usize, EvalRecord)], format: DatasetFormat) -> Result<(), DatasetError> {
    let mut ids = BTreeSet::new();
    for (line, record) in numbered {
        let bad = |message: String| DatasetError::Line { path: path.into(), line: *line, message };
        record.validate(format).map_err(bad)?;
        if !ids.insert(record.id.as_str()) {
            return Err(bad(format!("duplicate record id \"{}\"", record.id)));
        }
    }
    Ok(())
}

/// `multiple_choice` when every record has choices, `open_book` when none
/// does. Classification sets have no choices either, so they must be named.
pub fn infer_format(records: &[EvalRecord]) -> Option<DatasetFormat> {
    let with_choices = records.iter().filter(|r| r.choices.is_some()).count();
    if with_choices == records.len() && !records.is_empty() {
        Some(DatasetFormat::MultipleChoice)
    } else if with_choices == 0 {
        Some(DatasetFormat::OpenBook)
    } else {
        None
    }
}

/// Demonstration blocks keyed by `icl_group`. Records without a group use the
/// `default` block; with no blocks at all every prefix is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IclBlocks {
    blocks: BTreeMap<String, String>,
}

pub const DEFAULT_GROUP: &str = "default";

impl IclBlocks {
    pub fn new(blocks: BTreeMap<String, String>) -> Self {
        Self { blocks }
    }

    /// Reads a JSON object mapping group names to demonstration text.
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.into(), source })?;
        let blocks = serde_json::from_str(&text)
            .map_err(|e| DatasetError::Content { path: path.into(), message: format!("expected a JSON object of strings: {e}") })?;
        Ok(Self { blocks })
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn prefix_for(&self, record: &EvalRecord) -> Option<&str> {
        if self.blocks.is_empty() {
            return Some("");
        }
        match &record.icl_group {
            Some(g) => self.blocks.get(g).map(String::as_str),
            None => Some(self.blocks.get(DEFAULT_GROUP).map_or("", String::as_str)),
        }
    }

    /// Every record's group must have a block (when any blocks are given).
    pub fn check(&self, records: &[EvalRecord]) -> Result<(), String> {
        for r in records {
            if self.prefix_for(r).is_none() {
                return Err(format!(
                    "record \"{}\" uses icl_group \"{}\", which has no demonstration block",
                    r.id,
                    r.icl_group.as_deref().unwrap_or_default()
                ));
            }
        }
        Ok(())
    }
}
