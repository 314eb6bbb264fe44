//! Column mappings that turn delimited-text rows into [`TextInstance`]s.
//!
//! File reading lives in the pipeline crate; everything here works on
//! already-split header and record fields so the conversion rules are
//! testable without touching the filesystem. Row indices in errors are
//! 1-based over data rows (the header is row 0).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{CategoryLabel, CorpusError, Source, TextInstance};

/// Maps raw label-cell values to booleans, case-insensitively after trimming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAdapter {
    pub true_values: Vec<String>,
    pub false_values: Vec<String>,
}

impl Default for LabelAdapter {
    fn default() -> LabelAdapter {
        LabelAdapter {
            true_values: ["1", "1.0", "true", "t", "yes", "y", "sarcastic", "ironic"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            false_values: ["0", "0.0", "false", "f", "no", "n", "not_sarcastic", "not_ironic"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl LabelAdapter {
    pub fn new(true_values: &[&str], false_values: &[&str]) -> LabelAdapter {
        LabelAdapter {
            true_values: true_values.iter().map(|s| s.to_string()).collect(),
            false_values: false_values.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn parse(&self, raw: &str) -> Option<bool> {
        let folded = raw.trim().to_lowercase();
        if self.true_values.iter().any(|v| v.to_lowercase() == folded) {
            return Some(true);
        }
        if self.false_values.iter().any(|v| v.to_lowercase() == folded) {
            return Some(false);
        }
        None
    }
}

fn find_column(header: &[String], wanted: &str) -> Result<usize, CorpusError> {
    header
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(wanted.trim()))
        .ok_or_else(|| CorpusError::MissingColumn {
            column: wanted.to_string(),
        })
}

fn cell<'a>(record: &'a [String], index: usize, row: usize, column: &str) -> Result<&'a str, CorpusError> {
    record.get(index).map(String::as_str).ok_or_else(|| {
        CorpusError::RowValidation {
            row,
            reason: format!("record too short, no value for column {column:?}"),
        }
    })
}

/// Column names for the official task file: text, binary label, the six
/// category flags, and the author rephrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IsarcasmMapping {
    pub text: String,
    pub sarcastic: String,
    pub sarcasm: String,
    pub irony: String,
    pub satire: String,
    pub understatement: String,
    pub overstatement: String,
    pub rhetorical_question: String,
    pub rephrase: String,
    pub labels: LabelAdapter,
}

impl Default for IsarcasmMapping {
    fn default() -> IsarcasmMapping {
        IsarcasmMapping {
            text: "tweet".to_string(),
            sarcastic: "sarcastic".to_string(),
            sarcasm: "sarcasm".to_string(),
            irony: "irony".to_string(),
            satire: "satire".to_string(),
            understatement: "understatement".to_string(),
            overstatement: "overstatement".to_string(),
            rhetorical_question: "rhetorical_question".to_string(),
            rephrase: "rephrase".to_string(),
            labels: LabelAdapter::default(),
        }
    }
}

impl IsarcasmMapping {
    fn flag_column(&self, label: CategoryLabel) -> &str {
        match label {
            CategoryLabel::Sarcasm => &self.sarcasm,
            CategoryLabel::Irony => &self.irony,
            CategoryLabel::Satire => &self.satire,
            CategoryLabel::Understatement => &self.understatement,
            CategoryLabel::Overstatement => &self.overstatement,
            CategoryLabel::RhetoricalQuestion => &self.rhetorical_question,
        }
    }

    /// Resolves every required column against a header, erroring with the
    /// first missing column name.
    pub fn resolve(&self, header: &[String]) -> Result<ResolvedIsarcasm<'_>, CorpusError> {
        Ok(ResolvedIsarcasm {
            mapping: self,
            text: find_column(header, &self.text)?,
            sarcastic: find_column(header, &self.sarcastic)?,
            flags: [
                find_column(header, &self.sarcasm)?,
                find_column(header, &self.irony)?,
                find_column(header, &self.satire)?,
                find_column(header, &self.understatement)?,
                find_column(header, &self.overstatement)?,
                find_column(header, &self.rhetorical_question)?,
            ],
            rephrase: find_column(header, &self.rephrase)?,
        })
    }
}

#[derive(Debug)]
pub struct ResolvedIsarcasm<'a> {
    mapping: &'a IsarcasmMapping,
    text: usize,
    sarcastic: usize,
    flags: [usize; 6],
    rephrase: usize,
}

impl ResolvedIsarcasm<'_> {
    /// Converts one data record; `row` is its 1-based position.
    pub fn instance(&self, record: &[String], row: usize) -> Result<TextInstance, CorpusError> {
        let mapping = self.mapping;
        let text = cell(record, self.text, row, &mapping.text)?.to_string();

        let raw = cell(record, self.sarcastic, row, &mapping.sarcastic)?;
        let sarcastic = mapping.labels.parse(raw).ok_or_else(|| CorpusError::RowValidation {
            row,
            reason: format!("unmappable value {raw:?} in column {:?}", mapping.sarcastic),
        })?;

        let mut instance = TextInstance::binary(format!("isarcasm-{row}"), text, sarcastic, Source::Isarcasm);
        for (label, &index) in CategoryLabel::ALL.iter().zip(&self.flags) {
            let column = mapping.flag_column(*label);
            let raw = cell(record, index, row, column)?;
            let value = mapping.labels.parse(raw).ok_or_else(|| CorpusError::RowValidation {
                row,
                reason: format!("unmappable value {raw:?} in column {column:?}"),
            })?;
            instance.category_flags.set(*label, value);
        }

        let rephrase = cell(record, self.rephrase, row, &mapping.rephrase)?;
        if !rephrase.trim().is_empty() {
            instance.rephrase = Some(rephrase.to_string());
        }

        instance.validate().map_err(|e| CorpusError::RowValidation {
            row,
            reason: e.to_string(),
        })?;
        Ok(instance)
    }
}

/// Column names for a binary-labeled auxiliary source: a text column and a
/// sarcasm/irony label column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinaryMapping {
    pub text: String,
    pub label: String,
    pub labels: LabelAdapter,
}

impl Default for BinaryMapping {
    fn default() -> BinaryMapping {
        BinaryMapping {
            text: "text".to_string(),
            label: "label".to_string(),
            labels: LabelAdapter::default(),
        }
    }
}

impl BinaryMapping {
    pub fn resolve(&self, header: &[String]) -> Result<ResolvedBinary<'_>, CorpusError> {
        Ok(ResolvedBinary {
            mapping: self,
            text: find_column(header, &self.text)?,
            label: find_column(header, &self.label)?,
        })
    }
}

#[derive(Debug)]
pub struct ResolvedBinary<'a> {
    mapping: &'a BinaryMapping,
    text: usize,
    label: usize,
}

impl ResolvedBinary<'_> {
    pub fn instance(
        &self,
        record: &[String],
        row: usize,
        source: Source,
    ) -> Result<TextInstance, CorpusError> {
        let mapping = self.mapping;
        let text = cell(record, self.text, row, &mapping.text)?.to_string();
        let raw = cell(record, self.label, row, &mapping.label)?;
        let label = mapping.labels.parse(raw).ok_or_else(|| CorpusError::RowValidation {
            row,
            reason: format!("unmappable value {raw:?} in column {:?}", mapping.label),
        })?;
        let instance = TextInstance::binary(
            format!("{}-{row}", source.id_prefix()),
            text,
            label,
            source,
        );
        instance.validate().map_err(|e| CorpusError::RowValidation {
            row,
            reason: e.to_string(),
        })?;
        Ok(instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn strings(raw: &[&str]) -> Vec<String> {
        raw.iter().map(|s| s.to_string()).collect()
    }

    fn official_header() -> Vec<String> {
        strings(&[
            "tweet",
            "sarcastic",
            "rephrase",
            "sarcasm",
            "irony",
            "satire",
            "understatement",
            "overstatement",
            "rhetorical_question",
        ])
    }

    #[test]
    fn official_row_converts() {
        let mapping = IsarcasmMapping::default();
        let resolved = mapping.resolve(&official_header()).unwrap();
        let record = strings(&["Great, rain again", "1", "I dislike rain", "1", "0", "0", "0", "0", "1"]);
        let instance = resolved.instance(&record, 1).unwrap();
        assert_eq!(instance.sarcastic, Some(true));
        assert!(instance.category_flags.sarcasm);
        assert!(instance.category_flags.rhetorical_question);
        assert_eq!(instance.rephrase.as_deref(), Some("I dislike rain"));
        assert_eq!(instance.source, Source::Isarcasm);
    }

    #[test]
    fn missing_rephrase_column_is_named() {
        let mapping = IsarcasmMapping::default();
        let header = strings(&[
            "tweet",
            "sarcastic",
            "sarcasm",
            "irony",
            "satire",
            "understatement",
            "overstatement",
            "rhetorical_question",
        ]);
        let err = mapping.resolve(&header).unwrap_err();
        match err {
            CorpusError::MissingColumn { column } => assert_eq!(column, "rephrase"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_sarcastic_with_flags_is_a_row_error() {
        let mapping = IsarcasmMapping::default();
        let resolved = mapping.resolve(&official_header()).unwrap();
        let record = strings(&["plain text", "0", "", "1", "0", "0", "0", "0", "0"]);
        let err = resolved.instance(&record, 7).unwrap_err();
        assert!(matches!(err, CorpusError::RowValidation { row: 7, .. }));
    }

    #[test]
    fn unmappable_label_is_a_row_error() {
        let mapping = BinaryMapping::default();
        let resolved = mapping.resolve(&strings(&["text", "label"])).unwrap();
        let err = resolved
            .instance(&strings(&["hello", "maybe"]), 3, Source::Mustard)
            .unwrap_err();
        assert!(matches!(err, CorpusError::RowValidation { row: 3, .. }));
    }

    #[test]
    fn custom_yes_no_adapter() {
        let mapping = BinaryMapping {
            labels: LabelAdapter::new(&["yes"], &["no"]),
            ..BinaryMapping::default()
        };
        let resolved = mapping.resolve(&strings(&["text", "label"])).unwrap();
        let yes = resolved
            .instance(&strings(&["one", "Yes"]), 1, Source::Semeval18Train)
            .unwrap();
        let no = resolved
            .instance(&strings(&["two", "no"]), 2, Source::Semeval18Train)
            .unwrap();
        assert_eq!(yes.sarcastic, Some(true));
        assert_eq!(no.sarcastic, Some(false));
        assert_eq!(yes.id, "semeval18-train-1");
        // Binary sources carry no flags or rephrases.
        assert!(!yes.category_flags.any());
        assert!(yes.rephrase.is_none());
    }
}
