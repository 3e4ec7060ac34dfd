//! Raw LLM output to canonical model: extract, parse, canonicalize.

use std::fmt;

use thiserror::Error;

use crate::extract::{extract_document, ExtractError, ExtractionReport};
use crate::model::{canonicalize, CanonicalizeError, ErModel};
use crate::schema::{parse_model, SchemaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Extract,
    Parse,
    Canonicalize,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Extract => "extract",
            Stage::Parse => "parse",
            Stage::Canonicalize => "canonicalize",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("stage extract: {0}")]
    Extract(#[from] ExtractError),
    #[error("stage parse: {0}")]
    Parse(#[from] SchemaError),
    #[error("stage canonicalize: {0}")]
    Canonicalize(#[from] CanonicalizeError),
}

impl NormalizeError {
    pub fn stage(&self) -> Stage {
        match self {
            NormalizeError::Extract(_) => Stage::Extract,
            NormalizeError::Parse(_) => Stage::Parse,
            NormalizeError::Canonicalize(_) => Stage::Canonicalize,
        }
    }
}

pub fn normalize_pipeline(raw: &str) -> Result<(ErModel, ExtractionReport), NormalizeError> {
    let (document, report) = extract_document(raw)?;
    let model = parse_model(&document)?;
    let model = canonicalize(&model)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::SourceKind;

    #[test]
    fn fenced_fixture_yields_canonical_model_and_one_warning() {
        let raw = "Here is the model:\n```json\n{\"entities\":[{\"name\":\"B\",\"attributes\":[{\"name\":\"id\"}]},{\"name\":\"A\",\"attributes\":[{\"name\":\"id\"}]}]}\n```\nHope this helps";
        let (model, report) = normalize_pipeline(raw).unwrap();
        assert_eq!(model.entities[0].name, "A");
        assert_eq!(report.source_kind, SourceKind::FencedBlock);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn prose_fails_at_extract_stage() {
        let err = normalize_pipeline("Sorry, no model today.").unwrap_err();
        assert_eq!(err.stage(), Stage::Extract);
        assert_eq!(err, NormalizeError::Extract(ExtractError::NoDocumentFound));
    }

    #[test]
    fn schema_errors_fail_at_parse_stage() {
        let err = normalize_pipeline("{\"entities\": [], \"relationships\": [42]}").unwrap_err();
        assert_eq!(err.stage(), Stage::Parse);
    }
}
