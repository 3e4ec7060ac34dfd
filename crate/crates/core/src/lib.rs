//! Entity-relationship model tooling: a typed model with a JSON interchange
//! format, tolerant extraction from LLM responses, a design-quality lint
//! engine with ordinal quality levels, gold-standard diffing, Graphviz DOT
//! output and a prompting harness for experiment runs.

pub mod analysis;
pub mod config;
pub mod diff;
pub mod dot;
pub mod extract;
pub mod harness;
pub mod lint;
pub mod model;
pub mod normalize;
pub mod path;
pub mod schema;

pub use diff::{diff_models, diff_models_with, match_entities, DiffOptions, DiffReport, ElementClass, MatchMapping};
pub use dot::{emit_dot, render_external, ImageFormat, RenderError, RenderOptions};
pub use extract::{extract_document, ExtractError, ExtractionReport, SourceKind};
pub use lint::{
    classify_level, detect_transitive_redundancy, lint_model, run_lints, Finding, QualityLevel, RuleConfig, Severity,
};
pub use model::{
    canonicalize, normalize_name, parse_relation, serialize_relation, validate_model, Attribute, Cardinality, Endpoint,
    Entity, ErModel, Relationship, StructuralError,
};
pub use normalize::{normalize_pipeline, NormalizeError};
pub use path::ModelPath;
pub use schema::{parse_model, to_document, SchemaError};
