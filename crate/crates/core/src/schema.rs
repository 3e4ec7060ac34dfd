//! The interchange document: the JSON file format that carries an ER model
//! between pipeline stages.
//!
//! ```json
//! {
//!   "format_version": "1",
//!   "title": "Hospital access",
//!   "entities": [
//!     {"name": "Hospital", "attributes": [{"name": "hospital_id", "type": "int", "pk": true}]},
//!     {"name": "Physician", "attributes": [...], "parent": "Employee"}
//!   ],
//!   "relationships": [
//!     "Hospital:hospital_id 1--* HospitalDepartment:hospital_id",
//!     {"endpoints": [{"entity": "A", "attribute": "id", "cardinality": "1"}, ...], "label": "books"}
//!   ]
//! }
//! ```
//!
//! Attribute flags (`pk`, `fk`, `not_null`, `unique`) default to false; `type`,
//! `parent`, `title` and `label` are optional. Unknown keys are ignored.

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::extract::json_kind;
use crate::model::{
    parse_relation, serialize_relation, validate_model, Attribute, Cardinality, Endpoint, Entity, ErModel,
    RelationError, Relationship, StructuralError,
};
use crate::path::ModelPath;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("document is not valid JSON: {0}")]
    NotJson(String),
    #[error("schema violation at {path}: expected {expected}, found {found}")]
    SchemaViolation { path: ModelPath, expected: &'static str, found: String },
    #[error("bad cardinality symbol `{symbol}` at {path}")]
    BadCardinalitySymbol { path: ModelPath, symbol: String },
    #[error("malformed relation at {path}: {source}")]
    MalformedRelation { path: ModelPath, source: RelationError },
    #[error("structural errors: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Structural(Vec<StructuralError>),
}

fn violation(path: &ModelPath, expected: &'static str, found: &Value) -> SchemaError {
    SchemaError::SchemaViolation { path: path.clone(), expected, found: json_kind(found).to_owned() }
}

fn object<'a>(v: &'a Value, path: &ModelPath, expected: &'static str) -> Result<&'a Map<String, Value>, SchemaError> {
    v.as_object().ok_or_else(|| violation(path, expected, v))
}

fn required_string(obj: &Map<String, Value>, key: &str, path: &ModelPath) -> Result<String, SchemaError> {
    let p = path.clone().key(key);
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(violation(&p, "string", other)),
        None => Err(SchemaError::SchemaViolation { path: p, expected: "string", found: "nothing".into() }),
    }
}

fn optional_string(obj: &Map<String, Value>, key: &str, path: &ModelPath) -> Result<Option<String>, SchemaError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(violation(&path.clone().key(key), "string", other)),
    }
}

fn flag(obj: &Map<String, Value>, key: &str, path: &ModelPath) -> Result<bool, SchemaError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(other) => Err(violation(&path.clone().key(key), "boolean", other)),
    }
}

fn list<'a>(obj: &'a Map<String, Value>, key: &str, path: &ModelPath) -> Result<&'a [Value], SchemaError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(&[]),
        Some(Value::Array(items)) => Ok(items),
        Some(other) => Err(violation(&path.clone().key(key), "list", other)),
    }
}

fn parse_attribute(v: &Value, path: &ModelPath) -> Result<Attribute, SchemaError> {
    let obj = object(v, path, "attribute object")?;
    Ok(Attribute {
        name: required_string(obj, "name", path)?,
        declared_type: optional_string(obj, "type", path)?.unwrap_or_default(),
        is_primary_key: flag(obj, "pk", path)?,
        is_foreign_key: flag(obj, "fk", path)?,
        not_null: flag(obj, "not_null", path)?,
        unique: flag(obj, "unique", path)?,
    })
}

fn parse_entity(v: &Value, path: &ModelPath) -> Result<Entity, SchemaError> {
    let obj = object(v, path, "entity object")?;
    let attrs_path = path.clone().key("attributes");
    let attributes = list(obj, "attributes", path)?
        .iter()
        .enumerate()
        .map(|(i, a)| parse_attribute(a, &attrs_path.clone().index(i)))
        .collect::<Result<_, _>>()?;
    Ok(Entity { name: required_string(obj, "name", path)?, attributes, parent: optional_string(obj, "parent", path)? })
}

fn parse_endpoint(v: &Value, path: &ModelPath) -> Result<Endpoint, SchemaError> {
    let obj = object(v, path, "endpoint object")?;
    let card_path = path.clone().key("cardinality");
    let cardinality = match obj.get("cardinality") {
        Some(Value::String(s)) => Cardinality::from_symbol(s)
            .ok_or_else(|| SchemaError::BadCardinalitySymbol { path: card_path, symbol: s.clone() })?,
        Some(Value::Number(n)) => {
            let s = n.to_string();
            Cardinality::from_symbol(&s).ok_or(SchemaError::BadCardinalitySymbol { path: card_path, symbol: s })?
        }
        Some(other) => return Err(violation(&card_path, "cardinality mark", other)),
        None => {
            return Err(SchemaError::SchemaViolation {
                path: card_path,
                expected: "cardinality mark",
                found: "nothing".into(),
            })
        }
    };
    Ok(Endpoint {
        entity: required_string(obj, "entity", path)?,
        attribute: optional_string(obj, "attribute", path)?,
        cardinality,
    })
}

fn parse_relationship(v: &Value, path: &ModelPath) -> Result<Relationship, SchemaError> {
    match v {
        Value::String(s) => parse_relation(s).map_err(|e| match e {
            RelationError::BadCardinalitySymbol(symbol) => {
                SchemaError::BadCardinalitySymbol { path: path.clone(), symbol }
            }
            other => SchemaError::MalformedRelation { path: path.clone(), source: other },
        }),
        Value::Object(obj) => {
            let eps_path = path.clone().key("endpoints");
            let endpoints = match obj.get("endpoints") {
                Some(Value::Array(items)) => items
                    .iter()
                    .enumerate()
                    .map(|(i, e)| parse_endpoint(e, &eps_path.clone().index(i)))
                    .collect::<Result<Vec<_>, _>>()?,
                Some(other) => return Err(violation(&eps_path, "endpoint list", other)),
                None => {
                    return Err(SchemaError::SchemaViolation {
                        path: eps_path,
                        expected: "endpoint list",
                        found: "nothing".into(),
                    })
                }
            };
            if endpoints.len() < 2 {
                return Err(SchemaError::SchemaViolation {
                    path: eps_path,
                    expected: "at least 2 endpoints",
                    found: format!("{} endpoint(s)", endpoints.len()),
                });
            }
            Ok(Relationship { endpoints, label: optional_string(obj, "label", path)? })
        }
        other => Err(violation(path, "string or endpoint list", other)),
    }
}

/// Build a typed model from an already-parsed JSON value.
pub fn model_from_value(doc: &Value) -> Result<ErModel, SchemaError> {
    let root = ModelPath::root();
    let obj = object(doc, &root, "object")?;
    match obj.get("format_version") {
        None | Some(Value::Null) => {}
        Some(Value::String(v)) if v == FORMAT_VERSION => {}
        Some(Value::Number(n)) if n.as_u64() == Some(1) => {}
        Some(other) => {
            return Err(SchemaError::SchemaViolation {
                path: root.clone().key("format_version"),
                expected: "format version \"1\"",
                found: other.to_string(),
            })
        }
    }
    let entities_path = root.clone().key("entities");
    let entities = match obj.get("entities") {
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, e)| parse_entity(e, &entities_path.clone().index(i)))
            .collect::<Result<Vec<_>, _>>()?,
        Some(other) => return Err(violation(&entities_path, "list", other)),
        None => {
            return Err(SchemaError::SchemaViolation { path: entities_path, expected: "list", found: "nothing".into() })
        }
    };
    let rels_path = root.clone().key("relationships");
    let relationships = list(obj, "relationships", &root)?
        .iter()
        .enumerate()
        .map(|(i, r)| parse_relationship(r, &rels_path.clone().index(i)))
        .collect::<Result<Vec<_>, _>>()?;

    let model = ErModel { title: optional_string(obj, "title", &root)?, entities, relationships };
    let errors = validate_model(&model);
    if errors.is_empty() {
        Ok(model)
    } else {
        Err(SchemaError::Structural(errors))
    }
}

/// Parse an interchange document. Relation strings and structured endpoint
/// lists both normalize to [`Relationship`]; the result always passes
/// [`validate_model`].
pub fn parse_model(document: &str) -> Result<ErModel, SchemaError> {
    let value: Value = serde_json::from_str(document).map_err(|e| SchemaError::NotJson(e.to_string()))?;
    model_from_value(&value)
}

#[derive(Serialize)]
struct AttributeDoc<'a> {
    name: &'a str,
    #[serde(rename = "type", skip_serializing_if = "str::is_empty")]
    declared_type: &'a str,
    #[serde(skip_serializing_if = "is_false")]
    pk: bool,
    #[serde(skip_serializing_if = "is_false")]
    fk: bool,
    #[serde(skip_serializing_if = "is_false")]
    not_null: bool,
    #[serde(skip_serializing_if = "is_false")]
    unique: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Serialize)]
struct EntityDoc<'a> {
    name: &'a str,
    attributes: Vec<AttributeDoc<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parent: Option<&'a str>,
}

#[derive(Serialize)]
struct EndpointDoc<'a> {
    entity: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    attribute: Option<&'a str>,
    cardinality: String,
}

#[derive(Serialize)]
#[serde(untagged)]
enum RelationshipDoc<'a> {
    Text(String),
    Structured {
        endpoints: Vec<EndpointDoc<'a>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        label: Option<&'a str>,
    },
}

#[derive(Serialize)]
struct ModelDoc<'a> {
    format_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    title: Option<&'a str>,
    entities: Vec<EntityDoc<'a>>,
    relationships: Vec<RelationshipDoc<'a>>,
}

fn relationship_doc(r: &Relationship) -> RelationshipDoc<'_> {
    if r.label.is_none() {
        if let Ok(text) = serialize_relation(r) {
            // Names outside the identifier alphabet have no string form.
            if parse_relation(&text).as_ref() == Ok(r) {
                return RelationshipDoc::Text(text);
            }
        }
    }
    RelationshipDoc::Structured {
        endpoints: r
            .endpoints
            .iter()
            .map(|e| EndpointDoc {
                entity: &e.entity,
                attribute: e.attribute.as_deref(),
                cardinality: e.cardinality.symbol().to_string(),
            })
            .collect(),
        label: r.label.as_deref(),
    }
}

/// Serialize a model as a pretty-printed interchange document with a
/// trailing newline. Unlabeled binary relationships use the string form.
pub fn to_document(m: &ErModel) -> String {
    let doc = ModelDoc {
        format_version: FORMAT_VERSION,
        title: m.title.as_deref(),
        entities: m
            .entities
            .iter()
            .map(|e| EntityDoc {
                name: &e.name,
                attributes: e
                    .attributes
                    .iter()
                    .map(|a| AttributeDoc {
                        name: &a.name,
                        declared_type: &a.declared_type,
                        pk: a.is_primary_key,
                        fk: a.is_foreign_key,
                        not_null: a.not_null,
                        unique: a.unique,
                    })
                    .collect(),
                parent: e.parent.as_deref(),
            })
            .collect(),
        relationships: m.relationships.iter().map(relationship_doc).collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("model document serializes");
    out.push('\n');
    out
}
