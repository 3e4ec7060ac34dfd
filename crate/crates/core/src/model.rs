//! Canonical in-memory ER model and the relation-string grammar.
//!
//! A relation string links two endpoints with a pair of cardinality marks:
//!
//! ```text
//! relation := endpoint WS card "--" card WS endpoint
//! endpoint := entity (":" attribute)?
//! card     := "1" | "*" | "?" | "+"
//! ```
//!
//! For example `Hospital:hospital_id 1--* HospitalDepartment:hospital_id`.
//! Relationships with more than two endpoints have no string form and only
//! exist in the structured interchange encoding.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::path::ModelPath;

/// Lowercase and strip everything that is not alphanumeric, so that
/// `HospitalDepartment`, `hospital_department` and `hospital-department`
/// all compare equal.
pub fn normalize_name(name: &str) -> String {
    name.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

/// Per-endpoint multiplicity mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cardinality {
    ExactlyOne,
    ZeroOrMore,
    ZeroOrOne,
    OneOrMore,
}

impl Cardinality {
    pub const ALL: [Cardinality; 4] =
        [Cardinality::ExactlyOne, Cardinality::ZeroOrMore, Cardinality::ZeroOrOne, Cardinality::OneOrMore];

    pub fn symbol(self) -> char {
        match self {
            Cardinality::ExactlyOne => '1',
            Cardinality::ZeroOrMore => '*',
            Cardinality::ZeroOrOne => '?',
            Cardinality::OneOrMore => '+',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "1" => Some(Cardinality::ExactlyOne),
            "*" => Some(Cardinality::ZeroOrMore),
            "?" => Some(Cardinality::ZeroOrOne),
            "+" => Some(Cardinality::OneOrMore),
            _ => None,
        }
    }

    /// `*` and `+`: the "many" side of a one-to-many link.
    pub fn is_many(self) -> bool {
        matches!(self, Cardinality::ZeroOrMore | Cardinality::OneOrMore)
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Attribute {
    pub name: String,
    /// Free-text type as emitted by the model; empty when absent.
    pub declared_type: String,
    pub is_primary_key: bool,
    pub is_foreign_key: bool,
    pub not_null: bool,
    pub unique: bool,
}

impl Attribute {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn primary_key(mut self) -> Self {
        self.is_primary_key = true;
        self
    }

    pub fn foreign_key(mut self) -> Self {
        self.is_foreign_key = true;
        self
    }

    pub fn not_null(mut self) -> Self {
        self.not_null = true;
        self
    }

    pub fn unique(mut self) -> Self {
        self.unique = true;
        self
    }

    pub fn typed(mut self, ty: impl Into<String>) -> Self {
        self.declared_type = ty.into();
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Entity {
    pub name: String,
    pub attributes: Vec<Attribute>,
    /// Generalization link: this entity specializes `parent`.
    pub parent: Option<String>,
}

impl Entity {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn with_attributes<I>(mut self, attrs: I) -> Self
    where
        I: IntoIterator<Item = Attribute>,
    {
        self.attributes.extend(attrs);
        self
    }

    pub fn with_parent(mut self, parent: impl Into<String>) -> Self {
        self.parent = Some(parent.into());
        self
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub entity: String,
    pub attribute: Option<String>,
    pub cardinality: Cardinality,
}

impl Endpoint {
    pub fn new(entity: impl Into<String>, attribute: Option<&str>, cardinality: Cardinality) -> Self {
        Self { entity: entity.into(), attribute: attribute.map(str::to_owned), cardinality }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.attribute {
            Some(attr) => write!(f, "{}:{}", self.entity, attr),
            None => f.write_str(&self.entity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relationship {
    pub endpoints: Vec<Endpoint>,
    /// Display-only.
    pub label: Option<String>,
}

impl Relationship {
    pub fn binary(left: Endpoint, right: Endpoint) -> Self {
        Self { endpoints: vec![left, right], label: None }
    }

    pub fn is_binary(&self) -> bool {
        self.endpoints.len() == 2
    }

    /// Stable ordering key: the relation string for binary relationships, a
    /// bracketed endpoint list otherwise.
    pub fn sort_key(&self) -> (String, Option<String>) {
        let body = match serialize_relation(self) {
            Ok(s) => s,
            Err(_) => {
                let parts: Vec<String> = self.endpoints.iter().map(|e| format!("{} {}", e, e.cardinality)).collect();
                format!("[{}]", parts.join(", "))
            }
        };
        (body, self.label.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ErModel {
    pub title: Option<String>,
    pub entities: Vec<Entity>,
    pub relationships: Vec<Relationship>,
}

impl ErModel {
    pub fn entity(&self, name: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.name == name)
    }

    pub fn entity_index(&self) -> HashMap<&str, usize> {
        self.entities.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect()
    }

    /// Depth of each entity in the generalization forest (roots are 0).
    /// Only meaningful for models whose hierarchy is acyclic.
    pub fn hierarchy_depths(&self) -> Vec<usize> {
        let index = self.entity_index();
        let mut depths: Vec<Option<usize>> = vec![None; self.entities.len()];
        for start in 0..self.entities.len() {
            let mut chain = Vec::new();
            let mut cur = Some(start);
            let mut base = 0;
            while let Some(i) = cur {
                if let Some(d) = depths[i] {
                    base = d + 1;
                    break;
                }
                if chain.contains(&i) || chain.len() > self.entities.len() {
                    break;
                }
                chain.push(i);
                cur = self.entities[i].parent.as_deref().and_then(|p| index.get(p).copied());
            }
            // `chain` runs child -> ancestor; the last element sits on `base`.
            for (offset, &i) in chain.iter().rev().enumerate() {
                depths[i] = Some(base + offset);
            }
        }
        depths.into_iter().map(|d| d.unwrap_or(0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("bad cardinality symbol `{0}` (expected one of 1, *, ?, +)")]
    BadCardinalitySymbol(String),
    #[error("malformed relation `{text}`: {reason}")]
    MalformedRelation { text: String, reason: &'static str },
    #[error("relationship has {0} endpoints; only binary relationships have a string form")]
    NotBinary(usize),
}

fn malformed(text: &str, reason: &'static str) -> RelationError {
    RelationError::MalformedRelation { text: text.to_owned(), reason }
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

fn parse_endpoint(text: &str, cardinality: Cardinality) -> Result<Endpoint, RelationError> {
    let (entity, attribute) = match text.split_once(':') {
        Some((e, a)) => (e, Some(a)),
        None => (text, None),
    };
    if !is_identifier(entity) {
        return Err(malformed(text, "endpoint entity must be an identifier"));
    }
    if let Some(a) = attribute {
        if !is_identifier(a) {
            return Err(malformed(text, "endpoint attribute must be an identifier"));
        }
    }
    Ok(Endpoint::new(entity, attribute, cardinality))
}

fn parse_card(token: &str) -> Result<Cardinality, RelationError> {
    Cardinality::from_symbol(token).ok_or_else(|| RelationError::BadCardinalitySymbol(token.to_owned()))
}

/// Parse a relation string into a two-endpoint relationship, preserving
/// left/right order.
pub fn parse_relation(text: &str) -> Result<Relationship, RelationError> {
    let trimmed = text.trim();
    let dash = trimmed.find("--").ok_or_else(|| malformed(trimmed, "missing `--` between cardinalities"))?;
    let left = trimmed[..dash].trim_end();
    let right = trimmed[dash + 2..].trim_start();

    let (left_ep, left_card) = left
        .rfind(char::is_whitespace)
        .map(|i| (left[..i].trim(), left[i..].trim_start()))
        .ok_or_else(|| malformed(left, "expected `<endpoint> <card>` before `--`"))?;
    let (right_card, right_ep) = right
        .find(char::is_whitespace)
        .map(|i| (&right[..i], right[i..].trim()))
        .ok_or_else(|| malformed(right, "expected `<card> <endpoint>` after `--`"))?;

    if left_ep.is_empty() {
        return Err(malformed(left, "missing left endpoint"));
    }
    if right_ep.is_empty() {
        return Err(malformed(right, "missing right endpoint"));
    }
    let lc = parse_card(left_card)?;
    let rc = parse_card(right_card)?;
    let l = parse_endpoint(left_ep, lc)?;
    let r = parse_endpoint(right_ep, rc)?;
    Ok(Relationship::binary(l, r))
}

/// Inverse of [`parse_relation`]. The label is not part of the string form.
pub fn serialize_relation(rel: &Relationship) -> Result<String, RelationError> {
    match rel.endpoints.as_slice() {
        [l, r] => Ok(format!("{} {}--{} {}", l, l.cardinality, r.cardinality, r)),
        other => Err(RelationError::NotBinary(other.len())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StructuralErrorKind {
    EmptyName,
    DuplicateEntity,
    DuplicateAttribute,
    UnknownParent,
    CyclicHierarchy,
    UnknownEntityReference,
    UnknownAttributeReference,
    TooFewEndpoints,
}

impl StructuralErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StructuralErrorKind::EmptyName => "EmptyName",
            StructuralErrorKind::DuplicateEntity => "DuplicateEntity",
            StructuralErrorKind::DuplicateAttribute => "DuplicateAttribute",
            StructuralErrorKind::UnknownParent => "UnknownParent",
            StructuralErrorKind::CyclicHierarchy => "CyclicHierarchy",
            StructuralErrorKind::UnknownEntityReference => "UnknownEntityReference",
            StructuralErrorKind::UnknownAttributeReference => "UnknownAttributeReference",
            StructuralErrorKind::TooFewEndpoints => "TooFewEndpoints",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralError {
    pub kind: StructuralErrorKind,
    pub location: ModelPath,
    pub message: String,
}

impl fmt::Display for StructuralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind.as_str(), self.location, self.message)
    }
}

/// Check reference integrity and naming. Returns every problem found; an
/// empty list means the model can be rendered and diffed safely.
///
/// Names must be unique by exact spelling. Spellings that only collide
/// after [`normalize_name`] are left to the `duplicate-concept` and
/// `duplicate-attribute` lint rules.
pub fn validate_model(m: &ErModel) -> Vec<StructuralError> {
    let mut errors = Vec::new();
    let mut push = |kind, location, message: String| errors.push(StructuralError { kind, location, message });

    let mut seen_entities: HashMap<&str, usize> = HashMap::new();
    for (ei, e) in m.entities.iter().enumerate() {
        if e.name.trim().is_empty() {
            push(StructuralErrorKind::EmptyName, ModelPath::entity(ei).key("name"), "entity name is empty".into());
        } else if let Some(&first) = seen_entities.get(e.name.as_str()) {
            push(
                StructuralErrorKind::DuplicateEntity,
                ModelPath::entity(ei),
                format!("entity `{}` already declared at entities[{first}]", e.name),
            );
        } else {
            seen_entities.insert(e.name.as_str(), ei);
        }
        let mut seen_attrs: HashMap<&str, usize> = HashMap::new();
        for (ai, a) in e.attributes.iter().enumerate() {
            if a.name.trim().is_empty() {
                push(
                    StructuralErrorKind::EmptyName,
                    ModelPath::attribute(ei, ai).key("name"),
                    format!("attribute of `{}` has an empty name", e.name),
                );
            } else if let Some(&first) = seen_attrs.get(a.name.as_str()) {
                push(
                    StructuralErrorKind::DuplicateAttribute,
                    ModelPath::attribute(ei, ai),
                    format!("attribute `{}` already declared at attributes[{first}]", a.name),
                );
            } else {
                seen_attrs.insert(a.name.as_str(), ai);
            }
        }
    }

    let index = m.entity_index();
    for (ei, e) in m.entities.iter().enumerate() {
        if let Some(p) = &e.parent {
            if !index.contains_key(p.as_str()) {
                push(
                    StructuralErrorKind::UnknownParent,
                    ModelPath::entity(ei).key("parent"),
                    format!("parent `{p}` of `{}` is not a declared entity", e.name),
                );
            }
        }
    }

    let mut reported_cycles: BTreeSet<Vec<usize>> = BTreeSet::new();
    for start in 0..m.entities.len() {
        let mut path: Vec<usize> = Vec::new();
        let mut cur = Some(start);
        while let Some(i) = cur {
            if let Some(pos) = path.iter().position(|&p| p == i) {
                let mut cycle = path[pos..].to_vec();
                cycle.sort_unstable();
                if reported_cycles.insert(cycle.clone()) {
                    let names: Vec<&str> = cycle.iter().map(|&c| m.entities[c].name.as_str()).collect();
                    push(
                        StructuralErrorKind::CyclicHierarchy,
                        ModelPath::entity(cycle[0]).key("parent"),
                        format!("generalization cycle through {}", names.join(", ")),
                    );
                }
                break;
            }
            path.push(i);
            cur = m.entities[i].parent.as_deref().and_then(|p| index.get(p).copied());
        }
    }

    for (ri, r) in m.relationships.iter().enumerate() {
        if r.endpoints.len() < 2 {
            push(
                StructuralErrorKind::TooFewEndpoints,
                ModelPath::relationship(ri),
                format!("relationship has {} endpoint(s); at least 2 are required", r.endpoints.len()),
            );
        }
        for (pi, ep) in r.endpoints.iter().enumerate() {
            match index.get(ep.entity.as_str()) {
                None => push(
                    StructuralErrorKind::UnknownEntityReference,
                    ModelPath::endpoint(ri, pi),
                    format!("entity `{}` is not declared", ep.entity),
                ),
                Some(&ei) => {
                    if let Some(attr) = &ep.attribute {
                        if m.entities[ei].attribute(attr).is_none() {
                            push(
                                StructuralErrorKind::UnknownAttributeReference,
                                ModelPath::endpoint(ri, pi),
                                format!("entity `{}` has no attribute `{attr}`", ep.entity),
                            );
                        }
                    }
                }
            }
        }
    }

    errors
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonicalizeError {
    #[error("cannot canonicalize an invalid model ({} structural error(s))", .0.len())]
    InvalidModel(Vec<StructuralError>),
}

/// Order-stable form: entities sorted by normalized name (exact name breaks
/// ties), relationships by their serialized key. Attribute order and
/// endpoint order are content and are kept.
pub fn canonicalize(m: &ErModel) -> Result<ErModel, CanonicalizeError> {
    let errors = validate_model(m);
    if !errors.is_empty() {
        return Err(CanonicalizeError::InvalidModel(errors));
    }
    let mut entities: Vec<(String, Entity)> = m.entities.iter().map(|e| (normalize_name(&e.name), e.clone())).collect();
    entities.sort_by(|(na, a), (nb, b)| na.cmp(nb).then_with(|| a.name.cmp(&b.name)));

    let mut relationships: BTreeMap<(String, Option<String>), Vec<Relationship>> = BTreeMap::new();
    for r in &m.relationships {
        relationships.entry(r.sort_key()).or_default().push(r.clone());
    }

    Ok(ErModel {
        title: m.title.clone(),
        entities: entities.into_iter().map(|(_, e)| e).collect(),
        relationships: relationships.into_values().flatten().collect(),
    })
}
