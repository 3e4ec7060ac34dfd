use std::collections::{BTreeMap, HashSet};

use super::{
    Finding, Rule, RuleConfig, Severity, ATTRIBUTE_OVERLOAD, DANGLING_FK_ENDPOINT, DEEP_HIERARCHY, DUPLICATE_ATTRIBUTE,
    DUPLICATE_CONCEPT, ISOLATED_ENTITY, KEY_NAMING_INCONSISTENT, MISSING_CONSTRAINTS, NARY_REVIEW,
};
use crate::model::{normalize_name, ErModel};
use crate::path::ModelPath;

pub struct AttributeOverload;

impl Rule for AttributeOverload {
    fn id(&self) -> &'static str {
        ATTRIBUTE_OVERLOAD
    }
    fn severity(&self) -> Severity {
        Severity::Warning
    }
    fn description(&self) -> &'static str {
        "entity carries more attributes than the configured threshold"
    }
    fn check(&self, model: &ErModel, cfg: &RuleConfig, out: &mut Vec<Finding>) {
        for (i, e) in model.entities.iter().enumerate() {
            if e.attributes.len() > cfg.attribute_overload_threshold {
                out.push(Finding::new(
                    self,
                    ModelPath::entity(i),
                    format!(
                        "`{}` has {} attributes (threshold {})",
                        e.name,
                        e.attributes.len(),
                        cfg.attribute_overload_threshold
                    ),
                ));
            }
        }
    }
}

/// Reported once per leaf whose chain exceeds the threshold.
pub struct DeepHierarchy;

impl Rule for DeepHierarchy {
    fn id(&self) -> &'static str {
        DEEP_HIERARCHY
    }
    fn severity(&self) -> Severity {
        Severity::Warning
    }
    fn description(&self) -> &'static str {
        "generalization chain deeper than the configured threshold"
    }
    fn check(&self, model: &ErModel, cfg: &RuleConfig, out: &mut Vec<Finding>) {
        let depths = model.hierarchy_depths();
        let parents: HashSet<&str> = model.entities.iter().filter_map(|e| e.parent.as_deref()).collect();
        for (i, e) in model.entities.iter().enumerate() {
            if depths[i] > cfg.hierarchy_depth_threshold && !parents.contains(e.name.as_str()) {
                let mut chain = vec![e.name.as_str()];
                let mut cur = e.parent.as_deref();
                while let Some(p) = cur {
                    if chain.len() > model.entities.len() {
                        break;
                    }
                    chain.push(p);
                    cur = model.entity(p).and_then(|pe| pe.parent.as_deref());
                }
                out.push(Finding::new(
                    self,
                    ModelPath::entity(i),
                    format!(
                        "hierarchy depth {} exceeds {} ({})",
                        depths[i],
                        cfg.hierarchy_depth_threshold,
                        chain.join(" -> ")
                    ),
                ));
            }
        }
    }
}

pub struct NaryReview;

impl Rule for NaryReview {
    fn id(&self) -> &'static str {
        NARY_REVIEW
    }
    fn severity(&self) -> Severity {
        Severity::Info
    }
    fn description(&self) -> &'static str {
        "n-ary relationship; check whether binary relationships would suffice"
    }
    fn check(&self, model: &ErModel, _cfg: &RuleConfig, out: &mut Vec<Finding>) {
        for (i, r) in model.relationships.iter().enumerate() {
            if r.endpoints.len() > 2 {
                let names: Vec<&str> = r.endpoints.iter().map(|e| e.entity.as_str()).collect();
                out.push(Finding::new(
                    self,
                    ModelPath::relationship(i),
                    format!("{}-ary relationship over {}", r.endpoints.len(), names.join(", ")),
                ));
            }
        }
    }
}

pub struct DuplicateAttribute;

impl Rule for DuplicateAttribute {
    fn id(&self) -> &'static str {
        DUPLICATE_ATTRIBUTE
    }
    fn severity(&self) -> Severity {
        Severity::Error
    }
    fn description(&self) -> &'static str {
        "two attributes of one entity are equal after name normalization"
    }
    fn check(&self, model: &ErModel, _cfg: &RuleConfig, out: &mut Vec<Finding>) {
        for (ei, e) in model.entities.iter().enumerate() {
            let mut first: BTreeMap<String, usize> = BTreeMap::new();
            for (ai, a) in e.attributes.iter().enumerate() {
                let key = normalize_name(&a.name);
                if let Some(&prev) = first.get(&key) {
                    out.push(Finding::new(
                        self,
                        ModelPath::attribute(ei, ai),
                        format!("`{}.{}` duplicates `{}`", e.name, a.name, e.attributes[prev].name),
                    ));
                } else {
                    first.insert(key, ai);
                }
            }
        }
    }
}

pub struct IsolatedEntity;

impl Rule for IsolatedEntity {
    fn id(&self) -> &'static str {
        ISOLATED_ENTITY
    }
    fn severity(&self) -> Severity {
        Severity::Warning
    }
    fn description(&self) -> &'static str {
        "entity takes part in no relationship and no hierarchy"
    }
    fn check(&self, model: &ErModel, _cfg: &RuleConfig, out: &mut Vec<Finding>) {
        let mut connected: HashSet<&str> = HashSet::new();
        for r in &model.relationships {
            connected.extend(r.endpoints.iter().map(|e| e.entity.as_str()));
        }
        for e in &model.entities {
            if let Some(p) = &e.parent {
                connected.insert(p);
                connected.insert(&e.name);
            }
        }
        for (i, e) in model.entities.iter().enumerate() {
            if !connected.contains(e.name.as_str()) {
                out.push(Finding::new(self, ModelPath::entity(i), format!("`{}` is not connected", e.name)));
            }
        }
    }
}

pub struct DanglingFkEndpoint;

impl Rule for DanglingFkEndpoint {
    fn id(&self) -> &'static str {
        DANGLING_FK_ENDPOINT
    }
    fn severity(&self) -> Severity {
        Severity::Warning
    }
    fn description(&self) -> &'static str {
        "relationship endpoint does not name the attribute that carries the link"
    }
    fn check(&self, model: &ErModel, _cfg: &RuleConfig, out: &mut Vec<Finding>) {
        for (ri, r) in model.relationships.iter().enumerate() {
            for (pi, ep) in r.endpoints.iter().enumerate() {
                if ep.attribute.is_none() {
                    out.push(Finding::new(
                        self,
                        ModelPath::endpoint(ri, pi),
                        format!("endpoint on `{}` has no attribute", ep.entity),
                    ));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KeyPattern {
    /// `id`
    Bare,
    /// `<entity>_id`
    Qualified,
}

impl KeyPattern {
    fn matches(self, entity: &str, attr: &str) -> bool {
        let attr = normalize_name(attr);
        match self {
            KeyPattern::Bare => attr == "id",
            KeyPattern::Qualified => attr == format!("{}id", normalize_name(entity)),
        }
    }

    fn describe(self) -> &'static str {
        match self {
            KeyPattern::Bare => "`id`",
            KeyPattern::Qualified => "`<entity>_id`",
        }
    }
}

/// The dominant pattern is the one most primary keys follow (`<entity>_id`
/// on a tie); every key outside it is reported.
pub struct KeyNamingInconsistent;

impl Rule for KeyNamingInconsistent {
    fn id(&self) -> &'static str {
        KEY_NAMING_INCONSISTENT
    }
    fn severity(&self) -> Severity {
        Severity::Warning
    }
    fn description(&self) -> &'static str {
        "primary keys do not all follow one naming pattern (`id` or `<entity>_id`)"
    }
    fn check(&self, model: &ErModel, _cfg: &RuleConfig, out: &mut Vec<Finding>) {
        let keys: Vec<(usize, usize)> = model
            .entities
            .iter()
            .enumerate()
            .flat_map(|(ei, e)| {
                e.attributes.iter().enumerate().filter(|(_, a)| a.is_primary_key).map(move |(ai, _)| (ei, ai))
            })
            .collect();
        let count = |p: KeyPattern| {
            keys.iter()
                .filter(|&&(ei, ai)| p.matches(&model.entities[ei].name, &model.entities[ei].attributes[ai].name))
                .count()
        };
        let dominant = if count(KeyPattern::Bare) > count(KeyPattern::Qualified) {
            KeyPattern::Bare
        } else {
            KeyPattern::Qualified
        };
        for (ei, ai) in keys {
            let e = &model.entities[ei];
            let a = &e.attributes[ai];
            if !dominant.matches(&e.name, &a.name) {
                out.push(Finding::new(
                    self,
                    ModelPath::attribute(ei, ai),
                    format!("primary key `{}.{}` does not follow the {} pattern", e.name, a.name, dominant.describe()),
                ));
            }
        }
    }
}

pub struct DuplicateConcept;

impl Rule for DuplicateConcept {
    fn id(&self) -> &'static str {
        DUPLICATE_CONCEPT
    }
    fn severity(&self) -> Severity {
        Severity::Warning
    }
    fn description(&self) -> &'static str {
        "two entities are equal after name normalization"
    }
    fn check(&self, model: &ErModel, _cfg: &RuleConfig, out: &mut Vec<Finding>) {
        let mut first: BTreeMap<String, usize> = BTreeMap::new();
        for (i, e) in model.entities.iter().enumerate() {
            let key = normalize_name(&e.name);
            if let Some(&prev) = first.get(&key) {
                out.push(Finding::new(
                    self,
                    ModelPath::entity(i),
                    format!("`{}` names the same concept as `{}`", e.name, model.entities[prev].name),
                ));
            } else {
                first.insert(key, i);
            }
        }
    }
}

pub struct MissingConstraints;

impl Rule for MissingConstraints {
    fn id(&self) -> &'static str {
        MISSING_CONSTRAINTS
    }
    fn severity(&self) -> Severity {
        Severity::Info
    }
    fn description(&self) -> &'static str {
        "model declares no NOT NULL or UNIQUE constraint"
    }
    fn check(&self, model: &ErModel, _cfg: &RuleConfig, out: &mut Vec<Finding>) {
        let any = model.entities.iter().flat_map(|e| &e.attributes).any(|a| a.not_null || a.unique);
        if !any {
            out.push(Finding::new(self, ModelPath::root().key("entities"), "no attribute declares not_null or unique"));
        }
    }
}
