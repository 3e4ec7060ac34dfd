//! Direct parent-to-grandchild links that are derivable through an
//! intermediate entity.
//!
//! With `P 1--* M`, `M 1--* C` and `P 1--* C`, the last relationship repeats
//! what the first two already say and lets a `C` row point at a `P` that
//! disagrees with its `M`.

use std::collections::{BTreeMap, BTreeSet};

use super::{Finding, Rule, RuleConfig, Severity, TRANSITIVE_REDUNDANCY};
use crate::model::{Cardinality, ErModel};
use crate::path::ModelPath;

pub struct TransitiveRedundancy;

impl Rule for TransitiveRedundancy {
    fn id(&self) -> &'static str {
        TRANSITIVE_REDUNDANCY
    }
    fn severity(&self) -> Severity {
        Severity::Warning
    }
    fn description(&self) -> &'static str {
        "one-to-many relationship derivable through an intermediate entity"
    }
    fn check(&self, model: &ErModel, _cfg: &RuleConfig, out: &mut Vec<Finding>) {
        out.extend(detect_transitive_redundancy(model));
    }
}

/// One-to-many edges `(one side, many side, relationship index)` between
/// distinct entities.
fn one_to_many_edges(model: &ErModel) -> Vec<(usize, usize, usize)> {
    let index = model.entity_index();
    let mut edges = Vec::new();
    for (ri, r) in model.relationships.iter().enumerate() {
        let [a, b] = r.endpoints.as_slice() else { continue };
        let (Some(&ai), Some(&bi)) = (index.get(a.entity.as_str()), index.get(b.entity.as_str())) else {
            continue;
        };
        if ai == bi {
            continue;
        }
        if a.cardinality == Cardinality::ExactlyOne && b.cardinality.is_many() {
            edges.push((ai, bi, ri));
        } else if b.cardinality == Cardinality::ExactlyOne && a.cardinality.is_many() {
            edges.push((bi, ai, ri));
        }
    }
    edges
}

/// One `transitive-redundancy` finding per direct relationship that closes
/// a one-to-many triangle, located at that relationship.
pub fn detect_transitive_redundancy(model: &ErModel) -> Vec<Finding> {
    let edges = one_to_many_edges(model);
    let mut children: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(p, c, _) in &edges {
        children.entry(p).or_default().insert(c);
    }
    let empty = BTreeSet::new();
    let mut findings = Vec::new();
    for &(p, c, ri) in &edges {
        let via: Vec<usize> = children
            .get(&p)
            .unwrap_or(&empty)
            .iter()
            .copied()
            .filter(|&m| m != p && m != c && children.get(&m).is_some_and(|cs| cs.contains(&c)))
            .collect();
        if let Some(&first) = via.first() {
            let name = |i: usize| model.entities[i].name.as_str();
            let mut message = format!("`{}`-`{}` is derivable through `{}`", name(p), name(c), name(first));
            if via.len() > 1 {
                message.push_str(&format!(" (and {} other path(s))", via.len() - 1));
            }
            findings.push(Finding::new(&TransitiveRedundancy, ModelPath::relationship(ri), message));
        }
    }
    findings.sort_by(|a, b| a.location.cmp(&b.location));
    findings
}
