//! Ordinal quality levels from automated gates.
//!
//! A model reaches level k when every gate for levels 1..=k passes. L4 is
//! never awarded: its criteria are judgments about future evolution, so the
//! classifier stops at L3 and lists them for manual review.

use std::fmt;

use serde::Serialize;

use super::{
    Finding, Severity, DANGLING_FK_ENDPOINT, DUPLICATE_CONCEPT, ISOLATED_ENTITY, KEY_NAMING_INCONSISTENT,
    MISSING_CONSTRAINTS, TRANSITIVE_REDUNDANCY,
};
use crate::model::ErModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum QualityLevel {
    /// Below L1.
    L0,
    L1,
    L2,
    L3,
    L4,
}

impl QualityLevel {
    fn from_rank(rank: usize) -> Self {
        match rank {
            0 => QualityLevel::L0,
            1 => QualityLevel::L1,
            2 => QualityLevel::L2,
            3 => QualityLevel::L3,
            _ => QualityLevel::L4,
        }
    }
}

impl fmt::Display for QualityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub const MANUAL_REVIEW_L4: [&str; 3] = [
    "anticipated domain changes can be incorporated with reduced structural impact",
    "the model supports long-term maintenance and evolution",
    "structural organization supports query efficiency in higher-complexity scenarios",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GateResult {
    pub level: QualityLevel,
    pub passed: bool,
    /// Why the gate failed; empty when it passed.
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelAssessment {
    pub level: QualityLevel,
    pub gates: Vec<GateResult>,
    pub manual_review: Vec<&'static str>,
}

fn count(findings: &[Finding], rule: &str) -> usize {
    findings.iter().filter(|f| f.rule_id == rule).count()
}

fn forbid(findings: &[Finding], rules: &[&str], reasons: &mut Vec<String>) {
    for rule in rules {
        let n = count(findings, rule);
        if n > 0 {
            reasons.push(format!("{n} `{rule}` finding(s)"));
        }
    }
}

fn l1_reasons(model: &ErModel, findings: &[Finding]) -> Vec<String> {
    let mut reasons = Vec::new();
    if model.entities.is_empty() {
        reasons.push("model declares no entities".to_owned());
    }
    let errors = findings.iter().filter(|f| f.severity == Severity::Error).count();
    if errors > 0 {
        reasons.push(format!("{errors} error finding(s)"));
    }
    for e in model.entities.iter().filter(|e| e.attributes.is_empty()) {
        reasons.push(format!("`{}` has no attributes", e.name));
    }
    forbid(findings, &[ISOLATED_ENTITY], &mut reasons);
    reasons
}

fn l2_reasons(findings: &[Finding]) -> Vec<String> {
    let mut reasons = Vec::new();
    forbid(findings, &[DUPLICATE_CONCEPT, KEY_NAMING_INCONSISTENT], &mut reasons);
    reasons
}

fn l3_reasons(findings: &[Finding]) -> Vec<String> {
    let mut reasons = Vec::new();
    forbid(findings, &[DANGLING_FK_ENDPOINT, MISSING_CONSTRAINTS, TRANSITIVE_REDUNDANCY], &mut reasons);
    reasons
}

/// Evaluate every gate. `findings` should be the full
/// [`lint_model`](super::lint_model) output for `model`.
pub fn assess_level(model: &ErModel, findings: &[Finding]) -> LevelAssessment {
    let gates = vec![
        (QualityLevel::L1, l1_reasons(model, findings)),
        (QualityLevel::L2, l2_reasons(findings)),
        (QualityLevel::L3, l3_reasons(findings)),
    ]
    .into_iter()
    .map(|(level, reasons)| GateResult { level, passed: reasons.is_empty(), reasons })
    .collect::<Vec<_>>();
    let rank = gates.iter().take_while(|g| g.passed).count();
    LevelAssessment { level: QualityLevel::from_rank(rank), gates, manual_review: MANUAL_REVIEW_L4.to_vec() }
}

pub fn classify_level(model: &ErModel, findings: &[Finding]) -> QualityLevel {
    assess_level(model, findings).level
}

#[cfg(test)]
mod tests {
    use super::super::{lint_model, RuleConfig};
    use super::*;
    use crate::model::{parse_relation, Attribute, Entity};

    fn level(m: &ErModel) -> QualityLevel {
        classify_level(m, &lint_model(m, &RuleConfig::default()).unwrap())
    }

    fn pair() -> ErModel {
        ErModel {
            title: None,
            entities: vec![
                Entity::new("Hospital").with_attributes([Attribute::new("hospital_id").primary_key().not_null()]),
                Entity::new("Department").with_attributes([
                    Attribute::new("department_id").primary_key().not_null(),
                    Attribute::new("hospital_id").foreign_key().not_null(),
                ]),
            ],
            relationships: vec![parse_relation("Hospital:hospital_id 1--* Department:hospital_id").unwrap()],
        }
    }

    #[test]
    fn clean_pair_reaches_l3_and_never_l4() {
        let a = assess_level(&pair(), &lint_model(&pair(), &RuleConfig::default()).unwrap());
        assert_eq!(a.level, QualityLevel::L3);
        assert_eq!(a.manual_review.len(), 3);
    }

    #[test]
    fn zero_attribute_entity_is_l0() {
        let mut m = pair();
        m.entities.push(Entity::new("Empty"));
        m.relationships.push(parse_relation("Hospital:hospital_id 1--* Empty").unwrap());
        assert_eq!(level(&m), QualityLevel::L0);
    }

    #[test]
    fn empty_model_is_l0() {
        assert_eq!(level(&ErModel::default()), QualityLevel::L0);
    }

    #[test]
    fn inconsistent_keys_stop_at_l1() {
        let mut m = pair();
        m.entities[0].attributes[0].name = "hid".into();
        m.relationships[0] = parse_relation("Hospital:hid 1--* Department:hospital_id").unwrap();
        assert_eq!(level(&m), QualityLevel::L1);
    }

    #[test]
    fn dangling_endpoint_stops_at_l2() {
        let mut m = pair();
        m.relationships[0] = parse_relation("Hospital:hospital_id 1--* Department").unwrap();
        assert_eq!(level(&m), QualityLevel::L2);
    }

    #[test]
    fn ordering() {
        assert!(QualityLevel::L0 < QualityLevel::L1 && QualityLevel::L3 < QualityLevel::L4);
        assert_eq!(QualityLevel::L2.to_string(), "L2");
    }
}
