//! Prompt templates for the three strategies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bumped whenever template wording changes; recorded with every run.
pub const PROMPT_TEMPLATE_VERSION: &str = "1";

/// Slot in the verification stage that receives the stage-1 response.
pub const STAGE1_OUTPUT_SLOT: &str = "{{STAGE1_OUTPUT}}";

/// Description of the interchange document handed to the model.
pub const INTERCHANGE_FORMAT_SPEC: &str = r#"A single JSON object with these keys:
- "format_version": always "1".
- "title": optional short name for the model.
- "entities": list of objects {"name": string, "attributes": [...], "parent": optional entity name}.
  Each attribute is {"name": string, "type": optional string, "pk": bool, "fk": bool, "not_null": bool, "unique": bool}; omitted flags mean false.
  Use "parent" only for generalization/specialization (the entity is a subtype of parent).
- "relationships": list where each item is either
  a string "Entity:attribute C--C Entity:attribute" where each C is one of 1 (exactly one), * (zero or more), ? (zero or one), + (one or more) and the ":attribute" part names the key or foreign key on that side,
  or an object {"endpoints": [{"entity": string, "attribute": optional string, "cardinality": "1"|"*"|"?"|"+"}, ...], "label": optional string} for relationships among three or more entities.
Example relationship string: "Hospital:hospital_id 1--* HospitalDepartment:hospital_id"."#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PromptStrategy {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "cot")]
    ChainOfThought,
    #[serde(rename = "cot-verifier")]
    ChainOfThoughtVerifier,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 3] =
        [PromptStrategy::Baseline, PromptStrategy::ChainOfThought, PromptStrategy::ChainOfThoughtVerifier];

    /// Stable identifier, used in config files and run-tree directory names.
    pub fn id(self) -> &'static str {
        match self {
            PromptStrategy::Baseline => "baseline",
            PromptStrategy::ChainOfThought => "cot",
            PromptStrategy::ChainOfThoughtVerifier => "cot-verifier",
        }
    }

    pub fn stage_count(self) -> usize {
        match self {
            PromptStrategy::ChainOfThoughtVerifier => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown strategy `{0}` (expected baseline, cot or cot-verifier)")]
pub struct UnknownStrategy(pub String);

impl FromStr for PromptStrategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptStrategy::ALL.into_iter().find(|p| p.id() == s).ok_or_else(|| UnknownStrategy(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub template_version: String,
    pub strategy: PromptStrategy,
    pub stages: Vec<Vec<Message>>,
}

impl PromptBundle {
    /// Messages for stage `idx` with the previous stage's output filled in.
    pub fn resolve_stage(&self, idx: usize, previous_output: Option<&str>) -> Vec<Message> {
        self.stages[idx]
            .iter()
            .map(|m| Message {
                role: m.role,
                content: match previous_output {
                    Some(prev) => m.content.replace(STAGE1_OUTPUT_SLOT, prev),
                    None => m.content.clone(),
                },
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("requirements text is empty")]
    EmptyRequirements,
}

const DESIGNER_SYSTEM: &str = "You are an experienced database designer. You build conceptual \
entity-relationship models from natural-language requirements written by non-specialists.";

const REVIEWER_SYSTEM: &str = "You are a meticulous reviewer of conceptual entity-relationship models. \
You look for errors and fix them; you do not add elements the requirements do not call for.";

fn requirements_block(requirements: &str) -> String {
    format!("Requirements:\n\"\"\"\n{requirements}\n\"\"\"")
}

fn format_block(format_spec: &str) -> String {
    format!("Output format:\n{format_spec}")
}

fn baseline_user(requirements: &str, format_spec: &str) -> String {
    format!(
        "Build an entity-relationship model for the requirements below.\n\n{}\n\n\
         Respond with the JSON document only, with no text before or after it.\n\n{}",
        format_block(format_spec),
        requirements_block(requirements)
    )
}

fn cot_user(requirements: &str, format_spec: &str) -> String {
    format!(
        "Build an entity-relationship model for the requirements below.\n\n\
         Work step-by-step and write out each step as a numbered list before the final model:\n\
         1. List the entities the requirements mention or imply.\n\
         2. For each entity, list its attributes and choose a primary key.\n\
         3. For each relationship, name the entities involved and decide the cardinality on both ends.\n\
         4. List the integrity constraints (NOT NULL, UNIQUE) the requirements imply.\n\
         5. Check the result against every requirement sentence.\n\n\
         {}\n\n\
         After the numbered steps, give the final JSON document in a ```json fenced block.\n\n{}",
        format_block(format_spec),
        requirements_block(requirements)
    )
}

fn verifier_user(requirements: &str, format_spec: &str) -> String {
    format!(
        "Review the candidate entity-relationship model below against the requirements.\n\
         Check that:\n\
         - every entity, attribute and relationship the requirements call for is present;\n\
         - cardinalities match the business rules;\n\
         - no relationship is redundant or derivable through other relationships;\n\
         - primary keys, foreign keys and NOT NULL / UNIQUE constraints are declared consistently.\n\
         Then return the corrected model as a JSON document only, with no text before or after it.\n\n\
         {}\n\n{}\n\nCandidate model:\n{STAGE1_OUTPUT_SLOT}",
        format_block(format_spec),
        requirements_block(requirements)
    )
}

/// Build the prompt stages for `strategy`. Every stage embeds the
/// requirements verbatim and the format description.
pub fn build_prompt(
    strategy: PromptStrategy,
    requirements: &str,
    format_spec: &str,
) -> Result<PromptBundle, PromptError> {
    if requirements.trim().is_empty() {
        return Err(PromptError::EmptyRequirements);
    }
    let generation = |user: String| vec![Message::system(DESIGNER_SYSTEM), Message::user(user)];
    let stages = match strategy {
        PromptStrategy::Baseline => vec![generation(baseline_user(requirements, format_spec))],
        PromptStrategy::ChainOfThought => vec![generation(cot_user(requirements, format_spec))],
        PromptStrategy::ChainOfThoughtVerifier => vec![
            generation(cot_user(requirements, format_spec)),
            vec![Message::system(REVIEWER_SYSTEM), Message::user(verifier_user(requirements, format_spec))],
        ],
    };
    Ok(PromptBundle { template_version: PROMPT_TEMPLATE_VERSION.to_owned(), strategy, stages })
}

#[cfg(test)]
mod tests {
    use super::*;

    const REQ: &str = "The hospital receives visitors. Each visit is recorded with date and department.";
    const FMT: &str = "JSON with entities and relationships";

    fn user_text(stage: &[Message]) -> &str {
        &stage.iter().find(|m| m.role == Role::User).unwrap().content
    }

    #[test]
    fn baseline_has_one_direct_stage() {
        let b = build_prompt(PromptStrategy::Baseline, REQ, FMT).unwrap();
        assert_eq!(b.stages.len(), 1);
        let text = user_text(&b.stages[0]);
        assert!(text.contains(REQ) && text.contains(FMT));
        assert!(!text.contains("step-by-step"));
        assert!(!text.to_lowercase().contains("reasoning"));
        assert!(!text.contains(STAGE1_OUTPUT_SLOT));
    }

    #[test]
    fn cot_has_step_by_step_marker() {
        let b = build_prompt(PromptStrategy::ChainOfThought, REQ, FMT).unwrap();
        assert_eq!(b.stages.len(), 1);
        let text = user_text(&b.stages[0]);
        assert!(text.contains("step-by-step"));
        assert!(text.contains(REQ) && text.contains(FMT));
    }

    #[test]
    fn verifier_second_stage_has_slot() {
        let b = build_prompt(PromptStrategy::ChainOfThoughtVerifier, REQ, FMT).unwrap();
        assert_eq!(b.stages.len(), 2);
        assert!(user_text(&b.stages[0]).contains("step-by-step"));
        let review = user_text(&b.stages[1]);
        assert!(review.contains(STAGE1_OUTPUT_SLOT));
        assert!(review.contains(REQ) && review.contains(FMT));

        let filled = b.resolve_stage(1, Some("{\"entities\": []}"));
        assert!(user_text(&filled).contains("{\"entities\": []}"));
        assert!(!user_text(&filled).contains(STAGE1_OUTPUT_SLOT));
    }

    #[test]
    fn stage_counts_match_strategy() {
        for s in PromptStrategy::ALL {
            assert_eq!(build_prompt(s, REQ, FMT).unwrap().stages.len(), s.stage_count());
        }
    }

    #[test]
    fn empty_requirements_rejected() {
        assert_eq!(build_prompt(PromptStrategy::Baseline, "  \n", FMT), Err(PromptError::EmptyRequirements));
    }

    #[test]
    fn strategy_ids_round_trip() {
        for s in PromptStrategy::ALL {
            assert_eq!(s.id().parse::<PromptStrategy>().unwrap(), s);
        }
        assert!("zero-shot".parse::<PromptStrategy>().is_err());
    }
}
