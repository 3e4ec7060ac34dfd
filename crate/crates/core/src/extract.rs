//! Recover a JSON document from noisy LLM output.
//!
//! Attempts run in a fixed order and the first success wins:
//!
//! 1. the whole input,
//! 2. the first fenced code block,
//! 3. the longest balanced `{...}` span,
//! 4. unescape the input as a string literal, then retry 1-3 on the result.
//!
//! Every candidate gets one lenient re-parse (trailing commas removed) if the
//! strict parse fails; a lenient success is reported as a warning.

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SourceKind {
    PureDocument,
    FencedBlock,
    EscapedString,
    EmbeddedInProse,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::PureDocument => "PureDocument",
            SourceKind::FencedBlock => "FencedBlock",
            SourceKind::EscapedString => "EscapedString",
            SourceKind::EmbeddedInProse => "EmbeddedInProse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtractionReport {
    pub source_kind: SourceKind,
    pub bytes_discarded: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no JSON document found in input")]
    NoDocumentFound,
    #[error("found a {candidate} candidate but it is not valid JSON: {detail}")]
    MalformedDocument { candidate: &'static str, detail: String },
}

struct Candidate {
    text: String,
    lenient: bool,
}

/// Parse `text` as a JSON object, strictly and then once leniently.
/// `Err` carries the strict parser message when both fail.
fn parse_object(text: &str) -> Result<Candidate, String> {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(_)) => Ok(Candidate { text: text.to_owned(), lenient: false }),
        Ok(other) => Err(format!("top-level value is {}, not an object", json_kind(&other))),
        Err(strict) => {
            let repaired = strip_trailing_commas(text);
            if repaired != text {
                if let Ok(Value::Object(_)) = serde_json::from_str::<Value>(&repaired) {
                    return Ok(Candidate { text: repaired, lenient: true });
                }
            }
            Err(strict.to_string())
        }
    }
}

pub(crate) fn json_kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Drop commas that directly precede `}` or `]`, ignoring string contents.
fn strip_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_str = false;
    let mut esc = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_str {
            out.push(c);
            if esc {
                esc = false;
            } else if c == '\\' {
                esc = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        if c == '"' {
            in_str = true;
        } else if c == ',' {
            let next = chars[i + 1..].iter().find(|ch| !ch.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Payload of the first ```` ``` ```` fenced block, without the info string.
/// An unclosed fence (truncated output) runs to the end of the input.
fn first_fenced_block(raw: &str) -> Option<&str> {
    let open = raw.find("```")?;
    let after_open = &raw[open + 3..];
    let body_start = after_open.find('\n').map(|i| i + 1)?;
    let body = &after_open[body_start..];
    let close = body.find("```").unwrap_or(body.len());
    Some(body[..close].trim())
}

/// The longest `{...}` span whose braces balance outside string literals.
fn longest_balanced_span(raw: &str) -> Option<&str> {
    let mut best: Option<(usize, usize)> = None;
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut in_str = false;
    let mut esc = false;
    for (i, c) in raw.char_indices() {
        if in_str {
            if esc {
                esc = false;
            } else if c == '\\' {
                esc = true;
            } else if c == '"' {
                in_str = false;
            }
            continue;
        }
        match c {
            '"' if depth > 0 => in_str = true,
            '{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            '}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    let len = i + 1 - start;
                    if best.is_none_or(|(s, e)| len > e - s) {
                        best = Some((start, i + 1));
                    }
                }
            }
            _ => {}
        }
    }
    best.map(|(s, e)| &raw[s..e])
}

/// Undo one level of string escaping. Accepts either a quoted JSON string
/// literal or bare escaped content such as `{\"a\": 1}`.
fn unescape(raw: &str) -> Option<String> {
    let t = raw.trim();
    if t.starts_with('"') {
        if let Ok(Value::String(s)) = serde_json::from_str::<Value>(t) {
            return Some(s);
        }
    }
    if t.contains("\\\"") {
        let quoted = format!("\"{}\"", t.replace('\n', "\\n"));
        if let Ok(Value::String(s)) = serde_json::from_str::<Value>(&quoted) {
            return Some(s);
        }
    }
    None
}

struct Located {
    kind: SourceKind,
    candidate: Candidate,
}

/// Attempts 1-3. The first candidate that fails to parse is kept in `failed`.
fn locate(raw: &str, failed: &mut Option<(&'static str, String)>) -> Option<Located> {
    let t = raw.trim();
    let mut note = |kind: &'static str, detail: String| {
        if failed.is_none() {
            *failed = Some((kind, detail));
        }
    };

    if t.starts_with('{') {
        match parse_object(raw) {
            Ok(c) => {
                let candidate = if c.lenient { c } else { Candidate { text: raw.to_owned(), lenient: false } };
                return Some(Located { kind: SourceKind::PureDocument, candidate });
            }
            Err(e) => note("whole-input", e),
        }
    }
    if let Some(block) = first_fenced_block(raw) {
        match parse_object(block) {
            Ok(candidate) => return Some(Located { kind: SourceKind::FencedBlock, candidate }),
            Err(e) => note("fenced-block", e),
        }
    }
    if let Some(span) = longest_balanced_span(raw) {
        match parse_object(span) {
            Ok(candidate) => return Some(Located { kind: SourceKind::EmbeddedInProse, candidate }),
            Err(e) => note("balanced-span", e),
        }
    }
    None
}

/// Locate a JSON object in `raw`.
///
/// A valid pure document is returned byte-identically with
/// `bytes_discarded == 0`.
pub fn extract_document(raw: &str) -> Result<(String, ExtractionReport), ExtractError> {
    if raw.trim().is_empty() {
        return Err(ExtractError::NoDocumentFound);
    }
    let mut failed = None;
    let (kind, candidate) = match locate(raw, &mut failed) {
        Some(found) => (found.kind, found.candidate),
        None => {
            let inner = unescape(raw).and_then(|u| {
                let mut ignored = None;
                locate(&u, &mut ignored).map(|l| l.candidate)
            });
            match inner {
                Some(candidate) => (SourceKind::EscapedString, candidate),
                None => {
                    return Err(match failed {
                        Some((candidate, detail)) => ExtractError::MalformedDocument { candidate, detail },
                        None => ExtractError::NoDocumentFound,
                    })
                }
            }
        }
    };

    let mut warnings = Vec::new();
    let bytes_discarded = match kind {
        SourceKind::PureDocument => 0,
        _ => raw.len().saturating_sub(candidate.text.len()).max(1),
    };
    if bytes_discarded > 0 {
        warnings.push(format!("discarded {bytes_discarded} byte(s) of surrounding text ({})", kind.as_str()));
    }
    if candidate.lenient {
        warnings.push("document required lenient re-parse (trailing commas removed)".to_owned());
    }
    Ok((candidate.text, ExtractionReport { source_kind: kind, bytes_discarded, warnings }))
}
