//! Graphviz DOT output and optional rasterization through an external
//! renderer.
//!
//! Entities become nodes `e0..eN` in model order, n-ary relationships become
//! diamond nodes `r<index>`. Binary relationships are single edges whose
//! tail/head labels carry the cardinality marks verbatim. A subtype names
//! its parent inside its own label rather than through an extra edge, so the
//! edge count is always binary relationships plus the summed arity of the
//! n-ary ones.

use std::fmt::Write as _;
use std::io::{ErrorKind, Write as _};
use std::path::Path;
use std::process::{Command, Stdio};

use thiserror::Error;

use crate::model::{validate_model, Attribute, ErModel, StructuralError};

/// Environment variable naming the renderer executable.
pub const RENDERER_ENV: &str = "ERFORGE_RENDERER";
pub const DEFAULT_RENDERER: &str = "dot";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecordStyle {
    /// `shape=record` nodes with a name compartment and an attribute list.
    #[default]
    TableLabels,
    /// Boxes with the entity name and one attribute per line.
    PlainNodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    pub title_visible: bool,
    pub record_style: RecordStyle,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { title_visible: true, record_style: RecordStyle::TableLabels }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Svg,
}

impl ImageFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Svg => "svg",
        }
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cannot render an invalid model ({} structural error(s))", .0.len())]
    InvalidModel(Vec<StructuralError>),
    #[error("renderer `{path}` is unavailable: {reason}")]
    RendererUnavailable { path: String, reason: String },
    #[error("renderer failed with {status}: {diagnostics}")]
    RendererFailed { status: String, diagnostics: String },
}

/// Quote plain text as a DOT label string.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Quote a label whose backslash escapes are already in place.
fn quote_escaped(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

/// Escape record-label metacharacters and backslashes; the result goes
/// through [`quote_escaped`].
fn record_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if matches!(c, '{' | '}' | '|' | '<' | '>' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn attribute_line(a: &Attribute) -> String {
    let mut line = String::new();
    if a.is_primary_key {
        line.push_str("PK ");
    }
    if a.is_foreign_key {
        line.push_str("FK ");
    }
    line.push_str(&a.name);
    if !a.declared_type.is_empty() {
        let _ = write!(line, " : {}", a.declared_type);
    }
    let mut tags = Vec::new();
    if a.not_null {
        tags.push("NOT NULL");
    }
    if a.unique {
        tags.push("UNIQUE");
    }
    if !tags.is_empty() {
        let _ = write!(line, " [{}]", tags.join(", "));
    }
    line
}

/// Emit a DOT graph for a valid model. Output is a pure function of the
/// model, so a canonical model always yields the same bytes.
pub fn emit_dot(m: &ErModel, opts: &RenderOptions) -> Result<String, RenderError> {
    let errors = validate_model(m);
    if !errors.is_empty() {
        return Err(RenderError::InvalidModel(errors));
    }
    let index = m.entity_index();
    let mut out = String::new();
    out.push_str("graph er {\n");
    out.push_str("  graph [rankdir=LR, fontname=\"Helvetica\"];\n");
    let shape = match opts.record_style {
        RecordStyle::TableLabels => "record",
        RecordStyle::PlainNodes => "box",
    };
    let _ = writeln!(out, "  node [shape={shape}, fontname=\"Helvetica\", fontsize=10];");
    out.push_str("  edge [fontname=\"Helvetica\", fontsize=9];\n");
    if opts.title_visible {
        if let Some(title) = &m.title {
            let _ = writeln!(out, "  label={};\n  labelloc=t;", quote(title));
        }
    }

    for (i, e) in m.entities.iter().enumerate() {
        let lines: Vec<String> = e.attributes.iter().map(attribute_line).collect();
        let label = match opts.record_style {
            RecordStyle::TableLabels => {
                let attrs: String = lines.iter().map(|l| format!("{}\\l", record_escape(l))).collect();
                let mut head = record_escape(&e.name);
                if let Some(p) = &e.parent {
                    head.push_str(&format!("\\nis a {}", record_escape(p)));
                }
                quote_escaped(&format!("{{{head}|{attrs}}}"))
            }
            RecordStyle::PlainNodes => {
                let mut text = e.name.clone();
                if let Some(p) = &e.parent {
                    text.push_str(&format!("\nis a {p}"));
                }
                for l in &lines {
                    text.push('\n');
                    text.push_str(l);
                }
                quote(&text)
            }
        };
        let _ = writeln!(out, "  e{i} [label={label}];");
    }

    for (ri, r) in m.relationships.iter().enumerate() {
        if let [a, b] = r.endpoints.as_slice() {
            let mut attrs = format!(
                "taillabel={}, headlabel={}",
                quote(&a.cardinality.to_string()),
                quote(&b.cardinality.to_string())
            );
            if let Some(label) = &r.label {
                let _ = write!(attrs, ", label={}", quote(label));
            }
            let _ = writeln!(out, "  e{} -- e{} [{attrs}];", index[a.entity.as_str()], index[b.entity.as_str()]);
        } else {
            let label = r.label.as_deref().unwrap_or("");
            let _ = writeln!(out, "  r{ri} [shape=diamond, label={}];", quote(label));
            for ep in &r.endpoints {
                let _ = writeln!(
                    out,
                    "  e{} -- r{ri} [taillabel={}];",
                    index[ep.entity.as_str()],
                    quote(&ep.cardinality.to_string())
                );
            }
        }
    }

    out.push_str("}\n");
    Ok(out)
}

/// Resolve the renderer: explicit path, then `ERFORGE_RENDERER`, then `dot`.
pub fn resolve_renderer(explicit: Option<&Path>) -> String {
    explicit
        .map(|p| p.display().to_string())
        .or_else(|| std::env::var(RENDERER_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| DEFAULT_RENDERER.to_owned())
}

/// Run `renderer -T<format>` with `dot` on stdin and return its stdout.
pub fn render_external(dot: &str, format: ImageFormat, renderer_path: &str) -> Result<Vec<u8>, RenderError> {
    let mut child = Command::new(renderer_path)
        .arg(format!("-T{}", format.as_str()))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| RenderError::RendererUnavailable {
            path: renderer_path.to_owned(),
            reason: match e.kind() {
                ErrorKind::NotFound => "not found".to_owned(),
                _ => e.to_string(),
            },
        })?;
    {
        let mut stdin = child.stdin.take().expect("stdin is piped");
        // A renderer that exits early closes its stdin; the exit status
        // below carries the real error.
        let _ = stdin.write_all(dot.as_bytes());
    }
    let output = child
        .wait_with_output()
        .map_err(|e| RenderError::RendererFailed { status: "unknown status".to_owned(), diagnostics: e.to_string() })?;
    if !output.status.success() {
        return Err(RenderError::RendererFailed {
            status: output.status.to_string(),
            diagnostics: String::from_utf8_lossy(&output.stderr).trim().to_owned(),
        });
    }
    Ok(output.stdout)
}
