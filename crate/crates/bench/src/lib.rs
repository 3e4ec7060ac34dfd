//! Shared inputs for the pipeline benchmarks.

pub use erforge;

/// Wrap a model document the way chat models tend to answer: a sentence of
/// prose, a fenced block, and a closing remark.
pub fn chatty_response(document: &str) -> String {
    format!("Here is the model you asked for.\n\n```json\n{document}\n```\n\nLet me know if anything should change.\n")
}
