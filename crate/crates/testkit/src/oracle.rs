//! Exhaustive reference implementations.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use erforge::diff::{attribute_overlap, MatchMapping};
use erforge::model::{normalize_name, ErModel};

/// `(one side, many side)` if the relationship is a one-to-many link between
/// two distinct entities, read straight off the marks.
fn one_to_many(m: &ErModel, ri: usize) -> Option<(&str, &str)> {
    let r = &m.relationships[ri];
    if r.endpoints.len() != 2 {
        return None;
    }
    let (a, b) = (&r.endpoints[0], &r.endpoints[1]);
    if a.entity == b.entity {
        return None;
    }
    let many = |s: char| s == '*' || s == '+';
    let (ca, cb) = (a.cardinality.symbol(), b.cardinality.symbol());
    if ca == '1' && many(cb) {
        Some((&a.entity, &b.entity))
    } else if cb == '1' && many(ca) {
        Some((&b.entity, &a.entity))
    } else {
        None
    }
}

/// Indices of relationships `P-C` for which some ordered pair of other
/// relationships forms `P-M`, `M-C` with distinct `P`, `M`, `C`, by trying
/// every ordered triple of relationships.
pub fn enumerate_redundant_relationships(m: &ErModel) -> BTreeSet<usize> {
    let n = m.relationships.len();
    let mut flagged = BTreeSet::new();
    for direct in 0..n {
        let Some((p, c)) = one_to_many(m, direct) else { continue };
        'outer: for first in 0..n {
            for second in 0..n {
                if first == direct || second == direct || first == second {
                    continue;
                }
                let (Some((p1, m1)), Some((m2, c2))) = (one_to_many(m, first), one_to_many(m, second)) else {
                    continue;
                };
                if p1 == p && c2 == c && m1 == m2 && m1 != p && m1 != c {
                    flagged.insert(direct);
                    break 'outer;
                }
            }
        }
    }
    flagged
}

/// Matching quality, compared lexicographically: first the number of
/// name-equal pairs, then the summed attribute overlap of the pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchObjective {
    pub name_pairs: usize,
    pub overlap_sum: f64,
}

impl MatchObjective {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn at_least(&self, other: &MatchObjective) -> bool {
        self.name_pairs > other.name_pairs
            || (self.name_pairs == other.name_pairs && self.overlap_sum >= other.overlap_sum - Self::TOLERANCE)
    }

    fn better(&self, other: &MatchObjective) -> bool {
        self.name_pairs > other.name_pairs
            || (self.name_pairs == other.name_pairs && self.overlap_sum > other.overlap_sum + Self::TOLERANCE)
    }
}

fn admissible(gen: &ErModel, gold: &ErModel, threshold: f64) -> Vec<Vec<Option<(bool, f64)>>> {
    gen.entities
        .iter()
        .map(|g| {
            gold.entities
                .iter()
                .map(|o| {
                    let same_name = normalize_name(&g.name) == normalize_name(&o.name);
                    let overlap = attribute_overlap(g, o);
                    (same_name || overlap >= threshold).then_some((same_name, overlap))
                })
                .collect()
        })
        .collect()
}

/// Objective of an existing mapping.
pub fn matching_objective(gen: &ErModel, gold: &ErModel, mapping: &MatchMapping) -> MatchObjective {
    let mut obj = MatchObjective { name_pairs: 0, overlap_sum: 0.0 };
    for (g, o) in &mapping.entity_pairs {
        let ge = gen.entity(g).expect("mapped generated entity exists");
        let oe = gold.entity(o).expect("mapped gold entity exists");
        if normalize_name(g) == normalize_name(o) {
            obj.name_pairs += 1;
        }
        obj.overlap_sum += attribute_overlap(ge, oe);
    }
    obj
}

/// Best objective over every partial injection built from admissible
/// pairs (name-equal, or overlap at least `threshold`).
pub fn optimal_matching_objective(gen: &ErModel, gold: &ErModel, threshold: f64) -> MatchObjective {
    let table = admissible(gen, gold, threshold);
    let mut best = MatchObjective { name_pairs: 0, overlap_sum: 0.0 };
    let mut used = HashSet::new();
    search(&table, 0, &mut used, MatchObjective { name_pairs: 0, overlap_sum: 0.0 }, &mut best);
    best
}

fn search(
    table: &[Vec<Option<(bool, f64)>>],
    row: usize,
    used: &mut HashSet<usize>,
    acc: MatchObjective,
    best: &mut MatchObjective,
) {
    if row == table.len() {
        if acc.better(best) {
            *best = acc;
        }
        return;
    }
    // Leave this generated entity unmatched.
    search(table, row + 1, used, acc, best);
    for (col, cell) in table[row].iter().enumerate() {
        let Some((same, overlap)) = *cell else { continue };
        if !used.insert(col) {
            continue;
        }
        let next =
            MatchObjective { name_pairs: acc.name_pairs + usize::from(same), overlap_sum: acc.overlap_sum + overlap };
        search(table, row + 1, used, next, best);
        used.remove(&col);
    }
}

/// Structural problems in a DOT document: unbalanced braces or quotes
/// (outside quoted strings), and edges whose endpoints have no node
/// statement. Empty means the document is well formed by these checks.
pub fn dot_problems(dot: &str) -> Vec<String> {
    let mut problems = Vec::new();
    let mut depth: i64 = 0;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in dot.char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth < 0 {
                    problems.push(format!("unmatched `}}` at byte {i}"));
                    depth = 0;
                }
            }
            _ => {}
        }
    }
    if in_string {
        problems.push("unterminated quoted string".to_owned());
    }
    if depth != 0 {
        problems.push(format!("{depth} unclosed `{{`"));
    }

    let mut nodes = BTreeSet::new();
    let mut edges: BTreeMap<usize, (String, String)> = BTreeMap::new();
    for (ln, line) in dot.lines().enumerate() {
        let stmt = line.trim();
        let Some(first) = stmt.split_whitespace().next() else { continue };
        if matches!(first, "graph" | "node" | "edge" | "}" | "digraph") || first.contains('=') {
            continue;
        }
        let tokens: Vec<&str> = stmt.split_whitespace().collect();
        if tokens.get(1) == Some(&"--") {
            let to = tokens.get(2).map(|t| t.trim_end_matches(';')).unwrap_or("");
            edges.insert(ln + 1, (first.to_owned(), to.to_owned()));
        } else {
            nodes.insert(first.trim_end_matches(';').to_owned());
        }
    }
    for (ln, (a, b)) in edges {
        for end in [a, b] {
            if !nodes.contains(&end) {
                problems.push(format!("line {ln}: edge endpoint `{end}` is not declared"));
            }
        }
    }
    problems
}
