//! Compare a generated model with a gold-standard model.
//!
//! Entities are paired first by normalized name, then greedily by
//! attribute-name overlap (Jaccard index over normalized names). Every
//! tie-break depends only on names, so the pairing is symmetric:
//! swapping `gen` and `gold` mirrors the mapping, and `missing` for one
//! direction equals `surplus` for the other.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{normalize_name, serialize_relation, Attribute, Cardinality, Entity, ErModel, Relationship};

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffOptions {
    /// Minimum attribute overlap for a name-mismatched entity pair.
    pub overlap_threshold: f64,
}

impl Default for DiffOptions {
    fn default() -> Self {
        Self { overlap_threshold: DEFAULT_OVERLAP_THRESHOLD }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MatchMapping {
    /// `(generated, gold)` entity names, sorted by generated name.
    pub entity_pairs: Vec<(String, String)>,
    pub unmatched_generated: Vec<String>,
    pub unmatched_gold: Vec<String>,
}

impl MatchMapping {
    pub fn gold_for(&self, generated: &str) -> Option<&str> {
        self.entity_pairs.iter().find(|(g, _)| g == generated).map(|(_, o)| o.as_str())
    }

    /// The same pairing seen from the other side.
    pub fn mirrored(&self) -> MatchMapping {
        let mut entity_pairs: Vec<_> = self.entity_pairs.iter().map(|(g, o)| (o.clone(), g.clone())).collect();
        entity_pairs.sort();
        MatchMapping {
            entity_pairs,
            unmatched_generated: self.unmatched_gold.clone(),
            unmatched_gold: self.unmatched_generated.clone(),
        }
    }
}

fn attribute_names(e: &Entity) -> BTreeSet<String> {
    e.attributes.iter().map(|a| normalize_name(&a.name)).collect()
}

/// Jaccard index of normalized attribute names; 0 when both sets are empty.
pub fn attribute_overlap(a: &Entity, b: &Entity) -> f64 {
    let (sa, sb) = (attribute_names(a), attribute_names(b));
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

pub fn match_entities(gen: &ErModel, gold: &ErModel) -> MatchMapping {
    match_entities_with(gen, gold, &DiffOptions::default())
}

pub fn match_entities_with(gen: &ErModel, gold: &ErModel, opts: &DiffOptions) -> MatchMapping {
    let mut gen_left: BTreeSet<&str> = gen.entities.iter().map(|e| e.name.as_str()).collect();
    let mut gold_left: BTreeSet<&str> = gold.entities.iter().map(|e| e.name.as_str()).collect();
    let mut pairs: Vec<(String, String)> = Vec::new();

    // Phase 1a: identical names.
    let exact: Vec<&str> = gen_left.intersection(&gold_left).copied().collect();
    for name in exact {
        gen_left.remove(name);
        gold_left.remove(name);
        pairs.push((name.to_owned(), name.to_owned()));
    }

    // Phase 1b: equal after normalization, zipped in name order per group.
    let group = |names: &BTreeSet<&str>| {
        let mut by_norm: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for &n in names {
            by_norm.entry(normalize_name(n)).or_default().push(n.to_owned());
        }
        by_norm
    };
    let gen_groups = group(&gen_left);
    let gold_groups = group(&gold_left);
    for (norm, gen_names) in &gen_groups {
        if let Some(gold_names) = gold_groups.get(norm) {
            for (g, o) in gen_names.iter().zip(gold_names) {
                gen_left.remove(g.as_str());
                gold_left.remove(o.as_str());
                pairs.push((g.clone(), o.clone()));
            }
        }
    }

    // Phase 2: greedy by overlap score, ties by the unordered name pair.
    let gen_by_name: HashMap<&str, &Entity> = gen.entities.iter().map(|e| (e.name.as_str(), e)).collect();
    let gold_by_name: HashMap<&str, &Entity> = gold.entities.iter().map(|e| (e.name.as_str(), e)).collect();
    let mut candidates: Vec<(f64, &str, &str)> = Vec::new();
    for &g in &gen_left {
        for &o in &gold_left {
            let score = attribute_overlap(gen_by_name[g], gold_by_name[o]);
            if score >= opts.overlap_threshold && score > 0.0 {
                candidates.push((score, g, o));
            }
        }
    }
    let tie_key = |g: &str, o: &str| if g <= o { (g.to_owned(), o.to_owned()) } else { (o.to_owned(), g.to_owned()) };
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("overlap scores are finite")
            .then_with(|| tie_key(a.1, a.2).cmp(&tie_key(b.1, b.2)))
    });
    for (_, g, o) in candidates {
        if gen_left.contains(g) && gold_left.contains(o) {
            gen_left.remove(g);
            gold_left.remove(o);
            pairs.push((g.to_owned(), o.to_owned()));
        }
    }

    pairs.sort();
    MatchMapping {
        entity_pairs: pairs,
        unmatched_generated: gen_left.into_iter().map(str::to_owned).collect(),
        unmatched_gold: gold_left.into_iter().map(str::to_owned).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementClass {
    Entities,
    Attributes,
    Relationships,
    Cardinalities,
    Constraints,
}

impl ElementClass {
    pub const ALL: [ElementClass; 5] = [
        ElementClass::Entities,
        ElementClass::Attributes,
        ElementClass::Relationships,
        ElementClass::Cardinalities,
        ElementClass::Constraints,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementClass::Entities => "entities",
            ElementClass::Attributes => "attributes",
            ElementClass::Relationships => "relationships",
            ElementClass::Cardinalities => "cardinalities",
            ElementClass::Constraints => "constraints",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClassScore {
    pub matched: usize,
    pub missing: usize,
    pub surplus: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold elements absent from the generated model.
    pub missing_items: Vec<String>,
    /// Generated elements absent from the gold model.
    pub surplus_items: Vec<String>,
}

impl ClassScore {
    fn new(matched: usize, mut missing_items: Vec<String>, mut surplus_items: Vec<String>) -> Self {
        missing_items.sort();
        surplus_items.sort();
        let (missing, surplus) = (missing_items.len(), surplus_items.len());
        let precision = ratio(matched, matched + surplus);
        let recall = ratio(matched, matched + missing);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Self { matched, missing, surplus, precision, recall, f1, missing_items, surplus_items }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffReport {
    pub mapping: MatchMapping,
    pub entities: ClassScore,
    pub attributes: ClassScore,
    pub relationships: ClassScore,
    pub cardinalities: ClassScore,
    pub constraints: ClassScore,
    /// Mean of the five per-class F1 scores.
    pub overall_f1: f64,
}

impl DiffReport {
    pub fn class(&self, c: ElementClass) -> &ClassScore {
        match c {
            ElementClass::Entities => &self.entities,
            ElementClass::Attributes => &self.attributes,
            ElementClass::Relationships => &self.relationships,
            ElementClass::Cardinalities => &self.cardinalities,
            ElementClass::Constraints => &self.constraints,
        }
    }

    /// Human-readable per-class table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>7} {:>7} {:>7} {:>9} {:>9} {:>9}",
            "class", "matched", "missing", "surplus", "precision", "recall", "f1"
        );
        for c in ElementClass::ALL {
            let s = self.class(c);
            let _ = writeln!(
                out,
                "{:<14} {:>7} {:>7} {:>7} {:>9.3} {:>9.3} {:>9.3}",
                c.as_str(),
                s.matched,
                s.missing,
                s.surplus,
                s.precision,
                s.recall,
                s.f1
            );
        }
        let _ = writeln!(out, "overall f1: {:.3}", self.overall_f1);
        for c in ElementClass::ALL {
            let s = self.class(c);
            for item in &s.missing_items {
                let _ = writeln!(out, "missing {}: {item}", c.as_str());
            }
            for item in &s.surplus_items {
                let _ = writeln!(out, "surplus {}: {item}", c.as_str());
            }
        }
        out
    }
}

/// Pair up two lists of items sharing a key, in the given order.
fn zip_groups<'a, T, K: Ord>(
    gen: Vec<(K, &'a T)>,
    gold: Vec<(K, &'a T)>,
) -> (Vec<(&'a T, &'a T)>, Vec<&'a T>, Vec<&'a T>) {
    let mut g_groups: BTreeMap<K, Vec<&T>> = BTreeMap::new();
    for (k, v) in gen {
        g_groups.entry(k).or_default().push(v);
    }
    let mut o_groups: BTreeMap<K, Vec<&T>> = BTreeMap::new();
    for (k, v) in gold {
        o_groups.entry(k).or_default().push(v);
    }
    let (mut paired, mut gen_only, mut gold_only) = (Vec::new(), Vec::new(), Vec::new());
    for (k, gs) in g_groups {
        let os = o_groups.remove(&k).unwrap_or_default();
        let n = gs.len().min(os.len());
        paired.extend(gs.iter().copied().zip(os.iter().copied()));
        gen_only.extend(gs.into_iter().skip(n));
        gold_only.extend(os.into_iter().skip(n));
    }
    gold_only.extend(o_groups.into_values().flatten());
    (paired, gen_only, gold_only)
}

type FlagGetter = fn(&Attribute) -> bool;

const FLAGS: [(&str, FlagGetter); 4] = [
    ("pk", |a| a.is_primary_key),
    ("fk", |a| a.is_foreign_key),
    ("not_null", |a| a.not_null),
    ("unique", |a| a.unique),
];

fn flag_items<'a>(entity: &str, a: &'a Attribute) -> impl Iterator<Item = String> + 'a {
    let entity = entity.to_owned();
    FLAGS.iter().filter(move |(_, get)| get(a)).map(move |(flag, _)| format!("{entity}.{}:{flag}", a.name))
}

fn relationship_label(r: &Relationship) -> String {
    serialize_relation(r).unwrap_or_else(|_| r.sort_key().0)
}

/// Endpoint multiset of a relationship, expressed in gold entity names.
/// `None` when some endpoint entity has no counterpart.
fn relationship_key(r: &Relationship, to_gold: &dyn Fn(&str) -> Option<String>) -> Option<Vec<String>> {
    let mut key: Vec<String> = r.endpoints.iter().map(|e| to_gold(&e.entity)).collect::<Option<_>>()?;
    key.sort();
    Some(key)
}

/// Cardinality marks aligned with the sorted endpoint key.
fn card_signature(r: &Relationship, to_gold: &dyn Fn(&str) -> Option<String>) -> Vec<(String, Cardinality)> {
    let mut sig: Vec<(String, Cardinality)> =
        r.endpoints.iter().map(|e| (to_gold(&e.entity).unwrap_or_default(), e.cardinality)).collect();
    sig.sort();
    sig
}

fn sorted_attributes(e: &Entity) -> Vec<(String, &Attribute)> {
    let mut v: Vec<(String, &Attribute)> = e.attributes.iter().map(|a| (normalize_name(&a.name), a)).collect();
    v.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| x.1.name.cmp(&y.1.name)));
    v
}

pub fn diff_models(gen: &ErModel, gold: &ErModel) -> DiffReport {
    diff_models_with(gen, gold, &DiffOptions::default())
}

pub fn diff_models_with(gen: &ErModel, gold: &ErModel, opts: &DiffOptions) -> DiffReport {
    let mapping = match_entities_with(gen, gold, opts);
    let gen_by_name: HashMap<&str, &Entity> = gen.entities.iter().map(|e| (e.name.as_str(), e)).collect();
    let gold_by_name: HashMap<&str, &Entity> = gold.entities.iter().map(|e| (e.name.as_str(), e)).collect();

    let entities = ClassScore::new(
        mapping.entity_pairs.len(),
        mapping.unmatched_gold.clone(),
        mapping.unmatched_generated.clone(),
    );

    // Attributes and their constraint flags.
    let (mut attr_matched, mut attr_missing, mut attr_surplus) = (0, Vec::new(), Vec::new());
    let (mut cons_matched, mut cons_missing, mut cons_surplus) = (0, Vec::new(), Vec::new());
    for name in &mapping.unmatched_gold {
        for a in &gold_by_name[name.as_str()].attributes {
            attr_missing.push(format!("{name}.{}", a.name));
            cons_missing.extend(flag_items(name, a));
        }
    }
    for name in &mapping.unmatched_generated {
        for a in &gen_by_name[name.as_str()].attributes {
            attr_surplus.push(format!("{name}.{}", a.name));
            cons_surplus.extend(flag_items(name, a));
        }
    }
    for (g, o) in &mapping.entity_pairs {
        let (ge, oe) = (gen_by_name[g.as_str()], gold_by_name[o.as_str()]);
        let (paired, gen_only, gold_only) = zip_groups(sorted_attributes(ge), sorted_attributes(oe));
        attr_matched += paired.len();
        for (ga, oa) in paired {
            for (flag, get) in FLAGS {
                match (get(ga), get(oa)) {
                    (true, true) => cons_matched += 1,
                    (false, true) => cons_missing.push(format!("{o}.{}:{flag}", oa.name)),
                    (true, false) => cons_surplus.push(format!("{g}.{}:{flag}", ga.name)),
                    (false, false) => {}
                }
            }
        }
        for a in gold_only {
            attr_missing.push(format!("{o}.{}", a.name));
            cons_missing.extend(flag_items(o, a));
        }
        for a in gen_only {
            attr_surplus.push(format!("{g}.{}", a.name));
            cons_surplus.extend(flag_items(g, a));
        }
    }

    // Relationships, direction-insensitive, then cardinalities among the
    // matched ones.
    let gen_to_gold = |n: &str| mapping.gold_for(n).map(str::to_owned);
    let gold_to_gold = |n: &str| Some(n.to_owned());
    let (mut rel_missing, mut rel_surplus) = (Vec::new(), Vec::new());
    let mut gen_keyed = Vec::new();
    for r in &gen.relationships {
        match relationship_key(r, &gen_to_gold) {
            Some(k) => gen_keyed.push((k, r)),
            None => rel_surplus.push(relationship_label(r)),
        }
    }
    let gold_keyed: Vec<_> =
        gold.relationships.iter().map(|r| (relationship_key(r, &gold_to_gold).unwrap(), r)).collect();
    let mut card_matched = 0;
    let mut rel_matched = 0;
    let (mut card_missing, mut card_surplus) = (Vec::new(), Vec::new());
    {
        let mut g_groups: BTreeMap<Vec<String>, Vec<&Relationship>> = BTreeMap::new();
        for (k, r) in gen_keyed {
            g_groups.entry(k).or_default().push(r);
        }
        let mut o_groups: BTreeMap<Vec<String>, Vec<&Relationship>> = BTreeMap::new();
        for (k, r) in gold_keyed {
            o_groups.entry(k).or_default().push(r);
        }
        let all_keys: BTreeSet<Vec<String>> = g_groups.keys().chain(o_groups.keys()).cloned().collect();
        for k in all_keys {
            let mut gs = g_groups.remove(&k).unwrap_or_default();
            let mut os = o_groups.remove(&k).unwrap_or_default();
            gs.sort_by_key(|r| r.sort_key());
            os.sort_by_key(|r| r.sort_key());
            let gsig: Vec<_> = gs.iter().map(|r| (card_signature(r, &gen_to_gold), *r)).collect();
            let osig: Vec<_> = os.iter().map(|r| (card_signature(r, &gold_to_gold), *r)).collect();
            let (same_card, g_rest, o_rest) = zip_groups(gsig, osig);
            card_matched += same_card.len();
            rel_matched += same_card.len();
            let n = g_rest.len().min(o_rest.len());
            rel_matched += n;
            for r in &g_rest[..n] {
                card_surplus.push(relationship_label(r));
            }
            for r in &o_rest[..n] {
                card_missing.push(relationship_label(r));
            }
            for r in &g_rest[n..] {
                rel_surplus.push(relationship_label(r));
            }
            for r in &o_rest[n..] {
                rel_missing.push(relationship_label(r));
            }
        }
    }
    // Unmatched relationships carry unmatched cardinality pairs too.
    card_missing.extend(rel_missing.iter().cloned());
    card_surplus.extend(rel_surplus.iter().cloned());

    let attributes = ClassScore::new(attr_matched, attr_missing, attr_surplus);
    let constraints = ClassScore::new(cons_matched, cons_missing, cons_surplus);
    let relationships = ClassScore::new(rel_matched, rel_missing, rel_surplus);
    let cardinalities = ClassScore::new(card_matched, card_missing, card_surplus);
    let overall_f1 =
        [&entities, &attributes, &relationships, &cardinalities, &constraints].iter().map(|s| s.f1).sum::<f64>() / 5.0;
    DiffReport { mapping, entities, attributes, relationships, cardinalities, constraints, overall_f1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_relation;

    fn ent(name: &str, attrs: &[&str]) -> Entity {
        Entity::new(name).with_attributes(attrs.iter().map(|a| Attribute::new(*a)))
    }

    fn hospital() -> ErModel {
        ErModel {
            title: None,
            entities: vec![
                ent("Hospital", &["hospital_id", "name"]),
                ent("HospitalDepartment", &["hospital_department_id", "hospital_id", "name"]),
                ent("VisitorAccess", &["access_id", "hospital_department_id", "accessed_at"]),
            ],
            relationships: vec![
                parse_relation("Hospital:hospital_id 1--* HospitalDepartment:hospital_id").unwrap(),
                parse_relation("HospitalDepartment:hospital_department_id 1--* VisitorAccess:hospital_department_id")
                    .unwrap(),
            ],
        }
    }

    #[test]
    fn identity_pairs_everything() {
        let m = hospital();
        let map = match_entities(&m, &m);
        assert_eq!(map.entity_pairs.len(), 3);
        assert!(map.unmatched_generated.is_empty() && map.unmatched_gold.is_empty());
        let r = diff_models(&m, &m);
        for c in ElementClass::ALL {
            let s = r.class(c);
            assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0), "{c:?}");
        }
        assert_eq!(r.overall_f1, 1.0);
    }

    #[test]
    fn normalization_equal_names_pair_in_phase_one() {
        let gen = ErModel { entities: vec![ent("hospitalDepartment", &["x"])], ..Default::default() };
        let gold = ErModel { entities: vec![ent("HospitalDepartment", &["y"])], ..Default::default() };
        assert_eq!(
            match_entities(&gen, &gold).entity_pairs,
            vec![("hospitalDepartment".to_owned(), "HospitalDepartment".to_owned())]
        );
    }

    #[test]
    fn overlap_pairs_renamed_entities() {
        let gen = ErModel { entities: vec![ent("Guest", &["visitor_id", "name", "document"])], ..Default::default() };
        let gold = ErModel {
            entities: vec![ent("Visitor", &["visitor_id", "name", "document", "phone"]), ent("Nurse", &["coren"])],
            ..Default::default()
        };
        let map = match_entities(&gen, &gold);
        assert_eq!(map.entity_pairs, vec![("Guest".to_owned(), "Visitor".to_owned())]);
        assert_eq!(map.unmatched_gold, vec!["Nurse".to_owned()]);

        let strict = DiffOptions { overlap_threshold: 0.9 };
        assert!(match_entities_with(&gen, &gold, &strict).entity_pairs.is_empty());
    }

    #[test]
    fn empty_generated_against_gold() {
        let r = diff_models(&ErModel::default(), &hospital());
        assert_eq!(r.entities.recall, 0.0);
        assert_eq!(r.entities.precision, 1.0);
        assert_eq!(r.entities.f1, 0.0);
        assert_eq!(r.entities.missing, 3);
    }

    #[test]
    fn missing_relationship_is_named() {
        let gold = hospital();
        let mut gen = hospital();
        gen.relationships.remove(1);
        let r = diff_models(&gen, &gold);
        assert_eq!(r.relationships.missing, 1);
        assert_eq!(
            r.relationships.missing_items,
            vec!["HospitalDepartment:hospital_department_id 1--* VisitorAccess:hospital_department_id".to_owned()]
        );
    }

    #[test]
    fn redundant_direct_edge_is_surplus() {
        let gold = hospital();
        let mut gen = hospital();
        gen.relationships.push(parse_relation("Hospital:hospital_id 1--* VisitorAccess").unwrap());
        let r = diff_models(&gen, &gold);
        assert_eq!(r.relationships.surplus, 1);
        assert_eq!(r.relationships.missing, 0);
        assert_eq!(r.relationships.matched, 2);
    }

    #[test]
    fn reversed_direction_still_matches_and_cardinality_mismatch_counts() {
        let gold = hospital();
        let mut gen = hospital();
        gen.relationships[0] = parse_relation("HospitalDepartment:hospital_id *--1 Hospital:hospital_id").unwrap();
        let r = diff_models(&gen, &gold);
        assert_eq!(r.relationships.matched, 2);
        assert_eq!(r.cardinalities.matched, 2);

        gen.relationships[0] = parse_relation("HospitalDepartment:hospital_id 1--1 Hospital:hospital_id").unwrap();
        let r = diff_models(&gen, &gold);
        assert_eq!(r.relationships.matched, 2);
        assert_eq!(r.cardinalities.matched, 1);
        assert_eq!(r.cardinalities.missing, 1);
        assert_eq!(r.cardinalities.surplus, 1);
    }

    #[test]
    fn constraint_flags_compare_on_matched_attributes() {
        let mut gold = hospital();
        gold.entities[0].attributes[0].is_primary_key = true;
        gold.entities[0].attributes[1].not_null = true;
        let mut gen = hospital();
        gen.entities[0].attributes[0].is_primary_key = true;
        gen.entities[0].attributes[0].unique = true;
        let r = diff_models(&gen, &gold);
        assert_eq!(r.constraints.matched, 1);
        assert_eq!(r.constraints.missing_items, vec!["Hospital.name:not_null".to_owned()]);
        assert_eq!(r.constraints.surplus_items, vec!["Hospital.hospital_id:unique".to_owned()]);
    }

    #[test]
    fn table_has_a_row_per_class() {
        let t = diff_models(&hospital(), &hospital()).render_table();
        for c in ElementClass::ALL {
            assert!(t.contains(c.as_str()));
        }
    }
}
