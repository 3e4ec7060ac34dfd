//! Random valid models and relation strings.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use erforge::model::{normalize_name, Attribute, Cardinality, Endpoint, Entity, ErModel, Relationship};

const ENTITY_NAMES: &[&str] = &[
    "Hospital",
    "HospitalDepartment",
    "Visitor",
    "VisitorAccess",
    "IdentificationCard",
    "Employee",
    "Physician",
    "Resident",
    "Nurse",
    "Patient",
    "Ward",
    "Bed",
    "Shift",
    "Badge",
    "Appointment",
    "Invoice",
];

const ATTRIBUTE_NAMES: &[&str] = &[
    "name",
    "code",
    "email",
    "phone",
    "address",
    "date",
    "status",
    "badge_no",
    "floor",
    "room",
    "start_time",
    "end_time",
    "notes",
    "level",
    "amount",
];

const TYPES: &[&str] = &["", "int", "text", "date", "varchar(64)", "timestamp"];

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_entities: usize,
    pub max_attributes: usize,
    pub max_relationships: usize,
    /// Probability that a binary relationship is one-to-many.
    pub one_to_many_bias: f64,
    pub allow_nary: bool,
    pub allow_hierarchy: bool,
    /// Probability that an entity gets no attributes at all.
    pub empty_entity_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            max_entities: 8,
            max_attributes: 5,
            max_relationships: 10,
            one_to_many_bias: 0.6,
            allow_nary: true,
            allow_hierarchy: true,
            empty_entity_rate: 0.05,
        }
    }
}

fn card<R: Rng>(rng: &mut R) -> Cardinality {
    *Cardinality::ALL.choose(rng).expect("non-empty")
}

fn key_name(entity: &str) -> String {
    let mut out = String::new();
    for (i, c) in entity.chars().enumerate() {
        if c.is_ascii_uppercase() && i > 0 {
            out.push('_');
        }
        out.push(c.to_ascii_lowercase());
    }
    out + "_id"
}

fn random_entity<R: Rng>(rng: &mut R, name: &str, cfg: &GenConfig) -> Entity {
    let mut e = Entity::new(name);
    if rng.random_bool(cfg.empty_entity_rate) {
        return e;
    }
    e.attributes.push(Attribute::new(key_name(name)).primary_key().typed("int").not_null());
    let extra = rng.random_range(0..cfg.max_attributes.max(1));
    let mut pool: Vec<&str> = ATTRIBUTE_NAMES.to_vec();
    pool.shuffle(rng);
    for n in pool.into_iter().take(extra) {
        let mut a = Attribute::new(n).typed(*TYPES.choose(rng).expect("non-empty"));
        a.not_null = rng.random_bool(0.3);
        a.unique = rng.random_bool(0.15);
        a.is_foreign_key = rng.random_bool(0.1);
        e.attributes.push(a);
    }
    e
}

fn endpoint_for<R: Rng>(rng: &mut R, e: &Entity, cardinality: Cardinality) -> Endpoint {
    let attribute = if !e.attributes.is_empty() && rng.random_bool(0.7) {
        Some(e.attributes.choose(rng).expect("non-empty").name.clone())
    } else {
        None
    };
    Endpoint { entity: e.name.clone(), attribute, cardinality }
}

/// A random model that passes `validate_model`.
pub fn random_model<R: Rng>(rng: &mut R, cfg: &GenConfig) -> ErModel {
    let n = rng.random_range(0..=cfg.max_entities.min(ENTITY_NAMES.len()));
    let mut names: Vec<&str> = ENTITY_NAMES.to_vec();
    names.shuffle(rng);
    names.truncate(n);

    let mut entities: Vec<Entity> = names.iter().map(|name| random_entity(rng, name, cfg)).collect();
    if cfg.allow_hierarchy {
        // Parents always come earlier in generation order, so chains are acyclic.
        for i in 1..entities.len() {
            if rng.random_bool(0.2) {
                let p = rng.random_range(0..i);
                entities[i].parent = Some(entities[p].name.clone());
            }
        }
    }

    let mut relationships = Vec::new();
    if !entities.is_empty() {
        let count = rng.random_range(0..=cfg.max_relationships);
        for _ in 0..count {
            if cfg.allow_nary && entities.len() >= 3 && rng.random_bool(0.1) {
                let arity = rng.random_range(3..=entities.len().min(4));
                let picks: Vec<&Entity> = entities.choose_multiple(rng, arity).collect();
                let endpoints = picks
                    .iter()
                    .map(|e| {
                        let c = card(rng);
                        endpoint_for(rng, e, c)
                    })
                    .collect();
                let label = rng.random_bool(0.5).then(|| "involves".to_owned());
                relationships.push(Relationship { endpoints, label });
                continue;
            }
            let a = entities.choose(rng).expect("non-empty");
            let b = entities.choose(rng).expect("non-empty");
            let (ca, cb) = if rng.random_bool(cfg.one_to_many_bias) {
                let many = if rng.random_bool(0.8) { Cardinality::ZeroOrMore } else { Cardinality::OneOrMore };
                if rng.random_bool(0.5) {
                    (Cardinality::ExactlyOne, many)
                } else {
                    (many, Cardinality::ExactlyOne)
                }
            } else {
                (card(rng), card(rng))
            };
            let label = rng.random_bool(0.1).then(|| "has".to_owned());
            relationships
                .push(Relationship { endpoints: vec![endpoint_for(rng, a, ca), endpoint_for(rng, b, cb)], label });
        }
    }

    entities.shuffle(rng);
    let title = rng.random_bool(0.5).then(|| "Generated model".to_owned());
    ErModel { title, entities, relationships }
}

fn ident<R: Rng>(rng: &mut R) -> String {
    const FIRST: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_";
    const REST: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_";
    let len = rng.random_range(1..=12);
    let mut s = String::with_capacity(len);
    s.push(*FIRST.choose(rng).expect("non-empty") as char);
    for _ in 1..len {
        s.push(*REST.choose(rng).expect("non-empty") as char);
    }
    s
}

fn whitespace<R: Rng>(rng: &mut R) -> &'static str {
    [" ", " ", " ", "  ", "\t", " \t ", "   "].choose(rng).expect("non-empty")
}

/// A random, grammatical relation string with irregular whitespace around
/// the cardinality pair and at both ends.
pub fn random_relation_string<R: Rng>(rng: &mut R) -> String {
    let endpoint = |rng: &mut R| {
        let mut s = ident(rng);
        if rng.random_bool(0.6) {
            s.push(':');
            s.push_str(&ident(rng));
        }
        s
    };
    let left = endpoint(rng);
    let right = if rng.random_bool(0.05) { left.clone() } else { endpoint(rng) };
    let lead = if rng.random_bool(0.1) { " " } else { "" };
    let trail = if rng.random_bool(0.1) { "\t" } else { "" };
    format!("{lead}{left}{}{}--{}{}{right}{trail}", whitespace(rng), card(rng), card(rng), whitespace(rng))
}

fn rename<R: Rng>(rng: &mut R, name: &str) -> String {
    match rng.random_range(0..3) {
        0 => {
            let mut c = name.chars();
            match c.next() {
                Some(f) => f.to_lowercase().collect::<String>() + c.as_str(),
                None => name.to_owned(),
            }
        }
        1 => name.to_uppercase(),
        _ => format!("{name}Record"),
    }
}

/// A "generated" model derived from `gold` by dropping, renaming and adding
/// elements. The result is always valid.
pub fn perturb<R: Rng>(rng: &mut R, gold: &ErModel, cfg: &GenConfig) -> ErModel {
    let mut entities: Vec<Entity> = Vec::new();
    let mut renamed: Vec<(String, String)> = Vec::new();
    let mut taken: Vec<String> = Vec::new();
    for e in &gold.entities {
        if rng.random_bool(0.15) {
            continue;
        }
        let mut e = e.clone();
        if rng.random_bool(0.3) {
            let new = rename(rng, &e.name);
            if !taken.contains(&normalize_name(&new)) && !gold.entities.iter().any(|g| g.name == new) {
                renamed.push((e.name.clone(), new.clone()));
                e.name = new;
            }
        }
        e.attributes.retain(|_| rng.random_bool(0.85));
        for a in &mut e.attributes {
            if rng.random_bool(0.2) {
                a.not_null = !a.not_null;
            }
        }
        if rng.random_bool(0.2) {
            let n = ATTRIBUTE_NAMES.choose(rng).expect("non-empty");
            if e.attribute(n).is_none() {
                e.attributes.push(Attribute::new(*n));
            }
        }
        taken.push(normalize_name(&e.name));
        entities.push(e);
    }
    if rng.random_bool(0.4) {
        if let Some(extra) = ENTITY_NAMES.iter().find(|n| !taken.contains(&normalize_name(n))) {
            entities.push(random_entity(rng, extra, cfg));
        }
    }

    let map_name =
        |n: &str| renamed.iter().find(|(o, _)| o == n).map(|(_, new)| new.clone()).unwrap_or_else(|| n.to_owned());
    for e in &mut entities {
        e.parent = e.parent.as_deref().map(map_name);
    }
    let present = |n: &str, ents: &[Entity]| ents.iter().any(|e| e.name == n);
    for i in 0..entities.len() {
        if let Some(p) = entities[i].parent.clone() {
            if !present(&p, &entities) {
                entities[i].parent = None;
            }
        }
    }

    let mut relationships = Vec::new();
    for r in &gold.relationships {
        if rng.random_bool(0.15) {
            continue;
        }
        let mut r = r.clone();
        for ep in &mut r.endpoints {
            ep.entity = map_name(&ep.entity);
            if rng.random_bool(0.1) {
                ep.cardinality = card(rng);
            }
        }
        let ok = r.endpoints.iter().all(|ep| {
            entities
                .iter()
                .find(|e| e.name == ep.entity)
                .is_some_and(|e| ep.attribute.as_deref().is_none_or(|a| e.attribute(a).is_some()))
        });
        if ok {
            relationships.push(r);
        }
    }
    if entities.len() >= 2 && rng.random_bool(0.4) {
        let a = entities.choose(rng).expect("non-empty");
        let b = entities.choose(rng).expect("non-empty");
        relationships.push(Relationship::binary(
            Endpoint::new(a.name.as_str(), None, Cardinality::ExactlyOne),
            Endpoint::new(b.name.as_str(), None, Cardinality::ZeroOrMore),
        ));
    }
    entities.shuffle(rng);
    relationships.shuffle(rng);
    ErModel { title: gold.title.clone(), entities, relationships }
}
