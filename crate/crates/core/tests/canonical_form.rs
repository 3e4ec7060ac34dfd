mod common;

use erforge::{canonicalize, parse_model, to_document, validate_model, ErModel};
use erforge_testkit::{random_model, rng_for, GenConfig};
use rand::seq::SliceRandom;

fn shuffled(m: &ErModel, case: u64) -> ErModel {
    let mut rng = rng_for("canonical-shuffle", case);
    let mut out = m.clone();
    out.entities.shuffle(&mut rng);
    out.relationships.shuffle(&mut rng);
    out
}

#[test]
fn canonical_form_ignores_declaration_order() {
    for case in 0..200 {
        let m = random_model(&mut rng_for("canonical", case), &GenConfig::default());
        let a = canonicalize(&m).unwrap();
        let b = canonicalize(&shuffled(&m, case)).unwrap();
        assert_eq!(a, b, "case {case}");
        assert_eq!(to_document(&a), to_document(&b), "case {case}");
    }
}

#[test]
fn canonicalize_is_idempotent() {
    for case in 0..200 {
        let m = random_model(&mut rng_for("canonical-idem", case), &GenConfig::default());
        let once = canonicalize(&m).unwrap();
        assert_eq!(canonicalize(&once).unwrap(), once, "case {case}");
    }
}

#[test]
fn every_permutation_of_a_small_model_agrees() {
    let m = common::model_fixture("hospital_gold.json");
    let mut small = m.clone();
    small.entities.truncate(5);
    let keep: Vec<String> = small.entities.iter().map(|e| e.name.clone()).collect();
    small.relationships.retain(|r| r.endpoints.iter().all(|ep| keep.contains(&ep.entity)));
    for e in &mut small.entities {
        if e.parent.as_ref().is_some_and(|p| !keep.contains(p)) {
            e.parent = None;
        }
    }
    assert!(validate_model(&small).is_empty());
    let expected = canonicalize(&small).unwrap();

    let mut idx: Vec<usize> = (0..small.entities.len()).collect();
    let mut count = 0;
    permute(&mut idx, 0, &mut |order| {
        let mut p = small.clone();
        p.entities = order.iter().map(|&i| small.entities[i].clone()).collect();
        p.relationships.reverse();
        assert_eq!(canonicalize(&p).unwrap(), expected);
        count += 1;
    });
    assert_eq!(count, 120);
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

#[test]
fn document_round_trip_preserves_canonical_models() {
    for case in 0..200 {
        let m = canonicalize(&random_model(&mut rng_for("doc-roundtrip", case), &GenConfig::default())).unwrap();
        let doc = to_document(&m);
        let back = parse_model(&doc).unwrap_or_else(|e| panic!("case {case}: {e}\n{doc}"));
        assert_eq!(back, m, "case {case}");
        assert_eq!(to_document(&back), doc, "case {case}");
    }
}

#[test]
fn invalid_models_are_not_canonicalized() {
    let m = common::model_fixture("hospital_gold.json");
    let mut broken = m.clone();
    broken.entities[0].parent = Some("Nowhere".into());
    assert!(canonicalize(&broken).is_err());
}
