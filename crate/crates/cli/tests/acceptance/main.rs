//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and
//! exits non-zero if any criterion fails. Every criterion runs offline.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;

use erforge::diff::match_entities_with;
use erforge::dot::{render_external, resolve_renderer};
use erforge::extract::SourceKind;
use erforge::lint::{catalog, TRANSITIVE_REDUNDANCY};
use erforge::path::Segment;
use erforge::{
    classify_level, detect_transitive_redundancy, diff_models, emit_dot, extract_document, lint_model,
    normalize_pipeline, parse_model, parse_relation, serialize_relation, DiffOptions, ElementClass, ErModel, Finding,
    ImageFormat, ModelPath, QualityLevel, RenderOptions, RuleConfig,
};
use erforge_testkit::replay::{build_replay, replay_json};
use erforge_testkit::{
    dot_problems, enumerate_redundant_relationships, matching_objective, optimal_matching_objective, perturb,
    random_model, random_relation_string, rng_for, GenConfig,
};

/// Identity diffs must score exactly 1.0.
const F1_TOLERANCE: f64 = 0.0;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::*;

struct Criterion {
    id: &'static str,
    title: &'static str,
    limit: Option<Duration>,
    run: fn() -> Verdict,
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn model_fixture(name: &str) -> ErModel {
    let path = fixtures().join("models").join(name);
    parse_model(&std::fs::read_to_string(&path).expect("fixture readable")).expect("fixture parses")
}

/// Collapse runs of whitespace to single spaces and trim.
fn single_spaced(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn ac1_grammar() -> Verdict {
    let mut corpus: Vec<String> = (0..200).map(|i| random_relation_string(&mut rng_for("ac1", i))).collect();
    corpus.push("Hospital:hospital_id 1--* HospitalDepartment:hospital_id".into());
    corpus.push("IdentificationCard:card_id 1--? Visitor:card_id".into());
    for s in &corpus {
        let rel = match parse_relation(s) {
            Ok(r) => r,
            Err(e) => return Fail(format!("{s:?} does not parse: {e}")),
        };
        let back = serialize_relation(&rel).expect("binary");
        if back != single_spaced(s) {
            return Fail(format!("{s:?} serialized as {back:?}"));
        }
    }
    Pass(format!("{} strings", corpus.len()))
}

fn redundant_indices(findings: &[Finding]) -> BTreeSet<usize> {
    findings
        .iter()
        .filter(|f| f.rule_id == TRANSITIVE_REDUNDANCY)
        .filter_map(|f| match f.location.segments() {
            [Segment::Key(k), Segment::Index(i)] if k == "relationships" => Some(*i),
            _ => None,
        })
        .collect()
}

fn ac2_redundancy() -> Verdict {
    let cfg = GenConfig { max_entities: 8, one_to_many_bias: 0.9, ..GenConfig::default() };
    let mut positives = 0;
    for case in 0..200 {
        let m = random_model(&mut rng_for("ac2", case), &cfg);
        let expected = enumerate_redundant_relationships(&m);
        let got = redundant_indices(&detect_transitive_redundancy(&m));
        if got != expected {
            return Fail(format!("case {case}: detector {got:?}, oracle {expected:?}"));
        }
        positives += usize::from(!expected.is_empty());
    }
    let m = model_fixture("hospital_redundant.json");
    let found = detect_transitive_redundancy(&m);
    let idx = redundant_indices(&found);
    if found.len() != 1 || idx.len() != 1 {
        return Fail(format!("hospital fixture gave {} finding(s)", found.len()));
    }
    let direct = &m.relationships[*idx.iter().next().expect("one")];
    let ends: Vec<&str> = direct.endpoints.iter().map(|e| e.entity.as_str()).collect();
    if ends != ["Hospital", "VisitorAccess"] {
        return Fail(format!("hospital fixture flagged {ends:?}, not the direct edge"));
    }
    Pass(format!("200 models ({positives} with redundancy) match the oracle; fixture flags the direct edge"))
}

fn ac3_identity_symmetry() -> Verdict {
    for case in 0..100 {
        let m = random_model(&mut rng_for("ac3-id", case), &GenConfig::default());
        let r = diff_models(&m, &m);
        for c in ElementClass::ALL {
            if (r.class(c).f1 - 1.0).abs() > F1_TOLERANCE {
                return Fail(format!("identity case {case}: {} F1 {}", c.as_str(), r.class(c).f1));
            }
        }
        if (r.overall_f1 - 1.0).abs() > F1_TOLERANCE {
            return Fail(format!("identity case {case}: overall F1 {}", r.overall_f1));
        }
    }
    for case in 0..100 {
        let mut rng = rng_for("ac3-sym", case);
        let gold = random_model(&mut rng, &GenConfig::default());
        let gen = perturb(&mut rng, &gold, &GenConfig::default());
        let (ab, ba) = (diff_models(&gen, &gold), diff_models(&gold, &gen));
        for c in ElementClass::ALL {
            let (x, y) = (ab.class(c), ba.class(c));
            if x.missing != y.surplus || x.surplus != y.missing || x.matched != y.matched {
                return Fail(format!("symmetry case {case}: {} differs", c.as_str()));
            }
        }
    }
    Pass("100 identity diffs at F1 = 1.0, 100 symmetric pairs".into())
}

fn ac4_matching() -> Verdict {
    let cfg = GenConfig { max_entities: 6, ..GenConfig::default() };
    let opts = DiffOptions::default();
    let total = 50;
    let mut optimal = 0;
    for case in 0..total {
        let mut rng = rng_for("ac4", case);
        let gold = random_model(&mut rng, &cfg);
        let gen = perturb(&mut rng, &gold, &cfg);
        let mapping = match_entities_with(&gen, &gold, &opts);
        let got = matching_objective(&gen, &gold, &mapping);
        let best = optimal_matching_objective(&gen, &gold, opts.overlap_threshold);
        if got.at_least(&best) {
            optimal += 1;
        } else {
            println!(
                "  note: AC4 case {case}: greedy ({} name pairs, overlap {:.3}) below optimum ({}, {:.3})",
                got.name_pairs, got.overlap_sum, best.name_pairs, best.overlap_sum
            );
        }
    }
    let detail = format!("{optimal}/{total} optimal (need >= 90%)");
    if optimal * 10 >= total * 9 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn source_kind(name: &str) -> Option<SourceKind> {
    Some(match name {
        "pure" => SourceKind::PureDocument,
        "fenced" => SourceKind::FencedBlock,
        "escaped" => SourceKind::EscapedString,
        "prose" => SourceKind::EmbeddedInProse,
        _ => return None,
    })
}

fn ac5_extraction() -> Verdict {
    let root = fixtures().join("extraction");
    let manifest: toml::Table = match std::fs::read_to_string(root.join("manifest.toml")) {
        Ok(text) => match text.parse() {
            Ok(t) => t,
            Err(e) => return Fail(format!("manifest: {e}")),
        },
        Err(e) => return Fail(format!("manifest: {e}")),
    };
    let cases = manifest["case"].as_array().cloned().unwrap_or_default();
    let field = |c: &toml::Value, k: &str| c.get(k).and_then(|v| v.as_str()).map(str::to_owned);
    let (mut ok, mut bad) = (0, 0);
    for case in &cases {
        let file = field(case, "file").unwrap_or_default();
        let raw = match std::fs::read_to_string(root.join(&file)) {
            Ok(r) => r,
            Err(e) => return Fail(format!("{file}: {e}")),
        };
        let result = normalize_pipeline(&raw);
        if let Some(expected) = field(case, "expected") {
            let Some(want) = field(case, "kind").as_deref().and_then(source_kind) else {
                return Fail(format!("{file}: manifest kind missing"));
            };
            let (model, report) = match result {
                Ok(v) => v,
                Err(e) => return Fail(format!("{file}: {e}")),
            };
            if report.source_kind != want {
                return Fail(format!("{file}: classified {:?}, expected {want:?}", report.source_kind));
            }
            let passthrough = extract_document(&raw).map(|(d, _)| d == raw).unwrap_or(false);
            if want == SourceKind::PureDocument && report.warnings.is_empty() && !passthrough {
                return Fail(format!("{file}: pure document not passed through byte-identically"));
            }
            let gold = std::fs::read_to_string(root.join(&expected)).expect("expected file");
            let gold = erforge::canonicalize(&parse_model(&gold).expect("expected parses")).expect("valid");
            if model != gold {
                return Fail(format!("{file}: extracted model differs from {expected}"));
            }
            ok += 1;
        } else {
            let stage = field(case, "stage").unwrap_or_default();
            let code = field(case, "error").unwrap_or_default();
            let err = match result {
                Ok(_) => return Fail(format!("{file}: expected failure ({code})")),
                Err(e) => e,
            };
            if err.stage().to_string() != stage {
                return Fail(format!("{file}: failed at {} stage, expected {stage}: {err}", err.stage()));
            }
            if !error_matches(&err.to_string(), &code) {
                return Fail(format!("{file}: error `{err}` does not match {code}"));
            }
            bad += 1;
        }
    }
    if ok + bad < 20 {
        return Fail(format!("only {} fixtures", ok + bad));
    }
    Pass(format!("{ok} recovered, {bad} rejected as specified"))
}

/// Match an error message against a manifest error code.
fn error_matches(message: &str, code: &str) -> bool {
    match code.split_once(':') {
        Some(("malformed", candidate)) => message.contains(&format!("found a {candidate} candidate")),
        _ => match code {
            "no-document" => message.contains("no JSON document found"),
            "schema-violation" => message.contains("schema violation"),
            "bad-cardinality" => message.contains("bad cardinality"),
            "unknown-entity" => message.contains("UnknownEntityReference"),
            _ => false,
        },
    }
}

fn ac6_levels() -> Verdict {
    let rules = catalog();
    let cfg = RuleConfig::default();
    for case in 0..100 {
        let mut rng = rng_for("ac6", case);
        let m = random_model(&mut rng, &GenConfig::default());
        let findings = lint_model(&m, &cfg).expect("default config");
        let before = classify_level(&m, &findings);
        let rule = rules.choose(&mut rng).expect("non-empty catalog");
        let mut more = findings.clone();
        more.push(Finding::new(rule.as_ref(), ModelPath::root(), "injected"));
        let after = classify_level(&m, &more);
        if after > before {
            return Fail(format!("case {case}: injecting `{}` raised {before} to {after}", rule.id()));
        }
    }
    for case in 0..100 {
        let mut m = random_model(&mut rng_for("ac6-empty", case), &GenConfig::default());
        if m.entities.is_empty() {
            continue;
        }
        let name = m.entities[0].name.clone();
        m.entities[0].attributes.clear();
        for r in &mut m.relationships {
            for ep in &mut r.endpoints {
                if ep.entity == name {
                    ep.attribute = None;
                }
            }
        }
        let level = classify_level(&m, &lint_model(&m, &cfg).expect("default config"));
        if level != QualityLevel::L0 {
            return Fail(format!("case {case}: zero-attribute entity classified {level}"));
        }
    }
    Pass("100 injections never raise the level; zero-attribute entities give L0".into())
}

fn ac7_failure_modes() -> Verdict {
    let gold = model_fixture("hospital_gold.json");
    let merged = model_fixture("merged_employee.json");
    let report = diff_models(&merged, &gold);
    let level = classify_level(&merged, &lint_model(&merged, &RuleConfig::default()).expect("default config"));
    let missing = report.relationships.missing;
    let detail = format!("missing relationships {missing}, level {level}");
    if missing >= 1 && level < QualityLevel::L3 {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn ac8_dot() -> Verdict {
    for case in 0..100 {
        let m = random_model(&mut rng_for("ac8", case), &GenConfig::default());
        let dot = match emit_dot(&m, &RenderOptions::default()) {
            Ok(d) => d,
            Err(e) => return Fail(format!("case {case}: {e}")),
        };
        let problems = dot_problems(&dot);
        if !problems.is_empty() {
            return Fail(format!("case {case}: {}", problems.join("; ")));
        }
    }
    Pass("100 documents well formed".into())
}

fn ac8_render() -> Verdict {
    let renderer = resolve_renderer(None);
    let probe = Command::new(&renderer).arg("-V").output();
    if probe.is_err() {
        return Skip(format!("renderer `{renderer}` not installed"));
    }
    for case in 0..100 {
        let m = random_model(&mut rng_for("ac8", case), &GenConfig::default());
        let dot = emit_dot(&m, &RenderOptions::default()).expect("valid model");
        if let Err(e) = render_external(&dot, ImageFormat::Svg, &renderer) {
            return Fail(format!("case {case}: {e}"));
        }
    }
    Pass(format!("100 documents rendered by `{renderer}`"))
}

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(to)?;
    for entry in std::fs::read_dir(from)? {
        let entry = entry?;
        let target = to.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            copy_dir(&entry.path(), &target)?;
        } else {
            std::fs::copy(entry.path(), target)?;
        }
    }
    Ok(())
}

const ANALYSIS_FILES: [&str; 6] = ["findings.json", "findings.txt", "level.txt", "diff.json", "diff.txt", "model.dot"];

fn snapshot(runs: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
    let dirs = erforge::analysis::find_record_dirs(runs).map_err(|e| e.to_string())?;
    if dirs.len() != 9 {
        return Err(format!("{} record directories, expected 9", dirs.len()));
    }
    let mut out = Vec::new();
    for dir in dirs {
        let rel = dir.strip_prefix(runs).expect("under root").to_path_buf();
        if !dir.join("raw_stage1.txt").is_file() {
            return Err(format!("{}: no raw response", rel.display()));
        }
        if !dir.join("model.json").is_file() && !dir.join("extraction_error.txt").is_file() {
            return Err(format!("{}: neither model nor extraction failure", rel.display()));
        }
        for name in ANALYSIS_FILES {
            let path = dir.join(name);
            let bytes = std::fs::read(&path).map_err(|_| format!("{}: missing {name}", rel.display()))?;
            out.push((rel.join(name), bytes));
        }
        if let Ok(model) = std::fs::read(dir.join("model.json")) {
            out.push((rel.join("model.json"), model));
        }
    }
    Ok(out)
}

fn ac9_replay() -> Verdict {
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => return Fail(e.to_string()),
    };
    let root = tmp.path().join("run");
    if let Err(e) =
        copy_dir(&fixtures().join("run"), &root).and(copy_dir(&fixtures().join("models"), &tmp.path().join("models")))
    {
        return Fail(e.to_string());
    }
    let config = root.join("experiment.toml");
    let cfg = match erforge::harness::ExperimentConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return Fail(e.to_string()),
    };
    if cfg.scenarios.len() != 3 || cfg.strategies.len() != 3 {
        return Fail("replay config is not 3 scenarios x 3 strategies".into());
    }
    let replay = build_replay(&cfg, &root.join("responses")).map(|f| replay_json(&f));
    if let Err(e) = replay.and_then(|text| std::fs::write(root.join("replay.json"), text)) {
        return Fail(e.to_string());
    }

    let mut snapshots = Vec::new();
    for pass in 0..2 {
        let _ = std::fs::remove_dir_all(&cfg.output_root);
        let out =
            Command::new(env!("CARGO_BIN_EXE_erforge")).args(["--quiet", "run", "--analyze"]).arg(&config).output();
        match out {
            Ok(o) if o.status.success() => {}
            Ok(o) => {
                return Fail(format!("pass {pass}: exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))
            }
            Err(e) => return Fail(e.to_string()),
        }
        match snapshot(&cfg.output_root) {
            Ok(s) => snapshots.push(s),
            Err(e) => return Fail(format!("pass {pass}: {e}")),
        }
    }
    if snapshots[0] != snapshots[1] {
        let differing: Vec<String> = snapshots[0]
            .iter()
            .zip(&snapshots[1])
            .filter(|(a, b)| a != b)
            .map(|(a, _)| a.0.display().to_string())
            .collect();
        return Fail(format!("re-run differs: {}", differing.join(", ")));
    }
    Pass(format!("9 complete records, {} analysis files identical across runs", snapshots[0].len()))
}

fn main() {
    let criteria = [
        Criterion {
            id: "AC1",
            title: "relation grammar round-trip",
            limit: Some(Duration::from_secs(1)),
            run: ac1_grammar,
        },
        Criterion {
            id: "AC2",
            title: "transitive redundancy vs oracle",
            limit: Some(Duration::from_secs(5)),
            run: ac2_redundancy,
        },
        Criterion {
            id: "AC3",
            title: "diff identity and symmetry",
            limit: Some(Duration::from_secs(5)),
            run: ac3_identity_symmetry,
        },
        Criterion {
            id: "AC4",
            title: "matching near-optimality",
            limit: Some(Duration::from_secs(30)),
            run: ac4_matching,
        },
        Criterion { id: "AC5", title: "extraction corpus", limit: Some(Duration::from_secs(1)), run: ac5_extraction },
        Criterion { id: "AC6", title: "level monotonicity", limit: Some(Duration::from_secs(1)), run: ac6_levels },
        Criterion { id: "AC7", title: "failure-mode fixture", limit: None, run: ac7_failure_modes },
        Criterion { id: "AC8a", title: "DOT well-formedness", limit: None, run: ac8_dot },
        Criterion { id: "AC8b", title: "DOT renders externally", limit: None, run: ac8_render },
        Criterion { id: "AC9", title: "end-to-end replay run", limit: None, run: ac9_replay },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let verdict = (c.run)();
        let elapsed = start.elapsed();
        let limit = c.limit.map(|l| format!(" < {}s", l.as_secs())).unwrap_or_default();
        let timing = format!("{:.3}s{limit}", elapsed.as_secs_f64());
        let verdict = match (verdict, c.limit) {
            (Pass(d), Some(l)) if elapsed > l => Fail(format!("{d}; over time limit")),
            (v, _) => v,
        };
        match verdict {
            Pass(d) => println!("PASS {} {}: {d} [{timing}]", c.id, c.title),
            Skip(d) => println!("SKIP {} {}: {d}", c.id, c.title),
            Fail(d) => {
                failed += 1;
                println!("FAIL {} {}: {d} [{timing}]", c.id, c.title);
            }
        }
    }
    println!("{} criteria, {failed} failed", criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
