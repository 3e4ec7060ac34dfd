use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use erforge::analysis::{analyze_record_dir, diff_json, render_level, AnalysisOptions};
use erforge::config::AppConfig;
use erforge::dot::{emit_dot, render_external, resolve_renderer, ImageFormat};
use erforge::harness::{run_experiment, ExperimentConfig, Outcome};
use erforge::lint::{assess_level, lint_model, render_report, Severity};
use erforge::model::ErModel;
use erforge::schema::{parse_model, to_document};
use erforge::{diff_models_with, normalize_pipeline};

use crate::{Cli, Command, Format, Status};

/// Carries the exit status of a failed command along with its message.
struct Failure {
    status: Status,
    message: String,
}

fn bad_input(message: impl Into<String>) -> Failure {
    Failure { status: Status::BadInput, message: message.into() }
}

struct Ctx<'a> {
    json: bool,
    quiet: bool,
    config: &'a AppConfig,
}

impl Ctx<'_> {
    fn info(&self, text: &str) {
        if !self.quiet && !self.json {
            eprintln!("{text}");
        }
    }

    fn emit(&self, human: &str, machine: &Value) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(machine).expect("serializes"));
        } else {
            print!("{human}");
        }
    }
}

pub fn dispatch(cli: &Cli, config: &AppConfig) -> Status {
    let ctx = Ctx { json: cli.json, quiet: cli.quiet, config };
    let result = match &cli.command {
        Command::Extract { input, output } => extract(&ctx, input, output.as_deref()),
        Command::Lint { model } => lint(&ctx, model),
        Command::Diff { generated, gold } => diff(&ctx, generated, gold),
        Command::Render { model, output, format } => render(&ctx, model, output.as_deref(), *format),
        Command::Run { experiment, analyze } => run(&ctx, experiment, *analyze),
    };
    match result {
        Ok(status) => status,
        Err(f) => {
            if ctx.json {
                println!("{}", json!({ "error": f.message, "exit_code": f.status as u8 }));
            }
            eprintln!("error: {}", f.message);
            f.status
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| bad_input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| bad_input(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| bad_input(format!("cannot write {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<ErModel, Failure> {
    parse_model(&read(path)?).map_err(|e| bad_input(format!("{}: {e}", path.display())))
}

fn extract(ctx: &Ctx<'_>, input: &Path, output: Option<&Path>) -> Result<Status, Failure> {
    if input.is_dir() {
        let out_dir = output.ok_or_else(|| bad_input("batch mode needs --output <directory>"))?;
        return extract_batch(ctx, input, out_dir);
    }
    let raw = read(input)?;
    let (model, report) = normalize_pipeline(&raw).map_err(|e| bad_input(format!("{}: {e}", input.display())))?;
    let doc = to_document(&model);
    let mut human = format!("source: {}\nbytes discarded: {}\n", report.source_kind.as_str(), report.bytes_discarded);
    for w in &report.warnings {
        let _ = writeln!(human, "warning: {w}");
    }
    let machine = json!({
        "input": input.display().to_string(),
        "output": output.map(|p| p.display().to_string()),
        "report": report,
    });
    match output {
        Some(path) => {
            write(path, doc.as_bytes())?;
            if !ctx.quiet || ctx.json {
                ctx.emit(&human, &machine);
            }
        }
        None => {
            print!("{doc}");
            if ctx.json {
                eprintln!("{}", serde_json::to_string(&machine).expect("serializes"));
            } else {
                ctx.info(human.trim_end());
            }
        }
    }
    Ok(Status::Ok)
}

fn extract_batch(ctx: &Ctx<'_>, input: &Path, out_dir: &Path) -> Result<Status, Failure> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| bad_input(format!("cannot list {}: {e}", input.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    std::fs::create_dir_all(out_dir).map_err(|e| bad_input(format!("cannot create {}: {e}", out_dir.display())))?;

    let (mut ok, mut failed) = (0usize, 0usize);
    let mut human = String::new();
    let mut rows = Vec::new();
    for file in &files {
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
        let target = out_dir.join(format!("{stem}.json"));
        let outcome = read(file).and_then(|raw| normalize_pipeline(&raw).map_err(|e| bad_input(e.to_string())));
        match outcome {
            Ok((model, report)) => {
                write(&target, to_document(&model).as_bytes())?;
                ok += 1;
                if !ctx.quiet {
                    let _ = writeln!(human, "ok     {} ({})", file.display(), report.source_kind.as_str());
                }
                rows.push(json!({ "input": file.display().to_string(), "output": target.display().to_string(), "report": report }));
            }
            Err(f) => {
                failed += 1;
                let _ = writeln!(human, "failed {}: {}", file.display(), f.message);
                rows.push(json!({ "input": file.display().to_string(), "error": f.message }));
            }
        }
    }
    let _ = writeln!(human, "{ok} ok / {failed} failed");
    ctx.emit(&human, &json!({ "files": rows, "ok": ok, "failed": failed }));
    Ok(if failed == 0 { Status::Ok } else { Status::BadInput })
}

fn lint(ctx: &Ctx<'_>, path: &Path) -> Result<Status, Failure> {
    let model = load_model(path)?;
    let findings = lint_model(&model, &ctx.config.lint).map_err(|e| bad_input(e.to_string()))?;
    let assessment = assess_level(&model, &findings);
    let mut human = render_report(&findings);
    if !ctx.quiet {
        let _ = writeln!(human, "{} finding(s)", findings.len());
    }
    human.push_str(&render_level(&assessment));
    ctx.emit(&human, &json!({ "findings": findings, "level": assessment.level, "assessment": assessment }));
    let errors = findings.iter().any(|f| f.severity == Severity::Error);
    Ok(if errors { Status::Findings } else { Status::Ok })
}

fn diff(ctx: &Ctx<'_>, generated: &Path, gold: &Path) -> Result<Status, Failure> {
    let gen = load_model(generated)?;
    let gold = load_model(gold)?;
    let report = diff_models_with(&gen, &gold, &ctx.config.diff_options());
    if ctx.json {
        print!("{}", diff_json(&report));
    } else {
        print!("{}", report.render_table());
    }
    Ok(Status::Ok)
}

fn render(ctx: &Ctx<'_>, path: &Path, output: Option<&Path>, format: Format) -> Result<Status, Failure> {
    let model = load_model(path)?;
    let dot = emit_dot(&model, &ctx.config.render_options()).map_err(|e| bad_input(e.to_string()))?;
    let bytes = match format {
        Format::Dot => dot.into_bytes(),
        Format::Png | Format::Svg => {
            let fmt = if format == Format::Png { ImageFormat::Png } else { ImageFormat::Svg };
            let renderer = resolve_renderer(ctx.config.render.renderer.as_deref());
            render_external(&dot, fmt, &renderer).map_err(|e| bad_input(e.to_string()))?
        }
    };
    match output {
        Some(out) => {
            write(out, &bytes)?;
            if ctx.json {
                println!("{}", json!({ "output": out.display().to_string(), "bytes": bytes.len() }));
            } else {
                ctx.info(&format!("wrote {} ({} bytes)", out.display(), bytes.len()));
            }
        }
        None => {
            std::io::stdout().write_all(&bytes).map_err(|e| bad_input(format!("cannot write stdout: {e}")))?;
        }
    }
    Ok(Status::Ok)
}

fn run(ctx: &Ctx<'_>, experiment: &Path, analyze: bool) -> Result<Status, Failure> {
    let cfg = ExperimentConfig::load(experiment).map_err(|e| bad_input(e.to_string()))?;
    let summary = run_experiment(&cfg).map_err(|e| bad_input(e.to_string()))?;
    let opts = AnalysisOptions {
        lint: ctx.config.lint.clone(),
        diff: ctx.config.diff_options(),
        render: ctx.config.render_options(),
    };

    let mut human = String::new();
    let mut rows = Vec::new();
    for rec in &summary.records {
        let cell = format!("{}/{}/{}", rec.scenario_id, rec.strategy, rec.provider_id);
        let outcome = match rec.outcome {
            Outcome::Ok => "ok",
            Outcome::ExtractionFailed => "extraction_failed",
            Outcome::ProviderError => "provider_error",
        };
        let mut row = json!({
            "cell": cell,
            "dir": rec.dir.display().to_string(),
            "outcome": rec.outcome,
            "warnings": rec.warnings,
            "error": rec.error,
        });
        let mut line = format!("{cell}: {outcome}");
        if analyze {
            let a = analyze_record_dir(&rec.dir, &opts).map_err(|e| bad_input(e.to_string()))?;
            let _ = write!(line, ", level {}, {} finding(s)", a.level, a.findings);
            if let Some(f1) = a.overall_f1 {
                let _ = write!(line, ", overall F1 {f1:.3}");
            }
            row["level"] = json!(a.level);
            row["findings"] = json!(a.findings);
            row["overall_f1"] = json!(a.overall_f1);
        }
        if let Some(err) = &rec.error {
            let _ = write!(line, " ({err})");
        }
        if !ctx.quiet || rec.outcome != Outcome::Ok {
            let _ = writeln!(human, "{line}");
        }
        rows.push(row);
    }
    let (ok, failed, provider) =
        (summary.count(Outcome::Ok), summary.count(Outcome::ExtractionFailed), summary.count(Outcome::ProviderError));
    let _ = writeln!(human, "{ok} ok / {failed} extraction failed / {provider} provider error(s)");
    ctx.emit(&human, &json!({ "records": rows, "ok": ok, "extraction_failed": failed, "provider_error": provider }));
    Ok(if provider > 0 { Status::Provider } else { Status::Ok })
}
