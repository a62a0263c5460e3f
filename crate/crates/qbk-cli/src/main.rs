//! Command-line surface for the `qbk` library: parsing and printing
//! formulas, negation-normal-form rewriting, the Nelson translations,
//! model checking, derivation checking, bounded countermodel search, and
//! bundled fixtures.
//!
//! Exit codes: 0 means the command succeeded and the answer is affirmative
//! (verified, valid, proof checks, no countermodel within bounds); 2 means
//! the command succeeded and the answer is negative (refuted, invalid,
//! countermodel found); 1 means an input or usage error. Output is
//! deterministic: repeated runs with identical inputs produce identical
//! bytes, and `--workers` may change only internal scheduling, never the
//! verdict.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qbk::calculus::{check_derivation, LemmaStore};
use qbk::formats::{dump_derivation, dump_model, load_derivation, load_model};
use qbk::nelson::{
    gap_point_fixture, nelson_evaluate, tau, tau_prime, tau_tilde, NelsonFormula, NelsonModel,
};
use qbk::nnf::{is_nnf, to_nnf};
use qbk::parser::{parse_formula, parse_formula_inferred};
use qbk::printer::print_formula;
use qbk::semantics::{
    evaluate, search_countermodel, validate_model, Bounds, Env, KripkeModel, ModelClass, Polarity,
};
use qbk::syntax::{Formula, Signature};

#[derive(Parser)]
#[command(
    name = "qbk",
    version,
    about = "Toolkit for a quantified Belnapian modal logic",
    disable_help_subcommand = true
)]
struct Cli {
    /// Emit a machine-readable JSON envelope instead of plain text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and report its structure.
    Parse {
        /// Formula text; the signature is inferred from usage.
        formula: String,
    },
    /// Parse a formula and print its canonical form.
    Print {
        formula: String,
    },
    /// Rewrite a formula to negation normal form.
    Nnf {
        formula: String,
    },
    /// Translate a strong-negation formula into the modal language.
    Translate {
        /// tau embeds a formula already in negation normal form; tau-tilde
        /// pushes strong negation itself and accepts any shape; tau-prime is
        /// the known-unfaithful classical-negation translation.
        #[arg(long, value_enum)]
        mode: TranslateMode,
        formula: String,
    },
    /// Evaluate a formula at a world of a model.
    Eval {
        /// Model document (JSON).
        #[arg(long)]
        model: PathBuf,
        /// World name, as declared in the model document.
        #[arg(long)]
        world: String,
        /// `+` asks for verification, `-` for falsification.
        #[arg(long, default_value = "+", value_parser = parse_polarity)]
        polarity: Polarity,
        /// Which satisfaction relation to use.
        #[arg(long, value_enum, default_value_t = SemanticsArg::Qbk)]
        semantics: SemanticsArg,
        /// Binding `VAR=ELEMENT` for a free variable; repeatable.
        #[arg(long = "bind", value_name = "VAR=ELEMENT")]
        bind: Vec<String>,
        formula: String,
    },
    /// Check that a model document satisfies a model class.
    ValidateModel {
        /// Class name: qbk, qbk-o, qb3k, qbt, qbk4, qbs4, qb3s4, qbk-sharp,
        /// qn4 or qn3.
        #[arg(long, default_value = "qbk")]
        class: String,
        file: PathBuf,
    },
    /// Check a derivation document line by line.
    CheckProof {
        file: PathBuf,
    },
    /// Search for a countermodel to a consequence within bounds.
    SearchCountermodel {
        /// Premise (must be a sentence); repeatable.
        #[arg(long = "gamma", value_name = "FORMULA")]
        gamma: Vec<String>,
        /// Conclusion; repeatable, at least one required.
        #[arg(long = "delta", value_name = "FORMULA", required = true)]
        delta: Vec<String>,
        /// Model class to search.
        #[arg(long, default_value = "qbk")]
        class: String,
        #[arg(long, default_value_t = 3)]
        max_worlds: usize,
        #[arg(long, default_value_t = 2)]
        max_domain: usize,
        /// Hard cap on the number of candidate models.
        #[arg(long)]
        cap: Option<u64>,
        /// Worker threads for the scan; never affects the verdict.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Write a bundled example model or derivation to disk.
    Fixtures {
        /// One of: gap-point, converse-barcan, necessitation,
        /// barcan-interderivation.
        name: String,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Parse { .. } => "parse",
            Command::Print { .. } => "print",
            Command::Nnf { .. } => "nnf",
            Command::Translate { .. } => "translate",
            Command::Eval { .. } => "eval",
            Command::ValidateModel { .. } => "validate-model",
            Command::CheckProof { .. } => "check-proof",
            Command::SearchCountermodel { .. } => "search-countermodel",
            Command::Fixtures { .. } => "fixtures",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TranslateMode {
    Tau,
    TauTilde,
    TauPrime,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    Qbk,
    Nelson,
}

fn parse_polarity(s: &str) -> Result<Polarity, String> {
    match s {
        "+" | "plus" => Ok(Polarity::Plus),
        "-" | "minus" => Ok(Polarity::Minus),
        other => Err(format!("expected `+` or `-`, found `{other}`")),
    }
}

/// Everything a command reports: the verdict word, the plain-text lines,
/// an optional structured witness, and side notes. `negative` selects exit
/// code 2 instead of 0.
struct Report {
    verdict: &'static str,
    negative: bool,
    text: Vec<String>,
    witness: Option<Value>,
    diagnostics: Vec<String>,
}

impl Report {
    fn affirmative(verdict: &'static str) -> Self {
        Report {
            verdict,
            negative: false,
            text: Vec::new(),
            witness: None,
            diagnostics: Vec::new(),
        }
    }

    fn negative(verdict: &'static str) -> Self {
        Report {
            negative: true,
            ..Report::affirmative(verdict)
        }
    }

    fn line(mut self, s: impl Into<String>) -> Self {
        self.text.push(s.into());
        self
    }

    fn witness(mut self, w: Value) -> Self {
        self.witness = Some(w);
        self
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.diagnostics.push(s.into());
        self
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Usage errors exit 1; --help and --version are not errors.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let command = cli.command.name();
    match run(&cli.command) {
        Ok(report) => {
            if cli.json {
                let mut envelope = json!({
                    "command": command,
                    "verdict": report.verdict,
                    "diagnostics": report.diagnostics,
                });
                if let Some(w) = report.witness {
                    envelope["witness"] = w;
                }
                println!("{envelope}");
            } else {
                for line in &report.text {
                    println!("{line}");
                }
                for d in &report.diagnostics {
                    eprintln!("note: {d}");
                }
            }
            ExitCode::from(if report.negative { 2 } else { 0 })
        }
        Err(message) => {
            if cli.json {
                let envelope = json!({
                    "command": command,
                    "verdict": "error",
                    "diagnostics": [message],
                });
                println!("{envelope}");
            } else {
                eprintln!("error: {message}");
            }
            ExitCode::from(1)
        }
    }
}

fn run(command: &Command) -> Result<Report, String> {
    match command {
        Command::Parse { formula } => cmd_parse(formula),
        Command::Print { formula } => cmd_print(formula),
        Command::Nnf { formula } => cmd_nnf(formula),
        Command::Translate { mode, formula } => cmd_translate(*mode, formula),
        Command::Eval {
            model,
            world,
            polarity,
            semantics,
            bind,
            formula,
        } => cmd_eval(model, world, *polarity, *semantics, bind, formula),
        Command::ValidateModel { class, file } => cmd_validate_model(class, file),
        Command::CheckProof { file } => cmd_check_proof(file),
        Command::SearchCountermodel {
            gamma,
            delta,
            class,
            max_worlds,
            max_domain,
            cap,
            workers,
        } => cmd_search(gamma, delta, class, *max_worlds, *max_domain, *cap, *workers),
        Command::Fixtures { name, out } => cmd_fixtures(name, out),
    }
}

fn infer(text: &str) -> Result<(Formula, Signature), String> {
    parse_formula_inferred(text).map_err(|e| e.to_string())
}

fn class_by_name(name: &str) -> Result<ModelClass, String> {
    ModelClass::from_preset_name(name).ok_or_else(|| {
        format!(
            "unknown model class `{name}` (expected one of qbk, qbk-o, qb3k, qbt, \
             qbk4, qbs4, qb3s4, qbk-sharp, qn4, qn3)"
        )
    })
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read `{}`: {e}", path.display()))
}

fn cmd_parse(text: &str) -> Result<Report, String> {
    let (f, sig) = infer(text)?;
    let canonical = print_formula(&f);
    let predicates: Vec<String> = sig.predicates().map(|(n, a)| format!("{n}/{a}")).collect();
    let free: Vec<String> = f.free_vars().into_iter().collect();
    let report = Report::affirmative("parsed")
        .line(&canonical)
        .line(format!("predicates: {}", predicates.join(", ")))
        .line(if free.is_empty() {
            "sentence".to_string()
        } else {
            format!("free variables: {}", free.join(", "))
        })
        .line(format!(
            "negation normal form: {}",
            if is_nnf(&f) { "yes" } else { "no" }
        ))
        .line(format!(
            "modality-free: {}",
            if f.is_modality_free() { "yes" } else { "no" }
        ))
        .line(format!("depth: {}", f.depth()))
        .witness(json!({
            "formula": canonical,
            "predicates": predicates,
            "free_variables": free,
            "nnf": is_nnf(&f),
            "modality_free": f.is_modality_free(),
            "depth": f.depth(),
        }));
    Ok(report)
}

fn cmd_print(text: &str) -> Result<Report, String> {
    let (f, _) = infer(text)?;
    let canonical = print_formula(&f);
    Ok(Report::affirmative("parsed")
        .line(&canonical)
        .witness(json!({ "formula": canonical })))
}

fn cmd_nnf(text: &str) -> Result<Report, String> {
    let (f, _) = infer(text)?;
    let rewritten = print_formula(&to_nnf(&f));
    Ok(Report::affirmative("rewritten")
        .line(&rewritten)
        .witness(json!({ "formula": rewritten })))
}

fn cmd_translate(mode: TranslateMode, text: &str) -> Result<Report, String> {
    let (f, _) = infer(text)?;
    let nelson = NelsonFormula::new(f).map_err(|e| e.to_string())?;
    let translated = match mode {
        TranslateMode::Tau => tau(&nelson).map_err(|e| {
            format!("{e} (use --mode tau-tilde, which normalizes as it translates)")
        })?,
        TranslateMode::TauTilde => tau_tilde(&nelson),
        TranslateMode::TauPrime => tau_prime(&nelson),
    };
    let printed = print_formula(&translated);
    let mut report = Report::affirmative("translated")
        .line(&printed)
        .witness(json!({ "formula": printed }));
    if mode == TranslateMode::TauPrime {
        report = report.note(
            "tau-prime is the known-unfaithful classical-negation translation; \
             it does not preserve refutability",
        );
    }
    Ok(report)
}

fn parse_bindings(
    m: &KripkeModel,
    binds: &[String],
) -> Result<(Env, BTreeMap<String, String>), String> {
    let mut env = Env::new();
    let mut shown = BTreeMap::new();
    for b in binds {
        let (var, element) = b
            .split_once('=')
            .ok_or_else(|| format!("malformed binding `{b}` (expected VAR=ELEMENT)"))?;
        let idx = m
            .element_index(element)
            .ok_or_else(|| format!("unknown element `{element}` in binding `{b}`"))?;
        env = env.bind(var, idx);
        shown.insert(var.to_string(), element.to_string());
    }
    Ok((env, shown))
}

fn cmd_eval(
    model_path: &Path,
    world: &str,
    polarity: Polarity,
    semantics: SemanticsArg,
    binds: &[String],
    text: &str,
) -> Result<Report, String> {
    let model = load_model(&read_file(model_path)?).map_err(|e| e.to_string())?;
    let w = model
        .world_index(world)
        .ok_or_else(|| format!("unknown world `{world}`"))?;
    let f = parse_formula(text, model.signature()).map_err(|e| e.to_string())?;
    let (env, bindings) = parse_bindings(&model, binds)?;
    let value = match semantics {
        SemanticsArg::Qbk => evaluate(&model, w, &f, polarity, &env).map_err(|e| e.to_string())?,
        SemanticsArg::Nelson => {
            let nelson_model = NelsonModel::new(model.clone()).map_err(|e| e.to_string())?;
            let nelson_formula = NelsonFormula::new(f.clone()).map_err(|e| e.to_string())?;
            nelson_evaluate(&nelson_model, w, &nelson_formula, polarity, &env)
                .map_err(|e| e.to_string())?
        }
    };
    let (verdict, sentence) = match (polarity, value) {
        (Polarity::Plus, true) => ("verified", format!("verified at world `{world}`")),
        (Polarity::Plus, false) => ("not-verified", format!("not verified at world `{world}`")),
        (Polarity::Minus, true) => ("falsified", format!("falsified at world `{world}`")),
        (Polarity::Minus, false) => ("not-falsified", format!("not falsified at world `{world}`")),
    };
    let report = if value {
        Report::affirmative(verdict)
    } else {
        Report::negative(verdict)
    };
    Ok(report
        .line(format!("{}: {sentence}", print_formula(&f)))
        .witness(json!({
            "formula": print_formula(&f),
            "world": world,
            "polarity": if polarity == Polarity::Plus { "+" } else { "-" },
            "value": value,
            "bindings": bindings,
        })))
}

fn cmd_validate_model(class_name: &str, path: &Path) -> Result<Report, String> {
    let class = class_by_name(class_name)?;
    let model = load_model(&read_file(path)?).map_err(|e| e.to_string())?;
    let violations = validate_model(&model, class);
    if violations.is_empty() {
        return Ok(Report::affirmative("valid")
            .line(format!("model satisfies class {class}"))
            .witness(json!({ "class": class_name, "violations": [] })));
    }
    let printed: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    let mut report = Report::negative("invalid").line(format!(
        "model violates class {class} ({} problem{})",
        printed.len(),
        if printed.len() == 1 { "" } else { "s" }
    ));
    for v in &printed {
        report = report.line(format!("  {v}"));
    }
    Ok(report.witness(json!({ "class": class_name, "violations": printed })))
}

fn cmd_check_proof(path: &Path) -> Result<Report, String> {
    let derivation = load_derivation(&read_file(path)?).map_err(|e| e.to_string())?;
    let store = LemmaStore::standard();
    let outcome = check_derivation(&derivation, &store);
    if outcome.valid {
        let conclusion = derivation
            .conclusion()
            .map(print_formula)
            .unwrap_or_else(|| "(empty)".to_string());
        return Ok(Report::affirmative("valid")
            .line(format!(
                "valid {} derivation, {} line{}, conclusion: {conclusion}",
                derivation.mode,
                derivation.lines.len(),
                if derivation.lines.len() == 1 { "" } else { "s" }
            ))
            .witness(json!({ "conclusion": conclusion, "lines": derivation.lines.len() })));
    }
    let mut problems = outcome.problems.clone();
    for line in &outcome.lines {
        if !line.ok {
            problems.push(format!("line {}: {}", line.index, line.detail));
        }
    }
    let mut report = Report::negative("invalid").line("invalid derivation".to_string());
    for p in &problems {
        report = report.line(format!("  {p}"));
    }
    Ok(report.witness(json!({ "problems": problems })))
}

fn union_signature(sigs: &[Signature]) -> Result<Signature, String> {
    let mut predicates: BTreeMap<String, usize> = BTreeMap::new();
    for s in sigs {
        for (name, arity) in s.predicates() {
            if let Some(&seen) = predicates.get(name) {
                if seen != arity {
                    return Err(format!(
                        "predicate `{name}` is used with arities {seen} and {arity}"
                    ));
                }
            }
            predicates.insert(name.to_string(), arity);
        }
    }
    Signature::new(predicates, []).map_err(|e| e.to_string())
}

fn cmd_search(
    gamma: &[String],
    delta: &[String],
    class_name: &str,
    max_worlds: usize,
    max_domain: usize,
    cap: Option<u64>,
    workers: usize,
) -> Result<Report, String> {
    let class = class_by_name(class_name)?;
    let mut premises = Vec::new();
    let mut conclusions = Vec::new();
    let mut sigs = Vec::new();
    for text in gamma {
        let (f, sig) = infer(text)?;
        premises.push(f);
        sigs.push(sig);
    }
    for text in delta {
        let (f, sig) = infer(text)?;
        conclusions.push(f);
        sigs.push(sig);
    }
    let sig = union_signature(&sigs)?;
    let mut bounds = Bounds::new(max_worlds, max_domain);
    if let Some(cap) = cap {
        bounds = bounds.with_cap(cap);
    }
    let found = search_countermodel(&sig, &premises, &conclusions, &bounds, class, workers)
        .map_err(|e| e.to_string())?;
    match found {
        None => Ok(Report::affirmative("no-countermodel")
            .line(format!(
                "no countermodel within bounds (worlds <= {max_worlds}, domain <= {max_domain}, \
                 class {class})"
            ))
            .witness(json!({
                "max_worlds": max_worlds,
                "max_domain": max_domain,
                "class": class_name,
            }))),
        Some(counter) => {
            let world = counter.model.worlds()[counter.world].clone();
            let assignment: BTreeMap<String, String> = counter
                .assignment
                .iter()
                .map(|(var, &e)| (var.clone(), counter.model.individuals()[e].clone()))
                .collect();
            let document = dump_model(&counter.model);
            let mut report =
                Report::negative("countermodel").line(format!("countermodel found at world `{world}`"));
            if !assignment.is_empty() {
                let shown: Vec<String> =
                    assignment.iter().map(|(v, e)| format!("{v} = {e}")).collect();
                report = report.line(format!("assignment: {}", shown.join(", ")));
            }
            report = report.line(document.clone());
            let model_value: Value =
                serde_json::from_str(&document).expect("dumped model is valid JSON");
            Ok(report.witness(json!({
                "world": world,
                "assignment": assignment,
                "model": model_value,
            })))
        }
    }
}

fn cmd_fixtures(name: &str, out: &Path) -> Result<Report, String> {
    let (file_name, document, mut notes) = match name {
        "gap-point" => {
            let fixture = gap_point_fixture();
            let notes: Vec<String> = std::iter::once(format!(
                "formula: {}",
                print_formula(fixture.formula.formula())
            ))
            .chain(fixture.expectations.iter().map(|e| e.to_string()))
            .collect();
            (
                "gap_point.json",
                dump_model(fixture.model.model()),
                notes,
            )
        }
        "converse-barcan" => (
            "converse_barcan.json",
            dump_derivation(&qbk::calculus::fixture_converse_barcan()),
            Vec::new(),
        ),
        "necessitation" => (
            "necessitation.json",
            dump_derivation(&qbk::calculus::fixture_necessitation()),
            Vec::new(),
        ),
        "barcan-interderivation" => (
            "barcan_interderivation.json",
            dump_derivation(&qbk::calculus::fixture_barcan_interderivation()),
            Vec::new(),
        ),
        other => {
            return Err(format!(
                "unknown fixture `{other}` (expected one of gap-point, converse-barcan, \
                 necessitation, barcan-interderivation)"
            ))
        }
    };
    std::fs::create_dir_all(out)
        .map_err(|e| format!("cannot create `{}`: {e}", out.display()))?;
    let path = out.join(file_name);
    let mut contents = document;
    contents.push('\n');
    std::fs::write(&path, contents).map_err(|e| format!("cannot write `{}`: {e}", path.display()))?;
    let mut report = Report::affirmative("written").line(format!("wrote {}", path.display()));
    let witness_notes = notes.clone();
    for note in notes.drain(..) {
        report = report.note(note);
    }
    Ok(report.witness(json!({
        "path": path.display().to_string(),
        "notes": witness_notes,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarity_flags_parse() {
        assert_eq!(parse_polarity("+"), Ok(Polarity::Plus));
        assert_eq!(parse_polarity("minus"), Ok(Polarity::Minus));
        assert!(parse_polarity("both").is_err());
    }

    #[test]
    fn signature_union_rejects_arity_clashes() {
        let a = Signature::new([("P".to_string(), 1)], []).unwrap();
        let b = Signature::new([("P".to_string(), 2)], []).unwrap();
        let err = union_signature(&[a, b]).unwrap_err();
        assert!(err.contains("arities 1 and 2"), "{err}");
    }

    #[test]
    fn cli_arguments_are_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
