//! `pdlfix`: classify, solve and check PDL fixed-point equations.

use std::cell::Cell;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pdlfix_core::certify::{check_certificate, generate_certificate, Certificate};
use pdlfix_core::fuzz::{self, sub_seed, FuzzParams, Scope};
use pdlfix_core::hierarchy::{classify_with, Adjustment, Classification, ClassifyOptions, ClassifyResult, Kind};
use pdlfix_core::semantics::{KripkeModel, ModelGenParams};
use pdlfix_core::synthesis::{solve_with, Strategy, SynthesisError};
use pdlfix_core::{parse_formula, Formula, VarName};

const SEED_ENV: &str = "PDLFIX_SEED";

#[derive(Parser)]
#[command(name = "pdlfix", version, about = "Fixed-point equations x = phi(x) in PDL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the hierarchy class and components of a formula.
    Classify(ClassifyArgs),
    /// Build the explicit solution of x = phi(x).
    Solve(SolveArgs),
    /// Check a candidate solution on given or random models.
    Check(CheckArgs),
    /// Run the rule-soundness and solution properties on random instances.
    Fuzz(FuzzArgs),
    /// Replay a certificate file.
    VerifyCert(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Emit a single JSON document on stdout.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long = "var", value_name = "X")]
    var: String,
    /// Disable commuted matches.
    #[arg(long)]
    strict: bool,
    /// Formula text, or @path to read it from a file.
    formula: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long = "var", value_name = "X")]
    var: String,
    #[arg(long, default_value = "duality", value_parser = ["duality", "literal"])]
    strategy: String,
    #[arg(long)]
    strict: bool,
    /// Generate, check and write a certificate.
    #[arg(long)]
    certify: bool,
    #[arg(long, value_name = "PATH", default_value = "pdlfix-certificate.json")]
    cert_out: PathBuf,
    formula: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long = "var", value_name = "X")]
    var: String,
    #[arg(long)]
    equation: String,
    #[arg(long)]
    candidate: String,
    #[arg(long, value_name = "FILE", conflicts_with = "random", required_unless_present = "random")]
    model: Option<PathBuf>,
    /// Number of random models to try.
    #[arg(long, value_name = "N")]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest random model.
    #[arg(long, default_value_t = 5)]
    max_worlds: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value = "both", value_parser = ["rules", "solutions", "both"])]
    scope: String,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Random models per instance.
    #[arg(long, default_value_t = 50)]
    models: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    max_pairs: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 5)]
    max_worlds: usize,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    certificate: PathBuf,
    #[command(flatten)]
    common: Common,
}

/// Failure with its exit code.
enum Failure {
    Counterexample,
    Input(String),
    Strategy(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Counterexample => 1,
            Failure::Input(_) => 2,
            Failure::Strategy(_) => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

struct Out {
    json: bool,
    emitted: Cell<bool>,
}

impl Out {
    fn human(&self, line: impl AsRef<str>) {
        if !self.json {
            println!("{}", line.as_ref());
        }
    }

    fn new(json: bool) -> Self {
        Out { json, emitted: Cell::new(false) }
    }

    fn document(&self, v: &Value) {
        if self.json && !self.emitted.replace(true) {
            println!("{}", serde_json::to_string_pretty(v).expect("json"));
        }
    }
}

fn read_formula_arg(arg: &str) -> Result<Formula, Failure> {
    let (text, origin) = match arg.strip_prefix('@') {
        Some(path) => (
            std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {path}: {e}")))?,
            path.to_string(),
        ),
        None => (arg.to_string(), "formula".to_string()),
    };
    parse_formula(text.trim()).map_err(|e| Failure::Input(format!("{origin}:{e}")))
}

fn var_arg(name: &str) -> Result<VarName, Failure> {
    VarName::new(name).map_err(|e| Failure::Input(e.to_string()))
}

fn effective_seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Input(format!("{SEED_ENV}={v} is not a 64-bit integer"))),
        Err(_) => Ok(flag),
    }
}

fn describe_classification(out: &Out, c: &ClassifyResult) {
    let d = &c.decomposition;
    let box_word = match d.kind() {
        Kind::Pi => "box",
        Kind::Sigma => "diamond",
    };
    out.human(format!(
        "{} level {} (n = {}, {})",
        d.kind(),
        d.level(),
        d.n(),
        if d.leading_modality() { format!("leading {box_word}") } else { format!("no leading {box_word}") }
    ));
    if d.kind() == Kind::Sigma {
        out.human("components of the negated formula:");
    }
    for (i, pair) in d.pairs().iter().enumerate() {
        let idx = i + 1;
        let mut line = format!("  pair {idx}:");
        if let Some(a) = &pair.alpha {
            line.push_str(&format!(" alpha = {a};"));
        }
        line.push_str(&format!(" phi = {}", pair.phi));
        if c.phi_padded(idx) {
            line.push_str(" (padded)");
        }
        line.push_str(&format!("; psi = {}", pair.psi));
        if c.psi_padded(idx) {
            line.push_str(" (padded)");
        }
        out.human(line);
    }
    let commuted: Vec<String> = c
        .padding
        .iter()
        .filter_map(|a| match a {
            Adjustment::Commuted { pair, commuted } => Some(format!("{commuted:?} at pair {pair}").to_lowercase()),
            Adjustment::Padded { .. } => None,
        })
        .collect();
    if !commuted.is_empty() {
        out.human(format!("  commuted: {}", commuted.join(", ")));
    }
}

fn options(strict: bool) -> ClassifyOptions {
    if strict {
        ClassifyOptions::strict()
    } else {
        ClassifyOptions::default()
    }
}

fn cmd_classify(a: &ClassifyArgs, out: &Out) -> Outcome {
    let x = var_arg(&a.var)?;
    let f = read_formula_arg(&a.formula)?;
    match classify_with(&f, &x, options(a.strict)) {
        Ok(Classification::XFree) => {
            out.human(format!("x-free: {x} does not occur"));
            out.document(&json!({"result": "xfree", "x": x}));
            Ok(())
        }
        Ok(Classification::Classified(c)) => {
            describe_classification(out, &c);
            let mut doc = serde_json::to_value(&c).expect("json");
            doc["result"] = json!("classified");
            doc["level"] = json!(c.decomposition.level());
            doc["n"] = json!(c.decomposition.n());
            out.document(&doc);
            Ok(())
        }
        Err(e) => {
            out.document(&json!({
                "result": "notInClass",
                "pi": {"path": e.pi.path, "reason": e.pi.reason},
                "sigma": {"path": e.sigma.path, "reason": e.sigma.reason},
            }));
            Err(Failure::Input(format!("not in class: {e}")))
        }
    }
}

fn write_certificate(path: &Path, cert: &Certificate) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(cert).expect("json");
    std::fs::write(path, text + "\n").map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_solve(a: &SolveArgs, out: &Out) -> Outcome {
    let x = var_arg(&a.var)?;
    let f = read_formula_arg(&a.formula)?;
    let strategy: Strategy = a.strategy.parse().map_err(Failure::Input)?;
    let sol = solve_with(&f, &x, strategy, options(a.strict)).map_err(|e| match e {
        SynthesisError::NotInClass(n) => Failure::Input(format!("not in class: {n}")),
        other => Failure::Input(other.to_string()),
    })?;
    let mut doc = serde_json::to_value(&sol).expect("json");
    out.human(sol.lambda.to_string());
    if a.certify {
        let cert = generate_certificate(&sol).map_err(|e| Failure::Strategy(format!("certificate: {e}")))?;
        let report = check_certificate(&cert);
        if !report.passed {
            return Err(Failure::Strategy(format!(
                "generated certificate does not replay: {}",
                report.error.unwrap_or_default()
            )));
        }
        write_certificate(&a.cert_out, &cert)?;
        out.human(format!(
            "certificate ({} steps, {}): {}",
            cert.steps.len(),
            cert.grouping_text(),
            a.cert_out.display()
        ));
        doc["certificate"] = json!({
            "path": a.cert_out,
            "steps": cert.steps.len(),
            "grouping": cert.grouping_text(),
        });
    }
    out.document(&doc);
    Ok(())
}

fn cmd_check(a: &CheckArgs, out: &Out) -> Outcome {
    let x = var_arg(&a.var)?;
    let equation = read_formula_arg(&a.equation)?;
    let candidate = read_formula_arg(&a.candidate)?;
    if !candidate.is_x_free(&x) {
        return Err(Failure::Input(format!("candidate mentions {x}")));
    }
    let models: Vec<(Option<u64>, KripkeModel)> = match (&a.model, a.random) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
            let m =
                KripkeModel::from_json_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            vec![(None, m)]
        }
        (None, Some(n)) => {
            if a.max_worlds == 0 {
                return Err(Failure::Input("--max-worlds must be at least 1".into()));
            }
            let seed = effective_seed(a.seed)?;
            (0..n)
                .map(|i| {
                    let s = sub_seed(seed, i as u64);
                    let worlds = 1 + (s % a.max_worlds as u64) as usize;
                    let params = ModelGenParams::covering([&equation, &candidate], worlds, s);
                    KripkeModel::random(&params).map(|m| (Some(s), m))
                })
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::Input(e.to_string()))?
        }
        (None, None) => return Err(Failure::Input("give --model or --random".into())),
    };
    for (i, (seed, m)) in models.iter().enumerate() {
        let report = m.check_solution_on(&x, &equation, &candidate).map_err(|e| Failure::Input(e.to_string()))?;
        if let Some(c) = report.counterexample {
            out.human(format!(
                "counterexample on model {i} at world {}: candidate is {}, instance is {}",
                c.world, c.left, c.right
            ));
            if let Some(s) = seed {
                out.human(format!("model seed {s}"));
            }
            out.human(serde_json::to_string_pretty(&m.to_json()).expect("json"));
            out.document(&json!({
                "passed": false,
                "modelsChecked": i + 1,
                "equation": equation,
                "candidate": candidate,
                "counterexample": {
                    "modelIndex": i,
                    "modelSeed": seed,
                    "world": c.world,
                    "candidate": c.left,
                    "instance": c.right,
                    "model": m.to_json(),
                },
            }));
            return Err(Failure::Counterexample);
        }
    }
    out.human(format!("pass: {} model(s)", models.len()));
    out.document(&json!({
        "passed": true,
        "modelsChecked": models.len(),
        "equation": equation,
        "candidate": candidate,
    }));
    Ok(())
}

fn cmd_fuzz(a: &FuzzArgs, out: &Out) -> Outcome {
    let seed = effective_seed(a.seed)?;
    let scope: Scope = a.scope.parse().map_err(Failure::Input)?;
    let mut params = FuzzParams {
        trials: a.trials,
        model_trials_per_instance: a.models,
        max_pairs: a.max_pairs,
        component_depth: a.depth,
        seed,
        scope,
        parallel: !a.serial,
        ..FuzzParams::default()
    };
    params.model.world_count = a.max_worlds;
    let command = format!(
        "pdlfix fuzz --scope {} --trials {} --models {} --seed {} --max-pairs {} --depth {} --max-worlds {}",
        a.scope, a.trials, a.models, seed, a.max_pairs, a.depth, a.max_worlds
    );
    let report = fuzz::run(&params, command).map_err(|e| Failure::Input(e.to_string()))?;
    out.human(&report.command);
    for t in &report.rules {
        out.human(format!(
            "  {:<9} {:>5} instances {:>7} checks {:>4} counterexamples",
            t.rule, t.instances, t.checks, t.counterexamples
        ));
    }
    if let Some(s) = &report.solutions {
        let schemas: Vec<String> = s.by_schema.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.human(format!(
            "  solutions: {} decompositions ({}), {} checks, {} counterexamples, {} certificate failures",
            s.decompositions,
            schemas.join(" "),
            s.checks,
            s.counterexamples,
            s.certificate_failures
        ));
    }
    if let Some(c) = &report.first_counterexample {
        out.human(format!("first failure: {} (trial {}, trial seed {})", c.property, c.trial, c.trial_seed));
        out.human(serde_json::to_string_pretty(c).expect("json"));
    }
    out.human(format!(
        "{}: {} checks, {} failures, seed {}, {:.2}s",
        if report.passed() { "pass" } else { "FAIL" },
        report.checks,
        report.failures,
        report.seed,
        report.wall_time_seconds
    ));
    out.document(&serde_json::to_value(&report).expect("json"));
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Counterexample)
    }
}

fn cmd_verify(a: &VerifyArgs, out: &Out) -> Outcome {
    let text = std::fs::read_to_string(&a.certificate)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", a.certificate.display())))?;
    let cert: Certificate = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: malformed certificate: {e}", a.certificate.display())))?;
    let report = check_certificate(&cert);
    if report.passed {
        out.human(format!("ok: {} steps replayed", report.steps_checked));
    } else {
        match report.failed_step {
            Some(i) => out.human(format!("FAIL at step {i}: {}", report.error.clone().unwrap_or_default())),
            None => out.human(format!("FAIL: {}", report.error.clone().unwrap_or_default())),
        }
    }
    out.document(&serde_json::to_value(&report).expect("json"));
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Counterexample)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (out, result) = match &cli.command {
        Command::Classify(a) => {
            let out = Out::new(a.common.json);
            let r = cmd_classify(a, &out);
            (out, r)
        }
        Command::Solve(a) => {
            let out = Out::new(a.common.json);
            let r = cmd_solve(a, &out);
            (out, r)
        }
        Command::Check(a) => {
            let out = Out::new(a.common.json);
            let r = cmd_check(a, &out);
            (out, r)
        }
        Command::Fuzz(a) => {
            let out = Out::new(a.common.json);
            let r = cmd_fuzz(a, &out);
            (out, r)
        }
        Command::VerifyCert(a) => {
            let out = Out::new(a.common.json);
            let r = cmd_verify(a, &out);
            (out, r)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if let Failure::Input(msg) | Failure::Strategy(msg) = &failure {
                eprintln!("pdlfix: {msg}");
                out.document(&json!({"error": msg, "exitCode": failure.code()}));
            }
            ExitCode::from(failure.code())
        }
    }
}
