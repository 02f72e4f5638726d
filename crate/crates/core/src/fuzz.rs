//! Random instances and the property harness behind `pdlfix fuzz`.
//!
//! Every trial gets its own seed derived from the run seed and the trial
//! index, so trials can run in any order (or in parallel) and any failure can
//! be replayed from the printed seed alone.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::is_formula_meta;
use crate::certify::{check_certificate, generate_certificate, instantiate, Bindings, Rule, SideCondition, Term};
use crate::hierarchy::{Adjustment, ClassifyResult, Connective, Decomposition, Kind, Pair};
use crate::semantics::{Equivalence, KripkeModel, ModelGenParams};
use crate::syntax::{Formula, Program, VarName};
use crate::synthesis::{solve, Schema, Strategy};

/// splitmix64 over `seed` and `index`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Names random terms are drawn from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub atoms: Vec<String>,
    pub programs: Vec<String>,
    pub vars: Vec<VarName>,
}

impl Vocabulary {
    pub fn of(params: &ModelGenParams) -> Self {
        Vocabulary {
            atoms: params.atoms.clone(),
            programs: params.programs.clone(),
            vars: params.vars.iter().filter_map(|v| VarName::new(v.clone()).ok()).collect(),
        }
    }

    fn atom(&self, rng: &mut impl Rng) -> String {
        self.atoms.choose(rng).cloned().unwrap_or_else(|| "p".into())
    }

    fn program(&self, rng: &mut impl Rng) -> String {
        self.programs.choose(rng).cloned().unwrap_or_else(|| "a".into())
    }
}

/// A formula of modal/connective depth at most `depth`.
pub fn random_formula(rng: &mut impl Rng, vocab: &Vocabulary, depth: usize, with_vars: bool) -> Formula {
    let leaf_kinds = if with_vars && !vocab.vars.is_empty() { 5 } else { 4 };
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..leaf_kinds) {
            0 | 1 => Formula::atom(vocab.atom(rng)),
            2 => Formula::neg_atom(vocab.atom(rng)),
            3 => {
                if rng.gen_bool(0.5) {
                    Formula::Top
                } else {
                    Formula::Bot
                }
            }
            _ => Formula::var(vocab.vars.choose(rng).expect("nonempty")),
        };
    }
    let sub = |rng: &mut _| random_formula(rng, vocab, depth - 1, with_vars);
    match rng.gen_range(0..4) {
        0 => Formula::and(sub(rng), sub(rng)),
        1 => Formula::or(sub(rng), sub(rng)),
        2 => Formula::boxed(random_program(rng, vocab, depth - 1, with_vars), sub(rng)),
        _ => Formula::diamond(random_program(rng, vocab, depth - 1, with_vars), sub(rng)),
    }
}

pub fn random_program(rng: &mut impl Rng, vocab: &Vocabulary, depth: usize, with_vars: bool) -> Program {
    if depth == 0 || rng.gen_bool(0.4) {
        return if rng.gen_bool(0.8) {
            Program::atomic(vocab.program(rng))
        } else {
            Program::test(random_formula(rng, vocab, 0, with_vars))
        };
    }
    let sub = |rng: &mut _| random_program(rng, vocab, depth - 1, with_vars);
    match rng.gen_range(0..4) {
        0 => Program::seq(sub(rng), sub(rng)),
        1 => Program::choice(sub(rng), sub(rng)),
        2 => Program::star(sub(rng)),
        _ => Program::test(random_formula(rng, vocab, depth - 1, with_vars)),
    }
}

/// Programs for decompositions: atomic, tested, starred or short compounds.
fn template_program(rng: &mut impl Rng, vocab: &Vocabulary) -> Program {
    let atomic = |rng: &mut _| Program::atomic(vocab.program(rng));
    match rng.gen_range(0..6) {
        0 | 1 => atomic(rng),
        2 => Program::star(atomic(rng)),
        3 => Program::seq(Program::test(Formula::atom(vocab.atom(rng))), atomic(rng)),
        4 => Program::choice(atomic(rng), atomic(rng)),
        _ => Program::seq(atomic(rng), Program::star(atomic(rng))),
    }
}

/// A decomposition with variable-free components.
pub fn random_decomposition(
    rng: &mut impl Rng,
    vocab: &Vocabulary,
    x: &VarName,
    kind: Kind,
    leading_modality: bool,
    max_pairs: usize,
    depth: usize,
) -> Decomposition {
    let n = rng.gen_range(1..=max_pairs.max(1));
    let pairs = (0..n)
        .map(|i| Pair {
            phi: random_formula(rng, vocab, depth, false),
            psi: random_formula(rng, vocab, depth, false),
            alpha: (i > 0 || leading_modality).then(|| template_program(rng, vocab)),
        })
        .collect();
    Decomposition::new(kind, x.clone(), leading_modality, pairs).expect("generated components are x-free")
}

/// A decomposition plus random padding and commutation, so that
/// `reconstruct` yields a compact surface formula.
pub fn random_classification(
    rng: &mut impl Rng,
    vocab: &Vocabulary,
    x: &VarName,
    kind: Kind,
    leading_modality: bool,
    max_pairs: usize,
    depth: usize,
) -> ClassifyResult {
    let d = random_decomposition(rng, vocab, x, kind, leading_modality, max_pairs, depth);
    let mut padding = Vec::new();
    let mut pairs = Vec::new();
    for (i, pair) in d.pairs().iter().enumerate() {
        let idx = i + 1;
        let mut pair = pair.clone();
        // Padding both slots of an unboxed first layer would read as a leading box.
        let may_pad_both = i > 0 || leading_modality || d.n() == 1;
        let pad_phi = rng.gen_bool(0.25);
        let pad_psi = rng.gen_bool(0.25) && (may_pad_both || !pad_phi);
        if pad_phi {
            pair.phi = Formula::Bot;
            padding.push(Adjustment::Padded { pair: idx, inserted: Formula::Bot });
        } else if rng.gen_bool(0.2) {
            padding.push(Adjustment::Commuted { pair: idx, commuted: Connective::Or });
        }
        if pad_psi {
            pair.psi = Formula::Top;
            padding.push(Adjustment::Padded { pair: idx, inserted: Formula::Top });
        } else if rng.gen_bool(0.2) {
            padding.push(Adjustment::Commuted { pair: idx, commuted: Connective::And });
        }
        pairs.push(pair);
    }
    let decomposition = Decomposition::new(kind, x.clone(), leading_modality, pairs).expect("still x-free");
    ClassifyResult { decomposition, padding }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Rules,
    Solutions,
    #[default]
    Both,
}

impl std::str::FromStr for Scope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rules" => Ok(Scope::Rules),
            "solutions" => Ok(Scope::Solutions),
            "both" => Ok(Scope::Both),
            other => Err(format!("unknown scope `{other}` (expected rules, solutions or both)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FuzzParams {
    pub trials: usize,
    pub model_trials_per_instance: usize,
    pub max_pairs: usize,
    pub component_depth: usize,
    /// Vocabulary and probabilities; `world_count` is the upper bound and
    /// `seed` is replaced per model.
    pub model: ModelGenParams,
    pub seed: u64,
    pub scope: Scope,
    pub parallel: bool,
}

impl Default for FuzzParams {
    fn default() -> Self {
        FuzzParams {
            trials: 200,
            model_trials_per_instance: 50,
            max_pairs: 3,
            component_depth: 2,
            model: ModelGenParams {
                world_count: 5,
                atoms: vec!["p".into(), "q".into(), "r".into()],
                vars: vec!["X".into()],
                programs: vec!["a".into(), "b".into()],
                edge_probability: 0.4,
                atom_probability: 0.5,
                seed: 0,
            },
            seed: 0,
            scope: Scope::Both,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FuzzError {
    #[error("invalid fuzz parameters: {0}")]
    InvalidParams(String),
}

impl FuzzParams {
    pub fn validate(&self) -> Result<(), FuzzError> {
        let bad = |m: &str| Err(FuzzError::InvalidParams(m.into()));
        if self.trials == 0 || self.model_trials_per_instance == 0 {
            return bad("trial counts must be positive");
        }
        if self.max_pairs == 0 || self.component_depth == 0 {
            return bad("bounds must be at least 1");
        }
        if self.model.vars.is_empty() {
            return bad("at least one variable is needed");
        }
        self.model.validate().map_err(|e| FuzzError::InvalidParams(e.to_string()))
    }

    fn model(&self, seed: u64) -> KripkeModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ModelGenParams {
            world_count: rng.gen_range(1..=self.model.world_count),
            seed: rng.gen(),
            ..self.model.clone()
        };
        KripkeModel::random(&params).expect("validated parameters")
    }

    fn x(&self) -> VarName {
        VarName::new(self.model.vars[0].clone()).expect("validated variable name")
    }
}

/// A failing check, with enough to replay it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FuzzCounterexample {
    pub property: String,
    pub trial: usize,
    pub trial_seed: u64,
    pub formulae: BTreeMap<String, String>,
    pub model: serde_json::Value,
    pub world: Option<String>,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RuleTally {
    pub rule: String,
    pub instances: usize,
    pub checks: usize,
    pub counterexamples: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionTally {
    pub decompositions: usize,
    pub by_schema: BTreeMap<String, usize>,
    pub checks: usize,
    pub counterexamples: usize,
    pub certificates_checked: usize,
    pub certificate_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub params: FuzzParams,
    pub checks: usize,
    pub failures: usize,
    pub rules: Vec<RuleTally>,
    pub solutions: Option<SolutionTally>,
    pub first_counterexample: Option<FuzzCounterexample>,
    pub wall_time_seconds: f64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct RuleTrial {
    checks: usize,
    failures: usize,
    first: Option<FuzzCounterexample>,
}

fn random_bindings(rng: &mut impl Rng, rule: &Rule, vocab: &Vocabulary, depth: usize) -> Bindings {
    let mut b = Bindings::new();
    for m in rule.metas() {
        let term = if is_formula_meta(&m) {
            let with_vars = rule.side != SideCondition::VariableFree(static_name(&m));
            Term::Formula(random_formula(rng, vocab, depth, with_vars))
        } else {
            Term::Program(random_program(rng, vocab, depth, true))
        };
        b.insert(m, term);
    }
    b
}

fn static_name(m: &str) -> &'static str {
    crate::certify::FORMULA_METAS.into_iter().find(|n| *n == m).unwrap_or("")
}

fn rule_trial(params: &FuzzParams, rule: &Rule, trial: usize, trial_seed: u64) -> RuleTrial {
    let vocab = Vocabulary::of(&params.model);
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let b = random_bindings(&mut rng, rule, &vocab, params.component_depth);
    let lhs = instantiate(&rule.lhs, &b).expect("all metavariables bound");
    let rhs = instantiate(&rule.rhs, &b).expect("all metavariables bound");
    let mut out = RuleTrial { checks: 0, failures: 0, first: None };
    for j in 0..params.model_trials_per_instance {
        let m = params.model(sub_seed(trial_seed, j as u64));
        out.checks += 1;
        if let Equivalence::Counterexample(c) = m.equivalent_on(&lhs, &rhs) {
            out.failures += 1;
            out.first.get_or_insert_with(|| FuzzCounterexample {
                property: format!("rule {}", rule.label),
                trial,
                trial_seed,
                formulae: BTreeMap::from([("lhs".into(), lhs.to_string()), ("rhs".into(), rhs.to_string())]),
                model: m.to_json(),
                world: Some(c.world),
                detail: None,
            });
        }
    }
    out
}

/// Checks both sides of each rule agree on random models.
pub fn validate_rules(params: &FuzzParams, rules: &[Rule]) -> (Vec<RuleTally>, Option<FuzzCounterexample>) {
    let mut tallies = Vec::new();
    let mut first = None;
    for (r, rule) in rules.iter().enumerate() {
        let rule_seed = sub_seed(params.seed, 1_000_000 + r as u64);
        let run = |t: usize| rule_trial(params, rule, t, sub_seed(rule_seed, t as u64));
        let trials: Vec<RuleTrial> = if params.parallel {
            (0..params.trials).into_par_iter().map(run).collect()
        } else {
            (0..params.trials).map(run).collect()
        };
        let mut tally = RuleTally { rule: rule.label.clone(), instances: trials.len(), ..Default::default() };
        for t in trials {
            tally.checks += t.checks;
            tally.counterexamples += t.failures;
            if first.is_none() {
                first = t.first;
            }
        }
        tallies.push(tally);
    }
    (tallies, first)
}

struct SolutionTrial {
    schema: Schema,
    checks: usize,
    failures: usize,
    certificate_failed: bool,
    first: Option<FuzzCounterexample>,
}

/// The four cases in turn: Π even, Π odd, Σ even, Σ odd.
pub fn case_for_trial(trial: usize) -> (Kind, bool) {
    match trial % 4 {
        0 => (Kind::Pi, false),
        1 => (Kind::Pi, true),
        2 => (Kind::Sigma, false),
        _ => (Kind::Sigma, true),
    }
}

fn solution_trial(params: &FuzzParams, trial: usize, trial_seed: u64) -> SolutionTrial {
    let vocab = Vocabulary::of(&params.model);
    let x = params.x();
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let (kind, leading) = case_for_trial(trial);
    let c = random_classification(&mut rng, &vocab, &x, kind, leading, params.max_pairs, params.component_depth);
    let equation = c.reconstruct();
    let counterexample = |detail: String, lambda: Option<&Formula>, m: Option<&KripkeModel>, world| {
        let mut formulae = BTreeMap::from([("equation".to_string(), equation.to_string())]);
        if let Some(l) = lambda {
            formulae.insert("lambda".into(), l.to_string());
        }
        FuzzCounterexample {
            property: "solution".into(),
            trial,
            trial_seed,
            formulae,
            model: m.map(KripkeModel::to_json).unwrap_or(serde_json::Value::Null),
            world,
            detail: Some(detail),
        }
    };
    let sol = match solve(&equation, &x, Strategy::Duality) {
        Ok(s) => s,
        Err(e) => {
            return SolutionTrial {
                schema: Schema::XFree,
                checks: 1,
                failures: 1,
                certificate_failed: false,
                first: Some(counterexample(format!("solve failed: {e}"), None, None, None)),
            }
        }
    };
    let mut out = SolutionTrial { schema: sol.schema, checks: 0, failures: 0, certificate_failed: false, first: None };
    for j in 0..params.model_trials_per_instance {
        let m = params.model(sub_seed(trial_seed, j as u64));
        out.checks += 1;
        let report = m.check_solution_on(&x, &equation, &sol.lambda).expect("lambda is x-free");
        if let Some(c) = report.counterexample {
            out.failures += 1;
            if out.first.is_none() {
                out.first = Some(counterexample(
                    "lambda differs from its instance".into(),
                    Some(&sol.lambda),
                    Some(&m),
                    Some(c.world),
                ));
            }
        }
    }
    let cert_problem = match generate_certificate(&sol) {
        Ok(cert) => {
            let r = check_certificate(&cert);
            (!r.passed).then(|| format!("certificate rejected: {}", r.error.unwrap_or_default()))
        }
        Err(e) => Some(format!("certificate generation failed: {e}")),
    };
    if let Some(detail) = cert_problem {
        out.certificate_failed = true;
        if out.first.is_none() {
            out.first = Some(counterexample(detail, Some(&sol.lambda), None, None));
        }
    }
    out
}

/// The central property: every generated equation is solved by its λ, and
/// the λ comes with a valid certificate.
pub fn check_solutions(params: &FuzzParams) -> (SolutionTally, Option<FuzzCounterexample>) {
    let base = sub_seed(params.seed, 2_000_000);
    let run = |t: usize| solution_trial(params, t, sub_seed(base, t as u64));
    let trials: Vec<SolutionTrial> = if params.parallel {
        (0..params.trials).into_par_iter().map(run).collect()
    } else {
        (0..params.trials).map(run).collect()
    };
    let mut tally = SolutionTally::default();
    let mut first = None;
    for t in trials {
        tally.decompositions += 1;
        *tally.by_schema.entry(t.schema.to_string()).or_default() += 1;
        tally.checks += t.checks;
        tally.counterexamples += t.failures;
        tally.certificates_checked += 1;
        tally.certificate_failures += usize::from(t.certificate_failed);
        if first.is_none() {
            first = t.first;
        }
    }
    (tally, first)
}

/// Runs the selected properties.
pub fn run(params: &FuzzParams, command: impl Into<String>) -> Result<RunReport, FuzzError> {
    params.validate()?;
    let start = Instant::now();
    let mut report = RunReport {
        command: command.into(),
        seed: params.seed,
        params: params.clone(),
        checks: 0,
        failures: 0,
        rules: Vec::new(),
        solutions: None,
        first_counterexample: None,
        wall_time_seconds: 0.0,
    };
    if matches!(params.scope, Scope::Rules | Scope::Both) {
        let (tallies, first) = validate_rules(params, &Rule::standard());
        report.checks += tallies.iter().map(|t| t.checks).sum::<usize>();
        report.failures += tallies.iter().map(|t| t.counterexamples).sum::<usize>();
        report.rules = tallies;
        report.first_counterexample = first;
    }
    if matches!(params.scope, Scope::Solutions | Scope::Both) {
        let (tally, first) = check_solutions(params);
        report.checks += tally.checks + tally.certificates_checked;
        report.failures += tally.counterexamples + tally.certificate_failures;
        if report.first_counterexample.is_none() {
            report.first_counterexample = first;
        }
        report.solutions = Some(tally);
    }
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
