//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pdlfix_core::certify::{generate_certificate, is_formula_meta};
use pdlfix_core::fuzz::{
    case_for_trial, check_solutions, random_decomposition, random_formula, sub_seed, validate_rules, FuzzParams, Scope,
    Vocabulary,
};
use pdlfix_core::hierarchy::{classify_pi_with, classify_sigma_with, classify_with, Classification, ClassifyOptions};
use pdlfix_core::semantics::Equivalence;
use pdlfix_core::{
    check_certificate, parse_formula, print_formula, solve, Certificate, Formula, Kind, KripkeModel, ModelGenParams,
    Program, RuleId, Strategy, VarName,
};

const EXAMPLE: &str = "p & [a](q | (r & X))";
const LAMBDA1: &str = "[(true? ; a ; (~q)?)*]([true?]p & [true? ; a ; (~q)?]r)";

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn f(s: &str) -> Formula {
    parse_formula(s).unwrap()
}

fn x() -> VarName {
    VarName::new("X").unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

/// World-by-world satisfaction straight from the definitions, sharing no
/// code with the extension-based evaluator.
mod reference {
    use super::*;

    pub fn successors(m: &KripkeModel, prog: &Program, w: usize) -> BTreeSet<usize> {
        match prog {
            Program::Atomic(a) => {
                let r = m.atomic_relation(a);
                (0..m.world_count()).filter(|&v| r.contains(w, v)).collect()
            }
            Program::Test(c) => {
                if holds(m, c, w) {
                    BTreeSet::from([w])
                } else {
                    BTreeSet::new()
                }
            }
            Program::Seq(a, b) => successors(m, a, w).into_iter().flat_map(|v| successors(m, b, v)).collect(),
            Program::Choice(a, b) => successors(m, a, w).union(&successors(m, b, w)).copied().collect(),
            Program::Star(a) => {
                let mut seen = BTreeSet::from([w]);
                let mut frontier = vec![w];
                while let Some(v) = frontier.pop() {
                    for u in successors(m, a, v) {
                        if seen.insert(u) {
                            frontier.push(u);
                        }
                    }
                }
                seen
            }
        }
    }

    pub fn holds(m: &KripkeModel, phi: &Formula, w: usize) -> bool {
        match phi {
            Formula::Top => true,
            Formula::Bot => false,
            Formula::Atom(p) => m.extension_of(p)[w],
            Formula::NegAtom(p) => !m.extension_of(p)[w],
            Formula::Var(v) => m.extension_of(v.as_str())[w],
            Formula::And(a, b) => holds(m, a, w) && holds(m, b, w),
            Formula::Or(a, b) => holds(m, a, w) || holds(m, b, w),
            Formula::Box(prog, body) => successors(m, prog, w).into_iter().all(|v| holds(m, body, v)),
            Formula::Diamond(prog, body) => successors(m, prog, w).into_iter().any(|v| holds(m, body, v)),
        }
    }

    /// A world where `lambda` and `equation[x := lambda]` differ.
    pub fn solution_failure(m: &KripkeModel, x: &VarName, equation: &Formula, lambda: &Formula) -> Option<usize> {
        let inst = equation.substitute(x, lambda);
        (0..m.world_count()).find(|&w| holds(m, lambda, w) != holds(m, &inst, w))
    }
}

fn model_for(formulae: &[&Formula], max_worlds: usize, seed: u64) -> KripkeModel {
    let worlds = 1 + (seed % max_worlds as u64) as usize;
    KripkeModel::random(&ModelGenParams::covering(formulae.iter().copied(), worlds, seed)).unwrap()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let Ok(Classification::Classified(c)) = classify_with(&f(EXAMPLE), &x(), ClassifyOptions::default()) else {
        return Err("example not classified".into());
    };
    let d = &c.decomposition;
    ensure(d.kind() == Kind::Pi && d.level() == 2 && d.n() == 2, || format!("got {} level {}", d.kind(), d.level()))?;
    let p = d.pairs();
    let got = (&p[0].phi, &p[0].psi, &p[0].alpha, &p[1].alpha, &p[1].phi, &p[1].psi);
    let want = (&Formula::Bot, &f("p"), &None, &Some(Program::atomic("a")), &f("q"), &f("r"));
    ensure(got == want, || format!("components {got:?}"))?;
    let sol = solve(&f(EXAMPLE), &x(), Strategy::Duality).map_err(|e| e.to_string())?;
    ensure(sol.lambda.equal_modulo_assoc(&f(LAMBDA1)), || format!("lambda {}", sol.lambda))?;
    ensure(print_formula(&sol.lambda) == LAMBDA1, || format!("printed {}", sol.lambda))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("Pi level 2, lambda1 = {LAMBDA1}"))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let sol = solve(&f(EXAMPLE), &x(), Strategy::Duality).map_err(|e| e.to_string())?;
    let cert = generate_certificate(&sol).map_err(|e| e.to_string())?;
    let grouping = cert.grouping_text();
    ensure(grouping == "E4; E1,E3; E1,E5; E3; E7", || format!("grouping {grouping}"))?;
    let report = check_certificate(&cert);
    ensure(report.passed, || format!("rejected: {:?}", report.error))?;
    let target = f(EXAMPLE).substitute(&x(), &f(LAMBDA1));
    ensure(report.final_formula == target, || format!("ends at {}", report.final_formula))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("{} steps, grouping {grouping}", cert.steps.len()))
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let params = FuzzParams {
        trials: 200,
        model_trials_per_instance: 50,
        seed: 3,
        scope: Scope::Rules,
        ..FuzzParams::default()
    };
    ensure(params.model.world_count <= 5, || "model bound".into())?;
    let equivalences: Vec<_> = RuleId::ALL.into_iter().filter(|r| r.is_equivalence()).map(|r| r.rule()).collect();
    ensure(equivalences.len() == 10, || format!("{} equivalences", equivalences.len()))?;
    let (tallies, first) = validate_rules(&params, &equivalences);
    for t in &tallies {
        ensure(t.instances >= 200 && t.checks >= 200 * 50, || format!("{}: {} instances", t.rule, t.instances))?;
        ensure(t.counterexamples == 0, || format!("{}: {:?}", t.rule, first))?;
    }
    within(start, Duration::from_secs(120))?;
    let checks: usize = tallies.iter().map(|t| t.checks).sum();
    Ok(format!("E1-E10: {checks} checks, 0 counterexamples"))
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let params = FuzzParams {
        trials: 300,
        model_trials_per_instance: 100,
        seed: 4,
        scope: Scope::Solutions,
        ..FuzzParams::default()
    };
    let (tally, first) = check_solutions(&params);
    ensure(tally.decompositions >= 300, || format!("{} decompositions", tally.decompositions))?;
    for schema in ["lambda1", "lambda2", "lambda3", "lambda4"] {
        ensure(tally.by_schema.get(schema).copied().unwrap_or(0) > 0, || format!("no {schema} case"))?;
    }
    ensure(tally.checks >= 300 * 100, || format!("{} checks", tally.checks))?;
    ensure(tally.counterexamples == 0 && tally.certificate_failures == 0, || format!("{first:?}"))?;
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "{} decompositions {:?}, {} checks, 0 counterexamples",
        tally.decompositions, tally.by_schema, tally.checks
    ))
}

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn pdlfix(args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_pdlfix")).args(args).env_remove("PDLFIX_SEED").output().unwrap();
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into_owned())
}

fn criterion_5() -> Verdict {
    let eq = "p & (q | X)";
    let model_path = workspace_root().join("docs/models/one-world-pq.json");
    let model_arg = model_path.to_str().unwrap();

    let model = KripkeModel::from_json_str(&std::fs::read_to_string(&model_path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(model.world_count() == 1, || "probe model must have one world".into())?;
    ensure(reference::holds(&model, &f("p & q"), 0), || "probe model must make p and q true".into())?;

    let (code, literal) = pdlfix(&["solve", "--var", "X", "--strategy", "literal", eq]);
    ensure(code == 0, || format!("literal solve exit {code}"))?;
    let literal = literal.trim().to_string();
    ensure(reference::solution_failure(&model, &x(), &f(eq), &f(&literal)) == Some(0), || {
        format!("reference evaluator does not refute {literal}")
    })?;
    let (code, out) = pdlfix(&["check", "--var", "X", "--equation", eq, "--candidate", &literal, "--model", model_arg]);
    ensure(code == 1 && out.contains("counterexample"), || format!("literal check exit {code}: {out}"))?;

    let (code, duality) = pdlfix(&["solve", "--var", "X", eq]);
    ensure(code == 0, || format!("duality solve exit {code}"))?;
    let duality = duality.trim().to_string();
    let (code, _) = pdlfix(&["check", "--var", "X", "--equation", eq, "--candidate", &duality, "--model", model_arg]);
    ensure(code == 0, || format!("duality on probe model exit {code}"))?;
    let (code, out) = pdlfix(&["check", "--var", "X", "--equation", eq, "--candidate", &duality, "--random", "1000"]);
    ensure(code == 0, || format!("duality random check exit {code}: {out}"))?;
    for seed in 0..200 {
        let m = model_for(&[&f(eq), &f(&duality)], 5, sub_seed(5, seed));
        ensure(reference::solution_failure(&m, &x(), &f(eq), &f(&duality)).is_none(), || {
            format!("reference evaluator refutes {duality}")
        })?;
    }

    let report = std::fs::read_to_string(workspace_root().join("docs/discrepancies.md")).map_err(|e| e.to_string())?;
    let mentions = |s: &str| report.contains(s) || report.contains(&f(s).to_string());
    ensure(mentions(&literal) && mentions(&duality), || "discrepancy report lacks a candidate".into())?;
    ensure(report.contains("one-world-pq.json"), || "discrepancy report lacks the probe model".into())?;
    Ok(format!("literal {literal} refuted (exit 1), duality {duality} passes (exit 0)"))
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let vocab = Vocabulary::of(&FuzzParams::default().model);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worlds_checked = 0;
    for i in 0..500u64 {
        let phi = random_formula(&mut rng, &vocab, 4, false);
        let neg = phi.negate();
        for j in 0..10 {
            let m = model_for(&[&phi], 5, sub_seed(sub_seed(6, i), j));
            let ext = m.extension(&phi);
            let neg_ext = m.extension(&neg);
            for w in 0..m.world_count() {
                let direct = reference::holds(&m, &phi, w);
                ensure(direct == ext[w], || format!("evaluators disagree on {phi}"))?;
                ensure(reference::holds(&m, &neg, w) == !direct && neg_ext[w] == !direct, || {
                    format!("negate({phi}) = {neg} does not flip at world {w}")
                })?;
                worlds_checked += 1;
            }
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("500 formulae x 10 models, {worlds_checked} world checks, 0 violations"))
}

fn criterion_7() -> Verdict {
    let vocab = Vocabulary::of(&FuzzParams::default().model);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let phi = random_formula(&mut rng, &vocab, 5, true);
        let text = print_formula(&phi);
        let back = parse_formula(&text).map_err(|e| format!("{text}: {e}"))?;
        ensure(back == phi, || format!("round trip changed {text}"))?;
    }

    let x = x();
    let strict = ClassifyOptions::strict();
    for t in 0..400 {
        let (kind, leading) = case_for_trial(t);
        let d = random_decomposition(&mut rng, &vocab, &x, kind, leading, 3, 2);
        let nested = d.to_nested_form();
        let back = match kind {
            Kind::Pi => classify_pi_with(&nested, &x, strict),
            Kind::Sigma => classify_sigma_with(&nested, &x, strict),
        }
        .map_err(|e| format!("{nested}: {e}"))?;
        ensure(back.decomposition == d && back.padding.is_empty(), || format!("classify changed {nested}"))?;

        let chain = d.to_chain_form();
        for j in 0..10 {
            let m = model_for(&[&nested, &chain], 5, sub_seed(sub_seed(7, t as u64), j));
            ensure(m.equivalent_on(&nested, &chain) == Equivalence::Agree, || format!("chain differs for {nested}"))?;
            for w in 0..m.world_count() {
                ensure(reference::holds(&m, &nested, w) == reference::holds(&m, &chain, w), || {
                    format!("reference: chain differs for {nested}")
                })?;
            }
        }
    }
    Ok("1000 parser round trips, 400 decompositions recovered, chain = nested on 4000 models".into())
}

fn tamper_checks(cert: &Certificate) -> Result<usize, String> {
    let mut count = 0;
    let mut expect = |bad: Certificate, i: usize, what: &str| {
        count += 1;
        let r = check_certificate(&bad);
        ensure(r.failed_step == Some(i), || format!("{what} at step {i}: failed_step {:?}", r.failed_step))
    };
    for i in 0..cert.steps.len() {
        for (k, v) in &cert.steps[i].bindings {
            let mut bad = cert.clone();
            let replacement = if is_formula_meta(k) { format!("({v}) & p") } else { format!("{v} ; a") };
            bad.steps[i].bindings.insert(k.clone(), replacement);
            expect(bad, i, "binding")?;

            let mut bad = cert.clone();
            bad.steps[i].bindings.remove(k);
            expect(bad, i, "dropped binding")?;
        }
        let mut bad = cert.clone();
        bad.steps[i].path.push(0);
        expect(bad, i, "extended path")?;

        let mut bad = cert.clone();
        if bad.steps[i].path.pop().is_none() {
            bad.steps[i].path.push(1);
        }
        expect(bad, i, "shortened path")?;

        if let Some(last) = cert.steps[i].path.last() {
            let mut bad = cert.clone();
            *bad.steps[i].path.last_mut().unwrap() = 1 - last.min(&1);
            expect(bad, i, "redirected path")?;
        }
    }
    Ok(count)
}

fn criterion_8() -> Verdict {
    let mut mutations = 0;
    let mut steps = 0;
    for eq in [
        EXAMPLE,
        "p | (q & X)",
        "<a>(p & (q | X))",
        "(X & q) | p",
        "(q & [b](X & r)) | p",
        "~p | <a>(q & (r | X))",
        "[a](p | q & [b*](r | [c]X))",
    ] {
        let sol = solve(&f(eq), &x(), Strategy::Duality).map_err(|e| e.to_string())?;
        let cert = generate_certificate(&sol).map_err(|e| e.to_string())?;
        ensure(check_certificate(&cert).passed, || format!("{eq}: untampered certificate rejected"))?;
        steps += cert.steps.len();
        mutations += tamper_checks(&cert).map_err(|e| format!("{eq}: {e}"))?;
    }
    Ok(format!("{mutations} single-step mutations over {steps} steps, each caught at its step"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 worked example", criterion_1),
        ("2 example certificate", criterion_2),
        ("3 rule soundness", criterion_3),
        ("4 solution property", criterion_4),
        ("5 sigma polarity probe", criterion_5),
        ("6 negation flip", criterion_6),
        ("7 round trips", criterion_7),
        ("8 tamper detection", criterion_8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS criterion {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
