use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pdlfix_core::certify::{apply_with, formula_paths, match_rule, Direction};
use pdlfix_core::fuzz::{case_for_trial, random_classification, random_decomposition, FuzzParams, Vocabulary};
use pdlfix_core::hierarchy::{classify_pi_with, classify_sigma_with, ClassifyOptions};
use pdlfix_core::semantics::{Equivalence, Relation};
use pdlfix_core::{
    check_certificate, generate_certificate, parse_formula, parse_program, print_formula, print_program, solve,
    Formula, Kind, KripkeModel, ModelGenParams, Program, RuleId, Strategy as SolveStrategy, VarName,
};

fn x() -> VarName {
    VarName::new("X").unwrap()
}

fn leaf(with_vars: bool) -> BoxedStrategy<Formula> {
    let atom = prop::sample::select(vec!["p", "q", "r"]);
    let mut options = vec![
        atom.clone().prop_map(Formula::atom).boxed(),
        atom.prop_map(Formula::neg_atom).boxed(),
        Just(Formula::Top).boxed(),
        Just(Formula::Bot).boxed(),
    ];
    if with_vars {
        options
            .push(prop::sample::select(vec!["X", "Y"]).prop_map(|v| Formula::var(&VarName::new(v).unwrap())).boxed());
    }
    prop::strategy::Union::new(options).boxed()
}

fn program_from(formula: BoxedStrategy<Formula>) -> impl Strategy<Value = Program> {
    let base = prop_oneof![
        3 => prop::sample::select(vec!["a", "b"]).prop_map(Program::atomic),
        1 => formula.prop_map(Program::test),
    ];
    base.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Program::seq(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Program::choice(a, b)),
            inner.prop_map(Program::star),
        ]
    })
}

fn formula(with_vars: bool) -> impl Strategy<Value = Formula> {
    leaf(with_vars).prop_recursive(4, 24, 2, move |inner| {
        let prog = program_from(leaf(with_vars)).boxed();
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (prog.clone(), inner.clone()).prop_map(|(a, f)| Formula::boxed(a, f)),
            (prog, inner).prop_map(|(a, f)| Formula::diamond(a, f)),
        ]
    })
}

fn model(formulae: &[&Formula], worlds: usize, seed: u64) -> KripkeModel {
    let mut params = ModelGenParams::covering(formulae.iter().copied(), worlds, seed);
    for v in ["X", "Y"] {
        if !params.vars.iter().any(|w| w == v) {
            params.vars.push(v.into());
        }
    }
    KripkeModel::random(&params).unwrap()
}

fn mentions_x_in_a_program(f: &Formula, x: &VarName) -> bool {
    match f {
        Formula::And(a, b) | Formula::Or(a, b) => mentions_x_in_a_program(a, x) || mentions_x_in_a_program(b, x),
        Formula::Box(p, body) | Formula::Diamond(p, body) => !p.is_x_free(x) || mentions_x_in_a_program(body, x),
        _ => false,
    }
}

fn vocab() -> Vocabulary {
    Vocabulary::of(&FuzzParams::default().model)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printer_round_trips(f in formula(true)) {
        let text = print_formula(&f);
        prop_assert_eq!(parse_formula(&text).unwrap(), f);
    }

    #[test]
    fn program_printer_round_trips(p in program_from(formula(true).boxed())) {
        prop_assert_eq!(parse_program(&print_program(&p)).unwrap(), p);
    }

    #[test]
    fn negation_is_an_involution(f in formula(true)) {
        prop_assert_eq!(f.negate().negate(), f);
    }

    #[test]
    fn negation_complements_variable_free_formulae(f in formula(false), worlds in 1usize..=5, seed: u64) {
        let m = model(&[&f], worlds, seed);
        let ext = m.extension(&f);
        let neg = m.extension(&f.negate());
        for w in 0..m.world_count() {
            prop_assert_eq!(neg[w], !ext[w]);
        }
    }

    #[test]
    fn substitution_commutes_with_negation(f in formula(true), g in formula(true)) {
        let x = x();
        prop_assume!(!mentions_x_in_a_program(&f, &x));
        prop_assert_eq!(f.substitute(&x, &g).negate(), f.negate().substitute(&x, &g.negate()));
    }

    #[test]
    fn substitution_respects_variables(f in formula(true), g in formula(true)) {
        let x = x();
        let mut allowed = f.vars();
        allowed.remove(&x);
        allowed.extend(g.vars());
        prop_assert!(f.substitute(&x, &g).vars().is_subset(&allowed));
        if f.is_x_free(&x) {
            prop_assert_eq!(f.substitute(&x, &g), f);
        }
    }

    #[test]
    fn star_is_the_reflexive_transitive_fixpoint(p in program_from(leaf(false)), worlds in 1usize..=5, seed: u64) {
        let body = Formula::boxed(p.clone(), Formula::Top);
        let m = model(&[&body], worlds, seed);
        let r = m.relation(&p);
        let star = m.relation(&Program::star(p.clone()));
        prop_assert!(star.is_reflexive() && star.is_transitive());
        let unfolded = Relation::identity(m.world_count()).union(&r.compose(&star));
        prop_assert_eq!(&unfolded, &star);
        // r is contained in r*
        prop_assert_eq!(star.union(&r), star.clone());
    }

    #[test]
    fn rule_applications_preserve_meaning(f in formula(true), worlds in 1usize..=4, seed: u64) {
        let paths = formula_paths(&f);
        let m = model(&[&f], worlds, seed);
        for path in paths.iter().take(12) {
            for id in RuleId::ALL {
                let rule = id.rule();
                for dir in [Direction::LR, Direction::RL] {
                    if let Ok(Some(b)) = match_rule(&f, &rule, dir, path) {
                        let g = apply_with(&f, &rule, dir, path, &b).unwrap();
                        prop_assert_eq!(m.equivalent_on(&f, &g), Equivalence::Agree, "{} {:?} at {:?}: {} vs {}", id, dir, path, f, g);
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn solutions_are_fixed_points(trial in 0usize..4, seed: u64, model_seed: u64) {
        let x = x();
        let (kind, leading) = case_for_trial(trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_classification(&mut rng, &vocab(), &x, kind, leading, 3, 2);
        let equation = c.reconstruct();
        let sol = solve(&equation, &x, SolveStrategy::Duality).unwrap();
        prop_assert!(sol.lambda.is_x_free(&x));
        for j in 0..5u64 {
            let m = model(&[&equation, &sol.lambda], 1 + (j as usize % 5), model_seed.wrapping_add(j));
            let report = m.check_solution_on(&x, &equation, &sol.lambda).unwrap();
            prop_assert!(report.passed, "{} with {}: {:?}", equation, sol.lambda, report.counterexample);
        }
    }

    #[test]
    fn certificates_replay_to_equivalent_formulae(trial in 0usize..4, seed: u64, model_seed: u64) {
        let x = x();
        let (kind, leading) = case_for_trial(trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_classification(&mut rng, &vocab(), &x, kind, leading, 3, 2);
        let sol = solve(&c.reconstruct(), &x, SolveStrategy::Duality).unwrap();
        let cert = generate_certificate(&sol).unwrap();
        let report = check_certificate(&cert);
        prop_assert!(report.passed, "{:?}", report.error);
        prop_assert_eq!(&report.final_formula, &cert.to);
        let m = model(&[&cert.from, &cert.to], 4, model_seed);
        prop_assert_eq!(m.equivalent_on(&cert.from, &cert.to), Equivalence::Agree);
    }

    #[test]
    fn nested_forms_classify_back(trial in 0usize..4, seed: u64) {
        let x = x();
        let (kind, leading) = case_for_trial(trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_decomposition(&mut rng, &vocab(), &x, kind, leading, 3, 2);
        let nested = d.to_nested_form();
        let back = match kind {
            Kind::Pi => classify_pi_with(&nested, &x, ClassifyOptions::strict()),
            Kind::Sigma => classify_sigma_with(&nested, &x, ClassifyOptions::strict()),
        };
        prop_assert_eq!(back.unwrap().decomposition, d);
    }

    #[test]
    fn sigma_is_dual_to_pi(seed: u64, leading: bool) {
        let x = x();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_decomposition(&mut rng, &vocab(), &x, Kind::Sigma, leading, 3, 2);
        prop_assert_eq!(d.to_nested_form(), d.as_pi().to_nested_form().negate());
        prop_assert_eq!(d.to_chain_form(), d.as_pi().to_chain_form().negate());
        prop_assert_eq!(d.level(), d.as_pi().level());
    }

    #[test]
    fn chain_form_agrees_with_nested_form(trial in 0usize..4, seed: u64, model_seed: u64) {
        let x = x();
        let (kind, leading) = case_for_trial(trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_decomposition(&mut rng, &vocab(), &x, kind, leading, 3, 2);
        let (nested, chain) = (d.to_nested_form(), d.to_chain_form());
        let m = model(&[&nested, &chain], 4, model_seed);
        prop_assert_eq!(m.equivalent_on(&nested, &chain), Equivalence::Agree);
    }
}

#[test]
fn negation_does_not_commute_with_substitution_inside_tests() {
    let (x, f, g) = (x(), parse_formula("[X?]p").unwrap(), parse_formula("q").unwrap());
    assert_ne!(f.substitute(&x, &g).negate(), f.negate().substitute(&x, &g.negate()));
}
