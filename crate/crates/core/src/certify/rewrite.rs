//! Positioned application of rules.
//!
//! A path is a list of child indices from the root. `Or`/`And` use 0/1,
//! modalities use 0 for the program and 1 for the body, a test uses 0 for its
//! condition, `;`/`u` use 0/1 and `*` uses 0. Rules only rewrite formula nodes.

use std::collections::BTreeMap;

use crate::syntax::{Formula, Program};
use crate::text::{parse_formula, parse_program};

use super::rules::{is_formula_meta, is_program_meta, Direction, FormulaPattern, ProgramPattern, Rule, SideCondition};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Formula(Formula),
    Program(Program),
}

impl Term {
    pub fn to_text(&self) -> String {
        match self {
            Term::Formula(f) => f.to_string(),
            Term::Program(p) => p.to_string(),
        }
    }
}

pub type Bindings = BTreeMap<String, Term>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("path {0:?} does not address a formula node")]
    BadPath(Vec<usize>),
    #[error("{rule} {direction:?} does not match at {path:?}")]
    PatternMismatch { rule: String, direction: Direction, path: Vec<usize> },
    #[error("binding for {meta} disagrees with the matched subterm")]
    BindingConflict { meta: String },
    #[error("no binding for {meta}")]
    MissingBinding { meta: String },
    #[error("{meta} is not a metavariable of this rule")]
    UnknownMetavariable { meta: String },
    #[error("binding for {meta} is malformed: {message}")]
    BadBinding { meta: String, message: String },
    #[error("side condition violated: {meta} must be variable-free")]
    SideCondition { meta: String },
}

enum Node<'a> {
    F(&'a Formula),
    P(&'a Program),
}

fn node_at<'a>(f: &'a Formula, path: &[usize]) -> Option<Node<'a>> {
    let mut node = Node::F(f);
    for &i in path {
        node = match (node, i) {
            (Node::F(Formula::Or(l, _) | Formula::And(l, _)), 0) => Node::F(l),
            (Node::F(Formula::Or(_, r) | Formula::And(_, r)), 1) => Node::F(r),
            (Node::F(Formula::Diamond(p, _) | Formula::Box(p, _)), 0) => Node::P(p),
            (Node::F(Formula::Diamond(_, b) | Formula::Box(_, b)), 1) => Node::F(b),
            (Node::P(Program::Test(c)), 0) => Node::F(c),
            (Node::P(Program::Seq(l, _) | Program::Choice(l, _)), 0) => Node::P(l),
            (Node::P(Program::Seq(_, r) | Program::Choice(_, r)), 1) => Node::P(r),
            (Node::P(Program::Star(b)), 0) => Node::P(b),
            _ => return None,
        };
    }
    Some(node)
}

/// The formula at `path`.
pub fn formula_at<'a>(f: &'a Formula, path: &[usize]) -> Result<&'a Formula, RewriteError> {
    match node_at(f, path) {
        Some(Node::F(g)) => Ok(g),
        _ => Err(RewriteError::BadPath(path.to_vec())),
    }
}

/// Every path that addresses a formula node, in preorder.
pub fn formula_paths(f: &Formula) -> Vec<Vec<usize>> {
    fn walk_f(f: &Formula, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(path.clone());
        match f {
            Formula::Or(l, r) | Formula::And(l, r) => {
                path.push(0);
                walk_f(l, path, out);
                path.pop();
                path.push(1);
                walk_f(r, path, out);
                path.pop();
            }
            Formula::Diamond(p, b) | Formula::Box(p, b) => {
                path.push(0);
                walk_p(p, path, out);
                path.pop();
                path.push(1);
                walk_f(b, path, out);
                path.pop();
            }
            _ => {}
        }
    }
    fn walk_p(p: &Program, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match p {
            Program::Atomic(_) => {}
            Program::Test(c) => {
                path.push(0);
                walk_f(c, path, out);
                path.pop();
            }
            Program::Seq(l, r) | Program::Choice(l, r) => {
                path.push(0);
                walk_p(l, path, out);
                path.pop();
                path.push(1);
                walk_p(r, path, out);
                path.pop();
            }
            Program::Star(b) => {
                path.push(0);
                walk_p(b, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk_f(f, &mut Vec::new(), &mut out);
    out
}

/// Replaces the formula at `path` with `new`.
pub fn replace_at(f: &Formula, path: &[usize], new: Formula) -> Result<Formula, RewriteError> {
    fn in_f(f: &Formula, path: &[usize], new: Formula, full: &[usize]) -> Result<Formula, RewriteError> {
        let Some((&i, rest)) = path.split_first() else { return Ok(new) };
        let bad = || RewriteError::BadPath(full.to_vec());
        Ok(match (f, i) {
            (Formula::Or(l, r), 0) => Formula::or(in_f(l, rest, new, full)?, (**r).clone()),
            (Formula::Or(l, r), 1) => Formula::or((**l).clone(), in_f(r, rest, new, full)?),
            (Formula::And(l, r), 0) => Formula::and(in_f(l, rest, new, full)?, (**r).clone()),
            (Formula::And(l, r), 1) => Formula::and((**l).clone(), in_f(r, rest, new, full)?),
            (Formula::Diamond(p, b), 0) => Formula::diamond(in_p(p, rest, new, full)?, (**b).clone()),
            (Formula::Diamond(p, b), 1) => Formula::diamond((**p).clone(), in_f(b, rest, new, full)?),
            (Formula::Box(p, b), 0) => Formula::boxed(in_p(p, rest, new, full)?, (**b).clone()),
            (Formula::Box(p, b), 1) => Formula::boxed((**p).clone(), in_f(b, rest, new, full)?),
            _ => return Err(bad()),
        })
    }
    fn in_p(p: &Program, path: &[usize], new: Formula, full: &[usize]) -> Result<Program, RewriteError> {
        let bad = || RewriteError::BadPath(full.to_vec());
        let Some((&i, rest)) = path.split_first() else { return Err(bad()) };
        Ok(match (p, i) {
            (Program::Test(c), 0) => Program::test(in_f(c, rest, new, full)?),
            (Program::Seq(l, r), 0) => Program::seq(in_p(l, rest, new, full)?, (**r).clone()),
            (Program::Seq(l, r), 1) => Program::seq((**l).clone(), in_p(r, rest, new, full)?),
            (Program::Choice(l, r), 0) => Program::choice(in_p(l, rest, new, full)?, (**r).clone()),
            (Program::Choice(l, r), 1) => Program::choice((**l).clone(), in_p(r, rest, new, full)?),
            (Program::Star(b), 0) => Program::star(in_p(b, rest, new, full)?),
            _ => return Err(bad()),
        })
    }
    in_f(f, path, new, path)
}

fn bind(b: &mut Bindings, name: &str, term: Term) -> bool {
    match b.get(name) {
        Some(existing) => *existing == term,
        None => {
            b.insert(name.to_string(), term);
            true
        }
    }
}

fn match_f(pat: &FormulaPattern, f: &Formula, b: &mut Bindings) -> bool {
    use FormulaPattern as P;
    match (pat, f) {
        (P::Meta(m), _) => bind(b, m, Term::Formula(f.clone())),
        (P::NegMeta(m), _) => bind(b, m, Term::Formula(f.negate())),
        (P::Top, Formula::Top) | (P::Bot, Formula::Bot) => true,
        (P::And(pl, pr), Formula::And(l, r)) | (P::Or(pl, pr), Formula::Or(l, r)) => {
            match_f(pl, l, b) && match_f(pr, r, b)
        }
        (P::Diamond(pp, pb), Formula::Diamond(p, body)) | (P::Box(pp, pb), Formula::Box(p, body)) => {
            match_p(pp, p, b) && match_f(pb, body, b)
        }
        _ => false,
    }
}

fn match_p(pat: &ProgramPattern, p: &Program, b: &mut Bindings) -> bool {
    use ProgramPattern as P;
    match (pat, p) {
        (P::Meta(m), _) => bind(b, m, Term::Program(p.clone())),
        (P::Test(pf), Program::Test(c)) => match_f(pf, c, b),
        (P::Seq(pl, pr), Program::Seq(l, r)) | (P::Choice(pl, pr), Program::Choice(l, r)) => {
            match_p(pl, l, b) && match_p(pr, r, b)
        }
        (P::Star(pb), Program::Star(body)) => match_p(pb, body, b),
        _ => false,
    }
}

fn formula_binding<'a>(b: &'a Bindings, m: &str) -> Result<&'a Formula, RewriteError> {
    match b.get(m) {
        Some(Term::Formula(f)) => Ok(f),
        Some(Term::Program(_)) => {
            Err(RewriteError::BadBinding { meta: m.into(), message: "expected a formula".into() })
        }
        None => Err(RewriteError::MissingBinding { meta: m.into() }),
    }
}

/// Builds the formula a pattern denotes under `b`.
pub fn instantiate(pat: &FormulaPattern, b: &Bindings) -> Result<Formula, RewriteError> {
    use FormulaPattern as P;
    Ok(match pat {
        P::Meta(m) => formula_binding(b, m)?.clone(),
        P::NegMeta(m) => formula_binding(b, m)?.negate(),
        P::Top => Formula::Top,
        P::Bot => Formula::Bot,
        P::And(l, r) => Formula::and(instantiate(l, b)?, instantiate(r, b)?),
        P::Or(l, r) => Formula::or(instantiate(l, b)?, instantiate(r, b)?),
        P::Diamond(p, f) => Formula::diamond(instantiate_program(p, b)?, instantiate(f, b)?),
        P::Box(p, f) => Formula::boxed(instantiate_program(p, b)?, instantiate(f, b)?),
    })
}

fn instantiate_program(pat: &ProgramPattern, b: &Bindings) -> Result<Program, RewriteError> {
    use ProgramPattern as P;
    Ok(match pat {
        P::Meta(m) => match b.get(m) {
            Some(Term::Program(p)) => p.clone(),
            Some(Term::Formula(_)) => {
                return Err(RewriteError::BadBinding { meta: m.clone(), message: "expected a program".into() })
            }
            None => return Err(RewriteError::MissingBinding { meta: m.clone() }),
        },
        P::Test(f) => Program::test(instantiate(f, b)?),
        P::Seq(l, r) => Program::seq(instantiate_program(l, b)?, instantiate_program(r, b)?),
        P::Choice(l, r) => Program::choice(instantiate_program(l, b)?, instantiate_program(r, b)?),
        P::Star(p) => Program::star(instantiate_program(p, b)?),
    })
}

fn check_side(rule: &Rule, b: &Bindings) -> Result<(), RewriteError> {
    if let SideCondition::VariableFree(m) = rule.side {
        if !formula_binding(b, m)?.is_variable_free() {
            return Err(RewriteError::SideCondition { meta: m.into() });
        }
    }
    Ok(())
}

/// The most general bindings under which the oriented rule matches at `path`,
/// or `None`. Matches that violate the side condition count as no match.
pub fn match_rule(
    f: &Formula,
    rule: &Rule,
    direction: Direction,
    path: &[usize],
) -> Result<Option<Bindings>, RewriteError> {
    let sub = formula_at(f, path)?;
    let (source, _) = rule.oriented(direction);
    let mut b = Bindings::new();
    if !match_f(source, sub, &mut b) {
        return Ok(None);
    }
    if rule.metas().len() != b.len() || check_side(rule, &b).is_err() {
        return Ok(None);
    }
    Ok(Some(b))
}

/// Rewrites the subterm at `path` using explicitly supplied bindings, which
/// must agree with what the source side matches.
pub fn apply_with(
    f: &Formula,
    rule: &Rule,
    direction: Direction,
    path: &[usize],
    bindings: &Bindings,
) -> Result<Formula, RewriteError> {
    let sub = formula_at(f, path)?;
    let (source, target) = rule.oriented(direction);
    let metas = rule.metas();
    if let Some(extra) = bindings.keys().find(|k| !metas.contains(*k)) {
        return Err(RewriteError::UnknownMetavariable { meta: extra.clone() });
    }
    let mut inferred = Bindings::new();
    if !match_f(source, sub, &mut inferred) {
        return Err(RewriteError::PatternMismatch { rule: rule.label.clone(), direction, path: path.to_vec() });
    }
    for m in &metas {
        match (inferred.get(m), bindings.get(m)) {
            (_, None) => return Err(RewriteError::MissingBinding { meta: m.clone() }),
            (Some(i), Some(given)) if i != given => return Err(RewriteError::BindingConflict { meta: m.clone() }),
            _ => {}
        }
    }
    check_side(rule, bindings)?;
    replace_at(f, path, instantiate(target, bindings)?)
}

/// Parses textual bindings, typing each by its metavariable name.
pub fn parse_bindings(text: &BTreeMap<String, String>) -> Result<Bindings, RewriteError> {
    let mut out = Bindings::new();
    for (name, value) in text {
        let term = if is_formula_meta(name) {
            parse_formula(value).map(Term::Formula)
        } else if is_program_meta(name) {
            parse_program(value).map(Term::Program)
        } else {
            return Err(RewriteError::UnknownMetavariable { meta: name.clone() });
        };
        let term = term.map_err(|e| RewriteError::BadBinding { meta: name.clone(), message: e.to_string() })?;
        out.insert(name.clone(), term);
    }
    Ok(out)
}

pub fn render_bindings(b: &Bindings) -> BTreeMap<String, String> {
    b.iter().map(|(k, v)| (k.clone(), v.to_text())).collect()
}
