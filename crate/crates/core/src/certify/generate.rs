//! Scripted derivations of `λ ≡ φ(λ)`.
//!
//! The Π script unfolds the star once (E4), then works through the pairs in
//! rounds: split the leading programs off every conjunct (E1 right to left),
//! factor them out innermost-first (E3 right to left), and close the layer
//! (E5 or E7, plus E2 and E10 when `ψᵢ` was padded). Recorded commutations
//! are applied last. Σ certificates are the rule-by-rule duals of the Π
//! certificate for the negated equation.

use std::collections::{HashSet, VecDeque};
use std::iter::repeat_n;

use crate::hierarchy::{ClassifyResult, Connective, Kind};
use crate::syntax::Formula;
use crate::synthesis::{solve_pi, Schema, Solution, Strategy};
use crate::text::{parse_formula, parse_program};

use super::rewrite::{apply_with, formula_paths, match_rule, render_bindings, RewriteError};
use super::rules::{is_formula_meta, Direction, RuleId};
use super::{apply_rule, digest, Certificate, CertifyError, RewriteStep, StepError};

pub const DEFAULT_SEARCH_CAP: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenerateOptions {
    /// States the fallback search may expand before giving up.
    pub search_cap: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions { search_cap: DEFAULT_SEARCH_CAP }
    }
}

struct Builder {
    current: Formula,
    steps: Vec<RewriteStep>,
    line: usize,
}

impl Builder {
    fn step(&mut self, rule: RuleId, direction: Direction, path: Vec<usize>) -> Result<(), RewriteError> {
        let r = rule.rule();
        let bindings = match_rule(&self.current, &r, direction, &path)?
            .ok_or_else(|| RewriteError::PatternMismatch { rule: rule.to_string(), direction, path: path.clone() })?;
        self.current = apply_with(&self.current, &r, direction, &path, &bindings)?;
        self.steps.push(RewriteStep {
            rule,
            direction,
            path,
            bindings: render_bindings(&bindings),
            line: Some(self.line),
            digest: Some(digest(&self.current)),
        });
        Ok(())
    }

    fn new_line(&mut self) {
        self.line += 1;
    }
}

fn ones(base: &[usize], k: usize) -> Vec<usize> {
    let mut p = base.to_vec();
    p.extend(repeat_n(1, k));
    p
}

fn child(base: &[usize], i: usize) -> Vec<usize> {
    let mut p = base.to_vec();
    p.push(i);
    p
}

fn pi_script(b: &mut Builder, c: &ClassifyResult) -> Result<(), RewriteError> {
    let d = &c.decomposition;
    let n = d.n();

    b.step(RuleId::E4, Direction::LR, vec![])?;
    b.new_line();
    for k in 0..n - 1 {
        b.step(RuleId::AndAssoc, Direction::LR, ones(&[], k))?;
    }

    let mut focus: Vec<usize> = Vec::new();
    for i in 1..=n {
        let units = if d.pairs()[i - 1].alpha.is_some() { 2 } else { 1 };
        let m = n - i + 2;

        for k in 0..m {
            let (term, splits) = if k + 1 < m {
                (child(&ones(&focus, k), 0), if k == 0 { units - 1 } else { units })
            } else {
                (ones(&focus, k), if i == n { units - 1 } else { units })
            };
            for s in 0..splits {
                b.step(RuleId::E1, Direction::RL, ones(&term, s))?;
            }
        }

        if i > 1 {
            b.new_line();
        }
        let mut cp = focus.clone();
        let mut test_box = cp.clone();
        for _ in 0..units {
            for k in (0..m - 1).rev() {
                b.step(RuleId::E3, Direction::RL, ones(&cp, k))?;
            }
            test_box = cp.clone();
            cp.push(1);
        }

        b.new_line();
        let conj = if c.phi_padded(i) {
            b.step(RuleId::E5, Direction::LR, test_box.clone())?;
            test_box
        } else {
            b.step(RuleId::E7, Direction::RL, test_box.clone())?;
            child(&test_box, 1)
        };
        focus = if c.psi_padded(i) {
            b.step(RuleId::E2, Direction::LR, conj.clone())?;
            b.step(RuleId::E10, Direction::LR, conj.clone())?;
            conj
        } else {
            child(&conj, 1)
        };
    }

    let mut swaps: Vec<Vec<(RuleId, Vec<usize>)>> = Vec::new();
    let mut layer = if d.leading_modality() { vec![1] } else { vec![] };
    for i in 1..=n {
        let conj = if c.phi_padded(i) { layer.clone() } else { child(&layer, 1) };
        let kernel = if c.psi_padded(i) { conj.clone() } else { child(&conj, 1) };
        let mut here = Vec::new();
        if c.commuted(i, Connective::And) {
            here.push((RuleId::AndComm, conj));
        }
        if c.commuted(i, Connective::Or) {
            here.push((RuleId::OrComm, layer));
        }
        swaps.push(here);
        layer = child(&kernel, 1);
    }
    if swaps.iter().any(|s| !s.is_empty()) {
        b.new_line();
        for (rule, path) in swaps.into_iter().rev().flatten() {
            b.step(rule, Direction::LR, path)?;
        }
    }
    Ok(())
}

/// Breadth-first search over all single rule applications.
pub(crate) fn search(from: &Formula, to: &Formula, cap: usize, line: usize) -> Option<Vec<RewriteStep>> {
    if from == to {
        return Some(Vec::new());
    }
    let mut nodes: Vec<(Formula, Option<(usize, RewriteStep)>)> = vec![(from.clone(), None)];
    let mut seen: HashSet<Formula> = HashSet::from([from.clone()]);
    let mut queue = VecDeque::from([0usize]);
    let mut expanded = 0;
    while let Some(idx) = queue.pop_front() {
        if expanded >= cap {
            return None;
        }
        expanded += 1;
        let current = nodes[idx].0.clone();
        for path in formula_paths(&current) {
            for rule_id in RuleId::ALL {
                let rule = rule_id.rule();
                for direction in [Direction::LR, Direction::RL] {
                    let Ok(Some(bindings)) = match_rule(&current, &rule, direction, &path) else { continue };
                    let Ok(next) = apply_with(&current, &rule, direction, &path, &bindings) else { continue };
                    if !seen.insert(next.clone()) {
                        continue;
                    }
                    let step = RewriteStep {
                        rule: rule_id,
                        direction,
                        path: path.clone(),
                        bindings: render_bindings(&bindings),
                        line: Some(line),
                        digest: Some(digest(&next)),
                    };
                    let reached = next == *to;
                    nodes.push((next, Some((idx, step))));
                    if reached {
                        let mut steps = Vec::new();
                        let mut at = nodes.len() - 1;
                        while let Some((parent, step)) = nodes[at].1.clone() {
                            steps.push(step);
                            at = parent;
                        }
                        steps.reverse();
                        return Some(steps);
                    }
                    queue.push_back(nodes.len() - 1);
                }
            }
        }
    }
    None
}

fn pi_certificate(c: &ClassifyResult, lambda: &Formula, cap: usize) -> Result<Certificate, CertifyError> {
    let x = c.decomposition.x();
    let target = c.reconstruct().substitute(x, lambda);
    let mut b = Builder { current: lambda.clone(), steps: Vec::new(), line: 1 };
    let scripted = pi_script(&mut b, c);
    if scripted.is_err() || b.current != target {
        let tail = search(&b.current, &target, cap, b.line + 1).ok_or(CertifyError::SearchExhausted { cap })?;
        b.steps.extend(tail);
    }
    Ok(Certificate { from: lambda.clone(), to: target, steps: b.steps })
}

fn dual_binding(name: &str, text: &str) -> Result<String, StepError> {
    let bad = |message: String| StepError::Rewrite(RewriteError::BadBinding { meta: name.into(), message });
    if is_formula_meta(name) {
        Ok(parse_formula(text).map_err(|e| bad(e.to_string()))?.negate().to_string())
    } else {
        Ok(parse_program(text).map_err(|e| bad(e.to_string()))?.to_string())
    }
}

/// Negates every intermediate formula: rules map to their duals, formula
/// bindings are negated, paths and program bindings are unchanged.
pub(crate) fn dualize(cert: &Certificate) -> Result<Certificate, CertifyError> {
    let from = cert.from.negate();
    let mut current = from.clone();
    let mut steps = Vec::with_capacity(cert.steps.len());
    for (index, step) in cert.steps.iter().enumerate() {
        let bindings = step
            .bindings
            .iter()
            .map(|(k, v)| Ok((k.clone(), dual_binding(k, v)?)))
            .collect::<Result<_, StepError>>()
            .map_err(|error| CertifyError::DualReplay { index, error })?;
        let mut dual = RewriteStep {
            rule: step.rule.dual(),
            direction: step.direction,
            path: step.path.clone(),
            bindings,
            line: step.line,
            digest: None,
        };
        current = apply_rule(&current, &dual).map_err(|error| CertifyError::DualReplay { index, error })?;
        dual.digest = Some(digest(&current));
        steps.push(dual);
    }
    Ok(Certificate { from, to: cert.to.negate(), steps })
}

pub fn generate_certificate(sol: &Solution) -> Result<Certificate, CertifyError> {
    generate_certificate_with(sol, GenerateOptions::default())
}

/// A certificate from `sol.lambda` to the classified formula with `x`
/// replaced by `sol.lambda`.
pub fn generate_certificate_with(sol: &Solution, options: GenerateOptions) -> Result<Certificate, CertifyError> {
    if sol.schema == Schema::XFree {
        return Ok(Certificate { from: sol.lambda.clone(), to: sol.lambda.clone(), steps: Vec::new() });
    }
    let c = sol.decomposition.as_ref().ok_or(CertifyError::MissingDecomposition)?;
    let pi = ClassifyResult { decomposition: c.decomposition.as_pi(), padding: c.padding.clone() };
    let expected = solve_pi(&pi.decomposition).map_err(|_| CertifyError::SolutionMismatch)?.lambda;
    match c.decomposition.kind() {
        Kind::Pi => {
            if expected != sol.lambda {
                return Err(CertifyError::SolutionMismatch);
            }
            pi_certificate(&pi, &sol.lambda, options.search_cap)
        }
        Kind::Sigma => {
            if sol.strategy == Strategy::Literal {
                return Err(CertifyError::NotCertifiable);
            }
            if expected.negate() != sol.lambda {
                return Err(CertifyError::SolutionMismatch);
            }
            dualize(&pi_certificate(&pi, &expected, options.search_cap)?)
        }
    }
}
