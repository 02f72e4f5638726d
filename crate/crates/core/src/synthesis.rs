//! Explicit solutions λ₁–λ₄ built from a decomposition.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hierarchy::{
    classify_with, Classification, ClassifyOptions, ClassifyResult, Decomposition, Kind, NotInClass,
};
use crate::syntax::{Formula, Program, VarName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    Lambda1,
    Lambda2,
    Lambda3,
    Lambda4,
    XFree,
}

impl Schema {
    /// The schema a decomposition is answered with.
    pub fn for_decomposition(d: &Decomposition) -> Schema {
        match (d.kind(), d.leading_modality()) {
            (Kind::Pi, false) => Schema::Lambda1,
            (Kind::Pi, true) => Schema::Lambda2,
            (Kind::Sigma, false) => Schema::Lambda3,
            (Kind::Sigma, true) => Schema::Lambda4,
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schema::Lambda1 => "lambda1",
            Schema::Lambda2 => "lambda2",
            Schema::Lambda3 => "lambda3",
            Schema::Lambda4 => "lambda4",
            Schema::XFree => "xfree",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Solve the negated Π equation and negate its solution.
    #[default]
    Duality,
    /// Emit λ₃/λ₄ exactly in their printed diamond shape. Experimental.
    Literal,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "duality" => Ok(Strategy::Duality),
            "literal" => Ok(Strategy::Literal),
            other => Err(format!("unknown strategy `{other}` (expected duality or literal)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Duality => "duality",
            Strategy::Literal => "literal",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub x: VarName,
    pub lambda: Formula,
    pub schema: Schema,
    pub strategy: Strategy,
    /// Absent for x-free equations.
    pub decomposition: Option<ClassifyResult>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error("expected a {expected} decomposition, got {found}")]
    KindMismatch { expected: Kind, found: Kind },
    #[error("chain bounds {from}..{to} out of range for n = {n}")]
    IndexOutOfRange { from: usize, to: usize, n: usize },
    #[error("pair {pair}: component {component} contains a variable, so its syntactic negation is not its complement")]
    VariableInNegatedComponent { pair: usize, component: &'static str },
    #[error(transparent)]
    NotInClass(#[from] NotInClass),
}

/// Right-associated sequence; the empty chain is `true?`.
pub fn odot(chain: Vec<Program>) -> Program {
    Program::sequence(chain)
}

/// `α_from;(¬φ_from)?;…;α_to;(¬φ_to)?`, 1-based inclusive, skipping an absent `α₁`.
pub fn tested_chain(d: &Decomposition, from: usize, to: usize) -> Result<Program, SynthesisError> {
    tested_chain_by(d, from, to, |phi| phi.negate())
}

fn tested_chain_by(
    d: &Decomposition,
    from: usize,
    to: usize,
    guard: impl Fn(&Formula) -> Formula,
) -> Result<Program, SynthesisError> {
    let n = d.n();
    if from < 1 || from > to || to > n {
        return Err(SynthesisError::IndexOutOfRange { from, to, n });
    }
    let mut items = Vec::with_capacity(2 * (to - from + 1));
    for pair in &d.pairs()[from - 1..to] {
        if let Some(a) = &pair.alpha {
            items.push(a.clone());
        }
        items.push(Program::test(guard(&pair.phi)));
    }
    Ok(odot(items))
}

fn require_negatable(d: &Decomposition, include_psi: bool) -> Result<(), SynthesisError> {
    for (i, pair) in d.pairs().iter().enumerate() {
        if !pair.phi.is_variable_free() {
            return Err(SynthesisError::VariableInNegatedComponent { pair: i + 1, component: "phi" });
        }
        if include_psi && !pair.psi.is_variable_free() {
            return Err(SynthesisError::VariableInNegatedComponent { pair: i + 1, component: "psi" });
        }
    }
    Ok(())
}

fn pi_lambda(d: &Decomposition) -> Result<Formula, SynthesisError> {
    require_negatable(d, false)?;
    let n = d.n();
    let loop_body = tested_chain(d, 1, n)?;
    let conjuncts = (1..=n)
        .map(|j| Ok(Formula::boxed(tested_chain(d, 1, j)?, d.pairs()[j - 1].psi.clone())))
        .collect::<Result<Vec<_>, SynthesisError>>()?;
    Ok(Formula::boxed(Program::star(loop_body), Formula::conjunction(conjuncts)))
}

/// λ₁ (no leading box) or λ₂ (leading box).
pub fn solve_pi(d: &Decomposition) -> Result<Solution, SynthesisError> {
    solve_pi_classified(ClassifyResult { decomposition: d.clone(), padding: Vec::new() })
}

fn solve_pi_classified(c: ClassifyResult) -> Result<Solution, SynthesisError> {
    let d = &c.decomposition;
    if d.kind() != Kind::Pi {
        return Err(SynthesisError::KindMismatch { expected: Kind::Pi, found: d.kind() });
    }
    Ok(Solution {
        x: d.x().clone(),
        lambda: pi_lambda(d)?,
        schema: Schema::for_decomposition(d),
        strategy: Strategy::Literal,
        decomposition: Some(c),
    })
}

/// λ₃ (no leading diamond) or λ₄ (leading diamond).
pub fn solve_sigma(d: &Decomposition, strategy: Strategy) -> Result<Solution, SynthesisError> {
    solve_sigma_classified(ClassifyResult { decomposition: d.clone(), padding: Vec::new() }, strategy)
}

fn solve_sigma_classified(c: ClassifyResult, strategy: Strategy) -> Result<Solution, SynthesisError> {
    let d = &c.decomposition;
    if d.kind() != Kind::Sigma {
        return Err(SynthesisError::KindMismatch { expected: Kind::Sigma, found: d.kind() });
    }
    let lambda = match strategy {
        Strategy::Duality => {
            require_negatable(d, true)?;
            pi_lambda(&d.as_pi())?.negate()
        }
        Strategy::Literal => sigma_literal(d)?,
    };
    Ok(Solution { x: d.x().clone(), lambda, schema: Schema::for_decomposition(d), strategy, decomposition: Some(c) })
}

/// The printed diamond schema over the components of the Σ form itself,
/// which are the negations of the stored Π components.
fn sigma_literal(d: &Decomposition) -> Result<Formula, SynthesisError> {
    require_negatable(d, false)?;
    let n = d.n();
    let guard = |stored_phi: &Formula| stored_phi.negate().negate();
    let loop_body = tested_chain_by(d, 1, n, guard)?;
    let disjuncts = (1..=n)
        .map(|j| Ok(Formula::diamond(tested_chain_by(d, 1, j, guard)?, d.pairs()[j - 1].psi.negate())))
        .collect::<Result<Vec<_>, SynthesisError>>()?;
    Ok(Formula::diamond(Program::star(loop_body), Formula::disjunction(disjuncts)))
}

/// Solves an already classified equation.
pub fn solve_classified(c: ClassifyResult, strategy: Strategy) -> Result<Solution, SynthesisError> {
    match c.decomposition.kind() {
        Kind::Pi => solve_pi_classified(c),
        Kind::Sigma => solve_sigma_classified(c, strategy),
    }
}

pub fn solve_with(
    phi: &Formula,
    x: &VarName,
    strategy: Strategy,
    options: ClassifyOptions,
) -> Result<Solution, SynthesisError> {
    match classify_with(phi, x, options)? {
        Classification::XFree => Ok(Solution {
            x: x.clone(),
            lambda: phi.clone(),
            schema: Schema::XFree,
            strategy: Strategy::Literal,
            decomposition: None,
        }),
        Classification::Classified(c) => solve_classified(c, strategy),
    }
}

/// Classifies `phi` and builds its solution.
pub fn solve(phi: &Formula, x: &VarName, strategy: Strategy) -> Result<Solution, SynthesisError> {
    solve_with(phi, x, strategy, ClassifyOptions::default())
}
