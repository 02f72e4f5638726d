//! Membership in the Π/Σ hierarchies relative to a variable `x`.
//!
//! A Π formula is a chain of layers `φᵢ ∨ (ψᵢ ∧ K)` where each kernel `K` is
//! either `x` or a box `[αᵢ₊₁]` over the next layer, optionally preceded by
//! one leading box. Σ formulae are the negations of Π formulae; their
//! decompositions store the Π components of the negated formula.
//!
//! Missing disjuncts and conjuncts are padded with `false` and `true`, and
//! (unless disabled) either operand order is accepted at each connective.
//! Both adjustments are recorded so the input can be rebuilt exactly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{Formula, Program, VarName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Pi,
    Sigma,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Pi => "Pi",
            Kind::Sigma => "Sigma",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub phi: Formula,
    pub psi: Formula,
    pub alpha: Option<Program>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", try_from = "DecompositionFields")]
pub struct Decomposition {
    kind: Kind,
    x: VarName,
    leading_modality: bool,
    pairs: Vec<Pair>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct DecompositionFields {
    kind: Kind,
    x: VarName,
    leading_modality: bool,
    pairs: Vec<Pair>,
}

impl TryFrom<DecompositionFields> for Decomposition {
    type Error = HierarchyError;
    fn try_from(d: DecompositionFields) -> Result<Self, Self::Error> {
        Decomposition::new(d.kind, d.x, d.leading_modality, d.pairs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HierarchyError {
    #[error("a decomposition needs at least one pair")]
    Empty,
    #[error("pair {pair}: {reason}")]
    BadPair { pair: usize, reason: String },
}

impl Decomposition {
    /// Checks the structural invariants: `αᵢ` present for `i ≥ 2`, `α₁`
    /// present iff there is a leading modality, and no component mentions `x`.
    pub fn new(kind: Kind, x: VarName, leading_modality: bool, pairs: Vec<Pair>) -> Result<Self, HierarchyError> {
        if pairs.is_empty() {
            return Err(HierarchyError::Empty);
        }
        for (i, pair) in pairs.iter().enumerate() {
            let bad = |reason: &str| HierarchyError::BadPair { pair: i + 1, reason: reason.into() };
            let wants_alpha = i > 0 || leading_modality;
            match (&pair.alpha, wants_alpha) {
                (None, true) => return Err(bad("program missing")),
                (Some(_), false) => return Err(bad("unexpected program without a leading modality")),
                (Some(a), true) if !a.is_x_free(&x) => return Err(bad("program mentions x")),
                _ => {}
            }
            if !pair.phi.is_x_free(&x) || !pair.psi.is_x_free(&x) {
                return Err(bad("component mentions x"));
            }
        }
        Ok(Decomposition { kind, x, leading_modality, pairs })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn x(&self) -> &VarName {
        &self.x
    }

    pub fn leading_modality(&self) -> bool {
        self.leading_modality
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    /// `2(n-1)` without a leading box, `2n-1` with one.
    pub fn level(&self) -> usize {
        if self.leading_modality {
            2 * self.n() - 1
        } else {
            2 * (self.n() - 1)
        }
    }

    /// The same components read as a Π decomposition.
    pub fn as_pi(&self) -> Decomposition {
        Decomposition { kind: Kind::Pi, ..self.clone() }
    }

    pub fn with_kind(&self, kind: Kind) -> Decomposition {
        Decomposition { kind, ..self.clone() }
    }

    fn pi_nested(&self) -> Formula {
        let mut inner = Formula::var(&self.x);
        for pair in self.pairs.iter().rev() {
            let layer = Formula::or(pair.phi.clone(), Formula::and(pair.psi.clone(), inner));
            inner = match &pair.alpha {
                Some(a) => Formula::boxed(a.clone(), layer),
                None => layer,
            };
        }
        inner
    }

    fn pi_chain(&self) -> Formula {
        let mut inner = Formula::var(&self.x);
        for pair in self.pairs.iter().rev() {
            let guard = Program::test(pair.phi.negate());
            let prog = match &pair.alpha {
                Some(a) => Program::seq(a.clone(), guard),
                None => guard,
            };
            inner = Formula::boxed(prog, Formula::diamond(Program::test(pair.psi.clone()), inner));
        }
        inner
    }

    /// The nested layer form, with every component spelled out.
    pub fn to_nested_form(&self) -> Formula {
        match self.kind {
            Kind::Pi => self.pi_nested(),
            Kind::Sigma => self.pi_nested().negate(),
        }
    }

    /// The equivalent modal chain, `[α₁;(¬φ₁)?]<ψ₁?>…x` for Π and its dual for Σ.
    pub fn to_chain_form(&self) -> Formula {
        match self.kind {
            Kind::Pi => self.pi_chain(),
            Kind::Sigma => self.pi_chain().negate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connective {
    Or,
    And,
}

/// One departure of the input from the spelled-out nested form. Pair
/// indices are 1-based. Padding with `false` fills `φᵢ`, with `true` fills `ψᵢ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Adjustment {
    Padded { pair: usize, inserted: Formula },
    Commuted { pair: usize, commuted: Connective },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyResult {
    #[serde(flatten)]
    pub decomposition: Decomposition,
    pub padding: Vec<Adjustment>,
}

impl ClassifyResult {
    pub fn phi_padded(&self, pair: usize) -> bool {
        self.padding.contains(&Adjustment::Padded { pair, inserted: Formula::Bot })
    }

    pub fn psi_padded(&self, pair: usize) -> bool {
        self.padding.contains(&Adjustment::Padded { pair, inserted: Formula::Top })
    }

    pub fn commuted(&self, pair: usize, connective: Connective) -> bool {
        self.padding.contains(&Adjustment::Commuted { pair, commuted: connective })
    }

    /// Rebuilds the classified formula by undoing padding and commutation.
    pub fn reconstruct(&self) -> Formula {
        let d = &self.decomposition;
        let mut inner = Formula::var(d.x());
        for (i, pair) in d.pairs().iter().enumerate().rev() {
            let idx = i + 1;
            let conj = if self.psi_padded(idx) {
                inner
            } else if self.commuted(idx, Connective::And) {
                Formula::and(inner, pair.psi.clone())
            } else {
                Formula::and(pair.psi.clone(), inner)
            };
            let layer = if self.phi_padded(idx) {
                conj
            } else if self.commuted(idx, Connective::Or) {
                Formula::or(conj, pair.phi.clone())
            } else {
                Formula::or(pair.phi.clone(), conj)
            };
            inner = match &pair.alpha {
                Some(a) => Formula::boxed(a.clone(), layer),
                None => layer,
            };
        }
        match d.kind() {
            Kind::Pi => inner,
            Kind::Sigma => inner.negate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifyOptions {
    /// Accept `(ψ ∧ x) ∨ φ` and `x ∧ ψ` orderings.
    pub commutation: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { commutation: true }
    }
}

impl ClassifyOptions {
    pub fn strict() -> Self {
        ClassifyOptions { commutation: false }
    }
}

/// Where and why a shape match failed. Paths use child indices from the root.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("at {path:?}: {reason}")]
pub struct MatchFailure {
    pub path: Vec<usize>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("not in Pi ({pi}) and not in Sigma ({sigma})")]
pub struct NotInClass {
    pub pi: MatchFailure,
    pub sigma: MatchFailure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    /// `x` does not occur; the equation is solved by the formula itself.
    XFree,
    Classified(ClassifyResult),
}

struct Matcher<'a> {
    x: &'a VarName,
    options: ClassifyOptions,
    pairs: Vec<Pair>,
    padding: Vec<Adjustment>,
}

fn fail<T>(path: &[usize], reason: impl Into<String>) -> Result<T, MatchFailure> {
    Err(MatchFailure { path: path.to_vec(), reason: reason.into() })
}

fn extend(path: &[usize], child: usize) -> Vec<usize> {
    let mut p = path.to_vec();
    p.push(child);
    p
}

fn describe(f: &Formula) -> &'static str {
    match f {
        Formula::Atom(_) | Formula::NegAtom(_) => "a literal",
        Formula::Var(_) => "another variable",
        Formula::Top | Formula::Bot => "a constant",
        Formula::Or(..) => "a disjunction",
        Formula::And(..) => "a conjunction",
        Formula::Diamond(..) => "a diamond",
        Formula::Box(..) => "a box",
    }
}

impl Matcher<'_> {
    fn is_x(&self, f: &Formula) -> bool {
        matches!(f, Formula::Var(v) if v == self.x)
    }

    fn pad(&mut self, inserted: Formula) {
        let pair = self.pairs.len() + 1;
        self.padding.push(Adjustment::Padded { pair, inserted });
    }

    fn commute(&mut self, connective: Connective) {
        let pair = self.pairs.len() + 1;
        self.padding.push(Adjustment::Commuted { pair, commuted: connective });
    }

    fn top(&mut self, f: &Formula) -> Result<bool, MatchFailure> {
        match f {
            Formula::Box(a, body) => {
                if !a.is_x_free(self.x) {
                    return fail(&[0], "x occurs inside a program");
                }
                self.layer(body, &[1], Some(a.as_ref().clone()))?;
                Ok(true)
            }
            _ => {
                self.layer(f, &[], None)?;
                Ok(false)
            }
        }
    }

    /// `φ ∨ (ψ ∧ K)` at `path`, preceded by the box over `alpha`.
    fn layer(&mut self, f: &Formula, path: &[usize], alpha: Option<Program>) -> Result<(), MatchFailure> {
        let (phi, rest, rest_path) = match f {
            Formula::Or(l, r) if r.occurrences(self.x) > 0 => (l.as_ref().clone(), r.as_ref(), extend(path, 1)),
            Formula::Or(l, r) if self.options.commutation => {
                self.commute(Connective::Or);
                (r.as_ref().clone(), l.as_ref(), extend(path, 0))
            }
            Formula::Or(..) => return fail(path, "x occurs in the left disjunct"),
            _ => {
                self.pad(Formula::Bot);
                (Formula::Bot, f, path.to_vec())
            }
        };
        let (psi, kernel, kernel_path) = match rest {
            Formula::And(l, r) if r.occurrences(self.x) > 0 => (l.as_ref().clone(), r.as_ref(), extend(&rest_path, 1)),
            Formula::And(l, r) if self.options.commutation => {
                self.commute(Connective::And);
                (r.as_ref().clone(), l.as_ref(), extend(&rest_path, 0))
            }
            Formula::And(..) => return fail(&rest_path, "x occurs in the left conjunct"),
            k if self.is_x(k) || matches!(k, Formula::Box(..)) => {
                self.pad(Formula::Top);
                (Formula::Top, k, rest_path.clone())
            }
            other => return fail(&rest_path, format!("expected a conjunction, found {}", describe(other))),
        };
        self.pairs.push(Pair { phi, psi, alpha });
        match kernel {
            k if self.is_x(k) => Ok(()),
            Formula::Box(a, body) => {
                if !a.is_x_free(self.x) {
                    return fail(&extend(&kernel_path, 0), "x occurs inside a program");
                }
                self.layer(body, &extend(&kernel_path, 1), Some(a.as_ref().clone()))
            }
            other => fail(&kernel_path, format!("expected x or a box, found {}", describe(other))),
        }
    }
}

pub fn classify_pi_with(f: &Formula, x: &VarName, options: ClassifyOptions) -> Result<ClassifyResult, MatchFailure> {
    match f.occurrences(x) {
        1 => {}
        0 => return fail(&[], format!("{x} does not occur")),
        k => return fail(&[], format!("{x} occurs {k} times")),
    }
    let mut m = Matcher { x, options, pairs: Vec::new(), padding: Vec::new() };
    let leading = m.top(f)?;
    let decomposition = Decomposition::new(Kind::Pi, x.clone(), leading, m.pairs)
        .expect("matcher output satisfies the decomposition invariants");
    Ok(ClassifyResult { decomposition, padding: m.padding })
}

/// Σ membership: the negation is in Π. Stores the Π decomposition of the
/// negation, tagged `Sigma`.
pub fn classify_sigma_with(f: &Formula, x: &VarName, options: ClassifyOptions) -> Result<ClassifyResult, MatchFailure> {
    let pi = classify_pi_with(&f.negate(), x, options)?;
    Ok(ClassifyResult { decomposition: pi.decomposition.with_kind(Kind::Sigma), padding: pi.padding })
}

pub fn classify_pi(f: &Formula, x: &VarName) -> Option<ClassifyResult> {
    classify_pi_with(f, x, ClassifyOptions::default()).ok()
}

pub fn classify_sigma(f: &Formula, x: &VarName) -> Option<ClassifyResult> {
    classify_sigma_with(f, x, ClassifyOptions::default()).ok()
}

/// Tries Π, then Σ.
pub fn classify_with(f: &Formula, x: &VarName, options: ClassifyOptions) -> Result<Classification, NotInClass> {
    if f.is_x_free(x) {
        return Ok(Classification::XFree);
    }
    let pi = match classify_pi_with(f, x, options) {
        Ok(r) => return Ok(Classification::Classified(r)),
        Err(e) => e,
    };
    match classify_sigma_with(f, x, options) {
        Ok(r) => Ok(Classification::Classified(r)),
        Err(sigma) => Err(NotInClass { pi, sigma }),
    }
}

pub fn classify(f: &Formula, x: &VarName) -> Result<Classification, NotInClass> {
    classify_with(f, x, ClassifyOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{parse_formula, parse_program};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn x() -> VarName {
        VarName::new("X").unwrap()
    }

    fn pair(phi: &str, psi: &str, alpha: Option<&str>) -> Pair {
        Pair { phi: f(phi), psi: f(psi), alpha: alpha.map(|a| parse_program(a).unwrap()) }
    }

    #[test]
    fn worked_example_is_pi_level_two() {
        let r = classify_pi(&f("p & [a](q | (r & X))"), &x()).unwrap();
        let d = &r.decomposition;
        assert_eq!(d.kind(), Kind::Pi);
        assert_eq!(d.level(), 2);
        assert!(!d.leading_modality());
        assert_eq!(d.pairs(), &[pair("false", "p", None), pair("q", "r", Some("a"))]);
        assert_eq!(r.padding, vec![Adjustment::Padded { pair: 1, inserted: Formula::Bot }]);
        assert_eq!(r.reconstruct(), f("p & [a](q | (r & X))"));
    }

    #[test]
    fn leading_box_is_odd_level() {
        let r = classify_pi(&f("[a](p | (q & X))"), &x()).unwrap();
        let d = &r.decomposition;
        assert!(d.leading_modality());
        assert_eq!(d.level(), 1);
        assert_eq!(d.pairs(), &[pair("p", "q", Some("a"))]);
        assert!(r.padding.is_empty());
    }

    #[test]
    fn bare_variable_pads_both() {
        let r = classify_pi(&f("X"), &x()).unwrap();
        assert_eq!(r.decomposition.pairs(), &[pair("false", "true", None)]);
        assert_eq!(r.decomposition.level(), 0);
        assert!(r.phi_padded(1) && r.psi_padded(1));
        assert_eq!(r.reconstruct(), f("X"));

        let r = classify_pi(&f("[a][b]X"), &x()).unwrap();
        assert_eq!(r.decomposition.pairs(), &[pair("false", "true", Some("a")), pair("false", "true", Some("b"))]);
        assert_eq!(r.reconstruct(), f("[a][b]X"));
    }

    #[test]
    fn variable_under_a_program_is_rejected() {
        let err = classify_pi_with(&f("[X?]p"), &x(), ClassifyOptions::default()).unwrap_err();
        assert_eq!(err.path, vec![0]);
        assert!(classify_sigma(&f("[X?]p"), &x()).is_none());
        assert!(classify(&f("[X?]p"), &x()).is_err());
        assert!(classify_pi(&f("p | (q & [a;X?]X)"), &x()).is_none());
    }

    #[test]
    fn rejects_repeated_and_misplaced_occurrences() {
        assert!(classify_pi(&f("X & X"), &x()).is_none());
        assert!(classify_pi(&f("<a>X"), &x()).is_none());
        assert!(classify_pi(&f("p | (q | X)"), &x()).is_none());
        let err = classify_pi_with(&f("p | (q & <a>X)"), &x(), ClassifyOptions::default()).unwrap_err();
        assert_eq!(err.path, vec![1, 1]);
    }

    #[test]
    fn sigma_stores_negated_components() {
        let r = classify_sigma(&f("p & (q | X)"), &x()).unwrap();
        assert_eq!(r.decomposition.kind(), Kind::Sigma);
        assert_eq!(r.decomposition.pairs(), &[pair("~p", "~q", None)]);
        assert_eq!(r.reconstruct(), f("p & (q | X)"));

        let r = classify_sigma(&f("<a>(p & (q | X))"), &x()).unwrap();
        assert!(r.decomposition.leading_modality());
        assert_eq!(r.decomposition.pairs(), &[pair("~p", "~q", Some("a"))]);

        assert!(classify_sigma(&f("p | (q & X)"), &x()).is_none());
    }

    #[test]
    fn classify_dispatch() {
        assert_eq!(classify(&f("p & q"), &x()), Ok(Classification::XFree));
        let Ok(Classification::Classified(r)) = classify(&f("p & [a](q | (r & X))"), &x()) else { panic!() };
        assert_eq!(r.decomposition.kind(), Kind::Pi);
        let Ok(Classification::Classified(r)) = classify(&f("<a>(p & (q | X))"), &x()) else { panic!() };
        assert_eq!(r.decomposition.kind(), Kind::Sigma);
    }

    #[test]
    fn commutation_is_recorded_and_optional() {
        let input = f("(X & q) | p");
        let r = classify_pi(&input, &x()).unwrap();
        assert_eq!(r.decomposition.pairs(), &[pair("p", "q", None)]);
        assert!(r.commuted(1, Connective::Or) && r.commuted(1, Connective::And));
        assert_eq!(r.reconstruct(), input);
        assert!(classify_pi_with(&input, &x(), ClassifyOptions::strict()).is_err());
    }

    #[test]
    fn nested_and_chain_forms() {
        let d = classify_pi(&f("[a](p|(q&X))"), &x()).unwrap().decomposition;
        assert_eq!(d.to_chain_form(), f("[a;(~p)?]<q?>X"));
        assert_eq!(d.to_nested_form(), f("[a](p | q & X)"));

        let r = classify_pi(&f("p & [a](q | (r & X))"), &x()).unwrap();
        assert_eq!(r.decomposition.to_chain_form(), f("[(true)?]<p?>[a;(~q)?]<r?>X"));
        assert_eq!(r.decomposition.to_nested_form(), f("false | p & [a](q | r & X)"));
    }

    #[test]
    fn decomposition_invariants() {
        let bad = Decomposition::new(Kind::Pi, x(), false, vec![pair("p", "q", Some("a"))]);
        assert!(bad.is_err());
        let bad = Decomposition::new(Kind::Pi, x(), false, vec![pair("p", "q", None), pair("p", "q", None)]);
        assert!(bad.is_err());
        let bad = Decomposition::new(Kind::Pi, x(), true, vec![pair("p", "X", Some("a"))]);
        assert!(bad.is_err());
        assert!(Decomposition::new(Kind::Pi, x(), false, vec![]).is_err());
    }

    #[test]
    fn json_shape() {
        let r = classify_pi(&f("p & [a](q | (r & X))"), &x()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "kind": "Pi", "x": "X", "leadingModality": false,
                "pairs": [
                    {"phi": "false", "psi": "p", "alpha": null},
                    {"phi": "q", "psi": "r", "alpha": "a"}
                ],
                "padding": [{"pair": 1, "inserted": "false"}]
            })
        );
        let back: ClassifyResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        let broken = serde_json::json!({"kind": "Pi", "x": "X", "leadingModality": true,
            "pairs": [{"phi": "p", "psi": "q", "alpha": null}]});
        assert!(serde_json::from_value::<Decomposition>(broken).is_err());
    }
}
