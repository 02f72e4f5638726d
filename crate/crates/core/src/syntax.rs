//! Formula and program trees in negation normal form.
//!
//! Negation is a defined operation ([`Formula::negate`]) rather than a node:
//! it flips atoms, swaps the dual connectives and modalities, and leaves
//! variables untouched. Programs are never negated.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Name of a formula variable (`X`, `Y`, ...). Variables are uppercase
/// identifiers; atoms and atomic programs are lowercase.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarName(String);

impl VarName {
    pub fn new(name: impl Into<String>) -> Result<Self, InvalidName> {
        let name = name.into();
        if is_upper_ident(&name) {
            Ok(VarName(name))
        } else {
            Err(InvalidName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for VarName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for VarName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        VarName::new(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a valid variable name (expected an uppercase identifier)")]
pub struct InvalidName(pub String);

/// Lowercase identifier: atoms and atomic programs. `u`, `true` and `false`
/// are reserved by the text syntax.
pub fn is_lower_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "u" | "true" | "false")
}

/// Uppercase identifier: variables.
pub fn is_upper_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String),
    NegAtom(String),
    Var(VarName),
    Top,
    Bot,
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Diamond(Box<Program>, Box<Formula>),
    Box(Box<Program>, Box<Formula>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Program {
    Atomic(String),
    Test(Box<Formula>),
    Seq(Box<Program>, Box<Program>),
    Choice(Box<Program>, Box<Program>),
    Star(Box<Program>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn neg_atom(name: impl Into<String>) -> Self {
        Formula::NegAtom(name.into())
    }

    pub fn var(name: &VarName) -> Self {
        Formula::Var(name.clone())
    }

    pub fn or(left: Formula, right: Formula) -> Self {
        Formula::Or(Box::new(left), Box::new(right))
    }

    pub fn and(left: Formula, right: Formula) -> Self {
        Formula::And(Box::new(left), Box::new(right))
    }

    pub fn boxed(prog: Program, body: Formula) -> Self {
        Formula::Box(Box::new(prog), Box::new(body))
    }

    pub fn diamond(prog: Program, body: Formula) -> Self {
        Formula::Diamond(Box::new(prog), Box::new(body))
    }

    /// Right-associated conjunction of a nonempty list; `Top` for an empty one.
    pub fn conjunction(items: Vec<Formula>) -> Self {
        fold_right(items, Formula::and).unwrap_or(Formula::Top)
    }

    /// Right-associated disjunction of a nonempty list; `Bot` for an empty one.
    pub fn disjunction(items: Vec<Formula>) -> Self {
        fold_right(items, Formula::or).unwrap_or(Formula::Bot)
    }

    /// Negation normal form negation. Variables are fixed points.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Atom(p) => Formula::NegAtom(p.clone()),
            Formula::NegAtom(p) => Formula::Atom(p.clone()),
            Formula::Var(x) => Formula::Var(x.clone()),
            Formula::Top => Formula::Bot,
            Formula::Bot => Formula::Top,
            Formula::Or(l, r) => Formula::and(l.negate(), r.negate()),
            Formula::And(l, r) => Formula::or(l.negate(), r.negate()),
            Formula::Diamond(a, body) => Formula::Box(a.clone(), Box::new(body.negate())),
            Formula::Box(a, body) => Formula::Diamond(a.clone(), Box::new(body.negate())),
        }
    }

    /// Replaces every occurrence of `x`, including occurrences inside tests.
    pub fn substitute(&self, x: &VarName, replacement: &Formula) -> Formula {
        match self {
            Formula::Var(y) if y == x => replacement.clone(),
            Formula::Atom(_) | Formula::NegAtom(_) | Formula::Var(_) | Formula::Top | Formula::Bot => self.clone(),
            Formula::Or(l, r) => Formula::or(l.substitute(x, replacement), r.substitute(x, replacement)),
            Formula::And(l, r) => Formula::and(l.substitute(x, replacement), r.substitute(x, replacement)),
            Formula::Diamond(a, body) => {
                Formula::diamond(a.substitute(x, replacement), body.substitute(x, replacement))
            }
            Formula::Box(a, body) => Formula::boxed(a.substitute(x, replacement), body.substitute(x, replacement)),
        }
    }

    pub fn vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Formula::Var(x) => {
                out.insert(x.clone());
            }
            Formula::Atom(_) | Formula::NegAtom(_) | Formula::Top | Formula::Bot => {}
            Formula::Or(l, r) | Formula::And(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Formula::Diamond(a, body) | Formula::Box(a, body) => {
                a.collect_vars(out);
                body.collect_vars(out);
            }
        }
    }

    pub fn is_x_free(&self, x: &VarName) -> bool {
        self.occurrences(x) == 0
    }

    pub fn is_variable_free(&self) -> bool {
        self.vars().is_empty()
    }

    /// Number of occurrences of `x`, counting those inside programs.
    pub fn occurrences(&self, x: &VarName) -> usize {
        match self {
            Formula::Var(y) => usize::from(y == x),
            Formula::Atom(_) | Formula::NegAtom(_) | Formula::Top | Formula::Bot => 0,
            Formula::Or(l, r) | Formula::And(l, r) => l.occurrences(x) + r.occurrences(x),
            Formula::Diamond(a, body) | Formula::Box(a, body) => a.occurrences(x) + body.occurrences(x),
        }
    }

    /// Atom names, including those under tests.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut atoms = BTreeSet::new();
        let mut progs = BTreeSet::new();
        self.collect_names(&mut atoms, &mut progs);
        atoms
    }

    /// Atomic program names, including those nested in tests.
    pub fn programs(&self) -> BTreeSet<String> {
        let mut atoms = BTreeSet::new();
        let mut progs = BTreeSet::new();
        self.collect_names(&mut atoms, &mut progs);
        progs
    }

    fn collect_names(&self, atoms: &mut BTreeSet<String>, progs: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(p) | Formula::NegAtom(p) => {
                atoms.insert(p.clone());
            }
            Formula::Var(_) | Formula::Top | Formula::Bot => {}
            Formula::Or(l, r) | Formula::And(l, r) => {
                l.collect_names(atoms, progs);
                r.collect_names(atoms, progs);
            }
            Formula::Diamond(a, body) | Formula::Box(a, body) => {
                a.collect_names(atoms, progs);
                body.collect_names(atoms, progs);
            }
        }
    }

    /// Number of nodes, programs included.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) | Formula::Var(_) | Formula::Top | Formula::Bot => 1,
            Formula::Or(l, r) | Formula::And(l, r) => 1 + l.size() + r.size(),
            Formula::Diamond(a, body) | Formula::Box(a, body) => 1 + a.size() + body.size(),
        }
    }

    /// `¬φ ∨ ψ`.
    pub fn implies(&self, other: &Formula) -> Formula {
        Formula::or(self.negate(), other.clone())
    }

    /// `(φ → ψ) ∧ (ψ → φ)`.
    pub fn iff(&self, other: &Formula) -> Formula {
        Formula::and(self.implies(other), other.implies(self))
    }

    /// Syntactic equality after flattening maximal `∧`, `∨`, `;` and `∪`
    /// chains. Operand order matters.
    pub fn equal_modulo_assoc(&self, other: &Formula) -> bool {
        self.reassociate() == other.reassociate()
    }

    /// The right-associated representative of this formula's
    /// associativity class.
    pub fn reassociate(&self) -> Formula {
        match self {
            Formula::And(..) => {
                let mut items = Vec::new();
                flatten_formula(self, &mut items, |f| match f {
                    Formula::And(l, r) => Some((l, r)),
                    _ => None,
                });
                Formula::conjunction(items.into_iter().map(Formula::reassociate).collect())
            }
            Formula::Or(..) => {
                let mut items = Vec::new();
                flatten_formula(self, &mut items, |f| match f {
                    Formula::Or(l, r) => Some((l, r)),
                    _ => None,
                });
                Formula::disjunction(items.into_iter().map(Formula::reassociate).collect())
            }
            Formula::Diamond(a, body) => Formula::diamond(a.reassociate(), body.reassociate()),
            Formula::Box(a, body) => Formula::boxed(a.reassociate(), body.reassociate()),
            _ => self.clone(),
        }
    }
}

fn flatten_formula<'a>(
    f: &'a Formula,
    out: &mut Vec<&'a Formula>,
    split: fn(&'a Formula) -> Option<(&'a Formula, &'a Formula)>,
) {
    match split(f) {
        Some((l, r)) => {
            flatten_formula(l, out, split);
            flatten_formula(r, out, split);
        }
        None => out.push(f),
    }
}

fn flatten_program<'a>(
    p: &'a Program,
    out: &mut Vec<&'a Program>,
    split: fn(&'a Program) -> Option<(&'a Program, &'a Program)>,
) {
    match split(p) {
        Some((l, r)) => {
            flatten_program(l, out, split);
            flatten_program(r, out, split);
        }
        None => out.push(p),
    }
}

fn fold_right<T>(items: Vec<T>, join: fn(T, T) -> T) -> Option<T> {
    let mut iter = items.into_iter().rev();
    let last = iter.next()?;
    Some(iter.fold(last, |acc, item| join(item, acc)))
}

impl Program {
    pub fn atomic(name: impl Into<String>) -> Self {
        Program::Atomic(name.into())
    }

    pub fn test(cond: Formula) -> Self {
        Program::Test(Box::new(cond))
    }

    pub fn seq(first: Program, second: Program) -> Self {
        Program::Seq(Box::new(first), Box::new(second))
    }

    pub fn choice(left: Program, right: Program) -> Self {
        Program::Choice(Box::new(left), Box::new(right))
    }

    pub fn star(body: Program) -> Self {
        Program::Star(Box::new(body))
    }

    /// The identity program `true?`.
    pub fn skip() -> Self {
        Program::test(Formula::Top)
    }

    /// Right-associated sequence; the identity program for an empty list.
    pub fn sequence(items: Vec<Program>) -> Self {
        fold_right(items, Program::seq).unwrap_or_else(Program::skip)
    }

    pub fn substitute(&self, x: &VarName, replacement: &Formula) -> Program {
        match self {
            Program::Atomic(_) => self.clone(),
            Program::Test(cond) => Program::test(cond.substitute(x, replacement)),
            Program::Seq(a, b) => Program::seq(a.substitute(x, replacement), b.substitute(x, replacement)),
            Program::Choice(a, b) => Program::choice(a.substitute(x, replacement), b.substitute(x, replacement)),
            Program::Star(a) => Program::star(a.substitute(x, replacement)),
        }
    }

    pub fn vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Program::Atomic(_) => {}
            Program::Test(cond) => cond.collect_vars(out),
            Program::Seq(a, b) | Program::Choice(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Program::Star(a) => a.collect_vars(out),
        }
    }

    pub fn is_x_free(&self, x: &VarName) -> bool {
        self.occurrences(x) == 0
    }

    pub fn occurrences(&self, x: &VarName) -> usize {
        match self {
            Program::Atomic(_) => 0,
            Program::Test(cond) => cond.occurrences(x),
            Program::Seq(a, b) | Program::Choice(a, b) => a.occurrences(x) + b.occurrences(x),
            Program::Star(a) => a.occurrences(x),
        }
    }

    fn collect_names(&self, atoms: &mut BTreeSet<String>, progs: &mut BTreeSet<String>) {
        match self {
            Program::Atomic(a) => {
                progs.insert(a.clone());
            }
            Program::Test(cond) => cond.collect_names(atoms, progs),
            Program::Seq(a, b) | Program::Choice(a, b) => {
                a.collect_names(atoms, progs);
                b.collect_names(atoms, progs);
            }
            Program::Star(a) => a.collect_names(atoms, progs),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Program::Atomic(_) => 1,
            Program::Test(cond) => 1 + cond.size(),
            Program::Seq(a, b) | Program::Choice(a, b) => 1 + a.size() + b.size(),
            Program::Star(a) => 1 + a.size(),
        }
    }

    pub fn equal_modulo_assoc(&self, other: &Program) -> bool {
        self.reassociate() == other.reassociate()
    }

    pub fn reassociate(&self) -> Program {
        match self {
            Program::Seq(..) => {
                let mut items = Vec::new();
                flatten_program(self, &mut items, |p| match p {
                    Program::Seq(a, b) => Some((a, b)),
                    _ => None,
                });
                Program::sequence(items.into_iter().map(Program::reassociate).collect())
            }
            Program::Choice(..) => {
                let mut items = Vec::new();
                flatten_program(self, &mut items, |p| match p {
                    Program::Choice(a, b) => Some((a, b)),
                    _ => None,
                });
                let rebuilt = items.into_iter().map(Program::reassociate).collect();
                fold_right(rebuilt, Program::choice).expect("choice chain is nonempty")
            }
            Program::Test(cond) => Program::test(cond.reassociate()),
            Program::Star(a) => Program::star(a.reassociate()),
            Program::Atomic(_) => self.clone(),
        }
    }
}
