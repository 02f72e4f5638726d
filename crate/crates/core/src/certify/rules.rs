use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Formula-valued metavariables.
pub const FORMULA_METAS: [&str; 3] = ["phi", "psi", "chi"];
/// Program-valued metavariables.
pub const PROGRAM_METAS: [&str; 2] = ["alpha", "beta"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
    E9,
    E10,
    AndAssoc,
    OrAssoc,
    AndComm,
    OrComm,
}

impl RuleId {
    pub const ALL: [RuleId; 14] = [
        RuleId::E1,
        RuleId::E2,
        RuleId::E3,
        RuleId::E4,
        RuleId::E5,
        RuleId::E6,
        RuleId::E7,
        RuleId::E8,
        RuleId::E9,
        RuleId::E10,
        RuleId::AndAssoc,
        RuleId::OrAssoc,
        RuleId::AndComm,
        RuleId::OrComm,
    ];

    /// E1 through E10, excluding the associativity and commutativity rules.
    pub fn is_equivalence(self) -> bool {
        !self.is_structural()
    }

    pub fn is_structural(self) -> bool {
        matches!(self, RuleId::AndAssoc | RuleId::OrAssoc | RuleId::AndComm | RuleId::OrComm)
    }

    /// The rule obtained by negating both sides.
    pub fn dual(self) -> RuleId {
        use RuleId::*;
        match self {
            E1 => E6,
            E6 => E1,
            E2 => E7,
            E7 => E2,
            E3 => E8,
            E8 => E3,
            E4 => E9,
            E9 => E4,
            E5 => E10,
            E10 => E5,
            AndAssoc => OrAssoc,
            OrAssoc => AndAssoc,
            AndComm => OrComm,
            OrComm => AndComm,
        }
    }

    pub fn rule(self) -> Rule {
        use FormulaPattern as F;
        use ProgramPattern as P;
        let phi = || F::meta("phi");
        let psi = || F::meta("psi");
        let chi = || F::meta("chi");
        let alpha = || P::meta("alpha");
        let beta = || P::meta("beta");
        let (lhs, rhs, side) = match self {
            RuleId::E1 => (
                F::boxed(alpha(), F::boxed(beta(), phi())),
                F::boxed(P::seq(alpha(), beta()), phi()),
                SideCondition::None,
            ),
            RuleId::E2 => (F::and(phi(), psi()), F::diamond(P::test(phi()), psi()), SideCondition::None),
            RuleId::E3 => (
                F::boxed(alpha(), F::and(phi(), psi())),
                F::and(F::boxed(alpha(), phi()), F::boxed(alpha(), psi())),
                SideCondition::None,
            ),
            RuleId::E4 => (
                F::boxed(P::star(alpha()), phi()),
                F::and(phi(), F::boxed(alpha(), F::boxed(P::star(alpha()), phi()))),
                SideCondition::None,
            ),
            RuleId::E5 => (F::boxed(P::test(F::Top), phi()), phi(), SideCondition::None),
            RuleId::E6 => (
                F::diamond(alpha(), F::diamond(beta(), phi())),
                F::diamond(P::seq(alpha(), beta()), phi()),
                SideCondition::None,
            ),
            RuleId::E7 => (
                F::or(phi(), psi()),
                F::boxed(P::test(F::NegMeta("phi".into())), psi()),
                SideCondition::VariableFree("phi"),
            ),
            RuleId::E8 => (
                F::diamond(alpha(), F::or(phi(), psi())),
                F::or(F::diamond(alpha(), phi()), F::diamond(alpha(), psi())),
                SideCondition::None,
            ),
            RuleId::E9 => (
                F::diamond(P::star(alpha()), phi()),
                F::or(phi(), F::diamond(alpha(), F::diamond(P::star(alpha()), phi()))),
                SideCondition::None,
            ),
            RuleId::E10 => (F::diamond(P::test(F::Top), phi()), phi(), SideCondition::None),
            RuleId::AndAssoc => {
                (F::and(F::and(phi(), psi()), chi()), F::and(phi(), F::and(psi(), chi())), SideCondition::None)
            }
            RuleId::OrAssoc => {
                (F::or(F::or(phi(), psi()), chi()), F::or(phi(), F::or(psi(), chi())), SideCondition::None)
            }
            RuleId::AndComm => (F::and(phi(), psi()), F::and(psi(), phi()), SideCondition::None),
            RuleId::OrComm => (F::or(phi(), psi()), F::or(psi(), phi()), SideCondition::None),
        };
        Rule { label: self.to_string(), lhs, rhs, side }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for RuleId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL.into_iter().find(|r| r.to_string() == s).ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    LR,
    RL,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideCondition {
    None,
    /// The named formula binding must not contain variables.
    VariableFree(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormulaPattern {
    Meta(String),
    /// Matches the syntactic negation of the bound formula.
    NegMeta(String),
    Top,
    Bot,
    And(Box<FormulaPattern>, Box<FormulaPattern>),
    Or(Box<FormulaPattern>, Box<FormulaPattern>),
    Diamond(Box<ProgramPattern>, Box<FormulaPattern>),
    Box(Box<ProgramPattern>, Box<FormulaPattern>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProgramPattern {
    Meta(String),
    Test(Box<FormulaPattern>),
    Seq(Box<ProgramPattern>, Box<ProgramPattern>),
    Choice(Box<ProgramPattern>, Box<ProgramPattern>),
    Star(Box<ProgramPattern>),
}

impl FormulaPattern {
    pub fn meta(name: &str) -> Self {
        FormulaPattern::Meta(name.into())
    }
    pub fn and(l: Self, r: Self) -> Self {
        FormulaPattern::And(Box::new(l), Box::new(r))
    }
    pub fn or(l: Self, r: Self) -> Self {
        FormulaPattern::Or(Box::new(l), Box::new(r))
    }
    pub fn boxed(p: ProgramPattern, f: Self) -> Self {
        FormulaPattern::Box(Box::new(p), Box::new(f))
    }
    pub fn diamond(p: ProgramPattern, f: Self) -> Self {
        FormulaPattern::Diamond(Box::new(p), Box::new(f))
    }

    fn collect_metas(&self, out: &mut BTreeSet<String>) {
        match self {
            FormulaPattern::Meta(m) | FormulaPattern::NegMeta(m) => {
                out.insert(m.clone());
            }
            FormulaPattern::Top | FormulaPattern::Bot => {}
            FormulaPattern::And(l, r) | FormulaPattern::Or(l, r) => {
                l.collect_metas(out);
                r.collect_metas(out);
            }
            FormulaPattern::Diamond(p, f) | FormulaPattern::Box(p, f) => {
                p.collect_metas(out);
                f.collect_metas(out);
            }
        }
    }
}

impl ProgramPattern {
    pub fn meta(name: &str) -> Self {
        ProgramPattern::Meta(name.into())
    }
    pub fn test(f: FormulaPattern) -> Self {
        ProgramPattern::Test(Box::new(f))
    }
    pub fn seq(l: Self, r: Self) -> Self {
        ProgramPattern::Seq(Box::new(l), Box::new(r))
    }
    pub fn choice(l: Self, r: Self) -> Self {
        ProgramPattern::Choice(Box::new(l), Box::new(r))
    }
    pub fn star(p: Self) -> Self {
        ProgramPattern::Star(Box::new(p))
    }

    fn collect_metas(&self, out: &mut BTreeSet<String>) {
        match self {
            ProgramPattern::Meta(m) => {
                out.insert(m.clone());
            }
            ProgramPattern::Test(f) => f.collect_metas(out),
            ProgramPattern::Seq(l, r) | ProgramPattern::Choice(l, r) => {
                l.collect_metas(out);
                r.collect_metas(out);
            }
            ProgramPattern::Star(p) => p.collect_metas(out),
        }
    }
}

/// An equivalence `lhs ≡ rhs` usable in either direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub label: String,
    pub lhs: FormulaPattern,
    pub rhs: FormulaPattern,
    pub side: SideCondition,
}

impl Rule {
    pub fn metas(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.lhs.collect_metas(&mut out);
        self.rhs.collect_metas(&mut out);
        out
    }

    /// `(source, target)` for the given direction.
    pub fn oriented(&self, direction: Direction) -> (&FormulaPattern, &FormulaPattern) {
        match direction {
            Direction::LR => (&self.lhs, &self.rhs),
            Direction::RL => (&self.rhs, &self.lhs),
        }
    }

    /// E10 as it appears in print, `<false?>φ ≡ φ`. Unsound; kept so the
    /// rule validator can be shown to reject it.
    pub fn printed_e10() -> Rule {
        use FormulaPattern as F;
        Rule {
            label: "E10-printed".into(),
            lhs: F::diamond(ProgramPattern::test(F::Bot), F::meta("phi")),
            rhs: F::meta("phi"),
            side: SideCondition::None,
        }
    }

    pub fn standard() -> Vec<Rule> {
        RuleId::ALL.into_iter().map(RuleId::rule).collect()
    }
}

pub fn is_formula_meta(name: &str) -> bool {
    FORMULA_METAS.contains(&name)
}

pub fn is_program_meta(name: &str) -> bool {
    PROGRAM_METAS.contains(&name)
}
