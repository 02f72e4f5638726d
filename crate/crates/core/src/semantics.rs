//! Finite Kripke models and the satisfaction relation.
//!
//! Formulae are evaluated to their full extension (the set of worlds where
//! they hold) in one bottom-up pass, so a test program costs one evaluation
//! of its condition rather than one per world.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::syntax::{is_lower_ident, is_upper_ident, Formula, Program, VarName};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("candidate solution mentions the equation variable {0}")]
    CandidateNotXFree(VarName),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
}

/// Extension of a formula: one flag per world, in model order.
pub type WorldSet = Vec<bool>;

/// A binary relation over the worlds of one model, as a square boolean matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Relation {
    size: usize,
    cells: Vec<bool>,
}

impl Relation {
    pub fn empty(size: usize) -> Self {
        Relation { size, cells: vec![false; size * size] }
    }

    pub fn identity(size: usize) -> Self {
        let mut r = Relation::empty(size);
        for w in 0..size {
            r.insert(w, w);
        }
        r
    }

    pub fn diagonal(set: &[bool]) -> Self {
        let mut r = Relation::empty(set.len());
        for (w, &keep) in set.iter().enumerate() {
            if keep {
                r.insert(w, w);
            }
        }
        r
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, from: usize, to: usize) -> bool {
        self.cells[from * self.size + to]
    }

    pub fn insert(&mut self, from: usize, to: usize) {
        self.cells[from * self.size + to] = true;
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.size).flat_map(move |w| (0..self.size).map(move |v| (w, v))).filter(|&(w, v)| self.contains(w, v))
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// `self` followed by `other`.
    pub fn compose(&self, other: &Relation) -> Relation {
        let n = self.size;
        let mut out = Relation::empty(n);
        for w in 0..n {
            for u in 0..n {
                if self.contains(w, u) {
                    for v in 0..n {
                        if other.contains(u, v) {
                            out.insert(w, v);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn union(&self, other: &Relation) -> Relation {
        let cells = self.cells.iter().zip(&other.cells).map(|(a, b)| *a || *b).collect();
        Relation { size: self.size, cells }
    }

    /// Reflexive-transitive closure (Warshall).
    pub fn star(&self) -> Relation {
        let n = self.size;
        let mut r = self.clone();
        for k in 0..n {
            for i in 0..n {
                if r.contains(i, k) {
                    for j in 0..n {
                        if r.contains(k, j) {
                            r.insert(i, j);
                        }
                    }
                }
            }
        }
        for w in 0..n {
            r.insert(w, w);
        }
        r
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.size).all(|w| self.contains(w, w))
    }

    pub fn is_transitive(&self) -> bool {
        self.compose(self).pairs().all(|(w, v)| self.contains(w, v))
    }

    /// Worlds with some successor inside `target`.
    pub fn preimage_some(&self, target: &[bool]) -> WorldSet {
        (0..self.size).map(|w| (0..self.size).any(|v| self.contains(w, v) && target[v])).collect()
    }

    /// Worlds all of whose successors are inside `target`.
    pub fn preimage_all(&self, target: &[bool]) -> WorldSet {
        (0..self.size).map(|w| (0..self.size).all(|v| !self.contains(w, v) || target[v])).collect()
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

/// A finite model. Atoms, variables and programs missing from the maps
/// denote the empty extension or relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeModel {
    worlds: Vec<String>,
    index: HashMap<String, usize>,
    relations: BTreeMap<String, Relation>,
    valuation: BTreeMap<String, WorldSet>,
    seed: Option<u64>,
}

impl KripkeModel {
    /// Builds a model from world names, program edges and a valuation,
    /// all given by world name.
    pub fn new(
        worlds: Vec<String>,
        programs: BTreeMap<String, Vec<(String, String)>>,
        valuation: BTreeMap<String, Vec<String>>,
    ) -> Result<Self, SemanticsError> {
        if worlds.is_empty() {
            return Err(SemanticsError::InvalidModel("the world set is empty".into()));
        }
        let mut index = HashMap::new();
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(SemanticsError::InvalidModel(format!("world `{w}` is listed twice")));
            }
        }
        let n = worlds.len();
        let lookup = |w: &String| {
            index.get(w).copied().ok_or_else(|| SemanticsError::InvalidModel(format!("unknown world `{w}`")))
        };
        let mut relations = BTreeMap::new();
        for (name, edges) in programs {
            if !is_lower_ident(&name) {
                return Err(SemanticsError::InvalidModel(format!("`{name}` is not an atomic program name")));
            }
            let mut rel = Relation::empty(n);
            for (from, to) in &edges {
                rel.insert(lookup(from)?, lookup(to)?);
            }
            relations.insert(name, rel);
        }
        let mut val = BTreeMap::new();
        for (name, members) in valuation {
            if !is_lower_ident(&name) && !is_upper_ident(&name) {
                return Err(SemanticsError::InvalidModel(format!("`{name}` is not an atom or variable name")));
            }
            let mut set = vec![false; n];
            for w in &members {
                set[lookup(w)?] = true;
            }
            val.insert(name, set);
        }
        Ok(KripkeModel { worlds, index, relations, valuation: val, seed: None })
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn world_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn extension_of(&self, name: &str) -> WorldSet {
        self.valuation.get(name).cloned().unwrap_or_else(|| vec![false; self.world_count()])
    }

    pub fn atomic_relation(&self, name: &str) -> Relation {
        self.relations.get(name).cloned().unwrap_or_else(|| Relation::empty(self.world_count()))
    }

    /// Copy of the model with the extension of `name` replaced.
    pub fn with_extension(&self, name: &str, set: WorldSet) -> KripkeModel {
        assert_eq!(set.len(), self.world_count());
        let mut m = self.clone();
        m.valuation.insert(name.to_string(), set);
        m
    }

    pub fn relation(&self, prog: &Program) -> Relation {
        match prog {
            Program::Atomic(a) => self.atomic_relation(a),
            Program::Test(cond) => Relation::diagonal(&self.extension(cond)),
            Program::Seq(a, b) => self.relation(a).compose(&self.relation(b)),
            Program::Choice(a, b) => self.relation(a).union(&self.relation(b)),
            Program::Star(a) => self.relation(a).star(),
        }
    }

    pub fn extension(&self, f: &Formula) -> WorldSet {
        let n = self.world_count();
        match f {
            Formula::Atom(p) => self.extension_of(p),
            Formula::NegAtom(p) => self.extension_of(p).into_iter().map(|b| !b).collect(),
            Formula::Var(x) => self.extension_of(x.as_str()),
            Formula::Top => vec![true; n],
            Formula::Bot => vec![false; n],
            Formula::Or(l, r) => zip_with(self.extension(l), self.extension(r), |a, b| a || b),
            Formula::And(l, r) => zip_with(self.extension(l), self.extension(r), |a, b| a && b),
            Formula::Diamond(a, body) => self.relation(a).preimage_some(&self.extension(body)),
            Formula::Box(a, body) => self.relation(a).preimage_all(&self.extension(body)),
        }
    }

    pub fn satisfies(&self, world: &str, f: &Formula) -> Result<bool, SemanticsError> {
        let w = self.world_index(world).ok_or_else(|| SemanticsError::UnknownWorld(world.to_string()))?;
        Ok(self.extension(f)[w])
    }

    /// First world, in model order, where the two formulae disagree.
    pub fn equivalent_on(&self, left: &Formula, right: &Formula) -> Equivalence {
        let l = self.extension(left);
        let r = self.extension(right);
        match l.iter().zip(&r).position(|(a, b)| a != b) {
            None => Equivalence::Agree,
            Some(w) => {
                Equivalence::Counterexample(Counterexample { world: self.worlds[w].clone(), left: l[w], right: r[w] })
            }
        }
    }

    /// Checks `candidate ≡ equation[x := candidate]` at every world.
    pub fn check_solution_on(
        &self,
        x: &VarName,
        equation: &Formula,
        candidate: &Formula,
    ) -> Result<EquationReport, SemanticsError> {
        if !candidate.is_x_free(x) {
            return Err(SemanticsError::CandidateNotXFree(x.clone()));
        }
        let instantiated = equation.substitute(x, candidate);
        let outcome = self.equivalent_on(candidate, &instantiated);
        Ok(EquationReport {
            passed: outcome == Equivalence::Agree,
            counterexample: match outcome {
                Equivalence::Agree => None,
                Equivalence::Counterexample(c) => Some(c),
            },
            instantiated,
        })
    }

    pub fn random(params: &ModelGenParams) -> Result<KripkeModel, SemanticsError> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let n = params.world_count;
        let worlds: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let index = worlds.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let mut relations = BTreeMap::new();
        for prog in &params.programs {
            let mut rel = Relation::empty(n);
            for w in 0..n {
                for v in 0..n {
                    if rng.gen_bool(params.edge_probability) {
                        rel.insert(w, v);
                    }
                }
            }
            relations.insert(prog.clone(), rel);
        }
        let mut valuation = BTreeMap::new();
        for name in params.atoms.iter().chain(&params.vars) {
            let set = (0..n).map(|_| rng.gen_bool(params.atom_probability)).collect();
            valuation.insert(name.clone(), set);
        }
        Ok(KripkeModel { worlds, index, relations, valuation, seed: Some(params.seed) })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json_str(s: &str) -> Result<KripkeModel, SemanticsError> {
        let file: ModelFile = serde_json::from_str(s).map_err(|e| SemanticsError::InvalidModel(e.to_string()))?;
        let seed = file.seed;
        let programs = file
            .programs
            .into_iter()
            .map(|(name, edges)| (name, edges.into_iter().map(|[a, b]| (a, b)).collect()))
            .collect();
        let mut model = KripkeModel::new(file.worlds, programs, file.valuation)?;
        model.seed = seed;
        Ok(model)
    }
}

fn zip_with(a: WorldSet, b: WorldSet, op: fn(bool, bool) -> bool) -> WorldSet {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// On-disk model format.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    worlds: Vec<String>,
    #[serde(default)]
    programs: BTreeMap<String, Vec<[String; 2]>>,
    #[serde(default)]
    valuation: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl From<&KripkeModel> for ModelFile {
    fn from(m: &KripkeModel) -> Self {
        let programs = m
            .relations
            .iter()
            .map(|(name, rel)| {
                let edges = rel.pairs().map(|(w, v)| [m.worlds[w].clone(), m.worlds[v].clone()]).collect();
                (name.clone(), edges)
            })
            .collect();
        let valuation = m
            .valuation
            .iter()
            .map(|(name, set)| {
                let members = set.iter().enumerate().filter(|(_, &b)| b).map(|(w, _)| m.worlds[w].clone());
                (name.clone(), members.collect())
            })
            .collect();
        ModelFile { worlds: m.worlds.clone(), programs, valuation, seed: m.seed }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub world: String,
    pub left: bool,
    pub right: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Agree,
    Counterexample(Counterexample),
}

/// Outcome of checking a candidate against an equation on one model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquationReport {
    pub passed: bool,
    /// `left` is the candidate's value, `right` the instantiated equation's.
    pub counterexample: Option<Counterexample>,
    pub instantiated: Formula,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelGenParams {
    pub world_count: usize,
    pub atoms: Vec<String>,
    pub vars: Vec<String>,
    pub programs: Vec<String>,
    pub edge_probability: f64,
    pub atom_probability: f64,
    pub seed: u64,
}

impl ModelGenParams {
    /// Names taken from the given formulae; variables other than those
    /// listed in `vars` are still interpreted if they occur.
    pub fn covering<'a>(formulae: impl IntoIterator<Item = &'a Formula>, world_count: usize, seed: u64) -> Self {
        let (mut atoms, mut vars, mut programs) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
        for f in formulae {
            atoms.extend(f.atoms());
            vars.extend(f.vars().into_iter().map(|v| v.as_str().to_string()));
            programs.extend(f.programs());
        }
        ModelGenParams {
            world_count,
            atoms: atoms.into_iter().collect(),
            vars: vars.into_iter().collect(),
            programs: programs.into_iter().collect(),
            edge_probability: 0.4,
            atom_probability: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SemanticsError> {
        if self.world_count == 0 {
            return Err(SemanticsError::InvalidParams("world count must be at least 1".into()));
        }
        for (label, p) in [("edge", self.edge_probability), ("atom", self.atom_probability)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SemanticsError::InvalidParams(format!("{label} probability {p} is outside [0, 1]")));
            }
        }
        if let Some(bad) = self.atoms.iter().chain(&self.programs).find(|s| !is_lower_ident(s)) {
            return Err(SemanticsError::InvalidParams(format!("`{bad}` is not a lowercase identifier")));
        }
        if let Some(bad) = self.vars.iter().find(|s| !is_upper_ident(s)) {
            return Err(SemanticsError::InvalidParams(format!("`{bad}` is not a variable name")));
        }
        Ok(())
    }
}
