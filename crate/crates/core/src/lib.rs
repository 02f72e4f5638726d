//! Fixed-point equations `x ≡ φ(x)` in propositional dynamic logic.

pub mod certify;
pub mod fuzz;
pub mod hierarchy;
pub mod semantics;
pub mod syntax;
pub mod synthesis;
pub mod text;

pub use certify::{check_certificate, generate_certificate, Certificate, CheckReport, RewriteStep, RuleId};
pub use hierarchy::{classify, Classification, ClassifyOptions, ClassifyResult, Decomposition, Kind, Pair};
pub use semantics::{EquationReport, Equivalence, KripkeModel, ModelGenParams, Relation};
pub use syntax::{Formula, Program, VarName};
pub use synthesis::{solve, Schema, Solution, Strategy, SynthesisError};
pub use text::{parse_formula, parse_program, print_formula, print_program, ParseError};
