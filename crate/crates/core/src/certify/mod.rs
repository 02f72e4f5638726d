//! Rewrite certificates for `λ ≡ φ(λ)`.
//!
//! A certificate is a list of positioned rule applications. Each step stores
//! its bindings, so checking is pure replay; an optional digest of the
//! intermediate formula pins down where the step is supposed to land.

mod generate;
mod rewrite;
mod rules;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::syntax::Formula;

pub use generate::{generate_certificate, generate_certificate_with, GenerateOptions, DEFAULT_SEARCH_CAP};
pub use rewrite::{
    apply_with, formula_at, formula_paths, instantiate, match_rule, parse_bindings, render_bindings, replace_at,
    Bindings, RewriteError, Term,
};
pub use rules::{
    is_formula_meta, is_program_meta, Direction, FormulaPattern, ProgramPattern, Rule, RuleId, SideCondition,
    FORMULA_METAS, PROGRAM_METAS,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteStep {
    pub rule: RuleId,
    pub direction: Direction,
    pub path: Vec<usize>,
    pub bindings: BTreeMap<String, String>,
    /// Derivation line this step belongs to, for grouping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    /// Hex prefix of the SHA-256 of the canonical text of the result.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub from: Formula,
    pub to: Formula,
    pub steps: Vec<RewriteStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error("result digest {found} does not match recorded {expected}")]
    DigestMismatch { expected: String, found: String },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CertifyError {
    #[error("literal Sigma solutions cannot be certified; use the duality strategy")]
    NotCertifiable,
    #[error("solution does not carry its decomposition")]
    MissingDecomposition,
    #[error("solution disagrees with the schema for its decomposition")]
    SolutionMismatch,
    #[error("no derivation found within {cap} search states")]
    SearchExhausted { cap: usize },
    #[error("dual replay failed at step {index}: {error}")]
    DualReplay { index: usize, error: StepError },
}

pub const DIGEST_HEX_LEN: usize = 16;

pub fn digest(f: &Formula) -> String {
    let hash = Sha256::digest(f.to_string().as_bytes());
    hash.iter().take(DIGEST_HEX_LEN / 2).map(|b| format!("{b:02x}")).collect()
}

/// Replays one step.
pub fn apply_rule(f: &Formula, step: &RewriteStep) -> Result<Formula, StepError> {
    let bindings = parse_bindings(&step.bindings)?;
    let out = apply_with(f, &step.rule.rule(), step.direction, &step.path, &bindings)?;
    if let Some(expected) = &step.digest {
        let found = digest(&out);
        if *expected != found {
            return Err(StepError::DigestMismatch { expected: expected.clone(), found });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckReport {
    pub passed: bool,
    pub steps_checked: usize,
    /// Index of the first step that failed to replay.
    pub failed_step: Option<usize>,
    pub error: Option<String>,
    pub final_formula: Formula,
}

pub fn check_certificate(cert: &Certificate) -> CheckReport {
    let mut current = cert.from.clone();
    for (i, step) in cert.steps.iter().enumerate() {
        match apply_rule(&current, step) {
            Ok(next) => current = next,
            Err(e) => {
                return CheckReport {
                    passed: false,
                    steps_checked: i,
                    failed_step: Some(i),
                    error: Some(e.to_string()),
                    final_formula: current,
                }
            }
        }
    }
    let passed = current == cert.to;
    CheckReport {
        passed,
        steps_checked: cert.steps.len(),
        failed_step: None,
        error: (!passed).then(|| "replay does not end at the target formula".to_string()),
        final_formula: current,
    }
}

impl Certificate {
    /// E-rule ids per derivation line, sorted and deduplicated. Lines with
    /// only structural steps are skipped.
    pub fn grouped_rule_ids(&self) -> Vec<Vec<RuleId>> {
        let mut groups: Vec<(Option<usize>, Vec<RuleId>)> = Vec::new();
        for step in &self.steps {
            match groups.last_mut() {
                Some((line, ids)) if *line == step.line && step.line.is_some() => ids.push(step.rule),
                _ => groups.push((step.line, vec![step.rule])),
            }
        }
        groups
            .into_iter()
            .map(|(_, mut ids)| {
                ids.retain(|r| r.is_equivalence());
                ids.sort();
                ids.dedup();
                ids
            })
            .filter(|ids| !ids.is_empty())
            .collect()
    }

    /// The grouping rendered as `E4; E1,E3; …`.
    pub fn grouping_text(&self) -> String {
        self.grouped_rule_ids()
            .iter()
            .map(|g| g.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("; ")
    }
}
