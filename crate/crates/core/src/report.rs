//! Check reports. Every checker returns an [`AxiomReport`]: one entry per
//! named check with a pass/fail/vacuous status, failures carrying a
//! witness (the offending sentence's code plus a description that is
//! enough to re-run the single check by hand).

use serde::{Deserialize, Serialize};

use crate::intern::Code;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Vacuous,
}

/// Counterexample data attached to a failing check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<Code>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub axiom: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Check {
    pub fn pass(axiom: impl Into<String>) -> Check {
        Check {
            axiom: axiom.into(),
            status: CheckStatus::Pass,
            witness: None,
        }
    }

    pub fn vacuous(axiom: impl Into<String>) -> Check {
        Check {
            axiom: axiom.into(),
            status: CheckStatus::Vacuous,
            witness: None,
        }
    }

    pub fn fail(axiom: impl Into<String>, phi: Option<Code>, detail: impl Into<String>) -> Check {
        Check {
            axiom: axiom.into(),
            status: CheckStatus::Fail,
            witness: Some(Witness {
                phi,
                detail: detail.into(),
            }),
        }
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

/// A set of named checks plus free-form notes (non-obvious readings the
/// checker committed to are flagged here rather than silently assumed).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

impl AxiomReport {
    pub fn new() -> Self {
        AxiomReport::default()
    }

    pub fn with_notes(notes: Vec<String>) -> Self {
        AxiomReport {
            notes,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: AxiomReport) {
        self.notes.extend(other.notes);
        self.checks.extend(other.checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.failed())
    }

    pub fn get(&self, axiom: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }

    /// Sort entries by check name for byte-stable serialization.
    pub fn sorted(mut self) -> Self {
        self.checks.sort_by(|a, b| a.axiom.cmp(&b.axiom));
        self
    }
}
