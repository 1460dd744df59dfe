//! Bridge between the two primitive connective choices used by the
//! workbench. The staged engine treats `&`/`forall` as primitive; the
//! satisfaction-class machinery treats `|`/`exists` as primitive. The
//! translations move a formula between the fragments by de Morgan
//! rewriting:
//!
//!   a & b      <->  ~(~a | ~b)
//!   forall v.a <->  ~exists v.~a
//!
//! [`to_disjunctive`] is injective on conjunctive-fragment formulas (those
//! without `|`/`exists`), and [`from_disjunctive`] inverts it exactly
//! there. On formulas that already mix both fragments the rewriting is
//! only equivalence-preserving, not invertible.

use thiserror::Error;

use crate::syntax::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{node}` is outside the canonical disjunctive image ({reason})")]
pub struct InversionError {
    pub node: String,
    pub reason: String,
}

/// Rewrite every conjunction and universal quantifier into the
/// disjunctive/existential fragment. Atoms, negations, disjunctions and
/// existentials pass through structurally.
pub fn to_disjunctive(f: &Formula) -> Formula {
    match f {
        Formula::Eq(..) | Formula::Truth(_) | Formula::Det(_) => f.clone(),
        Formula::Not(g) => Formula::not(to_disjunctive(g)),
        Formula::Or(a, b) => Formula::or(to_disjunctive(a), to_disjunctive(b)),
        Formula::Exists(v, g) => Formula::exists(v.clone(), to_disjunctive(g)),
        Formula::And(a, b) => Formula::not(Formula::or(
            Formula::not(to_disjunctive(a)),
            Formula::not(to_disjunctive(b)),
        )),
        Formula::Forall(v, g) => Formula::not(Formula::exists(
            v.clone(),
            Formula::not(to_disjunctive(g)),
        )),
    }
}

/// Invert [`to_disjunctive`] on its canonical image (the translations of
/// conjunctive-fragment formulas). Reports the first node that blocks the
/// inversion.
pub fn from_disjunctive(f: &Formula) -> Result<Formula, InversionError> {
    match f {
        Formula::Eq(..) | Formula::Truth(_) | Formula::Det(_) => Ok(f.clone()),
        Formula::Not(g) => match g.as_ref() {
            Formula::Or(a, b) => match (a.as_ref(), b.as_ref()) {
                (Formula::Not(a1), Formula::Not(b1)) => {
                    Ok(Formula::and(from_disjunctive(a1)?, from_disjunctive(b1)?))
                }
                _ => Err(InversionError {
                    node: f.to_string(),
                    reason: "negated disjunction whose disjuncts are not both negations".into(),
                }),
            },
            Formula::Exists(v, inner) => match inner.as_ref() {
                Formula::Not(body) => Ok(Formula::forall(v.clone(), from_disjunctive(body)?)),
                _ => Err(InversionError {
                    node: f.to_string(),
                    reason: "negated existential whose body is not a negation".into(),
                }),
            },
            _ => Ok(Formula::not(from_disjunctive(g)?)),
        },
        Formula::Or(..) => Err(InversionError {
            node: f.to_string(),
            reason: "bare disjunction".into(),
        }),
        Formula::Exists(..) => Err(InversionError {
            node: f.to_string(),
            reason: "bare existential".into(),
        }),
        Formula::And(..) | Formula::Forall(..) => Err(InversionError {
            node: f.to_string(),
            reason: "conjunctive node in disjunctive input".into(),
        }),
    }
}

/// Total, equivalence-preserving conjunctive reading of a
/// disjunctive-fragment formula. Agrees with [`from_disjunctive`] on the
/// canonical image; elsewhere it falls back to the dual de Morgan
/// rewriting (possibly introducing double negations, which the evaluators
/// absorb). Used for membership lookups of fragment entries against the
/// limit predicates.
pub fn conjunctive_reading(f: &Formula) -> Formula {
    match f {
        Formula::Eq(..) | Formula::Truth(_) | Formula::Det(_) => f.clone(),
        Formula::Not(g) => match g.as_ref() {
            Formula::Or(a, b) => match (a.as_ref(), b.as_ref()) {
                (Formula::Not(a1), Formula::Not(b1)) => {
                    Formula::and(conjunctive_reading(a1), conjunctive_reading(b1))
                }
                _ => Formula::and(
                    Formula::not(conjunctive_reading(a)),
                    Formula::not(conjunctive_reading(b)),
                ),
            },
            Formula::Exists(v, inner) => match inner.as_ref() {
                Formula::Not(body) => Formula::forall(v.clone(), conjunctive_reading(body)),
                _ => Formula::forall(v.clone(), Formula::not(conjunctive_reading(inner))),
            },
            _ => Formula::not(conjunctive_reading(g)),
        },
        Formula::Or(a, b) => Formula::not(Formula::and(
            Formula::not(conjunctive_reading(a)),
            Formula::not(conjunctive_reading(b)),
        )),
        Formula::Exists(v, g) => Formula::not(Formula::forall(
            v.clone(),
            Formula::not(conjunctive_reading(g)),
        )),
        Formula::And(a, b) => Formula::and(conjunctive_reading(a), conjunctive_reading(b)),
        Formula::Forall(v, g) => Formula::forall(v.clone(), conjunctive_reading(g)),
    }
}
