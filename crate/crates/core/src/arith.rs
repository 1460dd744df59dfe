//! Formal computation of term values, with and without assignments.
//!
//! Values are naturals. Every arithmetic step is checked against a
//! configurable magnitude cap; exceeding it is an error rather than a
//! silent wrap, because term values feed code lookups and a runaway
//! product would otherwise stall universe construction.

use thiserror::Error;

use crate::syntax::{Assignment, Nat, Term};

pub const DEFAULT_VALUE_CAP: Nat = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalCaps {
    pub max_value: Nat,
}

impl Default for EvalCaps {
    fn default() -> Self {
        EvalCaps {
            max_value: DEFAULT_VALUE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("open term: variable `{0}` has no value")]
    OpenTerm(String),
    #[error("unresolved quote `{0}` in term")]
    UnresolvedQuote(String),
    #[error("term value exceeds the cap {cap}")]
    Overflow { cap: Nat },
    #[error("assignment does not cover variable `{0}`")]
    MissingAssignment(String),
}

fn checked(n: Option<Nat>, caps: &EvalCaps) -> Result<Nat, EvalError> {
    match n {
        Some(v) if v <= caps.max_value => Ok(v),
        _ => Err(EvalError::Overflow { cap: caps.max_value }),
    }
}

/// Value of a closed term under the standard semantics of `0`, `S`, `+`,
/// `*`; a numeral denotes its carried value.
pub fn value_closed(t: &Term, caps: &EvalCaps) -> Result<Nat, EvalError> {
    match t {
        Term::Zero => Ok(0),
        Term::Numeral(n) => checked(Some(*n), caps),
        Term::Var(v) => Err(EvalError::OpenTerm(v.clone())),
        Term::Quote(name) => Err(EvalError::UnresolvedQuote(name.clone())),
        Term::Succ(a) => {
            let v = value_closed(a, caps)?;
            checked(v.checked_add(1), caps)
        }
        Term::Plus(a, b) => {
            let x = value_closed(a, caps)?;
            let y = value_closed(b, caps)?;
            checked(x.checked_add(y), caps)
        }
        Term::Times(a, b) => {
            let x = value_closed(a, caps)?;
            let y = value_closed(b, caps)?;
            checked(x.checked_mul(y), caps)
        }
    }
}

/// Value of a term under an assignment covering its free variables.
/// Equals `value_closed` of the term with variables replaced by the
/// numerals of their assigned values.
pub fn value_assign(t: &Term, alpha: &Assignment, caps: &EvalCaps) -> Result<Nat, EvalError> {
    match t {
        Term::Var(v) => match alpha.get(v) {
            Some(n) => checked(Some(n), caps),
            None => Err(EvalError::MissingAssignment(v.clone())),
        },
        Term::Zero | Term::Numeral(_) | Term::Quote(_) => value_closed(t, caps),
        Term::Succ(a) => {
            let v = value_assign(a, alpha, caps)?;
            checked(v.checked_add(1), caps)
        }
        Term::Plus(a, b) => {
            let x = value_assign(a, alpha, caps)?;
            let y = value_assign(b, alpha, caps)?;
            checked(x.checked_add(y), caps)
        }
        Term::Times(a, b) => {
            let x = value_assign(a, alpha, caps)?;
            let y = value_assign(b, alpha, caps)?;
            checked(x.checked_mul(y), caps)
        }
    }
}

fn succ_chain(n: Nat) -> Term {
    let mut t = Term::Zero;
    for _ in 0..n {
        t = Term::succ(t);
    }
    t
}

/// Syntactically distinct closed terms that all evaluate to `n`: the
/// numeral, successor and sum decompositions, a product form when one is
/// available. `budget` bounds the AST size of each variant; the numeral
/// always fits, so the list is never empty.
pub fn term_variants(n: Nat, budget: usize) -> Vec<Term> {
    let mut out = vec![Term::Numeral(n)];
    let push = |t: Term, out: &mut Vec<Term>| {
        if t.size() <= budget && !out.contains(&t) {
            out.push(t);
        }
    };
    if n == 0 {
        push(Term::Zero, &mut out);
        push(Term::plus(Term::Zero, Term::Zero), &mut out);
        push(Term::times(Term::Zero, Term::succ(Term::Zero)), &mut out);
    } else {
        push(Term::succ(Term::Numeral(n - 1)), &mut out);
        let a = n / 2;
        push(Term::plus(Term::Numeral(a), Term::Numeral(n - a)), &mut out);
        push(Term::times(Term::succ(Term::Zero), Term::Numeral(n)), &mut out);
        if n <= 16 {
            push(succ_chain(n), &mut out);
            push(Term::plus(succ_chain(a), succ_chain(n - a)), &mut out);
        }
        for d in 2..=3u64 {
            if n % d == 0 && n / d >= 2 {
                push(Term::times(Term::Numeral(d), Term::Numeral(n / d)), &mut out);
            }
        }
    }
    out.retain(|t| t.size() <= budget);
    out
}
