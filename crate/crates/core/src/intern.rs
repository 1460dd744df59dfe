//! Formula interning. Codes are interner-assigned consecutive naturals,
//! which keeps numerals small and membership checks cheap; the machinery
//! only ever needs a fixed injective coding.
//!
//! Self-referential declarations are supported by reserving a code for a
//! name before its body is resolved, so the body may mention its own code
//! through a `quote`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Formula, Nat};

/// Code of an interned formula.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct Code(pub Nat);

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InternError {
    /// A reserved code would have to hold a formula that is already
    /// interned under a different code.
    #[error("declaration `{name}` resolves to `{formula}`, already interned as code {existing}")]
    ConflictingDeclaration {
        name: String,
        formula: String,
        existing: Code,
    },
}

/// Bidirectional map between formula ASTs and codes, plus name bindings.
///
/// Codes, once assigned, never change. The map is injective both ways:
/// structurally equal formulas share one code. Requires exclusive access
/// while declarations are being bound; afterwards it is only read.
#[derive(Debug, Clone, Default)]
pub struct SentenceTable {
    by_code: BTreeMap<Code, Formula>,
    by_formula: HashMap<Formula, Code>,
    names: BTreeMap<String, Code>,
    next: Nat,
}

impl SentenceTable {
    pub fn new() -> Self {
        SentenceTable::default()
    }

    /// Intern a formula, reusing the existing code when it is already known.
    pub fn intern(&mut self, formula: Formula) -> Code {
        if let Some(&c) = self.by_formula.get(&formula) {
            return c;
        }
        let code = self.fresh();
        self.by_formula.insert(formula.clone(), code);
        self.by_code.insert(code, formula);
        code
    }

    /// Reserve a fresh code with no formula attached yet.
    pub fn reserve(&mut self) -> Code {
        self.fresh()
    }

    /// Attach a formula to a previously reserved code.
    pub fn fill_reserved(&mut self, name: &str, code: Code, formula: Formula) -> Result<(), InternError> {
        if let Some(&existing) = self.by_formula.get(&formula) {
            if existing != code {
                return Err(InternError::ConflictingDeclaration {
                    name: name.to_string(),
                    formula: formula.to_string(),
                    existing,
                });
            }
        }
        self.by_formula.insert(formula.clone(), code);
        self.by_code.insert(code, formula);
        Ok(())
    }

    fn fresh(&mut self) -> Code {
        let code = Code(self.next);
        self.next += 1;
        code
    }

    pub fn decode(&self, code: Code) -> Option<&Formula> {
        self.by_code.get(&code)
    }

    pub fn code_of(&self, formula: &Formula) -> Option<Code> {
        self.by_formula.get(formula).copied()
    }

    pub fn bind_name(&mut self, name: impl Into<String>, code: Code) {
        self.names.insert(name.into(), code);
    }

    pub fn code_of_name(&self, name: &str) -> Option<Code> {
        self.names.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = (&String, &Code)> {
        self.names.iter()
    }

    pub fn len(&self) -> usize {
        self.by_code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_code.is_empty()
    }

    /// Interned formulas in ascending code order.
    pub fn iter(&self) -> impl Iterator<Item = (Code, &Formula)> {
        self.by_code.iter().map(|(c, f)| (*c, f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Term;

    #[test]
    fn interning_is_injective_both_ways() {
        let mut table = SentenceTable::new();
        let zeq = Formula::Eq(Term::Zero, Term::Zero);
        let a = table.intern(zeq.clone());
        let b = table.intern(zeq.clone());
        assert_eq!(a, b);
        assert_eq!(table.decode(a), Some(&zeq));
        assert_eq!(table.code_of(&zeq), Some(a));
        assert_eq!(table.len(), 1);

        let other = table.intern(Formula::Truth(Term::numeral(0)));
        assert_ne!(a, other);
    }

    #[test]
    fn reserved_codes_allow_self_reference() {
        let mut table = SentenceTable::new();
        let code = table.reserve();
        // L := ~T(#code(L))
        let liar = Formula::not(Formula::Truth(Term::numeral(code.0)));
        table.fill_reserved("L", code, liar.clone()).unwrap();
        table.bind_name("L", code);
        assert_eq!(table.decode(code), Some(&liar));
        assert_eq!(table.code_of_name("L"), Some(code));
    }

    #[test]
    fn conflicting_fill_is_reported() {
        let mut table = SentenceTable::new();
        let zeq = Formula::Eq(Term::Zero, Term::Zero);
        let first = table.intern(zeq.clone());
        let reserved = table.reserve();
        let err = table.fill_reserved("B", reserved, zeq).unwrap_err();
        match err {
            InternError::ConflictingDeclaration { existing, .. } => assert_eq!(existing, first),
        }
    }
}
