//! ASTs for the arithmetical language extended with the unary predicates
//! `T` and `D`, plus the structural operations everything else builds on:
//! free variables, numeral substitution, assignments, direct subformulas.
//!
//! Numerals are a dedicated node carrying their value, not an `S`-chain;
//! they compare equal to nothing but themselves. `Quote` nodes name a
//! declared sentence and are resolved to the numeral of its code during
//! binding; a fully bound term contains no `Quote` nodes.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Natural numbers as used for term values, witness elements and codes.
pub type Nat = u64;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Zero,
    Succ(Box<Term>),
    Plus(Box<Term>, Box<Term>),
    Times(Box<Term>, Box<Term>),
    Var(String),
    /// Canonical numeral with value `n`; semantically the `n`-fold `S` of `0`.
    Numeral(Nat),
    /// Placeholder for the numeral of a named sentence's code.
    Quote(String),
}

impl Term {
    pub fn succ(t: Term) -> Term {
        Term::Succ(Box::new(t))
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }

    pub fn times(a: Term, b: Term) -> Term {
        Term::Times(Box::new(a), Box::new(b))
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    /// The canonical numeral denoting `n`.
    pub fn numeral(n: Nat) -> Term {
        Term::Numeral(n)
    }

    /// No variables and no unresolved quotes.
    pub fn is_closed(&self) -> bool {
        match self {
            Term::Zero | Term::Numeral(_) => true,
            Term::Var(_) | Term::Quote(_) => false,
            Term::Succ(t) => t.is_closed(),
            Term::Plus(a, b) | Term::Times(a, b) => a.is_closed() && b.is_closed(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Zero | Term::Numeral(_) | Term::Quote(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Succ(t) => t.collect_vars(out),
            Term::Plus(a, b) | Term::Times(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn has_quote(&self) -> bool {
        match self {
            Term::Quote(_) => true,
            Term::Zero | Term::Numeral(_) | Term::Var(_) => false,
            Term::Succ(t) => t.has_quote(),
            Term::Plus(a, b) | Term::Times(a, b) => a.has_quote() || b.has_quote(),
        }
    }

    /// Replace every free occurrence of `var` by the numeral of `n`.
    pub fn substitute_numeral(&self, var: &str, n: Nat) -> Term {
        match self {
            Term::Var(v) if v == var => Term::Numeral(n),
            Term::Zero | Term::Numeral(_) | Term::Var(_) | Term::Quote(_) => self.clone(),
            Term::Succ(t) => Term::succ(t.substitute_numeral(var, n)),
            Term::Plus(a, b) => {
                Term::plus(a.substitute_numeral(var, n), b.substitute_numeral(var, n))
            }
            Term::Times(a, b) => {
                Term::times(a.substitute_numeral(var, n), b.substitute_numeral(var, n))
            }
        }
    }

    /// Expand every numeral into its `S`-chain, for cross-checking the
    /// canonical reading of `Numeral(n)` as the `n`-fold successor of zero.
    pub fn expand_numerals(&self) -> Term {
        match self {
            Term::Numeral(n) => {
                let mut t = Term::Zero;
                for _ in 0..*n {
                    t = Term::succ(t);
                }
                t
            }
            Term::Zero | Term::Var(_) | Term::Quote(_) => self.clone(),
            Term::Succ(t) => Term::succ(t.expand_numerals()),
            Term::Plus(a, b) => Term::plus(a.expand_numerals(), b.expand_numerals()),
            Term::Times(a, b) => Term::times(a.expand_numerals(), b.expand_numerals()),
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Zero | Term::Var(_) | Term::Numeral(_) | Term::Quote(_) => 1,
            Term::Succ(t) => 1 + t.size(),
            Term::Plus(a, b) | Term::Times(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Zero => write!(f, "0"),
            Term::Succ(t) => write!(f, "S({t})"),
            Term::Plus(a, b) => write!(f, "({a} + {b})"),
            Term::Times(a, b) => write!(f, "({a} * {b})"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Numeral(n) => write!(f, "#{n}"),
            Term::Quote(name) => write!(f, "quote({name})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Eq(Term, Term),
    /// The truth predicate applied to a term, `T(t)`.
    Truth(Term),
    /// The determinateness predicate applied to a term, `D(t)`.
    Det(Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn forall(v: impl Into<String>, f: Formula) -> Formula {
        Formula::Forall(v.into(), Box::new(f))
    }

    pub fn exists(v: impl Into<String>, f: Formula) -> Formula {
        Formula::Exists(v.into(), Box::new(f))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Formula::Eq(a, b) => {
                let mut out = a.free_vars();
                out.extend(b.free_vars());
                out
            }
            Formula::Truth(t) | Formula::Det(t) => t.free_vars(),
            Formula::Not(f) => f.free_vars(),
            Formula::And(a, b) | Formula::Or(a, b) => {
                let mut out = a.free_vars();
                out.extend(b.free_vars());
                out
            }
            Formula::Forall(v, f) | Formula::Exists(v, f) => {
                let mut out = f.free_vars();
                out.remove(v);
                out
            }
        }
    }

    /// A sentence is a formula without free variables.
    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn has_quote(&self) -> bool {
        match self {
            Formula::Eq(a, b) => a.has_quote() || b.has_quote(),
            Formula::Truth(t) | Formula::Det(t) => t.has_quote(),
            Formula::Not(f) => f.has_quote(),
            Formula::And(a, b) | Formula::Or(a, b) => a.has_quote() || b.has_quote(),
            Formula::Forall(_, f) | Formula::Exists(_, f) => f.has_quote(),
        }
    }

    /// Replace every free occurrence of `var` by the numeral of `n`.
    /// Numerals are closed, so no capture is possible.
    pub fn substitute_numeral(&self, var: &str, n: Nat) -> Formula {
        match self {
            Formula::Eq(a, b) => {
                Formula::Eq(a.substitute_numeral(var, n), b.substitute_numeral(var, n))
            }
            Formula::Truth(t) => Formula::Truth(t.substitute_numeral(var, n)),
            Formula::Det(t) => Formula::Det(t.substitute_numeral(var, n)),
            Formula::Not(f) => Formula::not(f.substitute_numeral(var, n)),
            Formula::And(a, b) => {
                Formula::and(a.substitute_numeral(var, n), b.substitute_numeral(var, n))
            }
            Formula::Or(a, b) => {
                Formula::or(a.substitute_numeral(var, n), b.substitute_numeral(var, n))
            }
            Formula::Forall(v, _) | Formula::Exists(v, _) if v == var => self.clone(),
            Formula::Forall(v, f) => Formula::forall(v.clone(), f.substitute_numeral(var, n)),
            Formula::Exists(v, f) => Formula::exists(v.clone(), f.substitute_numeral(var, n)),
        }
    }

    /// The sentence obtained by substituting a numeral for each free
    /// variable, as prescribed by the assignment. The assignment's domain
    /// must be exactly the free variables.
    pub fn apply_assignment(&self, alpha: &Assignment) -> Result<Formula, AssignError> {
        let fv = self.free_vars();
        let dom: BTreeSet<String> = alpha.domain().cloned().collect();
        if fv != dom {
            return Err(AssignError {
                missing: fv.difference(&dom).cloned().collect(),
                extra: dom.difference(&fv).cloned().collect(),
            });
        }
        let mut out = self.clone();
        for (v, n) in alpha.iter() {
            out = out.substitute_numeral(v, *n);
        }
        Ok(out)
    }

    /// Immediate children: one for negations and quantifiers, two for the
    /// binary connectives, none for atoms.
    pub fn direct_subformulas(&self) -> Vec<&Formula> {
        match self {
            Formula::Eq(..) | Formula::Truth(_) | Formula::Det(_) => vec![],
            Formula::Not(f) | Formula::Forall(_, f) | Formula::Exists(_, f) => vec![f],
            Formula::And(a, b) | Formula::Or(a, b) => vec![a, b],
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Eq(..) | Formula::Truth(_) | Formula::Det(_))
    }

    /// Depth of the connective/quantifier skeleton; atoms have depth 0.
    pub fn skeleton_depth(&self) -> usize {
        self.direct_subformulas()
            .iter()
            .map(|f| f.skeleton_depth() + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Eq(a, b) => 1 + a.size() + b.size(),
            Formula::Truth(t) | Formula::Det(t) => 1 + t.size(),
            Formula::Not(f) | Formula::Forall(_, f) | Formula::Exists(_, f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Truth(t) => write!(f, "T({t})"),
            Formula::Det(t) => write!(f, "D({t})"),
            Formula::Not(inner) => write!(f, "~{inner}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Forall(v, inner) => write!(f, "forall {v}. {inner}"),
            Formula::Exists(v, inner) => write!(f, "exists {v}. {inner}"),
        }
    }
}

/// Assignment domain mismatch: the assignment must cover exactly the free
/// variables of the formula it is applied to.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("assignment domain mismatch: missing {missing:?}, extra {extra:?}")]
pub struct AssignError {
    pub missing: Vec<String>,
    pub extra: Vec<String>,
}

/// Finite map from variable names to naturals.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Assignment(std::collections::BTreeMap<String, Nat>);

impl Assignment {
    pub fn empty() -> Self {
        Assignment::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Nat)>,
        S: Into<String>,
    {
        Assignment(pairs.into_iter().map(|(v, n)| (v.into(), n)).collect())
    }

    pub fn get(&self, var: &str) -> Option<Nat> {
        self.0.get(var).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Nat)> {
        self.0.iter()
    }

    /// Copy with `var` bound to `n` (overwriting any previous binding).
    pub fn with(&self, var: impl Into<String>, n: Nat) -> Self {
        let mut m = self.0.clone();
        m.insert(var.into(), n);
        Assignment(m)
    }

    /// Copy restricted to the given variable set.
    pub fn restrict(&self, vars: &BTreeSet<String>) -> Self {
        Assignment(
            self.0
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, n)| (v.clone(), *n))
                .collect(),
        )
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, n)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}={n}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    #[test]
    fn numeral_expansion_matches_succ_reading() {
        let two = Term::numeral(2).expand_numerals();
        assert_eq!(two, Term::succ(Term::succ(Term::Zero)));
        assert_eq!(Term::numeral(2).to_string(), "#2");
        assert_eq!(two.to_string(), "S(S(0))");
    }

    #[test]
    fn numerals_compare_only_to_themselves() {
        assert_ne!(Term::numeral(0), Term::Zero);
        assert_ne!(Term::numeral(1), Term::succ(Term::Zero));
        assert_eq!(Term::numeral(3), Term::numeral(3));
    }

    #[test]
    fn substitute_numeral_replaces_free_occurrences() {
        // (v = v)[v := 3]  ->  #3 = #3
        let phi = Formula::Eq(v("v"), v("v"));
        assert_eq!(
            phi.substitute_numeral("v", 3),
            Formula::Eq(Term::numeral(3), Term::numeral(3))
        );
        // (forall v. v = w)[w := 2]  ->  forall v. v = #2
        let phi = Formula::forall("v", Formula::Eq(v("v"), v("w")));
        assert_eq!(
            phi.substitute_numeral("w", 2),
            Formula::forall("v", Formula::Eq(v("v"), Term::numeral(2)))
        );
        // (v = 0)[u := 5] unchanged
        let phi = Formula::Eq(v("v"), Term::Zero);
        assert_eq!(phi.substitute_numeral("u", 5), phi);
    }

    #[test]
    fn substitute_respects_binders() {
        let phi = Formula::forall("v", Formula::Eq(v("v"), v("v")));
        assert_eq!(phi.substitute_numeral("v", 7), phi);
    }

    #[test]
    fn apply_assignment_checks_domain() {
        let phi = Formula::Eq(v("v"), Term::succ(Term::Zero));
        let ok = phi.apply_assignment(&Assignment::from_pairs([("v", 1)])).unwrap();
        assert_eq!(ok, Formula::Eq(Term::numeral(1), Term::succ(Term::Zero)));
        assert!(ok.is_sentence());

        let err = phi.apply_assignment(&Assignment::empty()).unwrap_err();
        assert_eq!(err.missing, vec!["v".to_string()]);

        // sentences take only the empty assignment (identity case)
        let sent = Formula::Eq(Term::Zero, Term::Zero);
        assert_eq!(sent.apply_assignment(&Assignment::empty()).unwrap(), sent);
        assert!(sent
            .apply_assignment(&Assignment::from_pairs([("v", 0)]))
            .is_err());
    }

    #[test]
    fn direct_subformulas_by_shape() {
        let eq = Formula::Eq(Term::Zero, Term::Zero);
        assert!(eq.direct_subformulas().is_empty());

        let neg = Formula::not(eq.clone());
        assert_eq!(neg.direct_subformulas(), vec![&eq]);

        let tr = Formula::Truth(Term::numeral(5));
        let disj = Formula::or(eq.clone(), tr.clone());
        assert_eq!(disj.direct_subformulas(), vec![&eq, &tr]);
    }

    #[test]
    fn free_vars_of_quantified_formulas() {
        let phi = Formula::forall("v", Formula::Eq(v("v"), v("w")));
        assert_eq!(phi.free_vars(), BTreeSet::from(["w".to_string()]));
        assert!(!phi.is_sentence());
        assert!(phi.substitute_numeral("w", 0).is_sentence());
    }
}
