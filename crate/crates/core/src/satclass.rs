//! Satisfaction-class machinery: (formula, assignment) pairs, syntactic
//! similarity, and the subformula rank order.
//!
//! Two pairs are syntactically similar when they instantiate one template
//! with equal-valued closed-term sequences. Similarity is decided by
//! canonicalization — substitute the assignment, then collapse every
//! maximal closed subterm to the numeral of its value — and the
//! equivalence of that decision procedure with the template definition is
//! enforced by an independent brute-force oracle that enumerates template
//! decompositions, not assumed.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::arith::{value_closed, EvalCaps, EvalError};
use crate::intern::{Code, SentenceTable};
use crate::syntax::{Assignment, AssignError, Formula, Nat, Term};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct SatEntry {
    pub formula: Code,
    pub assignment: Assignment,
}

impl SatEntry {
    pub fn new(formula: Code, assignment: Assignment) -> Self {
        SatEntry {
            formula,
            assignment,
        }
    }

    pub fn closed(formula: Code) -> Self {
        SatEntry::new(formula, Assignment::empty())
    }
}

impl std::fmt::Display for SatEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.formula, self.assignment)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatClassError {
    #[error("code {0} is not interned")]
    UnknownCode(Code),
    #[error("entry ({code}, {assignment}) is ill-formed: {source}")]
    BadAssignment {
        code: Code,
        assignment: Assignment,
        source: AssignError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("oracle bound exceeded: {positions} abstractable positions, bound {bound}")]
    OracleBound { positions: usize, bound: usize },
    #[error("rank cycle through class `{canonical}` (subformulas must strictly shrink)")]
    RankCycle { canonical: String },
    #[error("entry closure cap {cap} exceeded")]
    EntryCap { cap: usize },
}

/// The sentence a pair denotes: the formula with every free variable
/// replaced by the numeral of its assigned value.
pub fn instantiate(table: &SentenceTable, e: &SatEntry) -> Result<Formula, SatClassError> {
    let phi = table
        .decode(e.formula)
        .ok_or(SatClassError::UnknownCode(e.formula))?;
    phi.apply_assignment(&e.assignment)
        .map_err(|source| SatClassError::BadAssignment {
            code: e.formula,
            assignment: e.assignment.clone(),
            source,
        })
}

fn canon_term(t: &Term, caps: &EvalCaps) -> Result<Term, EvalError> {
    if t.is_closed() {
        return Ok(Term::Numeral(value_closed(t, caps)?));
    }
    Ok(match t {
        Term::Succ(a) => Term::succ(canon_term(a, caps)?),
        Term::Plus(a, b) => Term::plus(canon_term(a, caps)?, canon_term(b, caps)?),
        Term::Times(a, b) => Term::times(canon_term(a, caps)?, canon_term(b, caps)?),
        Term::Zero | Term::Var(_) | Term::Numeral(_) | Term::Quote(_) => t.clone(),
    })
}

/// Collapse every maximal closed subterm to the numeral of its value.
/// Open terms (under binders) keep their structure, with closed pieces
/// inside them collapsed.
pub fn canonical_sentence(phi: &Formula, caps: &EvalCaps) -> Result<Formula, EvalError> {
    Ok(match phi {
        Formula::Eq(a, b) => Formula::Eq(canon_term(a, caps)?, canon_term(b, caps)?),
        Formula::Truth(t) => Formula::Truth(canon_term(t, caps)?),
        Formula::Det(t) => Formula::Det(canon_term(t, caps)?),
        Formula::Not(f) => Formula::not(canonical_sentence(f, caps)?),
        Formula::And(a, b) => {
            Formula::and(canonical_sentence(a, caps)?, canonical_sentence(b, caps)?)
        }
        Formula::Or(a, b) => {
            Formula::or(canonical_sentence(a, caps)?, canonical_sentence(b, caps)?)
        }
        Formula::Forall(v, f) => Formula::forall(v.clone(), canonical_sentence(f, caps)?),
        Formula::Exists(v, f) => Formula::exists(v.clone(), canonical_sentence(f, caps)?),
    })
}

/// The similarity-class representative of a pair.
pub fn canonical_pair(
    table: &SentenceTable,
    e: &SatEntry,
    caps: &EvalCaps,
) -> Result<Formula, SatClassError> {
    Ok(canonical_sentence(&instantiate(table, e)?, caps)?)
}

/// Syntactic similarity, decided through canonical representatives.
pub fn similar(
    table: &SentenceTable,
    a: &SatEntry,
    b: &SatEntry,
    caps: &EvalCaps,
) -> Result<bool, SatClassError> {
    Ok(canonical_pair(table, a, caps)? == canonical_pair(table, b, caps)?)
}

// --- brute-force oracle -------------------------------------------------

/// Template hole marker; the parser forbids `?` in identifiers, so these
/// variables cannot collide with real ones.
fn hole(i: usize) -> Term {
    Term::Var(format!("?{i}"))
}

fn is_hole(t: &Term) -> Option<usize> {
    match t {
        Term::Var(v) if v.starts_with('?') => v[1..].parse().ok(),
        _ => None,
    }
}

/// Count the maximal closed subterm positions of a formula, walking terms
/// left to right.
fn count_positions(phi: &Formula) -> usize {
    fn term(t: &Term) -> usize {
        if t.is_closed() {
            return 1;
        }
        match t {
            Term::Succ(a) => term(a),
            Term::Plus(a, b) | Term::Times(a, b) => term(a) + term(b),
            Term::Zero | Term::Var(_) | Term::Numeral(_) | Term::Quote(_) => 0,
        }
    }
    match phi {
        Formula::Eq(a, b) => term(a) + term(b),
        Formula::Truth(t) | Formula::Det(t) => term(t),
        Formula::Not(f) | Formula::Forall(_, f) | Formula::Exists(_, f) => count_positions(f),
        Formula::And(a, b) | Formula::Or(a, b) => count_positions(a) + count_positions(b),
    }
}

/// Replace the selected maximal closed positions by holes, collecting the
/// abstracted terms in traversal order.
fn abstract_template(phi: &Formula, selected: &[bool]) -> (Formula, Vec<Term>) {
    fn term(t: &Term, selected: &[bool], idx: &mut usize, out: &mut Vec<Term>) -> Term {
        if t.is_closed() {
            let i = *idx;
            *idx += 1;
            if selected[i] {
                out.push(t.clone());
                return hole(out.len() - 1);
            }
            return t.clone();
        }
        match t {
            Term::Succ(a) => Term::succ(term(a, selected, idx, out)),
            Term::Plus(a, b) => {
                let x = term(a, selected, idx, out);
                let y = term(b, selected, idx, out);
                Term::plus(x, y)
            }
            Term::Times(a, b) => {
                let x = term(a, selected, idx, out);
                let y = term(b, selected, idx, out);
                Term::times(x, y)
            }
            Term::Zero | Term::Var(_) | Term::Numeral(_) | Term::Quote(_) => t.clone(),
        }
    }
    fn go(phi: &Formula, selected: &[bool], idx: &mut usize, out: &mut Vec<Term>) -> Formula {
        match phi {
            Formula::Eq(a, b) => {
                let x = term(a, selected, idx, out);
                let y = term(b, selected, idx, out);
                Formula::Eq(x, y)
            }
            Formula::Truth(t) => Formula::Truth(term(t, selected, idx, out)),
            Formula::Det(t) => Formula::Det(term(t, selected, idx, out)),
            Formula::Not(f) => Formula::not(go(f, selected, idx, out)),
            Formula::And(a, b) => {
                let x = go(a, selected, idx, out);
                let y = go(b, selected, idx, out);
                Formula::and(x, y)
            }
            Formula::Or(a, b) => {
                let x = go(a, selected, idx, out);
                let y = go(b, selected, idx, out);
                Formula::or(x, y)
            }
            Formula::Forall(v, f) => Formula::forall(v.clone(), go(f, selected, idx, out)),
            Formula::Exists(v, f) => Formula::exists(v.clone(), go(f, selected, idx, out)),
        }
    }
    let mut idx = 0;
    let mut out = Vec::new();
    let template = go(phi, selected, &mut idx, &mut out);
    (template, out)
}

/// Match a template against a target, binding each hole to a closed
/// subterm of the target. Everything outside the holes must coincide.
fn match_template(template: &Formula, target: &Formula, binds: &mut Vec<Option<Term>>) -> bool {
    fn term(tpl: &Term, tgt: &Term, binds: &mut Vec<Option<Term>>) -> bool {
        if let Some(i) = is_hole(tpl) {
            if !tgt.is_closed() {
                return false;
            }
            binds[i] = Some(tgt.clone());
            return true;
        }
        match (tpl, tgt) {
            (Term::Zero, Term::Zero) => true,
            (Term::Numeral(a), Term::Numeral(b)) => a == b,
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::Quote(a), Term::Quote(b)) => a == b,
            (Term::Succ(a), Term::Succ(b)) => term(a, b, binds),
            (Term::Plus(a1, a2), Term::Plus(b1, b2))
            | (Term::Times(a1, a2), Term::Times(b1, b2)) => {
                term(a1, b1, binds) && term(a2, b2, binds)
            }
            _ => false,
        }
    }
    match (template, target) {
        (Formula::Eq(a1, a2), Formula::Eq(b1, b2)) => {
            term(a1, b1, binds) && term(a2, b2, binds)
        }
        (Formula::Truth(a), Formula::Truth(b)) | (Formula::Det(a), Formula::Det(b)) => {
            term(a, b, binds)
        }
        (Formula::Not(a), Formula::Not(b)) => match_template(a, b, binds),
        (Formula::And(a1, a2), Formula::And(b1, b2))
        | (Formula::Or(a1, a2), Formula::Or(b1, b2)) => {
            match_template(a1, b1, binds) && match_template(a2, b2, binds)
        }
        (Formula::Forall(v1, a), Formula::Forall(v2, b))
        | (Formula::Exists(v1, a), Formula::Exists(v2, b)) => {
            v1 == v2 && match_template(a, b, binds)
        }
        _ => false,
    }
}

/// Ground-truth similarity by template search: enumerate every choice of
/// hole positions among the maximal closed subterms of the first
/// sentence, extract the matching closed terms of the second, and accept
/// when some template relates them with pointwise equal values.
pub fn similar_oracle(
    table: &SentenceTable,
    a: &SatEntry,
    b: &SatEntry,
    caps: &EvalCaps,
    position_bound: usize,
) -> Result<bool, SatClassError> {
    let sent_a = instantiate(table, a)?;
    let sent_b = instantiate(table, b)?;
    let positions = count_positions(&sent_a);
    if positions > position_bound {
        return Err(SatClassError::OracleBound {
            positions,
            bound: position_bound,
        });
    }
    for mask in 0..(1u64 << positions) {
        let selected: Vec<bool> = (0..positions).map(|i| mask & (1 << i) != 0).collect();
        let (template, s_terms) = abstract_template(&sent_a, &selected);
        let mut binds = vec![None; s_terms.len()];
        if !match_template(&template, &sent_b, &mut binds) {
            continue;
        }
        let t_terms: Vec<Term> = match binds.into_iter().collect::<Option<Vec<_>>>() {
            Some(ts) => ts,
            None => continue,
        };
        let mut ok = true;
        for (s, t) in s_terms.iter().zip(&t_terms) {
            if value_closed(s, caps)? != value_closed(t, caps)? {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(true);
        }
    }
    Ok(false)
}

// --- subformula rank order ----------------------------------------------

/// Direct subformula entries of a pair: the assignment is restricted to
/// the child's free variables; quantified formulas contribute one child
/// per witness (deduplicated for vacuous binders).
pub fn child_entries(
    table: &mut SentenceTable,
    e: &SatEntry,
    witnesses: &BTreeSet<Nat>,
) -> Result<Vec<SatEntry>, SatClassError> {
    let phi = table
        .decode(e.formula)
        .ok_or(SatClassError::UnknownCode(e.formula))?
        .clone();
    let mut out: Vec<SatEntry> = Vec::new();
    let mut push = |table: &mut SentenceTable, f: &Formula, alpha: Assignment| {
        let code = table.intern(f.clone());
        let child = SatEntry::new(code, alpha);
        if !out.contains(&child) {
            out.push(child);
        }
    };
    match &phi {
        Formula::Eq(..) | Formula::Truth(_) | Formula::Det(_) => {}
        Formula::Not(b) => {
            let alpha = e.assignment.restrict(&b.free_vars());
            push(table, b, alpha);
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let aa = e.assignment.restrict(&a.free_vars());
            push(table, a, aa);
            let ba = e.assignment.restrict(&b.free_vars());
            push(table, b, ba);
        }
        Formula::Forall(v, b) | Formula::Exists(v, b) => {
            let fv = b.free_vars();
            if fv.contains(v) {
                for &w in witnesses {
                    let alpha = e.assignment.with(v.clone(), w).restrict(&fv);
                    push(table, b, alpha);
                }
            } else {
                let alpha = e.assignment.restrict(&fv);
                push(table, b, alpha);
            }
        }
    }
    Ok(out)
}

/// Close a set of entries under direct subformula entries over the
/// witness set.
pub fn entry_closure(
    table: &mut SentenceTable,
    seeds: &BTreeSet<SatEntry>,
    witnesses: &BTreeSet<Nat>,
    max_entries: usize,
) -> Result<BTreeSet<SatEntry>, SatClassError> {
    let mut out: BTreeSet<SatEntry> = BTreeSet::new();
    let mut work: Vec<SatEntry> = seeds.iter().cloned().collect();
    while let Some(e) = work.pop() {
        if !out.insert(e.clone()) {
            continue;
        }
        if out.len() > max_entries {
            return Err(SatClassError::EntryCap { cap: max_entries });
        }
        for child in child_entries(table, &e, witnesses)? {
            if !out.contains(&child) {
                work.push(child);
            }
        }
    }
    Ok(out)
}

/// Similarity classes keyed by canonical representative, ranked by the
/// longest subformula chain below them; minimal classes have rank 0.
#[derive(Debug, Clone, Default)]
pub struct RankOrder {
    pub rank: BTreeMap<Formula, usize>,
    pub classes: BTreeMap<Formula, BTreeSet<SatEntry>>,
}

impl RankOrder {
    pub fn rank_of(&self, canonical: &Formula) -> Option<usize> {
        self.rank.get(canonical).copied()
    }
}

/// Partition entries by similarity and rank the classes by subformula
/// descent. The entry set must be closed under child entries over the
/// given witnesses; children absent from the set simply contribute no
/// edge.
pub fn rank_order(
    table: &mut SentenceTable,
    entries: &BTreeSet<SatEntry>,
    witnesses: &BTreeSet<Nat>,
    caps: &EvalCaps,
) -> Result<RankOrder, SatClassError> {
    let mut classes: BTreeMap<Formula, BTreeSet<SatEntry>> = BTreeMap::new();
    let mut canon_of: BTreeMap<SatEntry, Formula> = BTreeMap::new();
    for e in entries {
        let canon = canonical_pair(table, e, caps)?;
        classes.entry(canon.clone()).or_default().insert(e.clone());
        canon_of.insert(e.clone(), canon);
    }

    // deps[c] = canonical forms of the direct subformula entries of c's members
    let mut deps: BTreeMap<Formula, BTreeSet<Formula>> = BTreeMap::new();
    for (canon, members) in &classes {
        let mut below = BTreeSet::new();
        for e in members {
            for child in child_entries(table, e, witnesses)? {
                if entries.contains(&child) {
                    below.insert(canon_of[&child].clone());
                }
            }
        }
        deps.insert(canon.clone(), below);
    }

    // longest-chain rank, with cycle detection (impossible while
    // subformulas strictly shrink, but never assumed)
    let mut rank: BTreeMap<Formula, usize> = BTreeMap::new();
    let mut visiting: BTreeSet<Formula> = BTreeSet::new();
    fn visit(
        canon: &Formula,
        deps: &BTreeMap<Formula, BTreeSet<Formula>>,
        rank: &mut BTreeMap<Formula, usize>,
        visiting: &mut BTreeSet<Formula>,
    ) -> Result<usize, SatClassError> {
        if let Some(&r) = rank.get(canon) {
            return Ok(r);
        }
        if !visiting.insert(canon.clone()) {
            return Err(SatClassError::RankCycle {
                canonical: canon.to_string(),
            });
        }
        let mut r = 0;
        if let Some(below) = deps.get(canon) {
            for b in below {
                if b == canon {
                    return Err(SatClassError::RankCycle {
                        canonical: canon.to_string(),
                    });
                }
                r = r.max(visit(b, deps, rank, visiting)? + 1);
            }
        }
        visiting.remove(canon);
        rank.insert(canon.clone(), r);
        Ok(r)
    }
    for canon in classes.keys() {
        visit(canon, &deps, &mut rank, &mut visiting)?;
    }

    Ok(RankOrder { rank, classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps() -> EvalCaps {
        EvalCaps::default()
    }

    fn entry(table: &mut SentenceTable, phi: Formula, alpha: Assignment) -> SatEntry {
        SatEntry::new(table.intern(phi), alpha)
    }

    #[test]
    fn canonical_examples() {
        let mut table = SentenceTable::new();
        let caps = caps();

        // (v = S(0), {v -> 1})  ->  #1 = #1
        let e = entry(
            &mut table,
            Formula::Eq(Term::var("v"), Term::succ(Term::Zero)),
            Assignment::from_pairs([("v", 1u64)]),
        );
        assert_eq!(
            canonical_pair(&table, &e, &caps).unwrap(),
            Formula::Eq(Term::numeral(1), Term::numeral(1))
        );

        // (0 = 0, {})  ->  #0 = #0
        let e = entry(
            &mut table,
            Formula::Eq(Term::Zero, Term::Zero),
            Assignment::empty(),
        );
        assert_eq!(
            canonical_pair(&table, &e, &caps).unwrap(),
            Formula::Eq(Term::numeral(0), Term::numeral(0))
        );

        // (exists v. v = (S(0)+S(0)), {})  ->  exists v. v = #2
        let e = entry(
            &mut table,
            Formula::exists(
                "v",
                Formula::Eq(
                    Term::var("v"),
                    Term::plus(Term::succ(Term::Zero), Term::succ(Term::Zero)),
                ),
            ),
            Assignment::empty(),
        );
        assert_eq!(
            canonical_pair(&table, &e, &caps).unwrap(),
            Formula::exists("v", Formula::Eq(Term::var("v"), Term::numeral(2)))
        );
    }

    #[test]
    fn similarity_examples() {
        let mut table = SentenceTable::new();
        let caps = caps();

        let a = entry(
            &mut table,
            Formula::Eq(Term::var("v"), Term::succ(Term::Zero)),
            Assignment::from_pairs([("v", 1u64)]),
        );
        // reflexive
        assert!(similar(&table, &a, &a, &caps).unwrap());

        // (v = S(0), {v -> 1}) ~ (#1 = w, {w -> 1})
        let b = entry(
            &mut table,
            Formula::Eq(Term::numeral(1), Term::var("w")),
            Assignment::from_pairs([("w", 1u64)]),
        );
        assert!(similar(&table, &a, &b, &caps).unwrap());

        // (0 = 0, {}) vs (0 = S(0), {})
        let c = entry(&mut table, Formula::Eq(Term::Zero, Term::Zero), Assignment::empty());
        let d = entry(
            &mut table,
            Formula::Eq(Term::Zero, Term::succ(Term::Zero)),
            Assignment::empty(),
        );
        assert!(!similar(&table, &c, &d, &caps).unwrap());

        // and the oracle reproduces all three verdicts
        assert!(similar_oracle(&table, &a, &a, &caps, 16).unwrap());
        assert!(similar_oracle(&table, &a, &b, &caps, 16).unwrap());
        assert!(!similar_oracle(&table, &c, &d, &caps, 16).unwrap());
    }

    #[test]
    fn oracle_requires_matching_skeletons() {
        let mut table = SentenceTable::new();
        let caps = caps();
        let open = entry(
            &mut table,
            Formula::exists("v", Formula::Eq(Term::var("v"), Term::var("v"))),
            Assignment::empty(),
        );
        let closed = entry(
            &mut table,
            Formula::exists("v", Formula::Eq(Term::var("v"), Term::numeral(1))),
            Assignment::empty(),
        );
        assert!(!similar_oracle(&table, &open, &closed, &caps, 16).unwrap());
        assert!(!similar(&table, &open, &closed, &caps).unwrap());
    }

    #[test]
    fn oracle_bound_is_reported() {
        let mut table = SentenceTable::new();
        let t = Formula::Eq(
            Term::plus(Term::numeral(1), Term::numeral(2)),
            Term::numeral(3),
        );
        let e = entry(&mut table, t, Assignment::empty());
        // the whole left side and the right side are 2 maximal positions
        let err = similar_oracle(&table, &e, &e, &caps(), 1).unwrap_err();
        assert!(matches!(err, SatClassError::OracleBound { .. }));
    }

    #[test]
    fn rank_order_examples() {
        let mut table = SentenceTable::new();
        let caps = caps();
        let w: BTreeSet<Nat> = [0u64, 1].into_iter().collect();

        // single equation class at rank 0
        let zeq = entry(&mut table, Formula::Eq(Term::Zero, Term::Zero), Assignment::empty());
        let entries = BTreeSet::from([zeq.clone()]);
        let ro = rank_order(&mut table, &entries, &w, &caps).unwrap();
        let canon = canonical_pair(&table, &zeq, &caps).unwrap();
        assert_eq!(ro.rank_of(&canon), Some(0));

        // { ~(0=0), 0=0 } -> ranks 1 and 0
        let neg = entry(
            &mut table,
            Formula::not(Formula::Eq(Term::Zero, Term::Zero)),
            Assignment::empty(),
        );
        let entries: BTreeSet<_> = [neg.clone(), zeq.clone()].into_iter().collect();
        let ro = rank_order(&mut table, &entries, &w, &caps).unwrap();
        assert_eq!(ro.rank_of(&canonical_pair(&table, &zeq, &caps).unwrap()), Some(0));
        assert_eq!(ro.rank_of(&canonical_pair(&table, &neg, &caps).unwrap()), Some(1));

        // instance classes sit below the quantified class
        let ex = entry(
            &mut table,
            Formula::exists("v", Formula::Eq(Term::var("v"), Term::Zero)),
            Assignment::empty(),
        );
        let mut entries: BTreeSet<_> = [ex.clone()].into_iter().collect();
        entries.extend(child_entries(&mut table, &ex, &w).unwrap());
        let ro = rank_order(&mut table, &entries, &w, &caps).unwrap();
        let ex_canon = canonical_pair(&table, &ex, &caps).unwrap();
        assert_eq!(ro.rank_of(&ex_canon), Some(1));
        for child in child_entries(&mut table, &ex, &w).unwrap() {
            let c = canonical_pair(&table, &child, &caps).unwrap();
            assert_eq!(ro.rank_of(&c), Some(0));
        }
    }

    #[test]
    fn entry_closure_reaches_instances() {
        let mut table = SentenceTable::new();
        let w: BTreeSet<Nat> = [0u64, 1].into_iter().collect();
        let ex = entry(
            &mut table,
            Formula::exists("v", Formula::not(Formula::Eq(Term::var("v"), Term::Zero))),
            Assignment::empty(),
        );
        let seeds = BTreeSet::from([ex]);
        let closed = entry_closure(&mut table, &seeds, &w, 100).unwrap();
        // exists entry + 2 negation instances + 2 equation instances
        assert_eq!(closed.len(), 5);
        let eq1 = table
            .code_of(&Formula::Eq(Term::var("v"), Term::Zero))
            .unwrap();
        assert!(closed.contains(&SatEntry::new(eq1, Assignment::from_pairs([("v", 1u64)]))));
    }

    #[test]
    fn bad_assignment_is_rejected() {
        let mut table = SentenceTable::new();
        let e = entry(
            &mut table,
            Formula::Eq(Term::var("v"), Term::Zero),
            Assignment::empty(),
        );
        assert!(matches!(
            instantiate(&table, &e),
            Err(SatClassError::BadAssignment { .. })
        ));
    }
}
