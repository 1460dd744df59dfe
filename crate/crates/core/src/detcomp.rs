//! Determinate compositionality over (formula, assignment) pairs in the
//! disjunctive/existential fragment: the pair-level determinacy clauses
//! D'1-D'6, the regularity clauses R'1-R'2, and the guarded satisfaction
//! clauses S1-S6 — plus the derivation of such a pair from a pipeline
//! run's limit sets through the fragment translation.

use std::collections::{BTreeMap, BTreeSet};

use crate::arith::{value_assign, EvalCaps, EvalError};
use crate::engine::tarski_eval;
use crate::intern::{Code, SentenceTable};
use crate::report::{AxiomReport, Check};
use crate::satclass::{
    canonical_pair, canonical_sentence, entry_closure, instantiate, SatClassError, SatEntry,
};
use crate::syntax::{Formula, Nat};
use crate::translate::to_disjunctive;
use crate::universe::Universe;

/// Determinateness of an arbitrary sentence against the limit sets, with
/// the operator's clauses for the conjunctive shapes and their de Morgan
/// duals for the disjunctive ones: a disjunction is determinate when both
/// disjuncts are or one disjunct is determinately true, an existential
/// when all witness instances are or some instance is determinately true.
pub fn fragment_determinate(
    phi: &Formula,
    d_omega: &BTreeSet<Code>,
    t_omega: &BTreeSet<Code>,
    witnesses: &BTreeSet<Nat>,
    caps: &EvalCaps,
) -> Result<bool, EvalError> {
    let det = |psi: &Formula| fragment_determinate(psi, d_omega, t_omega, witnesses, caps);
    let tru = |psi: &Formula| tarski_eval(d_omega, t_omega, psi, witnesses, caps);
    match phi {
        Formula::Eq(..) => Ok(true),
        Formula::Truth(term) | Formula::Det(term) => {
            Ok(match crate::arith::value_closed(term, caps) {
                Ok(v) => d_omega.contains(&Code(v)),
                Err(_) => false,
            })
        }
        Formula::Not(inner) => det(inner),
        Formula::And(a, b) => {
            Ok((det(a)? && det(b)?) || (det(a)? && !tru(a)?) || (det(b)? && !tru(b)?))
        }
        Formula::Or(a, b) => {
            Ok((det(a)? && det(b)?) || (det(a)? && tru(a)?) || (det(b)? && tru(b)?))
        }
        Formula::Forall(v, body) => {
            let mut all = true;
            let mut witnessed = false;
            for &w in witnesses {
                let inst = body.substitute_numeral(v, w);
                let di = det(&inst)?;
                all &= di;
                witnessed |= di && !tru(&inst)?;
            }
            Ok(all || witnessed)
        }
        Formula::Exists(v, body) => {
            let mut all = true;
            let mut witnessed = false;
            for &w in witnesses {
                let inst = body.substitute_numeral(v, w);
                let di = det(&inst)?;
                all &= di;
                witnessed |= di && tru(&inst)?;
            }
            Ok(all || witnessed)
        }
    }
}

/// A determinately compositional pair over an entry fragment.
#[derive(Debug, Clone, Default)]
pub struct FragmentPair {
    pub fragment: BTreeSet<SatEntry>,
    pub d0: BTreeSet<SatEntry>,
    pub s0: BTreeSet<SatEntry>,
}

/// Transport a pipeline run's limit sets into the disjunctive fragment:
/// translate every universe sentence, close under subformula entries over
/// the witnesses, and mark each entry determinate/satisfied according to
/// the limit predicates of its instantiated sentence.
pub fn derive_fragment_pair(
    table: &mut SentenceTable,
    universe: &Universe,
    d_omega: &BTreeSet<Code>,
    t_omega: &BTreeSet<Code>,
    max_entries: usize,
) -> Result<FragmentPair, SatClassError> {
    let caps = universe.caps.eval;
    let mut seeds = BTreeSet::new();
    for &c in &universe.sentences {
        let phi = table
            .decode(c)
            .ok_or(SatClassError::UnknownCode(c))?
            .clone();
        let code = table.intern(to_disjunctive(&phi));
        seeds.insert(SatEntry::closed(code));
    }
    let fragment = entry_closure(table, &seeds, &universe.witnesses, max_entries)?;
    let mut d0 = BTreeSet::new();
    let mut s0 = BTreeSet::new();
    for e in &fragment {
        let sentence = instantiate(table, e)?;
        if fragment_determinate(&sentence, d_omega, t_omega, &universe.witnesses, &caps)? {
            d0.insert(e.clone());
            if tarski_eval(d_omega, t_omega, &sentence, &universe.witnesses, &caps)? {
                s0.insert(e.clone());
            }
        }
    }
    Ok(FragmentPair { fragment, d0, s0 })
}

/// The entry a coded sentence is represented by on the fragment side.
/// Codes of open formulas (or of nothing) have no referent: the atomic
/// clauses quantify over sentences only.
fn referent_entry(table: &mut SentenceTable, value: Nat) -> Option<SatEntry> {
    let phi = table.decode(Code(value))?.clone();
    if !phi.is_sentence() {
        return None;
    }
    let code = table.intern(to_disjunctive(&phi));
    Some(SatEntry::closed(code))
}

fn canon_set(
    table: &SentenceTable,
    entries: &BTreeSet<SatEntry>,
    caps: &EvalCaps,
) -> Result<BTreeSet<Formula>, SatClassError> {
    let mut out = BTreeSet::new();
    for e in entries {
        out.insert(canonical_pair(table, e, caps)?);
    }
    Ok(out)
}

/// Check determinate compositionality of `(d, s)` over an explicit entry
/// domain. Membership queries outside the domain fall back to plain set
/// membership, which is what the clauses quantify over at desk scale.
pub fn check_det_comp_on(
    table: &mut SentenceTable,
    domain: &BTreeSet<SatEntry>,
    d: &BTreeSet<SatEntry>,
    s: &BTreeSet<SatEntry>,
    witnesses: &BTreeSet<Nat>,
    caps: &EvalCaps,
) -> Result<AxiomReport, SatClassError> {
    let mut report = AxiomReport::new();

    // Resolve one entry's children with assignments restricted per child.
    let children = |table: &mut SentenceTable, e: &SatEntry| -> Result<Vec<SatEntry>, SatClassError> {
        crate::satclass::child_entries(table, e, witnesses)
    };

    struct Clause {
        name: &'static str,
        applied: bool,
        failure: Option<(SatEntry, String)>,
    }
    impl Clause {
        fn new(name: &'static str) -> Self {
            Clause {
                name,
                applied: false,
                failure: None,
            }
        }
        fn demand(&mut self, e: &SatEntry, ok: bool, detail: impl Fn() -> String) {
            self.applied = true;
            if !ok && self.failure.is_none() {
                self.failure = Some((e.clone(), detail()));
            }
        }
        fn into_check(self) -> Check {
            match (self.applied, self.failure) {
                (_, Some((e, detail))) => {
                    Check::fail(self.name, Some(e.formula), format!("{e}: {detail}"))
                }
                (true, None) => Check::pass(self.name),
                (false, None) => Check::vacuous(self.name),
            }
        }
    }

    let mut d1 = Clause::new("D'1");
    let mut d2 = Clause::new("D'2");
    let mut d3 = Clause::new("D'3");
    let mut d4 = Clause::new("D'4");
    let mut d5 = Clause::new("D'5");
    let mut d6 = Clause::new("D'6");
    let mut s1 = Clause::new("S1");
    let mut s2 = Clause::new("S2");
    let mut s3 = Clause::new("S3");
    let mut s4 = Clause::new("S4");
    let mut s5 = Clause::new("S5");
    let mut s6 = Clause::new("S6");

    for e in domain {
        let phi = table
            .decode(e.formula)
            .ok_or(SatClassError::UnknownCode(e.formula))?
            .clone();
        let in_d = d.contains(e);
        let in_s = s.contains(e);
        match &phi {
            Formula::Eq(lhs, rhs) => {
                d1.demand(e, in_d, || "equation entry not determinate".into());
                let equal = value_assign(lhs, &e.assignment, caps)?
                    == value_assign(rhs, &e.assignment, caps)?;
                s1.demand(e, in_s == equal, || {
                    format!("S on equation is {in_s}, term values equal: {equal}")
                });
            }
            Formula::Truth(term) if e.assignment.is_empty() && term.is_closed() => {
                if let Ok(v) = crate::arith::value_closed(term, caps) {
                    if let Some(referent) = referent_entry(table, v) {
                        let rd = d.contains(&referent);
                        let rs = s.contains(&referent);
                        d2.demand(e, in_d == rd, || {
                            format!("D(T-atom)={in_d} vs D(referent)={rd}")
                        });
                        if rd {
                            s3.demand(e, !in_s || rs, || {
                                "satisfied T-atom over a determinate referent outside S".into()
                            });
                        }
                    }
                }
            }
            Formula::Det(term) if e.assignment.is_empty() && term.is_closed() => {
                if let Ok(v) = crate::arith::value_closed(term, caps) {
                    if let Some(referent) = referent_entry(table, v) {
                        let rd = d.contains(&referent);
                        d3.demand(e, in_d == rd, || {
                            format!("D(D-atom)={in_d} vs D(referent)={rd}")
                        });
                        if rd {
                            s2.demand(e, in_s, || {
                                "determinate referent but D-atom not satisfied".into()
                            });
                        }
                    }
                }
            }
            Formula::Truth(_) | Formula::Det(_) => {}
            Formula::Not(_) => {
                let child = &children(table, e)?[0];
                let cd = d.contains(child);
                let cs = s.contains(child);
                d4.demand(e, in_d == cd, || format!("D(~phi)={in_d} vs D(phi)={cd}"));
                if in_d {
                    s4.demand(e, in_s == !cs, || {
                        format!("S(~phi)={in_s} vs ~S(phi)={}", !cs)
                    });
                }
            }
            Formula::Or(..) => {
                let ch = children(table, e)?;
                let (a, b) = (&ch[0], &ch[1]);
                let rhs = (d.contains(a) && d.contains(b))
                    || (d.contains(a) && s.contains(a))
                    || (d.contains(b) && s.contains(b));
                d5.demand(e, in_d == rhs, || {
                    format!("D(phi|psi)={in_d} vs clause value {rhs}")
                });
                if in_d {
                    let or = s.contains(a) || s.contains(b);
                    s5.demand(e, in_s == or, || {
                        format!("S(phi|psi)={in_s} vs S(phi)|S(psi)={or}")
                    });
                }
            }
            Formula::Exists(..) => {
                let ch = children(table, e)?;
                let all = ch.iter().all(|c| d.contains(c));
                let witnessed = ch.iter().any(|c| d.contains(c) && s.contains(c));
                d6.demand(e, in_d == (all || witnessed), || {
                    format!(
                        "D(exists)={in_d} vs all-instances-determinate {all} / determinate-true witness {witnessed}"
                    )
                });
                if in_d {
                    let any = ch.iter().any(|c| s.contains(c));
                    s6.demand(e, in_s == any, || {
                        format!("S(exists)={in_s} vs some instance satisfied: {any}")
                    });
                }
            }
            // Conjunctive shapes are outside the fragment the clauses
            // speak about.
            Formula::And(..) | Formula::Forall(..) => {}
        }
    }
    for c in [d1, d2, d3, d4, d5, d6, s1, s2, s3, s4, s5, s6] {
        report.push(c.into_check());
    }

    // R'1 / R'2: similar entries agree on S and on D.
    let mut by_canon: BTreeMap<Formula, Vec<&SatEntry>> = BTreeMap::new();
    for e in domain {
        by_canon
            .entry(canonical_pair(table, e, caps)?)
            .or_default()
            .push(e);
    }
    let mut r1 = Clause::new("R'1");
    let mut r2 = Clause::new("R'2");
    for (canon, group) in &by_canon {
        if group.len() < 2 {
            continue;
        }
        let s_first = s.contains(group[0]);
        let d_first = d.contains(group[0]);
        for e in &group[1..] {
            r1.demand(e, s.contains(*e) == s_first, || {
                format!("similar entries (canonical `{canon}`) disagree on S")
            });
            r2.demand(e, d.contains(*e) == d_first, || {
                format!("similar entries (canonical `{canon}`) disagree on D")
            });
        }
        r1.applied = true;
        r2.applied = true;
    }
    report.push(r1.into_check());
    report.push(r2.into_check());

    Ok(report)
}

/// Check determinate compositionality of `(d, s)` over the closure of
/// `d ∪ s` under subformula entries.
pub fn check_det_comp(
    table: &mut SentenceTable,
    d: &BTreeSet<SatEntry>,
    s: &BTreeSet<SatEntry>,
    witnesses: &BTreeSet<Nat>,
    caps: &EvalCaps,
    max_entries: usize,
) -> Result<AxiomReport, SatClassError> {
    let seeds: BTreeSet<SatEntry> = d.union(s).cloned().collect();
    let domain = entry_closure(table, &seeds, witnesses, max_entries)?;
    check_det_comp_on(table, &domain, d, s, witnesses, caps)
}

/// Canonical-form views of a pair, used by the extension algorithm's
/// class-level lookups.
pub struct CanonPair {
    pub d: BTreeSet<Formula>,
    pub s: BTreeSet<Formula>,
}

pub fn canon_pair(
    table: &SentenceTable,
    d0: &BTreeSet<SatEntry>,
    s0: &BTreeSet<SatEntry>,
    caps: &EvalCaps,
) -> Result<CanonPair, SatClassError> {
    Ok(CanonPair {
        d: canon_set(table, d0, caps)?,
        s: canon_set(table, s0, caps)?,
    })
}

/// Canonical form of the fragment entry representing a coded sentence.
pub fn referent_canon(
    table: &mut SentenceTable,
    value: Nat,
    caps: &EvalCaps,
) -> Result<Option<Formula>, SatClassError> {
    match referent_entry(table, value) {
        Some(e) => Ok(Some(canonical_pair(table, &e, caps)?)),
        None => Ok(None),
    }
}

/// Canonical form of a closed formula after translation; used when tying
/// pipeline sentences to fragment classes.
pub fn translated_canon(phi: &Formula, caps: &EvalCaps) -> Result<Formula, EvalError> {
    canonical_sentence(&to_disjunctive(phi), caps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_stages;
    use crate::parse::parse_source;
    use crate::universe::{build_universe, UniverseCaps};

    fn pipeline(src: &str, witness_max: Nat) -> (SentenceTable, Universe, crate::engine::StageTrace) {
        let mut table = SentenceTable::new();
        let names = parse_source(src, &mut table).unwrap();
        let seeds: BTreeSet<Code> = names.values().copied().collect();
        let universe =
            build_universe(&mut table, &seeds, witness_max, &UniverseCaps::default()).unwrap();
        let max = universe.sentences.len() + 2;
        let trace = run_stages(&universe, &table, max).unwrap();
        (table, universe, trace)
    }

    #[test]
    fn pipeline_pair_is_determinately_compositional() {
        let (mut table, universe, trace) = pipeline(
            "Z := 0 = 0\nE := T(quote(Z))\nL := ~T(quote(L))\nA := forall v. v = v\nC := (0 = S(0) & T(quote(Z)))",
            2,
        );
        let pair =
            derive_fragment_pair(&mut table, &universe, &trace.d_omega, &trace.t_omega, 20_000)
                .unwrap();
        let report = check_det_comp_on(
            &mut table,
            &pair.fragment,
            &pair.d0,
            &pair.s0,
            &universe.witnesses,
            &universe.caps.eval.clone(),
        )
        .unwrap();
        assert!(
            report.all_pass(),
            "failures: {:?}",
            report.failures().collect::<Vec<_>>()
        );
    }

    #[test]
    fn empty_pair_on_equation_fragment_fails_d1() {
        let mut table = SentenceTable::new();
        let caps = EvalCaps::default();
        let w: BTreeSet<Nat> = [0].into_iter().collect();
        let eq = table.intern(Formula::Eq(crate::syntax::Term::Zero, crate::syntax::Term::Zero));
        let domain = BTreeSet::from([SatEntry::closed(eq)]);
        let report = check_det_comp_on(
            &mut table,
            &domain,
            &BTreeSet::new(),
            &BTreeSet::new(),
            &w,
            &caps,
        )
        .unwrap();
        assert!(report.get("D'1").unwrap().failed());
    }

    #[test]
    fn single_satisfaction_violation_is_caught_with_witness() {
        // the conjunction translates into nested negations, so the
        // fragment has determinate negation entries to corrupt
        let (mut table, universe, trace) =
            pipeline("Z := 0 = 0\nC := (0 = 0 & ~0 = S(0))", 1);
        let pair =
            derive_fragment_pair(&mut table, &universe, &trace.d_omega, &trace.t_omega, 20_000)
                .unwrap();
        // flip one negation entry in S
        let mut s_bad = pair.s0.clone();
        let flip = pair
            .fragment
            .iter()
            .find(|e| {
                matches!(table.decode(e.formula), Some(Formula::Not(_))) && pair.d0.contains(*e)
            })
            .expect("fragment has a determinate negation entry")
            .clone();
        if !s_bad.remove(&flip) {
            s_bad.insert(flip.clone());
        }
        let report = check_det_comp_on(
            &mut table,
            &pair.fragment,
            &pair.d0,
            &s_bad,
            &universe.witnesses,
            &universe.caps.eval.clone(),
        )
        .unwrap();
        assert!(!report.all_pass());
    }

    #[test]
    fn fragment_determinate_mirrors_limit_membership() {
        let (table, universe, trace) = pipeline(
            "Z := 0 = 0\nE := T(quote(Z))\nL := ~T(quote(L))\nA := forall v. v = v",
            1,
        );
        for &c in &universe.sentences {
            let phi = table.decode(c).unwrap();
            let via_dual = fragment_determinate(
                &to_disjunctive(phi),
                &trace.d_omega,
                &trace.t_omega,
                &universe.witnesses,
                &universe.caps.eval,
            )
            .unwrap();
            assert_eq!(
                via_dual,
                trace.d_omega.contains(&c),
                "translated determinacy disagrees on {phi}"
            );
        }
    }

    #[test]
    fn truth_values_are_preserved_by_translation() {
        let (table, universe, trace) = pipeline(
            "Z := 0 = 0\nL := ~T(quote(L))\nB := (T(quote(Z)) & ~0 = S(0))",
            1,
        );
        for &c in &universe.sentences {
            let phi = table.decode(c).unwrap();
            let caps = universe.caps.eval;
            let direct =
                tarski_eval(&trace.d_omega, &trace.t_omega, phi, &universe.witnesses, &caps)
                    .unwrap();
            let translated = tarski_eval(
                &trace.d_omega,
                &trace.t_omega,
                &to_disjunctive(phi),
                &universe.witnesses,
                &caps,
            )
            .unwrap();
            assert_eq!(direct, translated, "translation changed truth of {phi}");
        }
    }
}
