//! The staged construction of the determinateness and truth predicates:
//! the determinacy operator, the classical Tarskian evaluator, the stage
//! iteration with fixpoint detection, the limit sets, and the final truth
//! predicate read off the limits.
//!
//! Stages start from the empty pair. Each step takes `(D_i, T_i)` to
//!
//!   D_{i+1} = determinacy_operator(D_i, T_i)
//!   T_{i+1} = { phi in U : tarski_eval(D_i, T_i, phi) }
//!
//! The iteration stops at the first stage whose `(D, T ∩ D)` pair repeats:
//! `T` outside `D` may oscillate harmlessly (the liar's classical stage
//! value flips forever), so comparing full `T` would never converge.
//!
//! Negations are not materialized in the universe; membership queries
//! about `~psi` are answered by the derived rules `D(~psi) <=> psi in D`
//! and `T(~psi) <=> psi not in T`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{value_closed, EvalCaps, EvalError};
use crate::intern::{Code, SentenceTable};
use crate::syntax::{Formula, Nat};
use crate::universe::Universe;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("code {0} is not interned")]
    UnknownCode(Code),
}

/// One stage of the iteration: the determinate set and the truth set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    #[serde(rename = "i")]
    pub index: usize,
    #[serde(rename = "D")]
    pub d: BTreeSet<Code>,
    #[serde(rename = "T")]
    pub t: BTreeSet<Code>,
}

/// The computed stage sequence with fixpoint metadata and limit sets.
///
/// `t_omega` collects `T_i ∩ D_i` over all stages, so `t_omega ⊆ d_omega`
/// holds by construction. When `fixpoint_index = k`, stage `k+1` equals
/// stage `k` on `(D, T ∩ D)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stages: Vec<Stage>,
    #[serde(rename = "fixpoint")]
    pub fixpoint_index: Option<usize>,
    #[serde(rename = "D_omega")]
    pub d_omega: BTreeSet<Code>,
    #[serde(rename = "T_omega")]
    pub t_omega: BTreeSet<Code>,
}

/// `D(psi)` under the derived negation rule: peel negations, then look up.
fn d_query(phi: &Formula, d: &BTreeSet<Code>, table: &SentenceTable) -> bool {
    match phi {
        Formula::Not(inner) => d_query(inner, d, table),
        _ => table.code_of(phi).is_some_and(|c| d.contains(&c)),
    }
}

/// `T(psi)` under the derived negation rule.
fn t_query(phi: &Formula, t: &BTreeSet<Code>, table: &SentenceTable) -> bool {
    match phi {
        Formula::Not(inner) => !t_query(inner, t, table),
        _ => table.code_of(phi).is_some_and(|c| t.contains(&c)),
    }
}

/// "Determinately false": the negation of `psi` is determinate and true,
/// evaluated through the derived rules as `psi in D` and `psi not in T`.
fn det_false(phi: &Formula, d: &BTreeSet<Code>, t: &BTreeSet<Code>, table: &SentenceTable) -> bool {
    d_query(phi, d, table) && !t_query(phi, t, table)
}

/// The determinacy operator: the set of universe sentences satisfying one
/// of the six clauses — closed equation; `T t` or `D t` with a determinate
/// referent; negation of a determinate sentence; conjunction with both
/// conjuncts determinate or one conjunct determinately false; universal
/// sentence with all witness instances determinate or some instance
/// determinately false.
///
/// Malformed shapes simply fail every clause; evaluation overflow inside a
/// referent term counts as a failed clause (such a value can name no code).
pub fn determinacy_operator(
    d: &BTreeSet<Code>,
    t: &BTreeSet<Code>,
    universe: &Universe,
    table: &SentenceTable,
) -> BTreeSet<Code> {
    let caps = &universe.caps.eval;
    let mut out = BTreeSet::new();
    for &code in &universe.sentences {
        let Some(phi) = table.decode(code) else {
            continue;
        };
        let determined = match phi {
            Formula::Eq(..) => true,
            Formula::Truth(term) | Formula::Det(term) => value_closed(term, caps)
                .ok()
                .is_some_and(|v| d.contains(&Code(v))),
            Formula::Not(inner) => d_query(inner, d, table),
            Formula::And(a, b) => {
                (d_query(a, d, table) && d_query(b, d, table))
                    || det_false(a, d, t, table)
                    || det_false(b, d, t, table)
            }
            Formula::Forall(v, body) => {
                let mut all = true;
                let mut some_false = false;
                for &w in &universe.witnesses {
                    let inst = body.substitute_numeral(v, w);
                    if !d_query(&inst, d, table) {
                        all = false;
                    }
                    if det_false(&inst, d, t, table) {
                        some_false = true;
                    }
                }
                all || some_false
            }
            // Disjunctions and existentials are not among the operator's
            // clauses; they never become determinate here.
            Formula::Or(..) | Formula::Exists(..) => false,
        };
        if determined {
            out.insert(code);
        }
    }
    out
}

/// Classical Tarskian truth of a sentence in the structure `(U, D, T)`:
/// equations by term value, `D(t)`/`T(t)` by membership of the referent's
/// value, connectives classically, quantifiers over the witness set.
pub fn tarski_eval(
    d: &BTreeSet<Code>,
    t: &BTreeSet<Code>,
    phi: &Formula,
    witnesses: &BTreeSet<Nat>,
    caps: &EvalCaps,
) -> Result<bool, EvalError> {
    match phi {
        Formula::Eq(a, b) => Ok(value_closed(a, caps)? == value_closed(b, caps)?),
        Formula::Det(term) => Ok(d.contains(&Code(value_closed(term, caps)?))),
        Formula::Truth(term) => Ok(t.contains(&Code(value_closed(term, caps)?))),
        Formula::Not(inner) => Ok(!tarski_eval(d, t, inner, witnesses, caps)?),
        Formula::And(a, b) => {
            Ok(tarski_eval(d, t, a, witnesses, caps)? && tarski_eval(d, t, b, witnesses, caps)?)
        }
        Formula::Or(a, b) => {
            Ok(tarski_eval(d, t, a, witnesses, caps)? || tarski_eval(d, t, b, witnesses, caps)?)
        }
        Formula::Forall(v, body) => {
            for &w in witnesses {
                if !tarski_eval(d, t, &body.substitute_numeral(v, w), witnesses, caps)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Exists(v, body) => {
            for &w in witnesses {
                if tarski_eval(d, t, &body.substitute_numeral(v, w), witnesses, caps)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Run the stage iteration from the empty pair. Stops at the first `i`
/// with `D_{i+1} = D_i` and `T_{i+1} ∩ D_i = T_i ∩ D_i` (recording the
/// repeated stage), or after `max_stages` computed stages with
/// `fixpoint_index` unset.
pub fn run_stages(
    universe: &Universe,
    table: &SentenceTable,
    max_stages: usize,
) -> Result<StageTrace, EngineError> {
    let caps = universe.caps.eval;
    let mut stages = vec![Stage {
        index: 0,
        d: BTreeSet::new(),
        t: BTreeSet::new(),
    }];
    let mut fixpoint_index = None;

    for i in 0..max_stages {
        let cur = &stages[i];
        let d_next = determinacy_operator(&cur.d, &cur.t, universe, table);
        let mut t_next = BTreeSet::new();
        for &code in &universe.sentences {
            let phi = table.decode(code).ok_or(EngineError::UnknownCode(code))?;
            if tarski_eval(&cur.d, &cur.t, phi, &universe.witnesses, &caps)? {
                t_next.insert(code);
            }
        }
        let stable = d_next == cur.d
            && cur.d.iter().all(|c| t_next.contains(c) == cur.t.contains(c));
        stages.push(Stage {
            index: i + 1,
            d: d_next,
            t: t_next,
        });
        if stable {
            fixpoint_index = Some(i);
            break;
        }
    }

    let (d_omega, t_omega) = limit_sets_of(&stages);
    Ok(StageTrace {
        stages,
        fixpoint_index,
        d_omega,
        t_omega,
    })
}

fn limit_sets_of(stages: &[Stage]) -> (BTreeSet<Code>, BTreeSet<Code>) {
    let mut d_omega = BTreeSet::new();
    let mut t_omega = BTreeSet::new();
    for stage in stages {
        d_omega.extend(stage.d.iter().copied());
        t_omega.extend(stage.d.intersection(&stage.t).copied());
    }
    (d_omega, t_omega)
}

/// Limit sets: the union of the `D_i` and the union of the `T_i ∩ D_i`.
/// With a detected fixpoint these equal the fixpoint stage's `D` and
/// `D ∩ T`.
pub fn limit_sets(trace: &StageTrace) -> (BTreeSet<Code>, BTreeSet<Code>) {
    limit_sets_of(&trace.stages)
}

/// The final truth predicate: classical Tarskian truth over the limit
/// structure `(U, D_omega, T_omega)`. This is the workbench's model-side
/// truth predicate; its compatibility with `T_omega` on `D_omega` is
/// checked, not assumed.
pub fn t_final(
    d_omega: &BTreeSet<Code>,
    t_omega: &BTreeSet<Code>,
    phi: &Formula,
    witnesses: &BTreeSet<Nat>,
    caps: &EvalCaps,
) -> Result<bool, EvalError> {
    tarski_eval(d_omega, t_omega, phi, witnesses, caps)
}

/// `t_final` tabulated over every universe sentence.
pub fn t_final_table(
    universe: &Universe,
    table: &SentenceTable,
    d_omega: &BTreeSet<Code>,
    t_omega: &BTreeSet<Code>,
) -> Result<BTreeMap<Code, bool>, EngineError> {
    let mut out = BTreeMap::new();
    for &code in &universe.sentences {
        let phi = table.decode(code).ok_or(EngineError::UnknownCode(code))?;
        out.insert(
            code,
            t_final(d_omega, t_omega, phi, &universe.witnesses, &universe.caps.eval)?,
        );
    }
    Ok(out)
}

/// Determinateness of an arbitrary sentence over the limit structure,
/// evaluated structurally by the operator's clauses (with truth queries
/// answered by `t_final`). On universe members this agrees with
/// membership in `d_omega` exactly when the fixpoint property holds; on
/// non-members (variant-substituted sentences, derived negations) it is
/// the operator's canonical extension.
pub fn limit_determinate(
    phi: &Formula,
    d_omega: &BTreeSet<Code>,
    t_omega: &BTreeSet<Code>,
    witnesses: &BTreeSet<Nat>,
    caps: &EvalCaps,
) -> Result<bool, EvalError> {
    let det_false = |psi: &Formula| -> Result<bool, EvalError> {
        Ok(limit_determinate(psi, d_omega, t_omega, witnesses, caps)?
            && !tarski_eval(d_omega, t_omega, psi, witnesses, caps)?)
    };
    match phi {
        Formula::Eq(..) => Ok(true),
        Formula::Truth(term) | Formula::Det(term) => Ok(match value_closed(term, caps) {
            Ok(v) => d_omega.contains(&Code(v)),
            Err(_) => false,
        }),
        Formula::Not(inner) => limit_determinate(inner, d_omega, t_omega, witnesses, caps),
        Formula::And(a, b) => {
            let both = limit_determinate(a, d_omega, t_omega, witnesses, caps)?
                && limit_determinate(b, d_omega, t_omega, witnesses, caps)?;
            Ok(both || det_false(a)? || det_false(b)?)
        }
        Formula::Forall(v, body) => {
            let mut all = true;
            let mut some_false = false;
            for &w in witnesses {
                let inst = body.substitute_numeral(v, w);
                if !limit_determinate(&inst, d_omega, t_omega, witnesses, caps)? {
                    all = false;
                }
                if det_false(&inst)? {
                    some_false = true;
                }
            }
            Ok(all || some_false)
        }
        Formula::Or(..) | Formula::Exists(..) => Ok(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_source;
    use crate::universe::{build_universe, UniverseCaps};

    struct Pipeline {
        table: SentenceTable,
        universe: Universe,
        trace: StageTrace,
        names: BTreeMap<String, Code>,
    }

    fn pipeline(src: &str, witness_max: Nat) -> Pipeline {
        let mut table = SentenceTable::new();
        let names = parse_source(src, &mut table).unwrap();
        let seeds: BTreeSet<Code> = names.values().copied().collect();
        let universe =
            build_universe(&mut table, &seeds, witness_max, &UniverseCaps::default()).unwrap();
        let max = universe.sentences.len() + 2;
        let trace = run_stages(&universe, &table, max).unwrap();
        Pipeline {
            table,
            universe,
            trace,
            names,
        }
    }

    #[test]
    fn operator_on_empty_stage() {
        let p = pipeline("Z := 0 = 0\nL := ~T(quote(L))", 0);
        let d1 = determinacy_operator(
            &BTreeSet::new(),
            &BTreeSet::new(),
            &p.universe,
            &p.table,
        );
        let z = p.names["Z"];
        let l = p.names["L"];
        let atom = p
            .table
            .code_of(&Formula::Truth(Term::numeral(l.0)))
            .unwrap();
        assert!(d1.contains(&z), "closed equations enter immediately");
        assert!(!d1.contains(&l), "the liar fails every clause at stage 0");
        assert!(!d1.contains(&atom), "T(#L) needs L determinate first");
    }

    use crate::syntax::Term;

    #[test]
    fn conjunction_with_determinately_false_conjunct() {
        // F := 0 = S(0) is determinately false after one stage, so the
        // conjunction with the liar becomes determinate through the
        // false-conjunct clause even though the liar never does.
        let p = pipeline("L := ~T(quote(L))\nC := (0 = S(0) & ~T(quote(L)))", 0);
        let falsum = p
            .table
            .code_of(&Formula::Eq(Term::Zero, Term::succ(Term::Zero)))
            .unwrap();
        let mut d = BTreeSet::from([falsum]);
        let mut t = BTreeSet::new();
        // T with the falsum absent: derived T(~falsum) is true.
        let c = p.names["C"];
        let d2 = determinacy_operator(&d, &t, &p.universe, &p.table);
        assert!(d2.contains(&c));
        // but with the falsum also true, the clause no longer applies
        t.insert(falsum);
        let d2 = determinacy_operator(&d, &t, &p.universe, &p.table);
        assert!(!d2.contains(&c));
        d.clear();
    }

    #[test]
    fn tarski_evaluator_basics() {
        let caps = EvalCaps::default();
        let w: BTreeSet<Nat> = (0..=2).collect();
        let empty = BTreeSet::new();
        let zeq = Formula::Eq(Term::Zero, Term::Zero);
        assert!(tarski_eval(&empty, &empty, &zeq, &w, &caps).unwrap());

        let d = BTreeSet::from([Code(7)]);
        let det = Formula::Det(Term::numeral(7));
        assert!(tarski_eval(&d, &empty, &det, &w, &caps).unwrap());
        assert!(!tarski_eval(&empty, &empty, &det, &w, &caps).unwrap());

        // ~T(#c) evaluates truth of the atom against T and negates
        let liar_shape = Formula::not(Formula::Truth(Term::numeral(3)));
        assert!(tarski_eval(&empty, &empty, &liar_shape, &w, &caps).unwrap());

        let all = Formula::forall("v", Formula::Eq(Term::var("v"), Term::var("v")));
        assert!(tarski_eval(&empty, &empty, &all, &w, &caps).unwrap());
        let some = Formula::exists("v", Formula::Eq(Term::var("v"), Term::succ(Term::Zero)));
        assert!(tarski_eval(&empty, &empty, &some, &w, &caps).unwrap());
    }

    #[test]
    fn three_truth_iterations_enter_stagewise() {
        let p = pipeline(
            "Z := 0 = 0\nE := T(quote(Z))\nF := T(quote(E))",
            0,
        );
        let z = p.names["Z"];
        let e = p.names["E"];
        let f = p.names["F"];
        let stage = |i: usize| &p.trace.stages[i];

        assert!(stage(1).d.contains(&z) && stage(1).t.contains(&z));
        assert!(!stage(1).d.contains(&e));
        assert!(stage(2).d.contains(&e) && stage(2).t.contains(&e));
        assert!(!stage(2).d.contains(&f));
        assert!(stage(3).d.contains(&f) && stage(3).t.contains(&f));

        assert_eq!(p.trace.fixpoint_index, Some(3));
        for c in [z, e, f] {
            assert!(p.trace.d_omega.contains(&c));
            assert!(p.trace.t_omega.contains(&c));
        }
    }

    #[test]
    fn liar_and_truth_teller_stay_undetermined() {
        let p = pipeline("L := ~T(quote(L))\nK := T(quote(K))", 1);
        let l = p.names["L"];
        let k = p.names["K"];
        assert!(p.trace.fixpoint_index.is_some());
        for stage in &p.trace.stages {
            assert!(!stage.d.contains(&l));
            assert!(!stage.d.contains(&k));
        }
        assert!(!p.trace.d_omega.contains(&l));
        assert!(!p.trace.d_omega.contains(&k));
        // the truth-teller's classical stage values are all false
        for stage in &p.trace.stages {
            assert!(!stage.t.contains(&k));
        }
        // the liar's classical value oscillates between stages
        let vals: Vec<bool> = p.trace.stages.iter().map(|s| s.t.contains(&l)).collect();
        assert!(vals.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn fixpoint_detected_within_universe_size_plus_two() {
        let p = pipeline(
            "Z := 0 = 0\nE := T(quote(Z))\nF := T(quote(E))\nL := ~T(quote(L))\nA := forall v. v = v",
            2,
        );
        let bound = p.universe.sentences.len() + 2;
        assert!(p.trace.fixpoint_index.is_some());
        assert!(p.trace.stages.len() <= bound + 1);
        // limit D is a fixpoint of the operator against the limits
        let d_next = determinacy_operator(&p.trace.d_omega, &p.trace.t_omega, &p.universe, &p.table);
        assert_eq!(d_next, p.trace.d_omega);
    }

    #[test]
    fn limits_are_unions_and_nested() {
        let p = pipeline("Z := 0 = 0\nE := T(quote(Z))", 0);
        let (d, t) = limit_sets(&p.trace);
        assert_eq!(d, p.trace.d_omega);
        assert_eq!(t, p.trace.t_omega);
        assert!(p.trace.t_omega.is_subset(&p.trace.d_omega));
        // detected fixpoint stage carries the same sets
        let k = p.trace.fixpoint_index.unwrap();
        assert_eq!(p.trace.stages[k].d, p.trace.d_omega);
    }

    #[test]
    fn t_final_agrees_with_t_omega_on_determinates_and_is_classical() {
        let p = pipeline("Z := 0 = 0\nE := T(quote(Z))\nL := ~T(quote(L))", 0);
        let caps = p.universe.caps.eval;
        let l = p.names["L"];
        let z = p.names["Z"];

        // D(#code(Z)) is finally true
        let det = Formula::Det(Term::numeral(z.0));
        assert!(t_final(&p.trace.d_omega, &p.trace.t_omega, &det, &p.universe.witnesses, &caps)
            .unwrap());

        // the liar comes out true (negation of a false atom) while
        // remaining outside D_omega
        let liar = p.table.decode(l).unwrap();
        assert!(t_final(&p.trace.d_omega, &p.trace.t_omega, liar, &p.universe.witnesses, &caps)
            .unwrap());
        assert!(!p.trace.d_omega.contains(&l));

        // negation commutes with t_final on every universe sentence
        for &c in &p.universe.sentences {
            let phi = p.table.decode(c).unwrap();
            let neg = Formula::not(phi.clone());
            let a =
                t_final(&p.trace.d_omega, &p.trace.t_omega, &neg, &p.universe.witnesses, &caps)
                    .unwrap();
            let b =
                t_final(&p.trace.d_omega, &p.trace.t_omega, phi, &p.universe.witnesses, &caps)
                    .unwrap();
            assert_eq!(a, !b);
        }
    }

    #[test]
    fn stage_cap_leaves_fixpoint_unset() {
        let p = {
            let mut table = SentenceTable::new();
            let names = parse_source("Z := 0 = 0\nE := T(quote(Z))\nF := T(quote(E))", &mut table)
                .unwrap();
            let seeds: BTreeSet<Code> = names.values().copied().collect();
            let universe =
                build_universe(&mut table, &seeds, 0, &UniverseCaps::default()).unwrap();
            run_stages(&universe, &table, 1).unwrap()
        };
        assert_eq!(p.fixpoint_index, None);
        assert_eq!(p.stages.len(), 2);
    }

    #[test]
    fn limit_determinate_matches_membership_on_universe() {
        let p = pipeline(
            "Z := 0 = 0\nE := T(quote(Z))\nL := ~T(quote(L))\nA := forall v. v = v",
            1,
        );
        for &c in &p.universe.sentences {
            let phi = p.table.decode(c).unwrap();
            let pred = limit_determinate(
                phi,
                &p.trace.d_omega,
                &p.trace.t_omega,
                &p.universe.witnesses,
                &p.universe.caps.eval,
            )
            .unwrap();
            assert_eq!(pred, p.trace.d_omega.contains(&c), "mismatch on {phi}");
        }
    }

    #[test]
    fn trace_serializes_to_the_pinned_shape() {
        let p = pipeline("Z := 0 = 0", 0);
        let json = serde_json::to_value(&p.trace).unwrap();
        assert!(json.get("stages").is_some());
        assert!(json.get("fixpoint").is_some());
        assert!(json.get("D_omega").is_some());
        assert!(json.get("T_omega").is_some());
        let stage0 = &json["stages"][0];
        assert_eq!(stage0["i"], 0);
        assert!(stage0.get("D").is_some());
        assert!(stage0.get("T").is_some());
        let round: StageTrace = serde_json::from_value(json).unwrap();
        assert_eq!(round, p.trace);
    }
}
