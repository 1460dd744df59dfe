//! Construction of the finite sentence universe over which the stagewise
//! and axiom-checking operations quantify.
//!
//! The universe is the closure of the seed sentences under direct
//! subformulas (restricted to sentences) and, for quantified members,
//! under witness instances. The witness set `W` holds the contiguous
//! range `0..=N` together with the codes of the seed core (the subformula
//! closure of the seeds), so that `T(#c)`/`D(#c)` instances about the
//! seeded sentences are expressible. Instance sentences are members and
//! get codes, but those codes do not re-enter `W`: letting them feed back
//! would make every quantified universe infinite (each instance mints a
//! code, each code demands an instance).
//!
//! Negations are not materialized in the closure; the stage predicates
//! answer queries about `~phi` through derived rules instead.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::arith::{EvalCaps, EvalError};
use crate::intern::{Code, SentenceTable};
use crate::syntax::{Formula, Nat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniverseCaps {
    pub max_sentences: usize,
    pub eval: EvalCaps,
}

impl Default for UniverseCaps {
    fn default() -> Self {
        UniverseCaps {
            max_sentences: 5000,
            eval: EvalCaps::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UniverseError {
    #[error("sentence cap {cap} exceeded while closing over `{offender}`")]
    CapExceeded { cap: usize, offender: String },
    #[error("seed code {0} is not interned")]
    UnknownSeed(Code),
    #[error("instance expansion of a non-quantified formula `{0}`")]
    NotQuantified(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Finite sentence set plus witness set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub sentences: BTreeSet<Code>,
    pub witnesses: BTreeSet<Nat>,
    pub caps: UniverseCaps,
}

/// JSON dump shape: `{"sentences":[{"code":n,"text":"..."}],"witnesses":[...]}`.
#[derive(Debug, Clone, Serialize)]
pub struct UniverseDump {
    pub sentences: Vec<SentenceDump>,
    pub witnesses: Vec<Nat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SentenceDump {
    pub code: Nat,
    pub text: String,
}

impl Universe {
    pub fn contains(&self, code: Code) -> bool {
        self.sentences.contains(&code)
    }

    pub fn dump(&self, table: &SentenceTable) -> UniverseDump {
        UniverseDump {
            sentences: self
                .sentences
                .iter()
                .map(|c| SentenceDump {
                    code: c.0,
                    text: table
                        .decode(*c)
                        .map(|f| f.to_string())
                        .unwrap_or_default(),
                })
                .collect(),
            witnesses: self.witnesses.iter().copied().collect(),
        }
    }
}

/// One instance per witness, ordered by witness value; instances of a
/// vacuous binder are deduplicated to one.
pub fn instances(phi: &Formula, witnesses: &BTreeSet<Nat>) -> Result<Vec<Formula>, UniverseError> {
    let (var, body) = match phi {
        Formula::Forall(v, body) | Formula::Exists(v, body) => (v, body),
        other => return Err(UniverseError::NotQuantified(other.to_string())),
    };
    let mut out = Vec::new();
    for &w in witnesses {
        let inst = body.substitute_numeral(var, w);
        if !out.contains(&inst) {
            out.push(inst);
        }
    }
    Ok(out)
}

/// Sentence-valued direct subformulas (quantified members contribute
/// through instances instead of their open bodies).
fn sentence_children(phi: &Formula) -> Vec<Formula> {
    phi.direct_subformulas()
        .into_iter()
        .filter(|f| f.is_sentence())
        .cloned()
        .collect()
}

/// Least closure of the seeds under sentence subformulas and witness
/// instances, iterated to a fixed point over the fixed witness set.
/// Deterministic: work is processed in ascending code order.
pub fn build_universe(
    table: &mut SentenceTable,
    seeds: &BTreeSet<Code>,
    witness_max: Nat,
    caps: &UniverseCaps,
) -> Result<Universe, UniverseError> {
    for &c in seeds {
        if table.decode(c).is_none() {
            return Err(UniverseError::UnknownSeed(c));
        }
    }

    // Phase 1: subformula closure of the seeds (the core).
    let mut members: BTreeSet<Code> = BTreeSet::new();
    let mut work: Vec<Code> = seeds.iter().copied().collect();
    while let Some(c) = work.pop() {
        if !members.insert(c) {
            continue;
        }
        check_cap(table, c, members.len(), caps)?;
        let phi = table.decode(c).expect("member is interned").clone();
        for child in sentence_children(&phi) {
            work.push(table.intern(child));
        }
    }

    // Phase 2: witnesses = 0..=N plus the core's codes.
    let mut witnesses: BTreeSet<Nat> = (0..=witness_max).collect();
    witnesses.extend(members.iter().map(|c| c.0));

    // Phase 3: close under instances over the fixed witness set, together
    // with the subformula closure of everything new.
    loop {
        let mut added = Vec::new();
        for &c in &members {
            let phi = table.decode(c).expect("member is interned").clone();
            if matches!(phi, Formula::Forall(..) | Formula::Exists(..)) {
                for inst in instances(&phi, &witnesses)? {
                    let code = table.intern(inst);
                    if !members.contains(&code) {
                        added.push(code);
                    }
                }
            }
        }
        if added.is_empty() {
            break;
        }
        let mut work = added;
        while let Some(c) = work.pop() {
            if !members.insert(c) {
                continue;
            }
            check_cap(table, c, members.len(), caps)?;
            let phi = table.decode(c).expect("member is interned").clone();
            for child in sentence_children(&phi) {
                work.push(table.intern(child));
            }
        }
    }

    Ok(Universe {
        sentences: members,
        witnesses,
        caps: *caps,
    })
}

fn check_cap(
    table: &SentenceTable,
    offender: Code,
    len: usize,
    caps: &UniverseCaps,
) -> Result<(), UniverseError> {
    if len > caps.max_sentences {
        return Err(UniverseError::CapExceeded {
            cap: caps.max_sentences,
            offender: table
                .decode(offender)
                .map(|f| f.to_string())
                .unwrap_or_else(|| offender.to_string()),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_source;
    use crate::syntax::Term;

    fn build(src: &str, n: Nat) -> (SentenceTable, Universe) {
        let mut table = SentenceTable::new();
        let names = parse_source(src, &mut table).unwrap();
        let seeds: BTreeSet<Code> = names.values().copied().collect();
        let u = build_universe(&mut table, &seeds, n, &UniverseCaps::default()).unwrap();
        (table, u)
    }

    #[test]
    fn quantifier_free_seed() {
        let (table, u) = build("Z := 0 = 0", 0);
        let z = table.code_of_name("Z").unwrap();
        assert_eq!(u.sentences, BTreeSet::from([z]));
        assert!(u.witnesses.contains(&0));
        assert!(u.witnesses.contains(&z.0));
    }

    #[test]
    fn universal_seed_instantiates_over_witnesses() {
        let (table, u) = build("A := forall v. v = v", 2);
        let a = table.code_of_name("A").unwrap();
        // instances for 0, 1, 2 and for the seed's own code
        for w in [0, 1, 2, a.0] {
            let inst = Formula::Eq(Term::numeral(w), Term::numeral(w));
            let code = table.code_of(&inst).unwrap();
            assert!(u.contains(code), "missing instance for witness {w}");
        }
        // the witness set is exactly 0..=N plus the seed core's codes;
        // instance codes do not feed back into it
        let expected: BTreeSet<Nat> = [0, 1, 2, a.0].into_iter().collect();
        assert_eq!(u.witnesses, expected);
    }

    #[test]
    fn liar_universe_contains_the_inner_atom() {
        let (table, u) = build("L := ~T(quote(L))", 0);
        let l = table.code_of_name("L").unwrap();
        let atom = Formula::Truth(Term::numeral(l.0));
        let atom_code = table.code_of(&atom).unwrap();
        assert!(u.contains(l));
        assert!(u.contains(atom_code));
        assert!(u.witnesses.contains(&l.0));
    }

    #[test]
    fn closure_is_one_step_closed() {
        let (mut table, u) = build(
            "A := forall v. (v = 0 | T(v))\nB := (0 = 0 & exists w. w = S(0))",
            3,
        );
        for &c in &u.sentences {
            let phi = table.decode(c).unwrap().clone();
            for child in sentence_children(&phi) {
                let cc = table.intern(child);
                assert!(u.contains(cc), "child of {phi} missing");
            }
            if matches!(phi, Formula::Forall(..) | Formula::Exists(..)) {
                for inst in instances(&phi, &u.witnesses).unwrap() {
                    let ic = table.intern(inst);
                    assert!(u.contains(ic), "instance of {phi} missing");
                }
            }
        }
    }

    #[test]
    fn rebuilding_from_the_same_seeds_is_deterministic() {
        let src = "A := forall v. exists w. (v * w) = v\nB := T(quote(A))";
        let (table1, u1) = build(src, 2);
        let (table2, u2) = build(src, 2);
        assert_eq!(u1, u2);
        let d1: Vec<_> = table1.iter().map(|(c, f)| (c, f.clone())).collect();
        let d2: Vec<_> = table2.iter().map(|(c, f)| (c, f.clone())).collect();
        assert_eq!(d1, d2);
    }

    #[test]
    fn vacuous_binder_instances_dedup() {
        let w: BTreeSet<Nat> = [0, 1].into_iter().collect();
        let phi = Formula::forall("v", Formula::Eq(Term::Zero, Term::Zero));
        let insts = instances(&phi, &w).unwrap();
        assert_eq!(insts, vec![Formula::Eq(Term::Zero, Term::Zero)]);
    }

    #[test]
    fn instances_of_atoms_error() {
        let w: BTreeSet<Nat> = [0].into_iter().collect();
        let phi = Formula::Eq(Term::Zero, Term::Zero);
        assert!(matches!(
            instances(&phi, &w),
            Err(UniverseError::NotQuantified(_))
        ));
    }

    #[test]
    fn sentence_cap_names_the_offender() {
        let mut table = SentenceTable::new();
        let names = parse_source("A := forall v. v = v", &mut table).unwrap();
        let seeds: BTreeSet<Code> = names.values().copied().collect();
        let caps = UniverseCaps {
            max_sentences: 2,
            eval: EvalCaps::default(),
        };
        let err = build_universe(&mut table, &seeds, 5, &caps).unwrap_err();
        assert!(matches!(err, UniverseError::CapExceeded { cap: 2, .. }));
    }

    #[test]
    fn existential_instances_follow_witness_order() {
        let w: BTreeSet<Nat> = [2, 0, 1].into_iter().collect();
        let phi = Formula::exists("v", Formula::Truth(Term::var("v")));
        let insts = instances(&phi, &w).unwrap();
        assert_eq!(
            insts,
            vec![
                Formula::Truth(Term::numeral(0)),
                Formula::Truth(Term::numeral(1)),
                Formula::Truth(Term::numeral(2)),
            ]
        );
    }
}
