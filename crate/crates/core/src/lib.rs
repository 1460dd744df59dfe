//! Core library of the `cdwb` workbench.
//!
//! The workbench operates on finite fragments of the arithmetical language
//! extended with two unary predicates, `T` (truth) and `D` (determinateness).
//! It provides:
//!
//! - ASTs, parsing, printing and interning for that language, including
//!   letrec-style self-referential declarations ([`syntax`], [`parse`],
//!   [`intern`]);
//! - formal term evaluation with an overflow cap ([`arith`]);
//! - construction of a finite sentence universe closed under subformulas and
//!   witness instances ([`universe`]);
//! - the staged determinateness iteration: the determinacy operator, the
//!   Tarskian evaluator, stage traces and their limit sets ([`engine`]);
//! - checkers for the truth/determinateness axioms and the stage-level
//!   properties, with counterexample extraction ([`checker`], [`report`]);
//! - satisfaction-class machinery over (formula, assignment) pairs:
//!   syntactic similarity, determinate compositionality, and the finite
//!   satisfaction-class extension algorithm ([`satclass`], [`detcomp`],
//!   [`ev`]);
//! - a deterministic random seed-set generator for the property suites
//!   ([`seedgen`]).

pub mod arith;
pub mod checker;
pub mod detcomp;
pub mod engine;
pub mod ev;
pub mod intern;
pub mod parse;
pub mod report;
pub mod satclass;
pub mod seedgen;
pub mod syntax;
pub mod translate;
pub mod universe;

pub use arith::{value_assign, value_closed, EvalCaps, EvalError};
pub use engine::{run_stages, StageTrace};
pub use intern::{Code, SentenceTable};
pub use syntax::{Assignment, Formula, Nat, Term};
pub use universe::{build_universe, Universe, UniverseCaps};
