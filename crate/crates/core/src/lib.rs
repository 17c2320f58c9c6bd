//! Deterministic finite automata for teaching: construction with
//! validation, execution traces, state invariants, language algebra,
//! test generation, and FSM source/document I/O.
//!
//! ```
//! use fsmkit::{fixtures, make_machine, same_language, Equivalence, Rule, Word};
//!
//! let rules = ["S a F", "F a F", "F b A", "A a F", "A b A"]
//!     .map(|r| Rule::parse(r).unwrap())
//!     .to_vec();
//! let m = make_machine(
//!     Word::parse("S F A").unwrap().into_inner(),
//!     Word::parse("a b").unwrap().into_inner(),
//!     "S".parse().unwrap(),
//!     vec!["F".parse().unwrap()],
//!     rules,
//!     false,
//! )
//! .unwrap();
//!
//! assert!(m.accepts(&Word::parse("a b a").unwrap()).unwrap());
//! println!("{}", m.show_transitions(&Word::parse("a b").unwrap()).unwrap());
//!
//! match same_language(&m, &fixtures::a_star_a_buggy()).unwrap() {
//!     Equivalence::Counterexample { word, .. } => assert_eq!(word, Word::parse("a b b a").unwrap()),
//!     Equivalence::Equivalent => unreachable!(),
//! }
//! ```

pub mod algebra;
pub mod bench;
pub mod fixtures;
pub mod invariant;
pub mod io;
pub mod machine;
pub mod payload;
pub mod run;
pub mod sexpr;
pub mod symbol;
pub mod testing;

#[cfg(test)]
mod test_support;

pub use algebra::{
    complement, intersection, is_empty, product, same_language, shortest_accepted,
    symmetric_difference, union, AlgebraError, Equivalence, ProductMode, Side,
};
pub use invariant::{
    annotate_trace, eval_invariant, parse_invariant, AnnotateError, AnnotatedStep, AnnotatedTrace,
    InvariantBinding, InvariantError, InvariantExpr, Verdict,
};
pub use io::document::{load_document, save_document, DocumentError, MachineDocument, Metadata};
pub use io::fsm_source::{append_versioned, emit_fsm_source, parse_fsm_source, SourceError};
pub use machine::{make_machine, nondeterministic_pairs, Definition, Machine, MachineError, Rule};
pub use payload::TracePayload;
pub use run::{apply, show_transitions, Configuration, Outcome, RunError, Trace};
pub use symbol::{Symbol, SymbolError, Word};
pub use testing::{
    invariant_sweep, random_machine, random_words, sm_test, transition_cover, SweepReport,
    TestReport,
};
