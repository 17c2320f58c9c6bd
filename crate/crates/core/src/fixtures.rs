//! Worked example machines and their state invariants.
//!
//! These are the classroom examples the toolkit is built around: `a*`
//! (words starting with `a`), `a*a` (words starting and ending with `a`), a
//! student's buggy `a*a`, and two attempts at deciding whether `baba` occurs
//! in a word over `{a, b}`.

use crate::invariant::{parse_invariant, InvariantBinding};
use crate::machine::{Definition, Machine, Rule};
use crate::symbol::{Symbol, Word};

fn symbols(tokens: &str) -> Vec<Symbol> {
    Word::parse(tokens).expect("fixture tokens").into_inner()
}

fn definition(
    states: &str,
    alphabet: &str,
    start: &str,
    finals: &str,
    rules: &[&str],
) -> Definition {
    Definition {
        states: symbols(states),
        alphabet: symbols(alphabet),
        start: Symbol::new(start).expect("fixture start"),
        finals: symbols(finals),
        rules: rules
            .iter()
            .map(|r| Rule::parse(r).expect("fixture rule"))
            .collect(),
        no_dead: false,
    }
}

fn build(def: Definition) -> Machine {
    Machine::build(&def).expect("fixture machines are valid")
}

fn binding(pairs: &[(&str, &str)]) -> InvariantBinding {
    pairs
        .iter()
        .map(|(state, source)| {
            (
                Symbol::new(state).expect("fixture state"),
                parse_invariant(source).expect("fixture invariant"),
            )
        })
        .collect()
}

pub fn a_star_definition() -> Definition {
    definition("S F", "a b", "S", "F", &["S a F", "F a F", "F b F"])
}

/// Words that start with `a`.
pub fn a_star() -> Machine {
    build(a_star_definition())
}

pub fn a_star_a_definition() -> Definition {
    definition(
        "S F A",
        "a b",
        "S",
        "F",
        &["S a F", "F a F", "F b A", "A a F", "A b A"],
    )
}

/// Words that start and end with `a`.
pub fn a_star_a() -> Machine {
    build(a_star_a_definition())
}

pub const S_INV: &str = "(empty)";
pub const F_INV: &str = "(and (not (empty)) (first= a) (last= a))";
pub const A_INV: &str = "(and (not (empty)) (first= a) (not (last= a)))";
pub const DS_INV: &str = "(and (not (empty)) (not (first= a)))";

pub fn a_star_a_invariants() -> InvariantBinding {
    binding(&[("S", S_INV), ("F", F_INV), ("A", A_INV), ("ds", DS_INV)])
}

pub fn a_star_a_buggy_definition() -> Definition {
    definition("J K", "a b", "J", "K", &["J a K", "K a K", "K b J"])
}

/// A student attempt at `a*a` that sends `(J b)` to the dead state.
pub fn a_star_a_buggy() -> Machine {
    build(a_star_a_buggy_definition())
}

pub const J_INV: &str = "(or (empty) (not (last= a)))";
pub const K_INV: &str = "(and (first= a) (last= a))";
/// The dead-state invariant of the buggy attempt. The empty-word guard
/// makes its `()` unit test come out false.
pub const BUGGY_DS_INV: &str = "(and (not (empty)) (not (first= a)))";

pub fn a_star_a_buggy_invariants() -> InvariantBinding {
    binding(&[("J", J_INV), ("K", K_INV), ("ds", BUGGY_DS_INV)])
}

pub fn baba_proposed_definition() -> Definition {
    definition(
        "A B C D F",
        "a b",
        "A",
        "F",
        &[
            "A a A", "A b B", "B a C", "B b A", "F a F", "C a A", "C b D", "D a F", "D b A",
            "F b F",
        ],
    )
}

/// First attempt at detecting `baba`: reading `b` in `B` or `D` wrongly
/// forgets the partial match.
pub fn baba_proposed() -> Machine {
    build(baba_proposed_definition())
}

/// Invariants of the first attempt, transcribed case by case.
pub fn baba_proposed_invariants() -> InvariantBinding {
    binding(&[
        (
            "A",
            "(or (empty) \
                 (and (len= 1) (not (suffix= b))) \
                 (and (len= 2) (not (suffix= b)) (not (suffix= b a))) \
                 (and (len= 3) (not (suffix= b)) (not (suffix= b a)) (not (suffix= b a b))) \
                 (and (len> 3) (not (suffix= b)) (not (suffix= b a)) (not (suffix= b a b)) \
                      (not (suffix= b a b a))))",
        ),
        ("B", "(and (len>= 1) (suffix= b))"),
        ("C", "(and (len>= 2) (suffix= b a))"),
        ("D", "(and (len>= 3) (suffix= b a b))"),
        ("F", "(and (len>= 4) (contains b a b a))"),
    ])
}

pub fn baba_definition() -> Definition {
    definition(
        "A B C D F",
        "a b",
        "A",
        "F",
        &[
            "A a A", "A b B", "B a C", "B b B", "F a F", "C a A", "C b D", "D a F", "D b B",
            "F b F",
        ],
    )
}

/// Corrected `baba` detector.
pub fn baba() -> Machine {
    build(baba_definition())
}

const BABA_A_INV: &str = "(or (empty) \
     (and (len= 1) (not (suffix= b))) \
     (and (len= 2) (not (suffix= b)) (not (suffix= b a))) \
     (and (len= 3) (not (suffix= b)) (not (suffix= b a)) (not (suffix= b a b))) \
     (and (len> 3) (not (suffix= b)) (not (suffix= b a)) (not (suffix= b a b)) \
          (not (contains b a b a))))";
const BABA_D_INV: &str =
    "(and (len>= 3) (suffix= b a b) (implies (len> 3) (not (contains b a b a))))";
const BABA_F_INV: &str = "(contains b a b a)";

/// Strengthened invariants for the corrected detector: each state also
/// records that the pattern has not been seen yet.
pub fn baba_invariants() -> InvariantBinding {
    binding(&[
        ("A", BABA_A_INV),
        (
            "B",
            "(and (len>= 1) (suffix= b) (not (suffix= b a)) (not (suffix= b a b)) \
                  (not (contains b a b a)))",
        ),
        (
            "C",
            "(and (len>= 2) (suffix= b a) (not (suffix= b a b)) (not (contains b a b a)))",
        ),
        ("D", BABA_D_INV),
        ("F", BABA_F_INV),
    ])
}

/// The strengthened invariants transcribed literally, case analysis
/// included. The `B` and `C` predicates have no case for the shortest
/// consumed inputs (`(b)` and `(b a)`), so they fail there.
pub fn baba_invariants_literal() -> InvariantBinding {
    binding(&[
        ("A", BABA_A_INV),
        (
            "B",
            "(and (len>= 1) (suffix= b) \
                  (or (and (len= 2) (not (suffix= b a))) \
                      (and (len= 3) (not (suffix= b a)) (not (suffix= b a b))) \
                      (and (not (len= 2)) (not (len= 3)) (len> 3) \
                           (not (suffix= b a)) (not (suffix= b a b)) (not (contains b a b a)))))",
        ),
        (
            "C",
            "(and (len>= 2) (suffix= b a) \
                  (or (and (len= 3) (not (suffix= b a b))) \
                      (and (not (len= 3)) (len> 3) (not (suffix= b a b)) \
                           (not (contains b a b a)))))",
        ),
        ("D", BABA_D_INV),
        ("F", BABA_F_INV),
    ])
}
