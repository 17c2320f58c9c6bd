//! Closure operations on machines and the language-equality check built
//! from them: two machines accept the same language exactly when the
//! symmetric-difference machine `(¬L1 ∩ L2) ∪ (L1 ∩ ¬L2)` accepts nothing.
//!
//! Every operation first completes its inputs with a dead state. Products
//! keep only the pairs reachable from the fused start state, so emptiness
//! by reachability and emptiness by "no final states" coincide on them.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{Machine, Rule};
use crate::run::apply;
use crate::symbol::{Symbol, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error(
        "alphabets differ: only in the first machine {only_left:?}, only in the second {only_right:?}"
    )]
    AlphabetMismatch {
        only_left: Vec<Symbol>,
        only_right: Vec<Symbol>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductMode {
    Union,
    Intersection,
}

/// Which of two machines a word belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum Equivalence {
    Equivalent,
    Counterexample { word: Word, accepted_by: Side },
}

/// Accepts exactly the words `m` rejects.
pub fn complement(m: &Machine) -> Machine {
    let total = m.completed();
    let finals = total
        .states()
        .iter()
        .filter(|s| !total.is_final(s))
        .cloned()
        .collect();
    Machine::from_total_parts(
        total.states().to_vec(),
        total.alphabet().to_vec(),
        total.start().clone(),
        finals,
        total.rules().to_vec(),
    )
}

fn check_alphabets(m1: &Machine, m2: &Machine) -> Result<(), AlgebraError> {
    let left: HashSet<&Symbol> = m1.alphabet().iter().collect();
    let right: HashSet<&Symbol> = m2.alphabet().iter().collect();
    if left == right {
        return Ok(());
    }
    Err(AlgebraError::AlphabetMismatch {
        only_left: m1
            .alphabet()
            .iter()
            .filter(|s| !right.contains(s))
            .cloned()
            .collect(),
        only_right: m2
            .alphabet()
            .iter()
            .filter(|s| !left.contains(s))
            .cloned()
            .collect(),
    })
}

/// Gives every state pair a distinct `left&right` name.
struct PairNames {
    names: HashMap<String, (usize, usize)>,
}

impl PairNames {
    fn name(&mut self, m1: &Machine, m2: &Machine, pair: (usize, usize)) -> Symbol {
        let base = format!("{}&{}", m1.states()[pair.0], m2.states()[pair.1]);
        let mut candidate = base.clone();
        let mut k = 0;
        while let Some(owner) = self.names.get(&candidate) {
            if *owner == pair {
                break;
            }
            k += 1;
            candidate = format!("{base}~{k}");
        }
        self.names.insert(candidate.clone(), pair);
        Symbol::new(&candidate).expect("fused state names are valid symbols")
    }
}

/// The reachable part of the product of `m1` and `m2`.
pub fn product(m1: &Machine, m2: &Machine, mode: ProductMode) -> Result<Machine, AlgebraError> {
    check_alphabets(m1, m2)?;
    let left = m1.completed();
    let right = m2.completed();
    let alphabet = left.alphabet().to_vec();
    // Position of each of the left alphabet's symbols in the right machine.
    let right_positions: Vec<usize> = alphabet
        .iter()
        .map(|a| right.symbol_position(a).expect("alphabets match"))
        .collect();

    let mut names = PairNames {
        names: HashMap::new(),
    };
    let start_pair = (left.start_position(), right.start_position());
    let mut index: HashMap<(usize, usize), Symbol> = HashMap::new();
    let mut order = vec![start_pair];
    index.insert(start_pair, names.name(&left, &right, start_pair));
    let mut queue = VecDeque::from([start_pair]);
    let mut rules = Vec::new();

    while let Some(pair) = queue.pop_front() {
        for (a, symbol) in alphabet.iter().enumerate() {
            let (p, _) = left.step(pair.0, a).expect("completed machines are total");
            let (q, _) = right
                .step(pair.1, right_positions[a])
                .expect("completed machines are total");
            let next = (p, q);
            if let std::collections::hash_map::Entry::Vacant(slot) = index.entry(next) {
                slot.insert(names.name(&left, &right, next));
                order.push(next);
                queue.push_back(next);
            }
            rules.push(Rule::new(
                index[&pair].clone(),
                symbol.clone(),
                index[&next].clone(),
            ));
        }
    }

    let accepting = |(p, q): (usize, usize)| match mode {
        ProductMode::Union => left.final_at(p) || right.final_at(q),
        ProductMode::Intersection => left.final_at(p) && right.final_at(q),
    };
    let finals = order
        .iter()
        .filter(|pair| accepting(**pair))
        .map(|pair| index[pair].clone())
        .collect();
    let states = order.iter().map(|pair| index[pair].clone()).collect();
    Ok(Machine::from_total_parts(
        states,
        alphabet,
        index[&start_pair].clone(),
        finals,
        rules,
    ))
}

pub fn union(m1: &Machine, m2: &Machine) -> Result<Machine, AlgebraError> {
    product(m1, m2, ProductMode::Union)
}

pub fn intersection(m1: &Machine, m2: &Machine) -> Result<Machine, AlgebraError> {
    product(m1, m2, ProductMode::Intersection)
}

/// The shortest word `m` accepts, found breadth-first with symbols tried in
/// alphabet declaration order, so ties go to the lexicographically least
/// word. `None` when the language is empty.
pub fn shortest_accepted(m: &Machine) -> Option<Word> {
    let start = m.start_position();
    let mut parent: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(q) = queue.pop_front() {
        if m.final_at(q) {
            let mut symbols = Vec::new();
            let mut at = q;
            while let Some(&(prev, a)) = parent.get(&at) {
                symbols.push(m.alphabet()[a].clone());
                at = prev;
            }
            symbols.reverse();
            return Some(Word::new(symbols));
        }
        for a in 0..m.alphabet().len() {
            if let Some((next, _)) = m.step(q, a) {
                if seen.insert(next) {
                    parent.insert(next, (q, a));
                    queue.push_back(next);
                }
            }
        }
    }
    None
}

/// Whether `m` accepts no word, with a shortest accepted word otherwise.
pub fn is_empty(m: &Machine) -> (bool, Option<Word>) {
    let witness = shortest_accepted(m);
    (witness.is_none(), witness)
}

/// The machine for `(¬L1 ∩ L2) ∪ (L1 ∩ ¬L2)`.
pub fn symmetric_difference(m1: &Machine, m2: &Machine) -> Result<Machine, AlgebraError> {
    check_alphabets(m1, m2)?;
    let only_second = intersection(&complement(m1), m2)?;
    let only_first = intersection(&complement(m2), m1)?;
    union(&only_second, &only_first)
}

pub fn same_language(m1: &Machine, m2: &Machine) -> Result<Equivalence, AlgebraError> {
    let difference = symmetric_difference(m1, m2)?;
    let Some(word) = shortest_accepted(&difference) else {
        return Ok(Equivalence::Equivalent);
    };
    let first = apply(m1, &word)
        .expect("witness is over the shared alphabet")
        .is_accept();
    let second = apply(m2, &word)
        .expect("witness is over the shared alphabet")
        .is_accept();
    assert!(
        first != second,
        "counterexample {word} must be accepted by exactly one machine"
    );
    let accepted_by = if first { Side::First } else { Side::Second };
    Ok(Equivalence::Counterexample { word, accepted_by })
}
