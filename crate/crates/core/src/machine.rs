//! The machine data model and its validating constructor.
//!
//! A [`Machine`] is the quintuple (states, alphabet, start, finals, rules).
//! Construction checks every reference, rejects nondeterministic rule sets,
//! and unless `no_dead` is requested completes the transition function with
//! a dead state so that every (state, symbol) pair has exactly one rule.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symbol::Symbol;

/// Base name of the synthesized dead state.
pub const DEAD_STATE: &str = "ds";

/// One transition: in state `from`, reading `on`, move to `to`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "[Symbol; 3]", from = "[Symbol; 3]")]
pub struct Rule {
    pub from: Symbol,
    pub on: Symbol,
    pub to: Symbol,
}

impl Rule {
    pub fn new(from: Symbol, on: Symbol, to: Symbol) -> Self {
        Rule { from, on, to }
    }

    /// Parses `"S a F"` (or `"(S a F)"`).
    pub fn parse(text: &str) -> Option<Rule> {
        let inner = text.trim().trim_start_matches('(').trim_end_matches(')');
        let mut parts = inner.split_whitespace().map(Symbol::new);
        let rule = Rule::new(
            parts.next()?.ok()?,
            parts.next()?.ok()?,
            parts.next()?.ok()?,
        );
        parts.next().is_none().then_some(rule)
    }
}

impl From<Rule> for [Symbol; 3] {
    fn from(rule: Rule) -> Self {
        [rule.from, rule.on, rule.to]
    }
}

impl From<[Symbol; 3]> for Rule {
    fn from([from, on, to]: [Symbol; 3]) -> Self {
        Rule { from, on, to }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.from, self.on, self.to)
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A reference to something that was never declared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Undeclared {
    Start(Symbol),
    Final(Symbol),
    RuleState { rule: Rule, state: Symbol },
    RuleSymbol { rule: Rule, symbol: Symbol },
}

impl fmt::Display for Undeclared {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Undeclared::Start(s) => write!(f, "start state {s} is not in the list of states"),
            Undeclared::Final(s) => write!(f, "final state {s} is not in the list of states"),
            Undeclared::RuleState { rule, state } => {
                write!(f, "rule {rule} refers to undeclared state {state}")
            }
            Undeclared::RuleSymbol { rule, symbol } => {
                write!(
                    f,
                    "rule {rule} reads {symbol}, which is not in the alphabet"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("the alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("{}", join_lines(.0))]
    UndeclaredReference(Vec<Undeclared>),
    #[error("the transitions are nondeterministic: {}", format_conflicts(.0))]
    Nondeterministic(Vec<(Rule, Rule)>),
    #[error("the transition function is incomplete; missing rules for {}", format_missing(.0))]
    Incomplete(Vec<(Symbol, Symbol)>),
}

fn join_lines(items: &[Undeclared]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

fn format_conflicts(pairs: &[(Rule, Rule)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("{a} and {b}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn format_missing(pairs: &[(Symbol, Symbol)]) -> String {
    pairs
        .iter()
        .map(|(q, a)| format!("({q} {a})"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// The user-supplied quintuple plus the `no_dead` option, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definition {
    pub states: Vec<Symbol>,
    pub alphabet: Vec<Symbol>,
    pub start: Symbol,
    pub finals: Vec<Symbol>,
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub no_dead: bool,
}

/// Collects every pair of distinct rules sharing a (from, on) pair.
pub fn nondeterministic_pairs(rules: &[Rule]) -> Vec<(Rule, Rule)> {
    let mut groups: Vec<Vec<&Rule>> = Vec::new();
    let mut index: HashMap<(&Symbol, &Symbol), usize> = HashMap::new();
    let mut seen = HashSet::new();
    for rule in rules.iter().filter(|r| seen.insert(*r)) {
        let slot = *index.entry((&rule.from, &rule.on)).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(rule);
    }
    let mut pairs = Vec::new();
    for group in &groups {
        for (i, a) in group.iter().enumerate() {
            for b in &group[i + 1..] {
                pairs.push(((*a).clone(), (*b).clone()));
            }
        }
    }
    pairs
}

/// A validated deterministic finite automaton.
///
/// States and alphabet keep their declaration order (a synthesized dead
/// state comes last). Rules are normalized by (source state position,
/// symbol position) so traces, diffs and generated code are reproducible.
#[derive(Clone)]
pub struct Machine {
    states: Vec<Symbol>,
    alphabet: Vec<Symbol>,
    start: Symbol,
    finals: Vec<Symbol>,
    rules: Vec<Rule>,
    no_dead: bool,
    dead_state: Option<Symbol>,
    state_index: HashMap<Symbol, usize>,
    symbol_index: HashMap<Symbol, usize>,
    start_index: usize,
    final_mask: Vec<bool>,
    /// `table[q * |alphabet| + a]` is `(destination, rule index)`.
    table: Vec<Option<(usize, usize)>>,
}

impl PartialEq for Machine {
    fn eq(&self, other: &Self) -> bool {
        // Everything else is derived from these fields.
        self.states == other.states
            && self.alphabet == other.alphabet
            && self.start == other.start
            && self.finals == other.finals
            && self.rules == other.rules
            && self.no_dead == other.no_dead
            && self.dead_state == other.dead_state
    }
}

impl Eq for Machine {}

impl fmt::Debug for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Machine")
            .field("states", &self.states)
            .field("alphabet", &self.alphabet)
            .field("start", &self.start)
            .field("finals", &self.finals)
            .field("rules", &self.rules)
            .field("no_dead", &self.no_dead)
            .field("dead_state", &self.dead_state)
            .finish()
    }
}

fn dedup(items: &[Symbol]) -> Vec<Symbol> {
    let mut seen = HashSet::new();
    items.iter().filter(|s| seen.insert(*s)).cloned().collect()
}

/// Constructs a machine from its components.
pub fn make_machine(
    states: Vec<Symbol>,
    alphabet: Vec<Symbol>,
    start: Symbol,
    finals: Vec<Symbol>,
    rules: Vec<Rule>,
    no_dead: bool,
) -> Result<Machine, MachineError> {
    Machine::build(&Definition {
        states,
        alphabet,
        start,
        finals,
        rules,
        no_dead,
    })
}

impl Machine {
    pub fn build(def: &Definition) -> Result<Machine, MachineError> {
        let mut states = dedup(&def.states);
        let alphabet = dedup(&def.alphabet);
        let finals = dedup(&def.finals);
        if alphabet.is_empty() {
            return Err(MachineError::EmptyAlphabet);
        }

        let state_set: HashSet<&Symbol> = states.iter().collect();
        let symbol_set: HashSet<&Symbol> = alphabet.iter().collect();
        let mut undeclared = Vec::new();
        if !state_set.contains(&def.start) {
            undeclared.push(Undeclared::Start(def.start.clone()));
        }
        for f in finals.iter().filter(|f| !state_set.contains(f)) {
            undeclared.push(Undeclared::Final(f.clone()));
        }
        for rule in &def.rules {
            for state in [&rule.from, &rule.to] {
                if !state_set.contains(state) {
                    undeclared.push(Undeclared::RuleState {
                        rule: rule.clone(),
                        state: state.clone(),
                    });
                }
            }
            if !symbol_set.contains(&rule.on) {
                undeclared.push(Undeclared::RuleSymbol {
                    rule: rule.clone(),
                    symbol: rule.on.clone(),
                });
            }
        }
        if !undeclared.is_empty() {
            return Err(MachineError::UndeclaredReference(undeclared));
        }

        let conflicts = nondeterministic_pairs(&def.rules);
        if !conflicts.is_empty() {
            return Err(MachineError::Nondeterministic(conflicts));
        }

        let mut rules = dedup_rules(&def.rules);
        let mut dead_state = None;
        if !def.no_dead {
            let present: HashSet<(&Symbol, &Symbol)> =
                rules.iter().map(|r| (&r.from, &r.on)).collect();
            let missing: Vec<(Symbol, Symbol)> = states
                .iter()
                .flat_map(|q| alphabet.iter().map(move |a| (q, a)))
                .filter(|pair| !present.contains(pair))
                .map(|(q, a)| (q.clone(), a.clone()))
                .collect();
            if !missing.is_empty() {
                let dead = fresh_dead_state(&states);
                for (q, a) in missing {
                    rules.push(Rule::new(q, a, dead.clone()));
                }
                for a in &alphabet {
                    rules.push(Rule::new(dead.clone(), a.clone(), dead.clone()));
                }
                states.push(dead.clone());
                dead_state = Some(dead);
            }
        }

        Ok(Machine::assemble(
            states,
            alphabet,
            def.start.clone(),
            finals,
            rules,
            def.no_dead,
            dead_state,
        ))
    }

    /// Builds the lookup tables. Inputs must already be validated.
    fn assemble(
        states: Vec<Symbol>,
        alphabet: Vec<Symbol>,
        start: Symbol,
        finals: Vec<Symbol>,
        mut rules: Vec<Rule>,
        no_dead: bool,
        dead_state: Option<Symbol>,
    ) -> Machine {
        let state_index: HashMap<Symbol, usize> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let symbol_index: HashMap<Symbol, usize> = alphabet
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        rules.sort_by_key(|r| (state_index[&r.from], symbol_index[&r.on]));

        let width = alphabet.len();
        let mut table = vec![None; states.len() * width];
        for (i, rule) in rules.iter().enumerate() {
            let slot = state_index[&rule.from] * width + symbol_index[&rule.on];
            table[slot] = Some((state_index[&rule.to], i));
        }
        let mut final_mask = vec![false; states.len()];
        for f in &finals {
            final_mask[state_index[f]] = true;
        }
        let start_index = state_index[&start];
        Machine {
            states,
            alphabet,
            start,
            finals,
            rules,
            no_dead,
            dead_state,
            state_index,
            symbol_index,
            start_index,
            final_mask,
            table,
        }
    }

    /// Builds a machine that is known to be valid and total, such as the
    /// result of a closure operation. No dead state is synthesized.
    pub(crate) fn from_total_parts(
        states: Vec<Symbol>,
        alphabet: Vec<Symbol>,
        start: Symbol,
        finals: Vec<Symbol>,
        rules: Vec<Rule>,
    ) -> Machine {
        let m = Machine::assemble(states, alphabet, start, finals, rules, false, None);
        debug_assert!(m.is_total());
        m
    }

    pub fn states(&self) -> &[Symbol] {
        &self.states
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn start(&self) -> &Symbol {
        &self.start
    }

    pub fn finals(&self) -> &[Symbol] {
        &self.finals
    }

    /// All rules, including those into and out of a synthesized dead state.
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn no_dead(&self) -> bool {
        self.no_dead
    }

    /// The dead state added during construction, if any.
    pub fn dead_state(&self) -> Option<&Symbol> {
        self.dead_state.as_ref()
    }

    pub fn dead_added(&self) -> bool {
        self.dead_state.is_some()
    }

    pub fn is_final(&self, state: &Symbol) -> bool {
        self.state_index
            .get(state)
            .is_some_and(|&i| self.final_mask[i])
    }

    pub fn has_state(&self, state: &Symbol) -> bool {
        self.state_index.contains_key(state)
    }

    pub fn has_symbol(&self, symbol: &Symbol) -> bool {
        self.symbol_index.contains_key(symbol)
    }

    /// The rule applicable in `state` on `symbol`, if one exists.
    pub fn rule_for(&self, state: &Symbol, symbol: &Symbol) -> Option<&Rule> {
        let q = *self.state_index.get(state)?;
        let a = *self.symbol_index.get(symbol)?;
        self.table[q * self.alphabet.len() + a].map(|(_, r)| &self.rules[r])
    }

    pub fn is_total(&self) -> bool {
        self.table.iter().all(Option::is_some)
    }

    /// (state, symbol) pairs with no rule; empty for total machines.
    pub fn missing_pairs(&self) -> Vec<(Symbol, Symbol)> {
        let width = self.alphabet.len();
        self.table
            .iter()
            .enumerate()
            .filter(|(_, slot)| slot.is_none())
            .map(|(i, _)| {
                (
                    self.states[i / width].clone(),
                    self.alphabet[i % width].clone(),
                )
            })
            .collect()
    }

    pub fn ensure_total(&self) -> Result<(), MachineError> {
        let missing = self.missing_pairs();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(MachineError::Incomplete(missing))
        }
    }

    /// A total machine accepting the same language: `self` when already
    /// total, otherwise a rebuild with dead-state completion enabled.
    pub fn completed(&self) -> Machine {
        if self.is_total() {
            return self.clone();
        }
        let mut def = self.definition();
        def.no_dead = false;
        Machine::build(&def).expect("a valid machine stays valid when completed")
    }

    /// The components as the user would write them: the synthesized dead
    /// state and its rules are left out.
    pub fn definition(&self) -> Definition {
        let synthesized = |s: &Symbol| self.dead_state.as_ref() == Some(s);
        Definition {
            states: self
                .states
                .iter()
                .filter(|s| !synthesized(s))
                .cloned()
                .collect(),
            alphabet: self.alphabet.clone(),
            start: self.start.clone(),
            finals: self.finals.clone(),
            rules: self
                .rules
                .iter()
                .filter(|r| !synthesized(&r.from) && !synthesized(&r.to))
                .cloned()
                .collect(),
            no_dead: self.no_dead,
        }
    }

    pub(crate) fn state_position(&self, state: &Symbol) -> Option<usize> {
        self.state_index.get(state).copied()
    }

    pub(crate) fn symbol_position(&self, symbol: &Symbol) -> Option<usize> {
        // Alphabets are usually a handful of short tokens; comparing them
        // directly beats hashing.
        if self.alphabet.len() <= 8 {
            self.alphabet.iter().position(|a| a == symbol)
        } else {
            self.symbol_index.get(symbol).copied()
        }
    }

    pub(crate) fn start_position(&self) -> usize {
        self.start_index
    }

    pub(crate) fn final_at(&self, q: usize) -> bool {
        self.final_mask[q]
    }

    /// `(destination, rule index)` for state position `q`, symbol position `a`.
    pub(crate) fn step(&self, q: usize, a: usize) -> Option<(usize, usize)> {
        self.table[q * self.alphabet.len() + a]
    }
}

fn dedup_rules(rules: &[Rule]) -> Vec<Rule> {
    let mut seen = HashSet::new();
    rules.iter().filter(|r| seen.insert(*r)).cloned().collect()
}

/// The name a synthesized dead state gets among `states`: `ds`, or the
/// first free `ds0`, `ds1`, ...
pub fn fresh_dead_state(states: &[Symbol]) -> Symbol {
    let taken: HashSet<&str> = states.iter().map(Symbol::as_str).collect();
    if !taken.contains(DEAD_STATE) {
        return Symbol::new(DEAD_STATE).unwrap();
    }
    (0..)
        .map(|k| format!("{DEAD_STATE}{k}"))
        .find(|name| !taken.contains(name.as_str()))
        .map(|name| Symbol::new(&name).unwrap())
        .unwrap()
}

// Accessors under the names used by the FSM library.

pub fn get_states(m: &Machine) -> &[Symbol] {
    m.states()
}

pub fn get_alphabet(m: &Machine) -> &[Symbol] {
    m.alphabet()
}

pub fn get_start(m: &Machine) -> &Symbol {
    m.start()
}

pub fn get_finals(m: &Machine) -> &[Symbol] {
    m.finals()
}

pub fn get_rules(m: &Machine) -> &[Rule] {
    m.rules()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{rule, rules, syms};

    fn a_star() -> Machine {
        make_machine(
            syms("S F"),
            syms("a b"),
            "S".parse().unwrap(),
            syms("F"),
            rules(&["S a F", "F a F", "F b F"]),
            false,
        )
        .unwrap()
    }

    #[test]
    fn completes_with_dead_state() {
        let m = a_star();
        assert_eq!(m.states(), syms("S F ds").as_slice());
        assert_eq!(m.dead_state().unwrap().as_str(), "ds");
        assert_eq!(m.rules().len(), 6);
        for r in ["S b ds", "ds a ds", "ds b ds"] {
            assert!(m.rules().contains(&rule(r)), "missing {r}");
        }
        assert!(m.is_total());
    }

    #[test]
    fn rules_are_normalized_by_declaration_order() {
        let m = a_star();
        let order: Vec<String> = m.rules().iter().map(ToString::to_string).collect();
        assert_eq!(
            order,
            [
                "(S a F)",
                "(S b ds)",
                "(F a F)",
                "(F b F)",
                "(ds a ds)",
                "(ds b ds)"
            ]
        );
    }

    #[test]
    fn nondeterminism_lists_violating_pair() {
        let err = make_machine(
            syms("S F"),
            syms("a b"),
            "S".parse().unwrap(),
            syms("F"),
            rules(&["S a F", "S a S", "F a F", "F b F"]),
            false,
        )
        .unwrap_err();
        assert_eq!(
            err,
            MachineError::Nondeterministic(vec![(rule("S a F"), rule("S a S"))])
        );
        assert!(err.to_string().contains("(S a F) and (S a S)"));
    }

    #[test]
    fn nondeterminism_reports_every_pair() {
        let pairs = nondeterministic_pairs(&rules(&["S a F", "S a S", "S a X", "S a F"]));
        assert_eq!(pairs.len(), 3);
    }

    #[test]
    fn undeclared_references() {
        let err = make_machine(
            syms("S F"),
            syms("a"),
            "Q".parse().unwrap(),
            syms("G"),
            rules(&["S b F", "S a Z"]),
            false,
        )
        .unwrap_err();
        let MachineError::UndeclaredReference(items) = err else {
            panic!("wrong error");
        };
        assert_eq!(items.len(), 4);
        assert!(items.contains(&Undeclared::Start("Q".parse().unwrap())));
        assert!(items.contains(&Undeclared::Final("G".parse().unwrap())));
    }

    #[test]
    fn empty_alphabet() {
        let err = make_machine(
            syms("S"),
            vec![],
            "S".parse().unwrap(),
            vec![],
            vec![],
            false,
        );
        assert_eq!(err.unwrap_err(), MachineError::EmptyAlphabet);
    }

    #[test]
    fn dead_state_name_collision() {
        let m = make_machine(
            syms("S ds ds0"),
            syms("a"),
            "S".parse().unwrap(),
            vec![],
            rules(&["S a ds"]),
            false,
        )
        .unwrap();
        assert_eq!(m.dead_state().unwrap().as_str(), "ds1");
    }

    #[test]
    fn total_rule_set_adds_nothing() {
        let m = make_machine(
            syms("A B"),
            syms("a b"),
            "A".parse().unwrap(),
            syms("B"),
            rules(&["A a B", "A b A", "B a B", "B b A"]),
            false,
        )
        .unwrap();
        assert!(!m.dead_added());
        assert_eq!(m.states().len(), 2);
    }

    #[test]
    fn no_dead_keeps_partial_function() {
        let m = make_machine(
            syms("S F"),
            syms("a b"),
            "S".parse().unwrap(),
            syms("F"),
            rules(&["S a F"]),
            true,
        )
        .unwrap();
        assert!(!m.is_total());
        assert!(matches!(m.ensure_total(), Err(MachineError::Incomplete(p)) if p.len() == 3));
        let total = m.completed();
        assert!(total.is_total());
        assert_eq!(total.dead_state().unwrap().as_str(), "ds");
    }

    #[test]
    fn definition_drops_synthesized_parts() {
        let def = a_star().definition();
        assert_eq!(def.states, syms("S F"));
        assert_eq!(def.rules, rules(&["S a F", "F a F", "F b F"]));
        assert_eq!(Machine::build(&def).unwrap(), a_star());
    }

    #[test]
    fn accessors() {
        let m = a_star();
        assert_eq!(get_finals(&m), syms("F").as_slice());
        assert_eq!(get_start(&m).as_str(), "S");
        assert_eq!(get_alphabet(&m), syms("a b").as_slice());
        assert_eq!(get_states(&m).len(), 3);
        assert_eq!(get_rules(&m).len(), 6);
    }
}
