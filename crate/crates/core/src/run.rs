//! Executing machines: acceptance and configuration traces.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{Machine, Rule};
use crate::symbol::{Symbol, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("symbol {symbol} at position {position} is not in the machine's alphabet")]
    ForeignSymbol { symbol: Symbol, position: usize },
}

/// Result of running a machine on a word.
///
/// `Stuck` only arises for machines built with `no_dead`: a needed rule was
/// missing and execution halted. It counts as a rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Accept,
    Reject,
    Stuck,
}

impl Outcome {
    pub fn is_accept(self) -> bool {
        self == Outcome::Accept
    }

    pub fn is_stuck(self) -> bool {
        self == Outcome::Stuck
    }

    pub fn from_accepting(accept: bool) -> Outcome {
        if accept {
            Outcome::Accept
        } else {
            Outcome::Reject
        }
    }

    /// `accept` or `reject`; a stuck run reports as `reject`.
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Accept => "accept",
            Outcome::Reject | Outcome::Stuck => "reject",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The unconsumed input and the current state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub unconsumed: Word,
    pub state: Symbol,
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {})", self.unconsumed, self.state)
    }
}

/// Every configuration of a run followed by its outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<Configuration>,
    pub outcome: Outcome,
}

/// Renders as a quoted list, the way the FSM REPL prints traces:
///
/// ```text
/// '(((a b) S)
///   ((b) F)
///   (() F)
///   accept)
/// ```
impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            let lead = if i == 0 { "'(" } else { "  " };
            writeln!(f, "{lead}{step}")?;
        }
        write!(f, "  {})", self.outcome)
    }
}

/// The positions visited by one run: state positions (one more than the
/// symbols consumed) and the rule index used for each step.
pub(crate) struct Path {
    pub states: Vec<usize>,
    pub rules: Vec<usize>,
    pub outcome: Outcome,
}

/// Maps every symbol to its alphabet position, failing on the first
/// symbol the machine does not know.
pub(crate) fn encode(m: &Machine, w: &[Symbol]) -> Result<Vec<usize>, RunError> {
    w.iter()
        .enumerate()
        .map(|(position, symbol)| {
            m.symbol_position(symbol)
                .ok_or_else(|| RunError::ForeignSymbol {
                    symbol: symbol.clone(),
                    position,
                })
        })
        .collect()
}

pub(crate) fn run_path(m: &Machine, w: &[Symbol]) -> Result<Path, RunError> {
    let input = encode(m, w)?;
    let mut q = m.start_position();
    let mut states = Vec::with_capacity(input.len() + 1);
    let mut rules = Vec::with_capacity(input.len());
    states.push(q);
    for &a in &input {
        match m.step(q, a) {
            Some((next, rule)) => {
                q = next;
                states.push(q);
                rules.push(rule);
            }
            None => {
                return Ok(Path {
                    states,
                    rules,
                    outcome: Outcome::Stuck,
                })
            }
        }
    }
    Ok(Path {
        states,
        rules,
        outcome: Outcome::from_accepting(m.final_at(q)),
    })
}

/// Runs `m` on `w` in a single pass without allocating.
pub fn apply(m: &Machine, w: &[Symbol]) -> Result<Outcome, RunError> {
    let mut q = m.start_position();
    for (position, symbol) in w.iter().enumerate() {
        let a = m
            .symbol_position(symbol)
            .ok_or_else(|| RunError::ForeignSymbol {
                symbol: symbol.clone(),
                position,
            })?;
        match m.step(q, a) {
            Some((next, _)) => q = next,
            None => {
                // Foreign symbols are reported even after the run is stuck.
                encode(m, w)?;
                return Ok(Outcome::Stuck);
            }
        }
    }
    Ok(Outcome::from_accepting(m.final_at(q)))
}

/// Runs `m` on `w`, recording every configuration.
pub fn show_transitions(m: &Machine, w: &[Symbol]) -> Result<Trace, RunError> {
    let path = run_path(m, w)?;
    let steps = path
        .states
        .iter()
        .enumerate()
        .map(|(consumed, &q)| Configuration {
            unconsumed: Word::from(&w[consumed..]),
            state: m.states()[q].clone(),
        })
        .collect();
    Ok(Trace {
        steps,
        outcome: path.outcome,
    })
}

/// The rules used by a run, in order.
pub fn rules_used<'m>(m: &'m Machine, w: &[Symbol]) -> Result<Vec<&'m Rule>, RunError> {
    let path = run_path(m, w)?;
    Ok(path.rules.iter().map(|&r| &m.rules()[r]).collect())
}

impl Machine {
    pub fn apply(&self, w: &[Symbol]) -> Result<Outcome, RunError> {
        apply(self, w)
    }

    pub fn accepts(&self, w: &[Symbol]) -> Result<bool, RunError> {
        apply(self, w).map(Outcome::is_accept)
    }

    pub fn show_transitions(&self, w: &[Symbol]) -> Result<Trace, RunError> {
        show_transitions(self, w)
    }
}
