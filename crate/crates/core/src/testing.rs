//! Random testing, transition-cover generation and invariant sweeps.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariant::{annotate_trace, AnnotateError, InvariantBinding, Verdict};
use crate::machine::{Machine, Rule};
use crate::run::{apply, Outcome};
use crate::symbol::{Symbol, Word};

/// Number of words `sm_test` draws when no count is given.
pub const DEFAULT_TESTS: usize = 100;

/// Longest random word drawn by default.
pub const DEFAULT_MAX_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("cannot generate words over an empty alphabet")]
    EmptyAlphabet,
}

/// `n` words with lengths uniform on `0..=max_len` and symbols uniform over
/// `alphabet`, fully determined by `seed`. Duplicates are kept.
pub fn random_words(
    alphabet: &[Symbol],
    n: usize,
    seed: u64,
    max_len: usize,
) -> Result<Vec<Word>, GenerateError> {
    if alphabet.is_empty() {
        return Err(GenerateError::EmptyAlphabet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let len = rng.random_range(0..=max_len);
            (0..len)
                .map(|_| alphabet[rng.random_range(0..alphabet.len())].clone())
                .collect()
        })
        .collect())
}

/// A small random machine over `alphabet` with `1..=max_states` states
/// named `q0`, `q1`, ... Each (state, symbol) pair gets a rule with
/// probability 3/4; the rest are left to the dead state. Rules are
/// listed in shuffled order.
pub fn random_machine(rng: &mut impl Rng, max_states: usize, alphabet: &[Symbol]) -> Machine {
    assert!(max_states > 0 && !alphabet.is_empty());
    let n = rng.random_range(1..=max_states);
    let states: Vec<Symbol> = (0..n)
        .map(|i| Symbol::new(&format!("q{i}")).unwrap())
        .collect();
    let finals = states
        .iter()
        .filter(|_| rng.random_bool(0.4))
        .cloned()
        .collect();
    let start = states[rng.random_range(0..n)].clone();
    let mut rules = Vec::new();
    for q in &states {
        for a in alphabet {
            if rng.random_bool(0.75) {
                let to = states[rng.random_range(0..n)].clone();
                rules.push(Rule::new(q.clone(), a.clone(), to));
            }
        }
    }
    rules.shuffle(rng);
    crate::machine::make_machine(states, alphabet.to_vec(), start, finals, rules, false)
        .expect("random machines are deterministic")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestEntry {
    pub word: Word,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestReport {
    pub entries: Vec<TestEntry>,
    pub seed: u64,
    pub count: usize,
}

impl std::fmt::Display for TestReport {
    /// Same shape as the REPL output: `'(((a b) accept) ...)`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "'()");
        }
        for (i, entry) in self.entries.iter().enumerate() {
            let lead = if i == 0 { "'(" } else { "  " };
            let tail = if i + 1 == self.entries.len() { ")" } else { "" };
            writeln!(f, "{lead}({} {}){tail}", entry.word, entry.outcome)?;
        }
        Ok(())
    }
}

/// Applies `m` to `n` random words over its alphabet.
pub fn sm_test(m: &Machine, n: usize, seed: u64) -> TestReport {
    let words = random_words(m.alphabet(), n, seed, DEFAULT_MAX_LEN)
        .expect("machines have nonempty alphabets");
    let entries = words
        .into_iter()
        .map(|word| {
            let outcome = apply(m, &word).expect("generated words use the machine's alphabet");
            TestEntry { word, outcome }
        })
        .collect();
    TestReport {
        entries,
        seed,
        count: n,
    }
}

/// Shortest word reaching each state (by position), ties broken in
/// alphabet declaration order. `None` for unreachable states.
pub fn access_words(m: &Machine) -> Vec<Option<Word>> {
    let mut access: Vec<Option<Word>> = vec![None; m.states().len()];
    let start = m.start_position();
    access[start] = Some(Word::empty());
    let mut queue = VecDeque::from([start]);
    while let Some(q) = queue.pop_front() {
        for (a, symbol) in m.alphabet().iter().enumerate() {
            if let Some((next, _)) = m.step(q, a) {
                if access[next].is_none() {
                    let mut w = access[q].clone().expect("queued states are reached");
                    w.push(symbol.clone());
                    access[next] = Some(w);
                    queue.push_back(next);
                }
            }
        }
    }
    access
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveredRule {
    pub rule: Rule,
    pub word: Word,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCover {
    /// In the machine's rule order.
    pub covered: Vec<CoveredRule>,
    /// Rules leaving unreachable states.
    pub uncovered: Vec<Rule>,
}

impl TransitionCover {
    pub fn word_for(&self, rule: &Rule) -> Option<&Word> {
        self.covered
            .iter()
            .find(|c| &c.rule == rule)
            .map(|c| &c.word)
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.covered.iter().map(|c| &c.word)
    }
}

/// For every rule `(Q a P)` with `Q` reachable, the word `access(Q) a`,
/// whose last step uses exactly that rule.
pub fn transition_cover(m: &Machine) -> TransitionCover {
    let access = access_words(m);
    let mut covered = Vec::new();
    let mut uncovered = Vec::new();
    for rule in m.rules() {
        let q = m
            .state_position(&rule.from)
            .expect("rules use declared states");
        match &access[q] {
            Some(prefix) => {
                let mut word = prefix.clone();
                word.push(rule.on.clone());
                covered.push(CoveredRule {
                    rule: rule.clone(),
                    word,
                });
            }
            None => uncovered.push(rule.clone()),
        }
    }
    TransitionCover { covered, uncovered }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub word: Word,
    pub step_index: usize,
    pub state: Symbol,
    pub consumed: Word,
    /// The transition that entered `state`; none for the initial step.
    pub rule_used: Option<Rule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub failures: Vec<SweepFailure>,
    pub words_run: usize,
    pub transitions_covered: usize,
    pub transitions_uncovered: Vec<Rule>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every transition-cover word, then `extra_words`, recording each
/// step whose invariant fails.
pub fn invariant_sweep(
    m: &Machine,
    binding: &InvariantBinding,
    extra_words: &[Word],
) -> Result<SweepReport, AnnotateError> {
    let cover = transition_cover(m);
    let mut failures = Vec::new();
    let mut words_run = 0;
    for word in cover.words().chain(extra_words) {
        words_run += 1;
        let trace = annotate_trace(m, binding, word)?;
        for (step_index, step) in trace.steps.into_iter().enumerate() {
            if step.verdict != Verdict::Fails {
                continue;
            }
            failures.push(SweepFailure {
                word: word.clone(),
                step_index,
                state: step.state,
                consumed: step.consumed,
                rule_used: step.rule_used,
            });
        }
    }
    Ok(SweepReport {
        failures,
        words_run,
        transitions_covered: cover.covered.len(),
        transitions_uncovered: cover.uncovered,
    })
}
