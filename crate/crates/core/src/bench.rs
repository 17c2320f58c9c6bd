//! Substring search with a compiled machine versus a naive matcher.
//!
//! The naive matcher is the textbook recursive `contains?`: at every
//! position it recomputes the length of the remaining input before
//! comparing a window, which makes it quadratic. That cost is kept on
//! purpose so the asymptotic gap to the linear machine run is observable.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixtures;
use crate::machine::{Machine, Rule};
use crate::symbol::{Symbol, Word};

/// Timed repetitions per input size; the median is reported.
pub const RUNS: usize = 5;

pub const CSV_HEADER: &str = "n,dfa_ms,naive_ms";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("the pattern must not be empty")]
    EmptyPattern,
    #[error("pattern symbol {0} is not in the alphabet (a b)")]
    ForeignSymbol(Symbol),
}

fn ab() -> [Symbol; 2] {
    [Symbol::new("a").unwrap(), Symbol::new("b").unwrap()]
}

/// Counts the elements by visiting each one, as a list `length` would.
/// Symbols are never empty, but the compiler cannot know that, so the
/// traversal is not folded into the slice length.
fn length(w: &[Symbol]) -> usize {
    w.iter().filter(|s| !s.as_str().is_empty()).count()
}

/// `(and (>= (length w) (length patt)) (or (equal? (take w |patt|) patt) (contains? patt (rest w))))`
pub fn naive_contains(pattern: &[Symbol], w: &[Symbol]) -> bool {
    let mut rest = w;
    loop {
        if length(rest) < length(pattern) {
            return false;
        }
        if &rest[..pattern.len()] == pattern {
            return true;
        }
        rest = &rest[1..];
    }
}

/// A machine over `{a, b}` accepting the words that contain `pattern`.
///
/// For `b a b a` this is the hand-designed detector from the fixtures.
/// Other patterns get the standard construction: state `k` means the
/// longest pattern prefix that is a suffix of the input has length `k`.
pub fn pattern_machine(pattern: &[Symbol]) -> Result<Machine, BenchError> {
    if pattern.is_empty() {
        return Err(BenchError::EmptyPattern);
    }
    let alphabet = ab();
    if let Some(s) = pattern.iter().find(|s| !alphabet.contains(s)) {
        return Err(BenchError::ForeignSymbol(s.clone()));
    }
    if pattern == &Word::parse("b a b a").unwrap()[..] {
        return Ok(fixtures::baba());
    }
    Ok(prefix_machine(pattern))
}

/// The prefix-tracking matcher for a nonempty pattern over `{a, b}`.
fn prefix_machine(pattern: &[Symbol]) -> Machine {
    let alphabet = ab();
    let m = pattern.len();
    let state = |k: usize| Symbol::new(&format!("p{k}")).unwrap();
    let mut rules = Vec::new();
    for k in 0..=m {
        for c in &alphabet {
            let next = if k == m {
                m
            } else {
                let mut seen = pattern[..k].to_vec();
                seen.push(c.clone());
                (0..=k + 1)
                    .rev()
                    .find(|&j| seen.ends_with(&pattern[..j]))
                    .unwrap_or(0)
            };
            rules.push(Rule::new(state(k), c.clone(), state(next)));
        }
    }
    Machine::from_total_parts(
        (0..=m).map(state).collect(),
        alphabet.to_vec(),
        state(0),
        vec![state(m)],
        rules,
    )
}

pub fn dfa_contains(machine: &Machine, w: &[Symbol]) -> bool {
    machine
        .accepts(w)
        .expect("words are drawn from the machine's alphabet")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    Dfa,
    Naive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    /// Medians over the rounds.
    pub dfa_ms: f64,
    pub naive_ms: f64,
    /// One sample per round, in round order.
    pub dfa_runs: Vec<f64>,
    pub naive_runs: Vec<f64>,
}

impl BenchRow {
    fn runs(&self, matcher: Matcher) -> &[f64] {
        match matcher {
            Matcher::Dfa => &self.dfa_runs,
            Matcher::Naive => &self.naive_runs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.3},{:.3}\n",
                row.n, row.dfa_ms, row.naive_ms
            ));
        }
        out
    }

    pub fn row(&self, n: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// Median over rounds of `time(to) / time(from)`. Both sizes of a
    /// round are timed close together, so host speed changes between
    /// rounds cancel out of each ratio.
    pub fn ratio(&self, matcher: Matcher, from: usize, to: usize) -> Option<f64> {
        let (a, b) = (self.row(from)?.runs(matcher), self.row(to)?.runs(matcher));
        if a.is_empty() || a.len() != b.len() {
            return None;
        }
        Some(median_ms(b.iter().zip(a).map(|(b, a)| b / a).collect()))
    }
}

fn median_ms(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

/// Shortest wall-clock span a single timing batch may cover. Faster calls
/// are repeated within the batch and the mean is taken.
const MIN_SAMPLE_MS: f64 = 100.0;

/// Batches per sample for fast calls. Interference only ever adds time, so
/// the quickest batch is the closest to the true cost.
const BATCHES: usize = 3;

fn once_ms<T>(f: &impl Fn() -> T) -> (T, f64) {
    let start = Instant::now();
    let value = black_box(f());
    (value, start.elapsed().as_secs_f64() * 1e3)
}

/// A timed call with enough repetitions per batch to reach `MIN_SAMPLE_MS`.
struct Timed<F> {
    f: F,
    reps: usize,
    samples: Vec<f64>,
}

impl<T, F: Fn() -> T> Timed<F> {
    /// Times one call to pick the repetition count; returns its result too.
    fn calibrate(f: F) -> (Self, T) {
        let (value, first) = once_ms(&f);
        let reps = if first >= MIN_SAMPLE_MS {
            1
        } else {
            (MIN_SAMPLE_MS / first.max(1e-6)).ceil() as usize
        };
        let timed = Timed {
            f,
            reps,
            samples: Vec::with_capacity(RUNS),
        };
        (timed, value)
    }

    fn batches(&self) -> usize {
        if self.reps == 1 {
            1
        } else {
            BATCHES
        }
    }

    fn batch_ms(&self) -> f64 {
        let start = Instant::now();
        for _ in 0..self.reps {
            black_box((self.f)());
        }
        start.elapsed().as_secs_f64() * 1e3 / self.reps as f64
    }

    fn median(&self) -> f64 {
        median_ms(self.samples.clone())
    }
}

/// Takes `RUNS` samples of every timer. Within a round the batches visit
/// each timer in turn, so a slow spell on the host slows all sizes of that
/// round alike and the medians still come from comparable rounds.
fn sample_rounds<T, F: Fn() -> T>(timers: &mut [Timed<F>]) {
    for _ in 0..RUNS {
        let mut best = vec![f64::INFINITY; timers.len()];
        for b in 0..BATCHES {
            for (t, best) in timers.iter().zip(&mut best) {
                if b < t.batches() {
                    *best = best.min(t.batch_ms());
                }
            }
        }
        for (t, best) in timers.iter_mut().zip(best) {
            t.samples.push(best);
        }
    }
}

/// Times both matchers on the all-`a` word of each length in `sizes`.
///
/// Must run on a single thread with nothing else competing for it; the
/// numbers are only meaningful relative to each other.
pub fn matcher_benchmark(pattern: &[Symbol], sizes: &[usize]) -> Result<BenchTable, BenchError> {
    let machine = pattern_machine(pattern)?;
    let a = Symbol::new("a").unwrap();
    let words: Vec<Vec<Symbol>> = sizes.iter().map(|&n| vec![a.clone(); n]).collect();
    let mut dfa_timers = Vec::with_capacity(words.len());
    let mut naive_timers = Vec::with_capacity(words.len());
    for w in &words {
        let machine = &machine;
        let (dfa, by_dfa) = Timed::calibrate(move || dfa_contains(machine, black_box(w)));
        let (naive, by_naive) = Timed::calibrate(move || naive_contains(pattern, black_box(w)));
        assert_eq!(
            by_dfa,
            by_naive,
            "matchers disagree on the all-a word of length {}",
            w.len()
        );
        dfa_timers.push(dfa);
        naive_timers.push(naive);
    }
    sample_rounds(&mut dfa_timers);
    sample_rounds(&mut naive_timers);
    let rows = sizes
        .iter()
        .zip(dfa_timers.into_iter().zip(naive_timers))
        .map(|(&n, (dfa, naive))| BenchRow {
            n,
            dfa_ms: dfa.median(),
            naive_ms: naive.median(),
            dfa_runs: dfa.samples,
            naive_runs: naive.samples,
        })
        .collect();
    Ok(BenchTable { rows })
}
