#![allow(dead_code)]

use chrono::{DateTime, Utc};
use fsmkit::invariant::LenOp;
use fsmkit::{
    Definition, InvariantBinding, InvariantExpr, MachineDocument, Metadata, Symbol, Word,
};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn sym(s: &str) -> Symbol {
    s.parse().unwrap()
}

pub fn syms(tokens: &str) -> Vec<Symbol> {
    Word::parse(tokens).unwrap().into_inner()
}

pub fn word(tokens: &str) -> Word {
    Word::parse(tokens).unwrap()
}

/// Every word over `alphabet` of length at most `max_len`, shortest first,
/// then in alphabet order.
pub fn all_words(alphabet: &[Symbol], max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Vec::<Symbol>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for a in alphabet {
                let mut v = w.clone();
                v.push(a.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(Word::new));
        layer = next;
    }
    out
}

/// Membership by scanning the rule list as written, with missing
/// transitions rejecting. Independent of the library's indexed tables.
pub fn scan_accepts(def: &Definition, w: &[Symbol]) -> bool {
    let mut state = def.start.clone();
    for a in w {
        match def.rules.iter().find(|r| r.from == state && &r.on == a) {
            Some(r) => state = r.to.clone(),
            None => return false,
        }
    }
    def.finals.contains(&state)
}

/// Predicate semantics written out separately from the library's evaluator.
pub fn oracle_eval(e: &InvariantExpr, w: &[Symbol]) -> bool {
    use InvariantExpr::*;
    let n = w.len();
    match e {
        True => true,
        False => false,
        Empty => n == 0,
        Len(op, k) => {
            let k = *k;
            match op {
                LenOp::Eq => n == k,
                LenOp::Ne => n != k,
                LenOp::Lt => n < k,
                LenOp::Le => n <= k,
                LenOp::Gt => n > k,
                LenOp::Ge => n >= k,
            }
        }
        FirstIs(s) => n > 0 && &w[0] == s,
        LastIs(s) => n > 0 && &w[n - 1] == s,
        PrefixIs(p) => p.len() <= n && (0..p.len()).all(|i| w[i] == p[i]),
        SuffixIs(p) => p.len() <= n && (0..p.len()).all(|i| w[n - p.len() + i] == p[i]),
        Contains(p) => (0..n)
            .filter(|&i| i + p.len() <= n)
            .any(|i| (0..p.len()).all(|j| w[i + j] == p[j])),
        Not(x) => !oracle_eval(x, w),
        And(xs) => {
            let mut all = true;
            for x in xs {
                all &= oracle_eval(x, w);
            }
            all
        }
        Or(xs) => {
            let mut any = false;
            for x in xs {
                any |= oracle_eval(x, w);
            }
            any
        }
        Implies(p, q) => {
            if oracle_eval(p, w) {
                oracle_eval(q, w)
            } else {
                true
            }
        }
    }
}

fn random_pattern(rng: &mut impl Rng, alphabet: &[Symbol]) -> Word {
    let len = rng.random_range(1..=3);
    (0..len)
        .map(|_| alphabet.choose(rng).unwrap().clone())
        .collect()
}

pub fn random_invariant(rng: &mut impl Rng, alphabet: &[Symbol], depth: u32) -> InvariantExpr {
    use InvariantExpr::*;
    let leaf = depth == 0 || rng.random_bool(0.4);
    if leaf {
        match rng.random_range(0..8) {
            0 => True,
            1 => False,
            2 => Empty,
            3 => Len(*LenOp::ALL.choose(rng).unwrap(), rng.random_range(0..5)),
            4 => FirstIs(alphabet.choose(rng).unwrap().clone()),
            5 => LastIs(alphabet.choose(rng).unwrap().clone()),
            6 => PrefixIs(random_pattern(rng, alphabet)),
            _ => {
                if rng.random_bool(0.5) {
                    SuffixIs(random_pattern(rng, alphabet))
                } else {
                    Contains(random_pattern(rng, alphabet))
                }
            }
        }
    } else {
        let sub = |rng: &mut _| random_invariant(rng, alphabet, depth - 1);
        match rng.random_range(0..4) {
            0 => Not(Box::new(sub(rng))),
            1 => And((0..rng.random_range(0..4)).map(|_| sub(rng)).collect()),
            2 => Or((0..rng.random_range(0..4)).map(|_| sub(rng)).collect()),
            _ => Implies(Box::new(sub(rng)), Box::new(sub(rng))),
        }
    }
}

pub fn random_binding(
    rng: &mut impl Rng,
    states: &[Symbol],
    alphabet: &[Symbol],
) -> InvariantBinding {
    let mut binding = InvariantBinding::new();
    for q in states {
        if rng.random_bool(0.6) {
            binding.insert(q.clone(), random_invariant(rng, alphabet, 3));
        }
    }
    binding
}

pub fn random_document(rng: &mut impl Rng) -> MachineDocument {
    let alphabet = if rng.random_bool(0.5) {
        syms("a b")
    } else {
        syms("x y z")
    };
    let machine = fsmkit::random_machine(rng, 5, &alphabet);
    let invariants = random_binding(rng, machine.states(), &alphabet);
    let secs = rng.random_range(0..4_000_000_000i64);
    let nanos = rng.random_range(0..1_000_000_000u32);
    let metadata = Metadata {
        created: DateTime::<Utc>::from_timestamp(secs, nanos).unwrap(),
        revision: rng.random_range(0..100),
    };
    let name = sym(&format!("m{}", rng.random_range(0..1000)));
    MachineDocument::new(name, machine, invariants, metadata).unwrap()
}
