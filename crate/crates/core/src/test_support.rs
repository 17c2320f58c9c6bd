use crate::machine::Rule;
use crate::symbol::{Symbol, Word};

pub fn syms(tokens: &str) -> Vec<Symbol> {
    Word::parse(tokens).unwrap().into_inner()
}

pub fn word(tokens: &str) -> Word {
    Word::parse(tokens).unwrap()
}

pub fn rule(text: &str) -> Rule {
    Rule::parse(text).unwrap()
}

pub fn rules(texts: &[&str]) -> Vec<Rule> {
    texts.iter().map(|t| rule(t)).collect()
}

/// Every word over `alphabet` of length at most `max_len`, shortest first.
pub fn all_words(alphabet: &[Symbol], max_len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |a| {
                    let mut next = w.clone();
                    next.push(a.clone());
                    next
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
