//! Symbols and words: the tokens machines are built from and run over.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Characters that may never appear inside a symbol because they carry
/// meaning in the s-expression surface syntax.
const RESERVED: &[char] = &['(', ')', '\'', '"', ';'];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolError {
    #[error("symbol must not be empty")]
    Empty,
    #[error("symbol `{token}` contains forbidden character {ch:?}")]
    ForbiddenChar { token: String, ch: char },
}

/// A state name or an alphabet element.
///
/// Symbols are case-sensitive tokens of printable characters with no
/// whitespace, parentheses, quotes or semicolons. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(token: &str) -> Result<Self, SymbolError> {
        if token.is_empty() {
            return Err(SymbolError::Empty);
        }
        if let Some(ch) = token
            .chars()
            .find(|c| c.is_whitespace() || c.is_control() || RESERVED.contains(c))
        {
            return Err(SymbolError::ForbiddenChar {
                token: token.to_string(),
                ch,
            });
        }
        Ok(Symbol(Arc::from(token)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Symbol {
    type Err = SymbolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Symbol::new(s)
    }
}

impl AsRef<str> for Symbol {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let token = String::deserialize(deserializer)?;
        Symbol::new(&token).map_err(serde::de::Error::custom)
    }
}

/// An ordered, possibly empty sequence of symbols.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Parses whitespace-separated tokens, e.g. `"a b b a"`.
    pub fn parse(tokens: &str) -> Result<Self, SymbolError> {
        tokens
            .split_whitespace()
            .map(Symbol::new)
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn push(&mut self, symbol: Symbol) {
        self.0.push(symbol);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.0.clone();
        symbols.extend_from_slice(&other.0);
        Word(symbols)
    }

    pub fn into_inner(self) -> Vec<Symbol> {
        self.0
    }

    /// Space-separated tokens without surrounding parentheses.
    pub fn to_tokens(&self) -> String {
        self.0
            .iter()
            .map(Symbol::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Deref for Word {
    type Target = [Symbol];

    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }
}

impl From<&[Symbol]> for Word {
    fn from(symbols: &[Symbol]) -> Self {
        Word(symbols.to_vec())
    }
}

impl FromIterator<Symbol> for Word {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl FromStr for Word {
    type Err = SymbolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Word::parse(s)
    }
}

/// Renders as an s-expression list: `(a b a)`, or `()` when empty.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_tokens())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
