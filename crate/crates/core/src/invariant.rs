//! State invariants: a small predicate language over the consumed input,
//! bindings from states to predicates, and invariant-annotated traces.
//!
//! Concrete syntax is prefix s-expressions:
//!
//! ```text
//! true  false  (empty)
//! (len= k) (len!= k) (len< k) (len<= k) (len> k) (len>= k)
//! (first= s) (last= s) (prefix= s ...) (suffix= s ...) (contains s ...)
//! (not e) (and e ...) (or e ...) (implies e e)
//! ```
//!
//! Every predicate is total: `first=`/`last=` are false on the empty word.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{Machine, Rule};
use crate::run::{run_path, Outcome, RunError};
use crate::sexpr::{self, Pos, Sexp, SyntaxError};
use crate::symbol::{Symbol, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LenOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl LenOp {
    pub const ALL: [LenOp; 6] = [
        LenOp::Eq,
        LenOp::Ne,
        LenOp::Lt,
        LenOp::Le,
        LenOp::Gt,
        LenOp::Ge,
    ];

    fn keyword(self) -> &'static str {
        match self {
            LenOp::Eq => "len=",
            LenOp::Ne => "len!=",
            LenOp::Lt => "len<",
            LenOp::Le => "len<=",
            LenOp::Gt => "len>",
            LenOp::Ge => "len>=",
        }
    }

    fn holds(self, len: usize, k: usize) -> bool {
        match self {
            LenOp::Eq => len == k,
            LenOp::Ne => len != k,
            LenOp::Lt => len < k,
            LenOp::Le => len <= k,
            LenOp::Gt => len > k,
            LenOp::Ge => len >= k,
        }
    }
}

/// A predicate over the consumed input.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InvariantExpr {
    True,
    False,
    Empty,
    Len(LenOp, usize),
    FirstIs(Symbol),
    LastIs(Symbol),
    /// Word literals of the three pattern forms are never empty.
    PrefixIs(Word),
    SuffixIs(Word),
    Contains(Word),
    Not(Box<InvariantExpr>),
    And(Vec<InvariantExpr>),
    Or(Vec<InvariantExpr>),
    Implies(Box<InvariantExpr>, Box<InvariantExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("at {pos}: `{form}` expects {expected} argument(s), found {found}")]
    Arity {
        form: String,
        expected: &'static str,
        found: usize,
        pos: Pos,
    },
    #[error("at {pos}: unknown form `{name}`")]
    UnknownForm { name: String, pos: Pos },
}

pub fn parse_invariant(text: &str) -> Result<InvariantExpr, InvariantError> {
    from_sexp(&sexpr::read_one(text)?)
}

fn syntax(pos: Pos, message: impl Into<String>) -> InvariantError {
    InvariantError::Syntax(SyntaxError {
        pos,
        message: message.into(),
    })
}

fn from_sexp(form: &Sexp) -> Result<InvariantExpr, InvariantError> {
    match form {
        Sexp::Atom { text, pos } => match text.as_str() {
            "true" => Ok(InvariantExpr::True),
            "false" => Ok(InvariantExpr::False),
            other => Err(InvariantError::UnknownForm {
                name: other.to_string(),
                pos: *pos,
            }),
        },
        Sexp::Quote { pos, .. } => Err(syntax(*pos, "quoted data is not an invariant")),
        Sexp::List { items, pos } => {
            let Some((head, args)) = items.split_first() else {
                return Err(syntax(*pos, "empty form"));
            };
            let Some(name) = head.as_atom() else {
                return Err(syntax(head.pos(), "form name must be a symbol"));
            };
            let arity = |expected: &'static str, ok: bool| {
                if ok {
                    Ok(())
                } else {
                    Err(InvariantError::Arity {
                        form: name.to_string(),
                        expected,
                        found: args.len(),
                        pos: *pos,
                    })
                }
            };
            if let Some(op) = LenOp::ALL.into_iter().find(|op| op.keyword() == name) {
                arity("1", args.len() == 1)?;
                let k = args[0]
                    .as_atom()
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| syntax(args[0].pos(), "expected a nonnegative integer"))?;
                return Ok(InvariantExpr::Len(op, k));
            }
            match name {
                "empty" => {
                    arity("0", args.is_empty())?;
                    Ok(InvariantExpr::Empty)
                }
                "first=" | "last=" => {
                    arity("1", args.len() == 1)?;
                    let s = symbol_arg(&args[0])?;
                    Ok(if name == "first=" {
                        InvariantExpr::FirstIs(s)
                    } else {
                        InvariantExpr::LastIs(s)
                    })
                }
                "prefix=" | "suffix=" | "contains" => {
                    arity("at least 1", !args.is_empty())?;
                    let w = args.iter().map(symbol_arg).collect::<Result<Word, _>>()?;
                    Ok(match name {
                        "prefix=" => InvariantExpr::PrefixIs(w),
                        "suffix=" => InvariantExpr::SuffixIs(w),
                        _ => InvariantExpr::Contains(w),
                    })
                }
                "not" => {
                    arity("1", args.len() == 1)?;
                    Ok(InvariantExpr::Not(Box::new(from_sexp(&args[0])?)))
                }
                "and" | "or" => {
                    let parts = args.iter().map(from_sexp).collect::<Result<Vec<_>, _>>()?;
                    Ok(if name == "and" {
                        InvariantExpr::And(parts)
                    } else {
                        InvariantExpr::Or(parts)
                    })
                }
                "implies" => {
                    arity("2", args.len() == 2)?;
                    Ok(InvariantExpr::Implies(
                        Box::new(from_sexp(&args[0])?),
                        Box::new(from_sexp(&args[1])?),
                    ))
                }
                _ => Err(InvariantError::UnknownForm {
                    name: name.to_string(),
                    pos: head.pos(),
                }),
            }
        }
    }
}

fn symbol_arg(form: &Sexp) -> Result<Symbol, InvariantError> {
    let text = form.as_atom().ok_or_else(|| {
        syntax(
            form.pos(),
            format!("expected a symbol, found {}", form.describe()),
        )
    })?;
    Symbol::new(text).map_err(|e| syntax(form.pos(), e.to_string()))
}

impl fmt::Display for InvariantExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, name: &str, parts: &[InvariantExpr]) -> fmt::Result {
            write!(f, "({name}")?;
            for p in parts {
                write!(f, " {p}")?;
            }
            write!(f, ")")
        }
        match self {
            InvariantExpr::True => f.write_str("true"),
            InvariantExpr::False => f.write_str("false"),
            InvariantExpr::Empty => f.write_str("(empty)"),
            InvariantExpr::Len(op, k) => write!(f, "({} {k})", op.keyword()),
            InvariantExpr::FirstIs(s) => write!(f, "(first= {s})"),
            InvariantExpr::LastIs(s) => write!(f, "(last= {s})"),
            InvariantExpr::PrefixIs(w) => write!(f, "(prefix= {})", w.to_tokens()),
            InvariantExpr::SuffixIs(w) => write!(f, "(suffix= {})", w.to_tokens()),
            InvariantExpr::Contains(w) => write!(f, "(contains {})", w.to_tokens()),
            InvariantExpr::Not(e) => write!(f, "(not {e})"),
            InvariantExpr::And(parts) => list(f, "and", parts),
            InvariantExpr::Or(parts) => list(f, "or", parts),
            InvariantExpr::Implies(p, q) => write!(f, "(implies {p} {q})"),
        }
    }
}

impl std::str::FromStr for InvariantExpr {
    type Err = InvariantError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_invariant(s)
    }
}

/// Evaluates `e` on the consumed input.
pub fn eval_invariant(e: &InvariantExpr, consumed: &[Symbol]) -> bool {
    match e {
        InvariantExpr::True => true,
        InvariantExpr::False => false,
        InvariantExpr::Empty => consumed.is_empty(),
        InvariantExpr::Len(op, k) => op.holds(consumed.len(), *k),
        InvariantExpr::FirstIs(s) => consumed.first() == Some(s),
        InvariantExpr::LastIs(s) => consumed.last() == Some(s),
        InvariantExpr::PrefixIs(p) => consumed.starts_with(p),
        InvariantExpr::SuffixIs(p) => consumed.ends_with(p),
        InvariantExpr::Contains(p) => consumed.windows(p.len()).any(|window| window == &p[..]),
        InvariantExpr::Not(inner) => !eval_invariant(inner, consumed),
        InvariantExpr::And(parts) => parts.iter().all(|p| eval_invariant(p, consumed)),
        InvariantExpr::Or(parts) => parts.iter().any(|p| eval_invariant(p, consumed)),
        InvariantExpr::Implies(p, q) => !eval_invariant(p, consumed) || eval_invariant(q, consumed),
    }
}

impl InvariantExpr {
    pub fn eval(&self, consumed: &[Symbol]) -> bool {
        eval_invariant(self, consumed)
    }
}

/// Invariants attached to some (not necessarily all) states.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvariantBinding(BTreeMap<Symbol, InvariantExpr>);

impl InvariantBinding {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `(state, source)` pairs.
    pub fn parse<'a, I>(pairs: I) -> Result<Self, (Symbol, InvariantError)>
    where
        I: IntoIterator<Item = (&'a Symbol, &'a str)>,
    {
        let mut binding = InvariantBinding::new();
        for (state, source) in pairs {
            let expr = parse_invariant(source).map_err(|e| (state.clone(), e))?;
            binding.insert(state.clone(), expr);
        }
        Ok(binding)
    }

    pub fn insert(&mut self, state: Symbol, expr: InvariantExpr) -> Option<InvariantExpr> {
        self.0.insert(state, expr)
    }

    pub fn remove(&mut self, state: &Symbol) -> Option<InvariantExpr> {
        self.0.remove(state)
    }

    pub fn get(&self, state: &Symbol) -> Option<&InvariantExpr> {
        self.0.get(state)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &InvariantExpr)> {
        self.0.iter()
    }

    /// Source text for every binding, keyed by state.
    pub fn to_sources(&self) -> BTreeMap<Symbol, String> {
        self.0
            .iter()
            .map(|(s, e)| (s.clone(), e.to_string()))
            .collect()
    }

    /// States bound here that the machine does not have.
    pub fn unknown_states<'a>(&'a self, m: &'a Machine) -> impl Iterator<Item = &'a Symbol> {
        self.0.keys().filter(|s| !m.has_state(s))
    }
}

impl FromIterator<(Symbol, InvariantExpr)> for InvariantBinding {
    fn from_iter<I: IntoIterator<Item = (Symbol, InvariantExpr)>>(iter: I) -> Self {
        InvariantBinding(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Unbound,
}

/// A configuration enriched with its consumed prefix, the rule that led
/// to it (none for the initial step) and the invariant verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedStep {
    pub consumed: Word,
    pub unconsumed: Word,
    pub state: Symbol,
    pub rule_used: Option<Rule>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedTrace {
    pub steps: Vec<AnnotatedStep>,
    pub outcome: Outcome,
}

impl AnnotatedTrace {
    /// Index of the first step whose invariant fails.
    pub fn first_failure(&self) -> Option<usize> {
        self.steps.iter().position(|s| s.verdict == Verdict::Fails)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotateError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("an invariant is bound to {0}, which is not a state of the machine")]
    UnknownState(Symbol),
}

pub fn annotate_trace(
    m: &Machine,
    binding: &InvariantBinding,
    w: &[Symbol],
) -> Result<AnnotatedTrace, AnnotateError> {
    if let Some(state) = binding.unknown_states(m).next() {
        return Err(AnnotateError::UnknownState(state.clone()));
    }
    let path = run_path(m, w)?;
    let steps = path
        .states
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let state = m.states()[q].clone();
            let consumed = &w[..i];
            let verdict = match binding.get(&state) {
                None => Verdict::Unbound,
                Some(e) if e.eval(consumed) => Verdict::Holds,
                Some(_) => Verdict::Fails,
            };
            AnnotatedStep {
                consumed: Word::from(consumed),
                unconsumed: Word::from(&w[i..]),
                state,
                rule_used: i.checked_sub(1).map(|r| m.rules()[path.rules[r]].clone()),
                verdict,
            }
        })
        .collect();
    Ok(AnnotatedTrace {
        steps,
        outcome: path.outcome,
    })
}
