use std::collections::BTreeMap;
use std::fmt::Write;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariant::{parse_invariant, InvariantBinding, InvariantError};
use crate::machine::{Definition, Machine, MachineError, Rule};
use crate::symbol::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metadata {
    pub created: DateTime<Utc>,
    pub revision: u32,
}

impl Metadata {
    /// Whole seconds, so the time survives a round trip through a
    /// generated-source header.
    pub fn now() -> Self {
        Metadata {
            created: Utc::now().trunc_subsecs(0),
            revision: 0,
        }
    }

    /// Placeholder for machines that arrive without metadata.
    pub fn unversioned() -> Self {
        Metadata {
            created: DateTime::UNIX_EPOCH,
            revision: 0,
        }
    }
}

/// A named machine with its state invariants: the unit that is saved,
/// loaded, edited and turned into FSM source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineDocument {
    pub name: Symbol,
    pub machine: Machine,
    pub invariants: InvariantBinding,
    pub metadata: Metadata,
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] MachineError),
    #[error("invariant for state {state}: {error}")]
    Invariant {
        state: Symbol,
        error: InvariantError,
    },
    #[error("an invariant is bound to {0}, which is not a state of the machine")]
    UnknownInvariantState(Symbol),
}

impl MachineDocument {
    pub fn new(
        name: Symbol,
        machine: Machine,
        invariants: InvariantBinding,
        metadata: Metadata,
    ) -> Result<Self, DocumentError> {
        if let Some(state) = invariants.unknown_states(&machine).next() {
            return Err(DocumentError::UnknownInvariantState(state.clone()));
        }
        Ok(MachineDocument {
            name,
            machine,
            invariants,
            metadata,
        })
    }
}

/// On-disk layout of a `.fsmx` file.
#[derive(Serialize, Deserialize)]
struct DocumentFile {
    name: Symbol,
    states: Vec<Symbol>,
    alphabet: Vec<Symbol>,
    start: Symbol,
    finals: Vec<Symbol>,
    rules: Vec<Rule>,
    #[serde(default)]
    no_dead: bool,
    #[serde(default)]
    invariants: BTreeMap<Symbol, String>,
    metadata: Metadata,
}

/// Renders the canonical `.fsmx` text. Synthesized dead-state rules are
/// not written; loading rebuilds them.
pub fn save_document(doc: &MachineDocument) -> String {
    let def = doc.machine.definition();
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", quote(doc.name.as_str()));
    let _ = writeln!(out, "states = {}", list(&def.states));
    let _ = writeln!(out, "alphabet = {}", list(&def.alphabet));
    let _ = writeln!(out, "start = {}", quote(def.start.as_str()));
    let _ = writeln!(out, "finals = {}", list(&def.finals));
    if def.rules.is_empty() {
        out.push_str("rules = []\n");
    } else {
        out.push_str("rules = [\n");
        for rule in &def.rules {
            let _ = writeln!(
                out,
                "    {},",
                list(&[rule.from.clone(), rule.on.clone(), rule.to.clone()])
            );
        }
        out.push_str("]\n");
    }
    if def.no_dead {
        out.push_str("no_dead = true\n");
    }
    let sources = doc.invariants.to_sources();
    if !sources.is_empty() {
        out.push_str("\n[invariants]\n");
        for (state, source) in &sources {
            let _ = writeln!(out, "{} = {}", key(state.as_str()), quote(source));
        }
    }
    out.push_str("\n[metadata]\n");
    out.push_str(&toml::to_string(&doc.metadata).expect("metadata always serializes"));
    out
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn key(s: &str) -> String {
    if s.chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        s.to_string()
    } else {
        quote(s)
    }
}

fn list(items: &[Symbol]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| quote(s.as_str())).collect();
    format!("[{}]", quoted.join(", "))
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |nl| before.len() - nl - 1)
        + 1;
    (line, column)
}

pub fn load_document(text: &str) -> Result<MachineDocument, DocumentError> {
    let file: DocumentFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map_or((1, 1), |span| line_column(text, span.start));
        DocumentError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let machine = Machine::build(&Definition {
        states: file.states,
        alphabet: file.alphabet,
        start: file.start,
        finals: file.finals,
        rules: file.rules,
        no_dead: file.no_dead,
    })?;
    let mut invariants = InvariantBinding::new();
    for (state, source) in file.invariants {
        let expr = parse_invariant(&source).map_err(|error| DocumentError::Invariant {
            state: state.clone(),
            error,
        })?;
        invariants.insert(state, expr);
    }
    MachineDocument::new(file.name, machine, invariants, file.metadata)
}
