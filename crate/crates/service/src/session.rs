//! Editable machine sessions behind the HTTP API.

use std::path::{Path, PathBuf};

use fsmkit::io::fsm_source::{append_versioned, emit_fsm_source, generated_path};
use fsmkit::machine::fresh_dead_state;
use fsmkit::testing::{
    invariant_sweep, random_words, sm_test, SweepReport, TestReport, DEFAULT_MAX_LEN,
};
use fsmkit::{
    annotate_trace, load_document, nondeterministic_pairs, save_document, AnnotatedTrace,
    Definition, InvariantBinding, Machine, MachineDocument, MachineError, Metadata, Rule, Symbol,
    TracePayload, Verdict, Word,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    /// The request is well formed but the machine or edit is invalid.
    #[error("{0}")]
    Invalid(String),
    /// The request does not fit the session's current state.
    #[error("{0}")]
    Conflict(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<MachineError> for SessionError {
    fn from(e: MachineError) -> Self {
        SessionError::Invalid(e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> SessionError {
    SessionError::Invalid(msg.into())
}

/// One edit to the draft machine.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    AddState { state: Symbol },
    RemoveState { state: Symbol },
    AddSymbol { symbol: Symbol },
    RemoveSymbol { symbol: Symbol },
    AddRule { rule: Rule },
    RemoveRule { rule: Rule },
    SetStart { state: Symbol },
    ToggleFinal { state: Symbol },
    SetInvariant { state: Symbol, source: String },
    ClearInvariant { state: Symbol },
    SetName { name: Symbol },
    SetNoDead { no_dead: bool },
}

/// The machine as the user is editing it; it need not be buildable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Draft {
    pub name: Symbol,
    pub states: Vec<Symbol>,
    pub alphabet: Vec<Symbol>,
    pub start: Option<Symbol>,
    pub finals: Vec<Symbol>,
    pub rules: Vec<Rule>,
    pub no_dead: bool,
}

impl Draft {
    fn empty() -> Self {
        Draft {
            name: Symbol::new("dfa").unwrap(),
            states: Vec::new(),
            alphabet: Vec::new(),
            start: None,
            finals: Vec::new(),
            rules: Vec::new(),
            no_dead: false,
        }
    }

    fn from_machine(name: Symbol, m: &Machine) -> Self {
        let def = m.definition();
        Draft {
            name,
            states: def.states,
            alphabet: def.alphabet,
            start: Some(def.start),
            finals: def.finals,
            rules: def.rules,
            no_dead: def.no_dead,
        }
    }

    fn build(&self) -> Result<Machine, SessionError> {
        let start = self
            .start
            .clone()
            .ok_or_else(|| invalid("the machine has no start state"))?;
        Ok(Machine::build(&Definition {
            states: self.states.clone(),
            alphabet: self.alphabet.clone(),
            start,
            finals: self.finals.clone(),
            rules: self.rules.clone(),
            no_dead: self.no_dead,
        })?)
    }

    /// States an invariant may name: the declared ones plus the dead state
    /// the build would add.
    fn bindable(&self, state: &Symbol) -> bool {
        self.states.contains(state) || (!self.no_dead && *state == fresh_dead_state(&self.states))
    }
}

struct Built {
    machine: Machine,
    trace: AnnotatedTrace,
}

pub struct Session {
    pub id: String,
    draft: Draft,
    invariants: InvariantBinding,
    metadata: Metadata,
    tape: Word,
    built: Option<Built>,
    cursor: usize,
}

/// What every response reports about a session.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SessionView {
    pub id: String,
    pub machine: DraftView,
    pub invariants: std::collections::BTreeMap<Symbol, String>,
    /// The rule list shown to the user: the built machine's rules when a
    /// trace is current, otherwise the draft's.
    pub rules: Vec<Rule>,
    pub dead_state: Option<Symbol>,
    pub tape: Word,
    pub dirty: bool,
    pub trace: Option<CursorView>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DraftView {
    pub name: Symbol,
    pub states: Vec<Symbol>,
    pub alphabet: Vec<Symbol>,
    pub start: Option<Symbol>,
    pub finals: Vec<Symbol>,
    pub no_dead: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CursorView {
    pub cursor: usize,
    pub steps: usize,
    pub consumed: Word,
    pub unconsumed: Word,
    pub state: Symbol,
    pub previous_state: Option<Symbol>,
    pub rule_used: Option<Rule>,
    /// Index into `SessionView::rules` of the rule just used.
    pub rule_index: Option<usize>,
    pub verdict: Verdict,
    pub outcome: fsmkit::Outcome,
    pub at_start: bool,
    pub at_end: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Generated {
    pub revision: u32,
    pub source: String,
    pub file: PathBuf,
}

/// Rejects names that would escape the document directory.
pub fn file_stem_ok(name: &str) -> bool {
    !name.is_empty() && name != "." && name != ".." && !name.contains(['/', '\\'])
}

impl Session {
    pub fn new(id: String) -> Self {
        Session {
            id,
            draft: Draft::empty(),
            invariants: InvariantBinding::new(),
            metadata: Metadata::now(),
            tape: Word::empty(),
            built: None,
            cursor: 0,
        }
    }

    pub fn from_document(id: String, doc: MachineDocument) -> Self {
        let mut s = Session::new(id);
        s.replace_document(doc);
        s
    }

    fn replace_document(&mut self, doc: MachineDocument) {
        self.draft = Draft::from_machine(doc.name, &doc.machine);
        self.invariants = doc.invariants;
        self.metadata = doc.metadata;
        self.invalidate();
    }

    fn invalidate(&mut self) {
        self.built = None;
        self.cursor = 0;
    }

    pub fn dirty(&self) -> bool {
        self.built.is_none()
    }

    pub fn apply_edit(&mut self, edit: Edit) -> Result<(), SessionError> {
        let d = &mut self.draft;
        match edit {
            Edit::AddState { state } => {
                if d.states.contains(&state) {
                    return Err(invalid(format!("state {state} already exists")));
                }
                d.states.push(state);
            }
            Edit::RemoveState { state } => {
                if !d.states.contains(&state) {
                    return Err(invalid(format!("there is no state {state}")));
                }
                d.states.retain(|q| *q != state);
                d.finals.retain(|q| *q != state);
                d.rules.retain(|r| r.from != state && r.to != state);
                if d.start.as_ref() == Some(&state) {
                    d.start = None;
                }
                self.invariants.remove(&state);
            }
            Edit::AddSymbol { symbol } => {
                if d.alphabet.contains(&symbol) {
                    return Err(invalid(format!(
                        "symbol {symbol} is already in the alphabet"
                    )));
                }
                d.alphabet.push(symbol);
            }
            Edit::RemoveSymbol { symbol } => {
                if !d.alphabet.contains(&symbol) {
                    return Err(invalid(format!("symbol {symbol} is not in the alphabet")));
                }
                d.alphabet.retain(|a| *a != symbol);
                d.rules.retain(|r| r.on != symbol);
            }
            Edit::AddRule { rule } => {
                for state in [&rule.from, &rule.to] {
                    if !d.states.contains(state) {
                        return Err(invalid(format!(
                            "rule {rule} uses undeclared state {state}"
                        )));
                    }
                }
                if !d.alphabet.contains(&rule.on) {
                    return Err(invalid(format!(
                        "rule {rule} uses symbol {}, which is not in the alphabet",
                        rule.on
                    )));
                }
                if d.rules.contains(&rule) {
                    return Err(invalid(format!("rule {rule} already exists")));
                }
                let mut candidate = d.rules.clone();
                candidate.push(rule.clone());
                let conflicts = nondeterministic_pairs(&candidate);
                if !conflicts.is_empty() {
                    return Err(MachineError::Nondeterministic(conflicts).into());
                }
                d.rules.push(rule);
            }
            Edit::RemoveRule { rule } => {
                if !d.rules.contains(&rule) {
                    return Err(invalid(format!("there is no rule {rule}")));
                }
                d.rules.retain(|r| *r != rule);
            }
            Edit::SetStart { state } => {
                if !d.states.contains(&state) {
                    return Err(invalid(format!("there is no state {state}")));
                }
                d.start = Some(state);
            }
            Edit::ToggleFinal { state } => {
                if !d.states.contains(&state) {
                    return Err(invalid(format!("there is no state {state}")));
                }
                if d.finals.contains(&state) {
                    d.finals.retain(|q| *q != state);
                } else {
                    d.finals.push(state);
                }
            }
            Edit::SetInvariant { state, source } => {
                if !d.bindable(&state) {
                    return Err(invalid(format!("there is no state {state}")));
                }
                let expr = fsmkit::parse_invariant(&source)
                    .map_err(|e| invalid(format!("invariant for {state}: {e}")))?;
                self.invariants.insert(state, expr);
            }
            Edit::ClearInvariant { state } => {
                if self.invariants.remove(&state).is_none() {
                    return Err(invalid(format!("state {state} has no invariant")));
                }
            }
            Edit::SetName { name } => {
                if !file_stem_ok(name.as_str()) {
                    return Err(invalid(format!("{name} cannot be used as a machine name")));
                }
                d.name = name;
            }
            Edit::SetNoDead { no_dead } => d.no_dead = no_dead,
        }
        self.invalidate();
        Ok(())
    }

    fn check_tape(&self, symbols: &[Symbol]) -> Result<(), SessionError> {
        match symbols.iter().find(|s| !self.draft.alphabet.contains(s)) {
            Some(s) => Err(invalid(format!("tape symbol {s} is not in the alphabet"))),
            None => Ok(()),
        }
    }

    pub fn set_tape(&mut self, tape: Word) -> Result<(), SessionError> {
        self.check_tape(&tape)?;
        self.tape = tape;
        self.invalidate();
        Ok(())
    }

    pub fn append_tape(&mut self, symbols: Word) -> Result<(), SessionError> {
        self.check_tape(&symbols)?;
        self.tape = self.tape.concat(&symbols);
        self.invalidate();
        Ok(())
    }

    pub fn clear_tape(&mut self) {
        self.tape = Word::empty();
        self.invalidate();
    }

    /// Builds the draft and traces the tape from the first configuration.
    pub fn run(&mut self) -> Result<(), SessionError> {
        let machine = self.draft.build()?;
        let trace = annotate_trace(&machine, &self.invariants, &self.tape)
            .map_err(|e| invalid(e.to_string()))?;
        self.built = Some(Built { machine, trace });
        self.cursor = 0;
        Ok(())
    }

    fn built(&self) -> Result<&Built, SessionError> {
        self.built.as_ref().ok_or_else(|| {
            SessionError::Conflict(
                "the machine has changed since the last run; run it first".into(),
            )
        })
    }

    pub fn step_forward(&mut self) -> Result<(), SessionError> {
        let last = self.built()?.trace.steps.len() - 1;
        if self.cursor >= last {
            return Err(SessionError::Conflict(
                "already at the last configuration".into(),
            ));
        }
        self.cursor += 1;
        Ok(())
    }

    pub fn step_back(&mut self) -> Result<(), SessionError> {
        self.built()?;
        if self.cursor == 0 {
            return Err(SessionError::Conflict(
                "already at the first configuration".into(),
            ));
        }
        self.cursor -= 1;
        Ok(())
    }

    pub fn document(&self) -> Result<MachineDocument, SessionError> {
        let machine = self.draft.build()?;
        MachineDocument::new(
            self.draft.name.clone(),
            machine,
            self.invariants.clone(),
            self.metadata,
        )
        .map_err(|e| invalid(e.to_string()))
    }

    pub fn save(&self) -> Result<String, SessionError> {
        Ok(save_document(&self.document()?))
    }

    pub fn load(&mut self, text: &str) -> Result<(), SessionError> {
        let doc = load_document(text).map_err(|e| invalid(e.to_string()))?;
        self.replace_document(doc);
        Ok(())
    }

    /// Appends the current machine's source to `<root>/<name>.gen.rkt`.
    pub fn gencode(&self, root: &Path) -> Result<Generated, SessionError> {
        let built = self.built()?;
        if !file_stem_ok(self.draft.name.as_str()) {
            return Err(invalid(format!(
                "{} cannot be used as a file name",
                self.draft.name
            )));
        }
        let doc = MachineDocument::new(
            self.draft.name.clone(),
            built.machine.clone(),
            self.invariants.clone(),
            self.metadata,
        )
        .map_err(|e| invalid(e.to_string()))?;
        let file = generated_path(root, &doc.name);
        let revision = append_versioned(&file, &doc)?;
        Ok(Generated {
            revision,
            source: emit_fsm_source(&doc),
            file,
        })
    }

    pub fn test(&self, n: usize, seed: u64) -> Result<TestReport, SessionError> {
        Ok(sm_test(&self.draft.build()?, n, seed))
    }

    pub fn sweep(&self, random: usize, seed: u64) -> Result<SweepReport, SessionError> {
        let machine = self.draft.build()?;
        let extra = random_words(machine.alphabet(), random, seed, DEFAULT_MAX_LEN)
            .map_err(|e| invalid(e.to_string()))?;
        invariant_sweep(&machine, &self.invariants, &extra).map_err(|e| invalid(e.to_string()))
    }

    pub fn trace_payload(&self) -> Result<TracePayload, SessionError> {
        let built = self.built()?;
        Ok(TracePayload::new(self.tape.clone(), built.trace.clone()))
    }

    pub fn name(&self) -> &Symbol {
        &self.draft.name
    }

    pub fn view(&self) -> SessionView {
        let d = &self.draft;
        let rules = match &self.built {
            Some(b) => b.machine.rules().to_vec(),
            None => d.rules.clone(),
        };
        let trace = self.built.as_ref().map(|b| {
            let step = &b.trace.steps[self.cursor];
            let rule_index = step
                .rule_used
                .as_ref()
                .and_then(|r| rules.iter().position(|x| x == r));
            CursorView {
                cursor: self.cursor,
                steps: b.trace.steps.len(),
                consumed: step.consumed.clone(),
                unconsumed: step.unconsumed.clone(),
                state: step.state.clone(),
                previous_state: self
                    .cursor
                    .checked_sub(1)
                    .map(|k| b.trace.steps[k].state.clone()),
                rule_used: step.rule_used.clone(),
                rule_index,
                verdict: step.verdict,
                outcome: b.trace.outcome,
                at_start: self.cursor == 0,
                at_end: self.cursor + 1 == b.trace.steps.len(),
            }
        });
        SessionView {
            id: self.id.clone(),
            machine: DraftView {
                name: d.name.clone(),
                states: d.states.clone(),
                alphabet: d.alphabet.clone(),
                start: d.start.clone(),
                finals: d.finals.clone(),
                no_dead: d.no_dead,
            },
            invariants: self.invariants.to_sources(),
            dead_state: self
                .built
                .as_ref()
                .and_then(|b| b.machine.dead_state().cloned()),
            rules,
            tape: self.tape.clone(),
            dirty: self.dirty(),
            trace,
        }
    }
}
