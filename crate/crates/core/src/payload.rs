//! JSON rendering of annotated traces shared by the CLI and the HTTP service,
//! so both emit the same bytes for the same inputs.

use serde::{Deserialize, Serialize};

use crate::invariant::{
    annotate_trace, AnnotateError, AnnotatedStep, AnnotatedTrace, InvariantBinding,
};
use crate::machine::Machine;
use crate::run::Outcome;
use crate::symbol::Word;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracePayload {
    pub tape: Word,
    pub steps: Vec<AnnotatedStep>,
    pub outcome: Outcome,
    pub first_failure: Option<usize>,
}

impl TracePayload {
    pub fn new(tape: Word, trace: AnnotatedTrace) -> Self {
        TracePayload {
            first_failure: trace.first_failure(),
            tape,
            steps: trace.steps,
            outcome: trace.outcome,
        }
    }

    pub fn compute(
        m: &Machine,
        binding: &InvariantBinding,
        tape: &Word,
    ) -> Result<Self, AnnotateError> {
        Ok(TracePayload::new(
            tape.clone(),
            annotate_trace(m, binding, tape)?,
        ))
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("payloads always serialize");
        text.push('\n');
        text
    }
}
