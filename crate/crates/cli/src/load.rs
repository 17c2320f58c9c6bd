use std::path::Path;

use fsmkit::{load_document, parse_fsm_source, MachineDocument, Word};

use crate::CliError;

/// Reads a `.fsmx` document, or FSM source for any other extension.
pub fn machine_file(path: &Path) -> Result<MachineDocument, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let is_document = path.extension().is_some_and(|ext| ext == "fsmx");
    let loaded = if is_document {
        load_document(&text).map_err(|e| e.to_string())
    } else {
        parse_fsm_source(&text).map_err(|e| e.to_string())
    };
    loaded.map_err(|message| CliError::Invalid(format!("{}: {message}", path.display())))
}

pub fn tape(tokens: &str) -> Result<Word, CliError> {
    Word::parse(tokens).map_err(|e| CliError::Invalid(format!("tape: {e}")))
}
