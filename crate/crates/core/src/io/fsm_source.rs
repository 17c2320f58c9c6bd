use std::fs::OpenOptions;
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use crate::invariant::InvariantBinding;
use crate::io::document::{MachineDocument, Metadata};
use crate::machine::{Definition, Machine, MachineError, Rule};
use crate::sexpr::{self, Pos, Sexp, SyntaxError};
use crate::symbol::Symbol;

/// Prefix of the comment line written before every generated block.
pub const HEADER_PREFIX: &str = ";; generated ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourceError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("at {pos}: make-dfa expects 5 or 6 arguments, found {found}")]
    Arity { pos: Pos, found: usize },
    #[error("at {pos}: {message}")]
    Malformed { pos: Pos, message: String },
    #[error("no `(define <name> (make-dfa ...))` form found")]
    NoDefinition,
    #[error(transparent)]
    Machine(#[from] MachineError),
}

fn malformed(pos: Pos, message: impl Into<String>) -> SourceError {
    SourceError::Malformed {
        pos,
        message: message.into(),
    }
}

fn list_text(items: &[Symbol]) -> String {
    let tokens: Vec<&str> = items.iter().map(Symbol::as_str).collect();
    format!("'({})", tokens.join(" "))
}

/// Renders the document's machine as an FSM `define` form. Only the rules
/// the user wrote appear; a synthesized dead state is left implicit.
pub fn emit_fsm_source(doc: &MachineDocument) -> String {
    let def = doc.machine.definition();
    let head = format!("(define {} (make-dfa ", doc.name);
    let indent = " ".repeat(head.chars().count());
    let mut out = format!(
        "{head}{} {} '{} {}\n",
        list_text(&def.states),
        list_text(&def.alphabet),
        def.start,
        list_text(&def.finals)
    );
    if def.rules.is_empty() {
        out.push_str(&format!("{indent}'()"));
    } else {
        for (i, rule) in def.rules.iter().enumerate() {
            let lead = if i == 0 { "'(" } else { "  " };
            out.push_str(&format!("{indent}{lead}{rule}"));
            if i + 1 < def.rules.len() {
                out.push('\n');
            }
        }
        out.push(')');
    }
    if def.no_dead {
        out.push_str(" 'no-dead");
    }
    out.push_str("))");
    out
}

/// One `define` form from an FSM source file, with the generation header
/// that preceded it, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceBlock {
    pub header: Option<Metadata>,
    pub document: MachineDocument,
}

fn parse_header(line: &str) -> Option<Metadata> {
    let rest = line.trim().strip_prefix(HEADER_PREFIX)?;
    let mut parts = rest.split_whitespace();
    let created = DateTime::parse_from_rfc3339(parts.next()?)
        .ok()?
        .with_timezone(&Utc);
    if parts.next()? != "revision" {
        return None;
    }
    let revision = parts.next()?.parse().ok()?;
    parts
        .next()
        .is_none()
        .then_some(Metadata { created, revision })
}

fn symbol_at(form: &Sexp, what: &str) -> Result<Symbol, SourceError> {
    let form = form.unquote();
    let text = form
        .as_atom()
        .ok_or_else(|| malformed(form.pos(), format!("{what} must be a symbol")))?;
    Symbol::new(text).map_err(|e| malformed(form.pos(), format!("{what}: {e}")))
}

fn symbols_at(form: &Sexp, what: &str) -> Result<Vec<Symbol>, SourceError> {
    let items = form
        .unquote()
        .as_list()
        .ok_or_else(|| malformed(form.pos(), format!("{what} must be a list")))?;
    items.iter().map(|item| symbol_at(item, what)).collect()
}

fn rules_at(form: &Sexp) -> Result<Vec<Rule>, SourceError> {
    let items = form
        .unquote()
        .as_list()
        .ok_or_else(|| malformed(form.pos(), "the transitions must be a list"))?;
    items
        .iter()
        .map(|item| {
            let parts = symbols_at(item, "a transition")?;
            match <[Symbol; 3]>::try_from(parts) {
                Ok(triple) => Ok(Rule::from(triple)),
                Err(_) => Err(malformed(
                    item.pos(),
                    "a transition must have the form (state symbol state)",
                )),
            }
        })
        .collect()
}

/// Interprets `(define name (make-dfa states alphabet start finals rules ['no-dead]))`.
fn definition_form(form: &Sexp) -> Result<Option<(Symbol, Definition)>, SourceError> {
    let Some(items) = form.as_list() else {
        return Ok(None);
    };
    if items.first().and_then(Sexp::as_atom) != Some("define") {
        return Ok(None);
    }
    if items.len() != 3 {
        return Err(malformed(
            form.pos(),
            "define expects a name and a make-dfa form",
        ));
    }
    let name = symbol_at(&items[1], "the machine name")?;
    let call = items[2]
        .as_list()
        .filter(|call| call.first().and_then(Sexp::as_atom) == Some("make-dfa"))
        .ok_or_else(|| malformed(items[2].pos(), "expected a (make-dfa ...) form"))?;
    let args = &call[1..];
    if !(5..=6).contains(&args.len()) {
        return Err(SourceError::Arity {
            pos: items[2].pos(),
            found: args.len(),
        });
    }
    let no_dead = match args.get(5) {
        None => false,
        Some(flag) if flag.unquote().as_atom() == Some("no-dead") => true,
        Some(flag) => {
            return Err(malformed(
                flag.pos(),
                "the optional argument must be 'no-dead",
            ))
        }
    };
    Ok(Some((
        name,
        Definition {
            states: symbols_at(&args[0], "the states")?,
            alphabet: symbols_at(&args[1], "the alphabet")?,
            start: symbol_at(&args[2], "the start state")?,
            finals: symbols_at(&args[3], "the final states")?,
            rules: rules_at(&args[4])?,
            no_dead,
        },
    )))
}

/// Every machine definition in an FSM source file, in file order.
pub fn parse_fsm_blocks(text: &str) -> Result<Vec<SourceBlock>, SourceError> {
    let headers: Vec<(usize, Metadata)> = text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| parse_header(line).map(|m| (i + 1, m)))
        .collect();
    let mut blocks = Vec::new();
    let mut previous_line = 0;
    for form in sexpr::read_all(text)? {
        let line = form.pos().line;
        if let Some((name, def)) = definition_form(&form)? {
            let machine = Machine::build(&def)?;
            let header = headers
                .iter()
                .rev()
                .find(|(l, _)| *l < line && *l > previous_line)
                .map(|(_, m)| *m);
            blocks.push(SourceBlock {
                header,
                document: MachineDocument {
                    name,
                    machine,
                    invariants: InvariantBinding::new(),
                    metadata: header.unwrap_or_else(Metadata::unversioned),
                },
            });
        }
        previous_line = line;
    }
    Ok(blocks)
}

/// The last machine defined in `text`.
pub fn parse_fsm_source(text: &str) -> Result<MachineDocument, SourceError> {
    parse_fsm_blocks(text)?
        .pop()
        .map(|block| block.document)
        .ok_or(SourceError::NoDefinition)
}

/// Number of generated blocks already present in `text`.
pub fn count_revisions(text: &str) -> u32 {
    text.lines().filter(|l| parse_header(l).is_some()).count() as u32
}

/// The default generated-code file for a machine: `<name>.gen.rkt` in `dir`.
pub fn generated_path(dir: &Path, name: &Symbol) -> PathBuf {
    dir.join(format!("{name}.gen.rkt"))
}

pub fn format_header(created: DateTime<Utc>, revision: u32) -> String {
    format!(
        "{HEADER_PREFIX}{} revision {revision}",
        created.to_rfc3339_opts(SecondsFormat::Secs, true)
    )
}

/// Appends the document's FSM source to `path` under a timestamped header
/// and returns the new revision number. Existing content is never
/// rewritten. An exclusive lock on the file serializes concurrent writers.
pub fn append_versioned(path: &Path, doc: &MachineDocument) -> io::Result<u32> {
    append_versioned_at(path, doc, Utc::now())
}

pub fn append_versioned_at(
    path: &Path,
    doc: &MachineDocument,
    created: DateTime<Utc>,
) -> io::Result<u32> {
    let mut file = OpenOptions::new()
        .read(true)
        .append(true)
        .create(true)
        .open(path)?;
    file.lock()?;
    let mut existing = String::new();
    file.seek(SeekFrom::Start(0))?;
    file.read_to_string(&mut existing)?;
    let revision = count_revisions(&existing) + 1;

    let mut block = String::new();
    if !existing.is_empty() && !existing.ends_with('\n') {
        block.push('\n');
    }
    if !existing.is_empty() && !existing.ends_with("\n\n") {
        block.push('\n');
    }
    block.push_str(&format_header(created, revision));
    block.push('\n');
    block.push_str(&emit_fsm_source(doc));
    block.push('\n');
    file.write_all(block.as_bytes())?;
    file.flush()?;
    file.unlock()?;
    Ok(revision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn doc(name: &str, machine: Machine) -> MachineDocument {
        MachineDocument {
            name: name.parse().unwrap(),
            machine,
            invariants: InvariantBinding::new(),
            metadata: Metadata::unversioned(),
        }
    }

    fn tokens(text: &str) -> Vec<String> {
        text.replace('(', " ( ")
            .replace(')', " ) ")
            .replace('\'', " ' ")
            .split_whitespace()
            .map(str::to_string)
            .collect()
    }

    #[test]
    fn emits_a_star_a_layout() {
        let text = emit_fsm_source(&doc("a*a", fixtures::a_star_a()));
        let expected = "\
(define a*a (make-dfa '(S F A) '(a b) 'S '(F)
                      '((S a F)
                        (F a F)
                        (F b A)
                        (A a F)
                        (A b A))))";
        assert_eq!(text, expected);
    }

    #[test]
    fn emits_a_star_like_the_hand_written_definition() {
        let text = emit_fsm_source(&doc("a*", fixtures::a_star()));
        let reference = "(define a* (make-dfa '(S F)       ; the states
                          '(a b)       ; the input alphabet
                          'S           ; the starting state
                          '(F)         ; the set of final states
                          '((S a F)    ; the transition function
                            (F a F)
                            (F b F))))";
        let without_comments: String = reference
            .lines()
            .map(|l| l.split(';').next().unwrap())
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(tokens(&text), tokens(&without_comments));
    }

    #[test]
    fn parse_emit_round_trip() {
        for (name, m) in [
            ("a*", fixtures::a_star()),
            ("a*a", fixtures::a_star_a()),
            ("baba", fixtures::baba()),
        ] {
            let d = doc(name, m);
            let parsed = parse_fsm_source(&emit_fsm_source(&d)).unwrap();
            assert_eq!(parsed.machine, d.machine);
            assert_eq!(parsed.name, d.name);
        }
    }

    #[test]
    fn no_dead_flag_round_trips() {
        let text = "(define m (make-dfa '(S F) '(a b) 'S '(F) '((S a F)) 'no-dead))";
        let d = parse_fsm_source(text).unwrap();
        assert!(d.machine.no_dead());
        assert!(!d.machine.is_total());
        assert_eq!(
            emit_fsm_source(&d),
            text.replace("'((S a F))", "\n                    '((S a F))")
                .replacen("'(F) \n", "'(F)\n", 1)
        );
    }

    #[test]
    fn arity_and_shape_errors() {
        assert!(matches!(
            parse_fsm_source("(define m (make-dfa))"),
            Err(SourceError::Arity { found: 0, .. })
        ));
        assert!(matches!(
            parse_fsm_source("(define m (make-dfa '(S) '(a) 'S '() '((S a)) ))"),
            Err(SourceError::Malformed { .. })
        ));
        assert_eq!(
            parse_fsm_source("; nothing here"),
            Err(SourceError::NoDefinition)
        );
        assert!(matches!(
            parse_fsm_source("(define m (make-dfa '(S) '(a) 'S '() '((S a S) (S a T))))"),
            Err(SourceError::Machine(_))
        ));
        assert!(matches!(
            parse_fsm_source("(define m"),
            Err(SourceError::Syntax(_))
        ));
    }

    #[test]
    fn header_format() {
        let created = DateTime::parse_from_rfc3339("2026-10-16T09:30:00Z")
            .unwrap()
            .with_timezone(&Utc);
        let line = format_header(created, 3);
        assert_eq!(line, ";; generated 2026-10-16T09:30:00Z revision 3");
        assert_eq!(
            parse_header(&line),
            Some(Metadata {
                created,
                revision: 3
            })
        );
    }

    #[test]
    fn append_twice_keeps_both_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = generated_path(dir.path(), &"a*a".parse().unwrap());
        let d = doc("a*a", fixtures::a_star_a());
        assert_eq!(append_versioned(&path, &d).unwrap(), 1);
        let first = std::fs::read(&path).unwrap();
        assert_eq!(append_versioned(&path, &d).unwrap(), 2);
        let second = std::fs::read(&path).unwrap();
        assert!(second.starts_with(&first));

        let text = String::from_utf8(second).unwrap();
        let blocks = parse_fsm_blocks(&text).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].header.unwrap().revision, 1);
        assert_eq!(blocks[1].header.unwrap().revision, 2);
        assert_eq!(parse_fsm_source(&text).unwrap().machine, d.machine);
    }
}
